#pragma once

// Numerical side of the unconditional convergence argument: the KL-penalised
// update on a two-set partition, its closed-form alpha recursion, a
// brute-force simplex oracle, and the Gaussian iterate-vs-project toy.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

namespace ita::emtheory {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Finite outcome space split into A (constraint holds) and B (the rest).
/// The distribution at mass alpha on A keeps the base proportions inside
/// each set.
struct TwoSetDist {
  std::vector<double> base;   // P0, positive, sums to 1
  std::vector<bool> in_a;
  double alpha = 0.0;

  void validate() const;
  double base_mass_a() const;
  std::vector<double> probs() const;
  /// Same partition and base, different mass on A.
  TwoSetDist with_alpha(double a) const;
};

/// log P(A) - lambda * KL(P || P_t), with 0 log 0 = 0. Returns -inf when
/// P(A) == 0 or P puts mass where P_t has none.
double objective_h(const std::vector<double>& p, const std::vector<double>& p_t,
                   const std::vector<bool>& in_a, double lambda);

inline double logodds(double a) { return std::log(a / (1.0 - a)); }

/// Root on (alpha_t, 1) of
///   g(a) = lambda * logodds(a) - lambda * logodds(alpha_t) - 1 / a,
/// by bisection to `tol`. alpha_t == 1 is absorbing; alpha_t == 0 stays 0.
double alpha_step(double alpha_t, double lambda, double tol = 1e-12);

struct AlphaTrace {
  std::vector<double> alpha;  // alpha[0..T]
  std::vector<double> odds;   // alpha / (1 - alpha); inf once alpha hits 1
  /// h(P^(t+1), P^(t)) and h(P^(t), P^(t)) for t = 0..T-1, evaluated on the
  /// two-point reduction (one outcome in A, one in B).
  std::vector<double> h_next;
  std::vector<double> h_stay;
};

AlphaTrace iterate_alpha(double alpha0, double lambda, std::size_t steps);

/// Smallest integer t with t >= -lambda * log(eps * alpha0).
std::size_t convergence_bound(double alpha0, double lambda, double eps);

/// Exhaustive search over the simplex {p : p_i = k_i * step, sum = 1}.
/// Limited to five outcomes and step >= 1/200.
std::vector<double> argmax_bruteforce(const TwoSetDist& p_t, double lambda, int resolution);

/// Maximiser of objective_h against p_t: prop-preserving at alpha_step(alpha).
TwoSetDist argmax_closed_form(const TwoSetDist& p_t, double lambda);

/// Mass on A of an arbitrary distribution.
double mass_on_a(const std::vector<double>& p, const std::vector<bool>& in_a);

// ---------------------------------------------------------------------------
// Gaussian toy

double normal_pdf(double x);
double normal_cdf(double x);
/// Mean of N(mu, 1) conditioned on x > 0.
double truncated_mean(double mu);

struct GaussianTrace {
  std::vector<double> mu;              // mu[0..T], mu[0] = 0
  std::vector<double> truncated_mean;  // of N(mu_t, 1) above 0
  double direct_projection = 0.0;      // sqrt(2 / pi)
};

/// Population update mu_{t+1} = mu_t + phi(mu_t) / Phi(mu_t).
GaussianTrace gaussian_toy(std::size_t steps);

/// Finite-sample version: each step draws `samples` points from N(mu_t, 1),
/// keeps the positive ones and refits the mean.
GaussianTrace gaussian_toy_sampled(std::size_t steps, std::size_t samples, std::uint64_t seed);

void write_alpha_csv(std::ostream& out, const AlphaTrace& trace, double lambda);
void write_gaussian_csv(std::ostream& out, const GaussianTrace& trace);

}  // namespace ita::emtheory
