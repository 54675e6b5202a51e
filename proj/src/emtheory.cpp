#include "ita/emtheory.hpp"

#include <algorithm>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "ita/rng.hpp"

namespace ita::emtheory {

void TwoSetDist::validate() const {
  if (base.empty() || base.size() != in_a.size())
    throw std::invalid_argument("TwoSetDist: base and partition sizes differ");
  double sum = 0.0, mass_a = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (!(base[i] > 0.0)) throw std::invalid_argument("TwoSetDist: base must be positive");
    sum += base[i];
    if (in_a[i]) mass_a += base[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("TwoSetDist: base must sum to 1");
  if (mass_a <= 0.0 || mass_a >= sum)
    throw std::invalid_argument("TwoSetDist: base needs support on both A and B");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("TwoSetDist: alpha outside [0, 1]");
}

double TwoSetDist::base_mass_a() const {
  double m = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i)
    if (in_a[i]) m += base[i];
  return m;
}

std::vector<double> TwoSetDist::probs() const {
  const double pa = base_mass_a();
  std::vector<double> p(base.size());
  for (std::size_t i = 0; i < base.size(); ++i)
    p[i] = in_a[i] ? alpha * base[i] / pa : (1.0 - alpha) * base[i] / (1.0 - pa);
  return p;
}

TwoSetDist TwoSetDist::with_alpha(double a) const {
  TwoSetDist d = *this;
  d.alpha = a;
  return d;
}

double mass_on_a(const std::vector<double>& p, const std::vector<bool>& in_a) {
  double m = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (in_a[i]) m += p[i];
  return m;
}

double objective_h(const std::vector<double>& p, const std::vector<double>& p_t,
                   const std::vector<bool>& in_a, double lambda) {
  if (p.size() != p_t.size() || p.size() != in_a.size())
    throw std::invalid_argument("objective_h: size mismatch");
  if (!(lambda > 0.0)) throw std::invalid_argument("objective_h: lambda must be positive");
  const double pa = mass_on_a(p, in_a);
  if (pa <= 0.0) return kNegInf;
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (p_t[i] <= 0.0) return kNegInf;
    kl += p[i] * std::log(p[i] / p_t[i]);
  }
  return std::log(pa) - lambda * kl;
}

double alpha_step(double alpha_t, double lambda, double tol) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("alpha_step: lambda must be finite and positive");
  if (!(alpha_t >= 0.0 && alpha_t <= 1.0)) throw std::invalid_argument("alpha_step: alpha outside [0, 1]");
  if (alpha_t == 1.0) return 1.0;
  if (alpha_t == 0.0) return 0.0;
  const double base = lambda * logodds(alpha_t);
  auto g = [&](double a) { return lambda * logodds(a) - base - 1.0 / a; };
  // g(alpha_t) = -1/alpha_t < 0 and g -> +inf at 1; g is increasing in between.
  double lo = alpha_t, hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {
// h on the two-point reduction: KL between prop-preserving members depends
// only on the masses on A.
double h_two_point(double a, double a_t, double lambda) {
  if (a <= 0.0) return kNegInf;
  double kl = a * std::log(a / a_t);
  if (a < 1.0) kl += (1.0 - a) * std::log((1.0 - a) / (1.0 - a_t));
  return std::log(a) - lambda * kl;
}
}  // namespace

AlphaTrace iterate_alpha(double alpha0, double lambda, std::size_t steps) {
  if (!(alpha0 > 0.0 && alpha0 <= 1.0)) throw std::invalid_argument("iterate_alpha: alpha0 outside (0, 1]");
  AlphaTrace tr;
  tr.alpha.push_back(alpha0);
  for (std::size_t t = 0; t < steps; ++t) {
    const double a = tr.alpha.back();
    const double next = alpha_step(a, lambda);
    tr.h_next.push_back(h_two_point(next, a, lambda));
    tr.h_stay.push_back(h_two_point(a, a, lambda));
    tr.alpha.push_back(next);
  }
  for (double a : tr.alpha)
    tr.odds.push_back(a < 1.0 ? a / (1.0 - a) : std::numeric_limits<double>::infinity());
  return tr;
}

std::size_t convergence_bound(double alpha0, double lambda, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("convergence_bound: eps outside (0, 1)");
  const double t = -lambda * std::log(eps * alpha0);
  return t <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(t));
}

std::vector<double> argmax_bruteforce(const TwoSetDist& p_t, double lambda, int resolution) {
  p_t.validate();
  const std::size_t n = p_t.base.size();
  if (n > 5) throw std::invalid_argument("argmax_bruteforce: at most 5 outcomes");
  if (resolution < 1 || resolution > 200)
    throw std::invalid_argument("argmax_bruteforce: resolution must be in [1, 200]");
  const auto pt = p_t.probs();
  const double step = 1.0 / resolution;

  // term[i][k] = p log(p / pt_i) at p = k * step.
  std::vector<std::vector<double>> term(n, std::vector<double>(resolution + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 1; k <= resolution; ++k) {
      const double p = k * step;
      term[i][k] = pt[i] > 0.0 ? p * std::log(p / pt[i]) : std::numeric_limits<double>::infinity();
    }

  std::vector<int> cur(n, 0), best(n, 0);
  double best_h = kNegInf;
  auto recurse = [&](auto&& self, std::size_t i, int left, double kl, int a_units) -> void {
    if (i + 1 == n) {
      cur[i] = left;
      const double kl_all = kl + term[i][left];
      const int a_all = a_units + (p_t.in_a[i] ? left : 0);
      if (a_all == 0) return;
      const double h = std::log(a_all * step) - lambda * kl_all;
      if (h > best_h) {
        best_h = h;
        best = cur;
      }
      return;
    }
    for (int k = 0; k <= left; ++k) {
      cur[i] = k;
      self(self, i + 1, left - k, kl + term[i][k], a_units + (p_t.in_a[i] ? k : 0));
    }
  };
  recurse(recurse, 0, resolution, 0.0, 0);
  if (best_h == kNegInf) throw std::runtime_error("argmax_bruteforce: no feasible grid point");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = best[i] * step;
  return out;
}

TwoSetDist argmax_closed_form(const TwoSetDist& p_t, double lambda) {
  p_t.validate();
  return p_t.with_alpha(alpha_step(p_t.alpha, lambda));
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double truncated_mean(double mu) { return mu + normal_pdf(mu) / normal_cdf(mu); }

GaussianTrace gaussian_toy(std::size_t steps) {
  GaussianTrace tr;
  tr.direct_projection = std::sqrt(2.0 / std::numbers::pi);
  tr.mu.push_back(0.0);
  for (std::size_t t = 0; t < steps; ++t) tr.mu.push_back(truncated_mean(tr.mu.back()));
  for (double m : tr.mu) tr.truncated_mean.push_back(truncated_mean(m));
  return tr;
}

GaussianTrace gaussian_toy_sampled(std::size_t steps, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("gaussian_toy_sampled: need at least one sample");
  GaussianTrace tr;
  tr.direct_projection = std::sqrt(2.0 / std::numbers::pi);
  tr.mu.push_back(0.0);
  const SeedStream root(seed);
  for (std::size_t t = 0; t < steps; ++t) {
    Rng rng = root.child(t).rng();
    double sum = 0.0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < samples; ++i) {
      const double x = tr.mu.back() + normal01(rng);
      if (x > 0.0) {
        sum += x;
        ++kept;
      }
    }
    tr.mu.push_back(kept ? sum / static_cast<double>(kept) : tr.mu.back());
  }
  for (double m : tr.mu) tr.truncated_mean.push_back(truncated_mean(m));
  return tr;
}

void write_alpha_csv(std::ostream& out, const AlphaTrace& trace, double lambda) {
  out.precision(17);
  out << "t,alpha,odds,h\n";
  for (std::size_t t = 0; t < trace.alpha.size(); ++t) {
    const double a = trace.alpha[t];
    const double h = t == 0 ? h_two_point(a, a, lambda) : trace.h_next[t - 1];
    out << t << ',' << a << ',' << trace.odds[t] << ',' << h << '\n';
  }
}

void write_gaussian_csv(std::ostream& out, const GaussianTrace& trace) {
  out.precision(17);
  out << "t,mu,truncated_mean\n";
  for (std::size_t t = 0; t < trace.mu.size(); ++t)
    out << t << ',' << trace.mu[t] << ',' << trace.truncated_mean[t] << '\n';
}

}  // namespace ita::emtheory
