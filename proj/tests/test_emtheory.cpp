#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "ita/emtheory.hpp"
#include "ita/rng.hpp"

using namespace ita::emtheory;

TEST_CASE("alpha step root (independent bisection value)") {
  CHECK(alpha_step(0.5, 1.0) == doctest::Approx(0.7821882942801999).epsilon(1e-11));
  const double a = alpha_step(0.5, 1.0);
  CHECK(std::abs(logodds(a) - logodds(0.5) - 1.0 / a) < 1e-10);
  CHECK(alpha_step(1.0, 2.0) == 1.0);
  CHECK(alpha_step(0.0, 2.0) == 0.0);
  CHECK_THROWS(alpha_step(0.5, 0.0));
}

TEST_CASE("objective on a three-outcome example") {
  // log 0.5 - 0.7 * KL([.5,.3,.2] || [.2,.3,.5])
  CHECK(objective_h({0.5, 0.3, 0.2}, {0.2, 0.3, 0.5}, {true, false, false}, 0.7) ==
        doctest::Approx(-0.8855682342535178).epsilon(1e-12));
  CHECK(objective_h({0.0, 1.0}, {0.5, 0.5}, {true, false}, 1.0) == kNegInf);
  CHECK(objective_h({0.5, 0.5}, {1.0, 0.0}, {true, false}, 1.0) == kNegInf);
}

TEST_CASE("convergence bound") {
  CHECK(convergence_bound(0.1, 1.0, 0.01) == 7);  // -log(0.001) = 6.908
  CHECK(convergence_bound(0.5, 5.0, 0.1) == 15);  // -5 log(0.05) = 14.98
}

TEST_CASE("alpha sequence increases and meets the bound") {
  for (double lambda : {0.5, 1.0, 5.0})
    for (double a0 : {0.01, 0.1, 0.5}) {
      auto tr = iterate_alpha(a0, lambda, 60);
      REQUIRE(tr.alpha.size() == 61);
      for (std::size_t t = 0; t < 60; ++t) {
        if (tr.alpha[t] < 1.0) CHECK(tr.alpha[t + 1] > tr.alpha[t]);
        CHECK(tr.h_next[t] >= tr.h_stay[t] - 1e-10);
      }
      for (double eps : {0.1, 0.01}) {
        const auto T = convergence_bound(a0, lambda, eps);
        if (T <= 60) CHECK(tr.alpha[T] >= 1.0 - eps);
      }
    }
}

TEST_CASE("closed-form maximiser matches grid search") {
  TwoSetDist d{{0.1, 0.2, 0.3, 0.4}, {true, false, true, false}, 0.3};
  d.validate();
  const double lambda = 1.5;
  auto closed = argmax_closed_form(d, lambda).probs();
  auto grid = argmax_bruteforce(d, lambda, 200);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(closed[i] - grid[i]) <= 2.0 / 200);
  CHECK(mass_on_a(closed, d.in_a) == doctest::Approx(alpha_step(0.3, lambda)));
}

TEST_CASE("M-step: perturbing the maximiser never improves the objective") {
  ita::Rng rng = ita::SeedStream(17).rng();
  for (int trial = 0; trial < 50; ++trial) {
    TwoSetDist d;
    double sum = 0;
    for (int i = 0; i < 5; ++i) {
      d.base.push_back(0.05 + ita::uniform01(rng));
      sum += d.base.back();
    }
    for (auto& b : d.base) b /= sum;
    d.in_a = {true, false, ita::bernoulli(rng, 0.5), ita::bernoulli(rng, 0.5), false};
    d.alpha = 0.05 + 0.9 * ita::uniform01(rng);
    const double lambda = 0.3 + 5 * ita::uniform01(rng);
    const auto pt = d.probs();
    const auto best = argmax_closed_form(d, lambda).probs();
    const double h_best = objective_h(best, pt, d.in_a, lambda);
    for (int k = 0; k < 20; ++k) {
      auto p = best;
      // Move a little mass from one outcome to another.
      const auto i = ita::uniform_index(rng, 5), j = ita::uniform_index(rng, 5);
      const double m = std::min(p[i], 1e-3 * ita::uniform01(rng));
      p[i] -= m;
      p[j] += m;
      CHECK(objective_h(p, pt, d.in_a, lambda) <= h_best + 1e-12);
    }
  }
}

TEST_CASE("two-set distribution keeps within-set proportions") {
  TwoSetDist d{{0.1, 0.2, 0.3, 0.4}, {true, true, false, false}, 0.6};
  auto p = d.probs();
  CHECK(p[0] == doctest::Approx(0.2));
  CHECK(p[1] == doctest::Approx(0.4));
  CHECK(p[2] / p[3] == doctest::Approx(0.75));
  CHECK(d.base_mass_a() == doctest::Approx(0.3));
  TwoSetDist bad{{0.5, 0.6}, {true, false}, 0.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  TwoSetDist all_a{{0.5, 0.5}, {true, true}, 1.0};
  CHECK_THROWS_AS(all_a.validate(), std::invalid_argument);
}

TEST_CASE("Gaussian toy") {
  auto tr = gaussian_toy(10);
  CHECK(tr.mu.size() == 11);
  CHECK(tr.mu[0] == 0.0);
  CHECK(tr.mu[1] == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-12));
  CHECK(tr.direct_projection == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)));
  for (std::size_t t = 0; t < 10; ++t) CHECK(tr.mu[t + 1] > tr.mu[t]);
  CHECK(truncated_mean(0.0) == doctest::Approx(0.7978845608028654));
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(-40.0) >= 0.0);

  auto sampled = gaussian_toy_sampled(5, 200000, 3);
  for (std::size_t t = 1; t <= 5; ++t) CHECK(std::abs(sampled.mu[t] - tr.mu[t]) < 0.02);

  std::ostringstream csv;
  write_gaussian_csv(csv, tr);
  std::size_t lines = 0;
  for (char c : csv.str()) lines += c == '\n';
  CHECK(lines == 12);  // header + 11 rows
}
