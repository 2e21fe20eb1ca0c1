#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "logz/expectation.hpp"
#include "logz/identities.hpp"
#include "logz/log_partition.hpp"
#include "logz/models/curie_weiss.hpp"
#include "logz/oracle.hpp"

using namespace logz;
using models::CurieWeissModel;

namespace {

Eigen::VectorXd sample_y(const CurieWeissModel& m, uint64_t seed) {
  CounterRng rng = CounterRng::make(seed, {stream::kChannel});
  return m.sample_y(m.sample_x(rng), rng);
}

}  // namespace

TEST_CASE("prior normalization: Z(y, 0) sums to one over outputs") {
  CurieWeissModel model(6, 1.3, 0.15, 0.7);
  double total = 0.0;
  StateSpace::outputs(model).for_each([&](const Eigen::VectorXd& y) {
    total += std::exp(log_partition(model, y, TiltVector::zeros(6)));
  });
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("decoupled limit: HS gradient approaches the product form") {
  CurieWeissModel tiny_a(8, 1e-6, 0.2, 0.8);
  const Eigen::VectorXd y = sample_y(tiny_a, 41);
  const Eigen::VectorXd hs =
      models::cw_conditional_mean_hs(tiny_a, y, TiltVector::zeros(8));
  for (int i = 0; i < 8; ++i)
    CHECK(hs[i] == doctest::Approx(std::tanh(0.8 * y[i] + 0.2)).epsilon(1e-4));
}

TEST_CASE("n=12 HS quadrature matches enumeration to 1e-8") {
  CurieWeissModel model(12, 1.0, 0.2, 0.8);
  const Eigen::VectorXd y = sample_y(model, 42);
  const TiltVector zero = TiltVector::zeros(12);
  const Eigen::VectorXd enum_mean = analytic_posterior_moments(model, y, zero).mean;
  const Eigen::VectorXd hs_mean = models::cw_conditional_mean_hs(model, y, zero);
  CHECK((enum_mean - hs_mean).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(models::cw_log_partition_hs(model, y, zero) ==
        doctest::Approx(log_partition(model, y, zero)).epsilon(1e-10));
  // Nonzero tilt as well.
  Eigen::VectorXd lam = Eigen::VectorXd::Constant(12, 0.15);
  CHECK(models::cw_log_partition_hs(model, y, TiltVector(lam)) ==
        doctest::Approx(log_partition(model, y, TiltVector(lam))).epsilon(1e-10));
}

TEST_CASE("three-way agreement: enumeration, HS, central differences") {
  for (uint64_t seed : {51, 52, 53, 54, 55}) {
    CounterRng prng = CounterRng::make(seed, {stream::kModelGen});
    const int n = 6 + static_cast<int>(prng.next_u64() % 9);  // 6..14
    CurieWeissModel model(n, 2.0 * prng.uniform(), -0.4 + 0.8 * prng.uniform(),
                          0.3 + 1.2 * prng.uniform());
    const Eigen::VectorXd y = sample_y(model, seed);
    const TiltVector zero = TiltVector::zeros(n);
    const Eigen::VectorXd a = analytic_posterior_moments(model, y, zero).mean;
    const Eigen::VectorXd b = models::cw_conditional_mean_hs(model, y, zero);
    DiffConfig fd;
    fd.scheme = DiffScheme::central_difference;
    const Eigen::VectorXd c = conditional_mean(model, y, fd);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((a - c).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("fixed point: subcritical symmetric case gives theta* = 0") {
  CurieWeissModel model(8, 0.8, 0.0, 1.0);
  Eigen::VectorXd y(8);
  y << 1, -1, 1, -1, 1, -1, 1, -1;  // sum tanh(beta y_i) = 0
  const auto sol = models::cw_saddle_fixed_point(model, y, TiltVector::zeros(8));
  CHECK(std::abs(sol.argmax) <= 1e-10);
  CHECK(sol.multiplicity == Multiplicity::unique);
  CHECK(sol.residual <= 1e-10);
}

TEST_CASE("fixed point: supercritical all-ones y against a bisection oracle") {
  CurieWeissModel model(6, 2.0, 0.0, 3.0);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(6);
  const auto sol = models::cw_saddle_fixed_point(model, y, TiltVector::zeros(6));
  // Oracle: bisection on theta - a tanh(beta + theta) over [0.1, a + 1].
  double lo = 0.1, hi = 3.0;
  auto f = [&](double th) { return th - 2.0 * std::tanh(3.0 + th); };
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0)
      hi = mid;
    else
      lo = mid;
  }
  CHECK(sol.argmax == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-10));
  CHECK(sol.residual <= 1e-10);
}

TEST_CASE("symmetric pair is detected and both branches reported") {
  // Balanced y keeps the exponent even in theta; beta small keeps the local
  // slope a sech^2(beta) above 1 so the origin is a minimum between two
  // symmetric maximizers.
  CurieWeissModel model(8, 2.0, 0.0, 0.2);
  Eigen::VectorXd y(8);
  y << 1, -1, 1, -1, 1, -1, 1, -1;
  const auto sol = models::cw_saddle_fixed_point(model, y, TiltVector::zeros(8));
  CHECK(sol.multiplicity == Multiplicity::symmetric_pair);
  REQUIRE(sol.second_argmax.has_value());
  CHECK(sol.argmax > 0.0);
  CHECK(*sol.second_argmax == doctest::Approx(-sol.argmax).epsilon(1e-9));
  // The estimator averages the branches instead of picking a sign.
  const Eigen::VectorXd est = models::cw_saddle_estimator(model, y);
  for (int i = 0; i < 8; ++i) {
    const double h = model.beta() * y[i];
    CHECK(est[i] == doctest::Approx(0.5 * (std::tanh(h + sol.argmax) +
                                           std::tanh(h - sol.argmax)))
                        .epsilon(1e-12));
  }
}

TEST_CASE("magnetization m = tanh(am + b): bisection oracle and grid argmax") {
  // a=2, b=0: the dominant solution of m = tanh(2m).
  double lo = 0.1, hi = 1.0;
  auto f = [](double m) { return m - std::tanh(2.0 * m); };
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0)
      hi = mid;
    else
      lo = mid;
  }
  const double m_oracle = 0.5 * (lo + hi);
  CHECK(m_oracle == doctest::Approx(0.95750).epsilon(1e-5));
  CurieWeissModel model(10, 2.0, 0.0, 1.0);
  const auto asym = models::cw_asymptotic_mmse(model);
  CHECK(asym.m_star == doctest::Approx(m_oracle).epsilon(1e-9));
  CHECK(asym.branches.size() == 2);
  CHECK(asym.branches[0].mmse == doctest::Approx(asym.branches[1].mmse).epsilon(1e-12));

  // Argmax agreement with a dense grid of the free-energy objective.
  for (double a : {0.5, 1.0, 1.5, 2.0}) {
    for (double b : {0.0, 0.1, -0.2}) {
      CurieWeissModel m2(10, a, b, 1.0);
      const auto as = models::cw_asymptotic_mmse(m2);
      auto phi = [&](double m) {
        return models::binary_entropy(0.5 * (1.0 + m)) + 0.5 * a * m * m + b * m;
      };
      double best_m = -1.0, best_v = phi(-1.0);
      for (int i = 0; i <= 10000; ++i) {
        const double m = -1.0 + 2.0 * i / 10000.0;
        if (phi(m) > best_v) {
          best_v = phi(m);
          best_m = m;
        }
      }
      CHECK(std::abs(std::abs(as.m_star) - std::abs(best_m)) <= 2e-4);
    }
  }
}

TEST_CASE("asymptotic mmse: decoupled case equals the exact n=1 value") {
  CurieWeissModel model(1, 0.0, 0.3, 0.7);
  const auto asym = models::cw_asymptotic_mmse(model);
  const double exact = mmse(model, ExpectationConfig::enumerate()).value;
  CHECK(asym.mmse == doctest::Approx(exact).epsilon(1e-10));
}

TEST_CASE("asymptotic mmse: subcritical b=0 reduces to 1 - tanh^2(beta)") {
  CurieWeissModel model(10, 0.5, 0.0, 0.9);
  const auto asym = models::cw_asymptotic_mmse(model);
  CHECK(asym.m_star == 0.0);
  CHECK(asym.branches.front().theta0 == 0.0);
  const double t = std::tanh(0.9);
  CHECK(asym.mmse == doctest::Approx(1.0 - t * t).epsilon(1e-12));
}

TEST_CASE("large-n saddle estimator matches the HS quadrature gradient") {
  CurieWeissModel model(1000, 1.5, 0.1, 1.0);
  const Eigen::VectorXd y = sample_y(model, 77);
  const Eigen::VectorXd quad =
      models::cw_conditional_mean_hs(model, y, TiltVector::zeros(1000));
  const Eigen::VectorXd saddle = models::cw_saddle_estimator(model, y);
  CHECK((quad - saddle).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("asymptotic mmse matches a Monte Carlo run at n = 4000") {
  CurieWeissModel model(4000, 1.5, 0.1, 1.0);
  const auto asym = models::cw_asymptotic_mmse(model);
  const long samples = 150;
  double s = 0.0;
  for (long i = 0; i < samples; ++i) {
    CounterRng rng = CounterRng::make(1234, {stream::kMonteCarlo, (uint64_t)i});
    const Eigen::VectorXd x = model.sample_x(rng);
    const Eigen::VectorXd y = model.sample_y(x, rng);
    const Eigen::VectorXd est = models::cw_saddle_estimator(model, y);
    s += (x - est).squaredNorm() / model.n();
  }
  const double emp = s / samples;
  CHECK(std::abs(emp - asym.mmse) / asym.mmse <= 0.01);
}

TEST_CASE("asymptotic mmse feeds the identity suite at enumerable sizes") {
  CurieWeissModel model(8, 1.2, 0.2, 0.9);
  const MmseReport rep = mmse_all_formulas(model, ExpectationConfig::enumerate());
  CHECK(rep.spread <= 1e-8);
  const auto om = oracle::oracle_mmse(model, ExpectationConfig::enumerate());
  CHECK(std::abs(rep.mmse() - om.value) <= 1e-8);
}
