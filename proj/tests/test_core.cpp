#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "logz/expectation.hpp"
#include "logz/log_partition.hpp"
#include "logz/models/curie_weiss.hpp"
#include "logz/models/gaussian.hpp"
#include "logz/models/random_discrete.hpp"
#include "test_support.hpp"

using namespace logz;
using logz::testing::IndependentModel;
using logz::testing::NoiselessBinaryModel;
using logz::testing::ScaledModel;

TEST_CASE("log_partition at zero tilt is the marginal log-likelihood") {
  const auto model = models::make_random_discrete(11);
  CounterRng rng = CounterRng::make(5, {stream::kChannel});
  const Eigen::VectorXd y = model->sample_y(model->sample_x(rng), rng);
  // Brute force: plain sum over all states in linear domain.
  long double total = 0.0L;
  StateSpace::inputs(*model).for_each([&](const Eigen::VectorXd& x) {
    total += std::exp((long double)(model->log_prior(x) + model->log_channel(x, y)));
  });
  const double lz = log_partition(*model, y, TiltVector::zeros(model->input_dim()));
  CHECK(lz == doctest::Approx(std::log((double)total)).epsilon(1e-12));
}

TEST_CASE("single surviving term: noiseless uniform binary source") {
  NoiselessBinaryModel model(1);
  Eigen::VectorXd y(1);
  y << 1.0;
  CHECK(log_partition(model, y, TiltVector::zeros(1)) ==
        doctest::Approx(std::log(0.5)).epsilon(1e-15));
}

TEST_CASE("Curie-Weiss n=2 log partition matches 4-term enumeration") {
  models::CurieWeissModel model(2, 0.0, 0.0, 1.0);
  Eigen::VectorXd y(2);
  y << 1.0, 1.0;
  // Direct 4-term sum with explicit densities.
  long double total = 0.0L;
  for (double x0 : {-1.0, 1.0})
    for (double x1 : {-1.0, 1.0}) {
      Eigen::VectorXd x(2);
      x << x0, x1;
      total += std::exp((long double)(model.log_prior(x) + model.log_channel(x, y)));
    }
  CHECK(log_partition(model, y, TiltVector::zeros(2)) ==
        doctest::Approx(std::log((double)total)).epsilon(1e-13));
}

TEST_CASE("conditional mean under independence is the prior mean") {
  IndependentModel model(3, 0.7);
  Eigen::VectorXd y(3);
  y << 0.0, 1.0, 0.0;
  const Eigen::VectorXd m = conditional_mean(model, y);
  for (int i = 0; i < 3; ++i) CHECK(m[i] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("Gauss-Hermite and Gauss-Kronrod paths agree on hinted coordinates") {
  models::GaussianAwgnModel model(2, 1.5, 0.8);
  Eigen::VectorXd y(2);
  y << 1.1, -0.4;
  Eigen::VectorXd lam(2);
  lam << 0.2, -0.1;
  PartitionOptions gh;
  gh.gh_order = 64;
  const double a = log_partition(model, y, TiltVector(lam));
  const double b = log_partition(model, y, TiltVector(lam), gh);
  CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("scalar Gaussian AWGN: Wiener mean, posterior variance, mmse") {
  models::GaussianAwgnModel model(1, 1.0, 1.0);
  Eigen::VectorXd y(1);
  y << 2.0;
  CHECK(conditional_mean(model, y)[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(conditional_covariance(model, y)(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
  const MmseEstimate est = mmse(model, ExpectationConfig::quadrature());
  CHECK(est.value == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(est.method == "quadrature_y");
}

TEST_CASE("Curie-Weiss n=2 conditional moments: tanh(1) and 1 - tanh^2(1)") {
  models::CurieWeissModel model(2, 0.0, 0.0, 1.0);
  Eigen::VectorXd y(2);
  y << 1.0, 1.0;
  const Eigen::VectorXd want = logz::testing::brute_posterior_mean_pm1(model, y);
  const Eigen::VectorXd m = conditional_mean(model, y);
  const double t1 = std::tanh(1.0);
  for (int i = 0; i < 2; ++i) {
    CHECK(m[i] == doctest::Approx(want[i]).epsilon(1e-12));
    CHECK(m[i] == doctest::Approx(t1).epsilon(1e-12));
  }
  const Eigen::MatrixXd c = conditional_covariance(model, y);
  CHECK(c(0, 0) == doctest::Approx(1.0 - t1 * t1).epsilon(1e-12));
  CHECK(c(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("noiseless invertible channel: zero covariance and zero mmse") {
  NoiselessBinaryModel model(2);
  Eigen::VectorXd y(2);
  y << 1.0, -1.0;
  CHECK(conditional_covariance(model, y).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(mmse(model, ExpectationConfig::enumerate()).value <= 1e-14);
}

TEST_CASE("gradient check: analytic enumeration vs central differences") {
  for (uint64_t seed : {21, 22, 23}) {
    const auto model = models::make_random_discrete(seed);
    CounterRng rng = CounterRng::make(seed, {stream::kChannel});
    const Eigen::VectorXd y = model->sample_y(model->sample_x(rng), rng);
    const Eigen::VectorXd analytic = conditional_mean(*model, y);
    DiffConfig fd;
    fd.scheme = DiffScheme::central_difference;
    const Eigen::VectorXd numeric = conditional_mean(*model, y, fd);
    const double rel = (analytic - numeric).cwiseAbs().maxCoeff() /
                       std::max(1.0, analytic.cwiseAbs().maxCoeff());
    CHECK(rel <= 1e-6);
  }
}

TEST_CASE("Hessian symmetry and positive semidefiniteness") {
  for (uint64_t seed : {31, 32, 33, 34}) {
    const auto model = models::make_random_discrete(seed);
    CounterRng rng = CounterRng::make(seed, {stream::kChannel});
    const Eigen::VectorXd y = model->sample_y(model->sample_x(rng), rng);
    const Eigen::MatrixXd h = conditional_covariance(*model, y);
    const double hmax = std::max(1e-300, h.cwiseAbs().maxCoeff());
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * hmax);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * std::max(1e-300, h.trace()));
  }
}

TEST_CASE("scaling the joint density leaves gradient and Hessian unchanged") {
  const auto model = models::make_random_discrete(44);
  const ScaledModel scaled(*model, 3.7);
  CounterRng rng = CounterRng::make(44, {stream::kChannel});
  const Eigen::VectorXd y = model->sample_y(model->sample_x(rng), rng);
  CHECK((conditional_mean(*model, y) - conditional_mean(scaled, y)).cwiseAbs().maxCoeff() <=
        1e-12);
  CHECK((conditional_covariance(*model, y) - conditional_covariance(scaled, y))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  Eigen::VectorXd lam(model->input_dim());
  lam.setConstant(0.1);
  CHECK(log_partition(scaled, y, TiltVector(lam)) ==
        doctest::Approx(log_partition(*model, y, TiltVector(lam)) + 3.7).epsilon(1e-12));
}

TEST_CASE("law of total variance under exact enumeration") {
  const auto model = models::make_random_discrete(55);
  const PriorMoments prior = prior_moments(*model);
  const int n = model->input_dim();
  // E{Cov{X|Y}} + Cov{E{X|Y}} accumulated over the output law.
  auto h = [&](const Eigen::VectorXd& y) {
    const PosteriorMoments pm =
        analytic_posterior_moments(*model, y, TiltVector::zeros(n));
    Eigen::VectorXd v(2 * n * n);
    const Eigen::MatrixXd outer = pm.mean * pm.mean.transpose();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        v[i * n + j] = pm.cov(i, j);
        v[n * n + i * n + j] = outer(i, j);
      }
    return v;
  };
  const VecExpectation e =
      expect_over_y(*model, ExpectationConfig::enumerate(), 2 * n * n, h);
  Eigen::MatrixXd total(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      total(i, j) = e.mean[i * n + j] + e.mean[n * n + i * n + j] -
                    prior.mean[i] * prior.mean[j];
  CHECK((total - prior.cov).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("zero-probability y raises ZeroMarginal instead of NaN") {
  NoiselessBinaryModel model(2);
  Eigen::VectorXd y(2);
  y << 0.5, 0.5;  // not in the channel image
  CHECK(log_partition(model, y, TiltVector::zeros(2)) == kNegInf);
  CHECK_THROWS_AS(conditional_mean(model, y), ZeroMarginal);
  CHECK_THROWS_AS(conditional_covariance(model, y), ZeroMarginal);
}

TEST_CASE("enumeration refuses state spaces above the cap") {
  NoiselessBinaryModel model(30);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(30);
  PartitionOptions opts;
  opts.enumeration_cap = 1u << 20;
  CHECK_THROWS_AS(log_partition(model, y, TiltVector::zeros(30), opts), StateSpaceTooLarge);
}

TEST_CASE("dimension mismatches are rejected") {
  models::GaussianAwgnModel model(2, 1.0, 1.0);
  Eigen::VectorXd y(3);
  y.setZero();
  CHECK_THROWS_AS(log_partition(model, y, TiltVector::zeros(2)), DimensionMismatch);
  Eigen::VectorXd y2(2);
  y2.setZero();
  CHECK_THROWS_AS(log_partition(model, y2, TiltVector::zeros(3)), DimensionMismatch);
}

TEST_CASE("monte carlo expectations are identical for any worker count") {
  const auto model = models::make_random_discrete(66);
  auto h = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd v(1);
    v[0] = y.sum();
    return v;
  };
  ExpectationConfig cfg = ExpectationConfig::monte_carlo(20000, 9);
  cfg.workers = 1;
  const Eigen::VectorXd a = expect_over_y(*model, cfg, 1, h).mean;
  cfg.workers = 8;
  const Eigen::VectorXd b = expect_over_y(*model, cfg, 1, h).mean;
  CHECK(a[0] == b[0]);  // bitwise equality
}

TEST_CASE("mmse via monte carlo carries a standard error") {
  const auto model = models::make_random_discrete(77);
  const MmseEstimate mc = mmse(*model, ExpectationConfig::monte_carlo(4000, 3));
  const MmseEstimate exact = mmse(*model, ExpectationConfig::enumerate());
  REQUIRE(mc.stderr_.has_value());
  CHECK(std::abs(mc.value - exact.value) <= 5.0 * std::max(*mc.stderr_, 1e-6));
}
