#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "logz/identities.hpp"
#include "logz/models/cauchy.hpp"
#include "logz/models/curie_weiss.hpp"
#include "logz/models/gaussian.hpp"
#include "logz/models/random_discrete.hpp"
#include "logz/oracle.hpp"
#include "test_support.hpp"

using namespace logz;
using logz::testing::NoiselessBinaryModel;

TEST_CASE("posterior table: noiseless point mass") {
  NoiselessBinaryModel model(1);
  Eigen::VectorXd y(1);
  y << 1.0;
  const auto t = oracle::enumerate_posterior(model, y);
  REQUIRE(t.states.rows() == 2);
  for (int r = 0; r < 2; ++r) {
    if (t.states(r, 0) == 1.0)
      CHECK(t.log_weights[r] == doctest::Approx(0.0).epsilon(1e-12));
    else
      CHECK(t.log_weights[r] == -std::numeric_limits<double>::infinity());
  }
  CHECK(t.mean()[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("posterior table: spin-flip symmetry of the b=0 Curie-Weiss model") {
  models::CurieWeissModel model(2, 1.0, 0.0, 1.0);
  Eigen::VectorXd y(2), ny(2);
  y << 1.0, -1.0;
  ny = -y;
  const auto t1 = oracle::enumerate_posterior(model, y);
  const auto t2 = oracle::enumerate_posterior(model, ny);
  // P(x | y) must equal P(-x | -y) row by row.
  for (int r = 0; r < t1.states.rows(); ++r) {
    for (int r2 = 0; r2 < t2.states.rows(); ++r2) {
      if ((t1.states.row(r) + t2.states.row(r2)).cwiseAbs().maxCoeff() < 1e-12)
        CHECK(t1.log_weights[r] == doctest::Approx(t2.log_weights[r2]).epsilon(1e-12));
    }
  }
  CHECK((t1.mean() + t2.mean()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("posterior table mean matches core conditional_mean definitionally") {
  for (uint64_t seed : {201, 202, 203}) {
    const auto model = models::make_random_discrete(seed);
    CounterRng rng = CounterRng::make(seed, {stream::kChannel});
    const Eigen::VectorXd y = model->sample_y(model->sample_x(rng), rng);
    const auto t = oracle::enumerate_posterior(*model, y);
    CHECK((t.mean() - conditional_mean(*model, y)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("oracle mmse: noiseless zero, Gaussian 0.5, Curie-Weiss reference") {
  NoiselessBinaryModel nb(2);
  CHECK(oracle::oracle_mmse(nb, ExpectationConfig::enumerate()).value <= 1e-14);

  models::GaussianAwgnModel g(1, 1.0, 1.0);
  CHECK(oracle::oracle_mmse(g, ExpectationConfig::quadrature()).value ==
        doctest::Approx(0.5).epsilon(2e-6));

  models::CurieWeissModel cw(10, 1.2, 0.1, 0.9);
  const double reference = oracle::oracle_mmse(cw, ExpectationConfig::enumerate()).value;
  const double library = mmse_all_formulas(cw, ExpectationConfig::enumerate()).mmse();
  CHECK(std::abs(reference - library) <= 1e-8);
}

TEST_CASE("importance sampling: exact-posterior proposal has unit weights") {
  models::GaussianAwgnModel g(1, 1.0, 1.0);
  Eigen::VectorXd y(1);
  y << 1.4;
  oracle::GaussianProposal prop;
  prop.mean = Eigen::VectorXd::Constant(1, 0.7);  // true posterior N(y/2, 1/2)
  prop.sigma = std::sqrt(0.5);
  ExpectationConfig cfg = ExpectationConfig::monte_carlo(4000, 5);
  const auto r = oracle::importance_sampling_mean(g, y, prop, cfg);
  CHECK(r.ess == doctest::Approx(4000.0).epsilon(1e-9));
  CHECK(r.mean[0] == doctest::Approx(0.7).epsilon(0.05));
}

TEST_CASE("importance sampling matches nested quadrature on the Cauchy model") {
  models::CauchyModel cm(3, 1.0, 6.0);
  models::CauchyJointAdapter adapter(cm);
  CounterRng rng = CounterRng::make(31, {stream::kChannel});
  const Eigen::VectorXd y = adapter.sample_y(adapter.sample_x(rng), rng);
  const Eigen::VectorXd nested = oracle::nested_quadrature_mean(adapter, y);
  oracle::GaussianProposal prop;
  prop.mean = 0.5 * y;
  prop.sigma = 1.0;
  const auto is = oracle::importance_sampling_mean(adapter, y, prop,
                                                   ExpectationConfig::monte_carlo(60000, 6));
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(is.mean[i] - nested[i]) <= 3.0 * std::max(is.stderr_[i], 1e-6));
}

TEST_CASE("importance sampling antithetic symmetry within stderr") {
  models::CauchyModel cm(2, 1.0, 5.0);
  models::CauchyJointAdapter adapter(cm);
  Eigen::VectorXd y(2);
  y << 0.9, -0.4;
  oracle::GaussianProposal prop;
  prop.mean = 0.5 * y;
  prop.sigma = 1.0;
  const auto a = oracle::importance_sampling_mean(adapter, y, prop,
                                                  ExpectationConfig::monte_carlo(40000, 8));
  oracle::GaussianProposal nprop;
  nprop.mean = -0.5 * y;
  nprop.sigma = 1.0;
  const auto b = oracle::importance_sampling_mean(adapter, -y, nprop,
                                                  ExpectationConfig::monte_carlo(40000, 8));
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(a.mean[i] + b.mean[i]) <=
          4.0 * std::max(1e-6, std::hypot(a.stderr_[i], b.stderr_[i])));
}

TEST_CASE("degenerate proposals are rejected") {
  models::GaussianAwgnModel g(1, 1.0, 1.0);
  Eigen::VectorXd y(1);
  y << 0.0;
  oracle::GaussianProposal prop;
  prop.mean = Eigen::VectorXd::Constant(1, 40.0);
  prop.sigma = 0.05;
  CHECK_THROWS_AS(oracle::importance_sampling_mean(g, y, prop,
                                                   ExpectationConfig::monte_carlo(2000, 4)),
                  DegenerateWeights);
}

TEST_CASE("monte carlo stderr shrinks like 1/sqrt(samples)") {
  const auto model = models::make_random_discrete(222);
  std::vector<double> ns = {400, 4000, 40000};
  std::vector<double> ses;
  for (double n : ns) {
    const auto r =
        oracle::oracle_mmse(*model, ExpectationConfig::monte_carlo((long)n, 13));
    REQUIRE(r.stderr_.has_value());
    ses.push_back(*r.stderr_);
  }
  // Least-squares slope of log(se) against log(n).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < ns.size(); ++i) {
    const double x = std::log(ns[i]), yv = std::log(ses[i]);
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
  }
  const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.2));
}

TEST_CASE("oracle self-consistency: discretized Gaussian vs continuous quadrature") {
  // A 61-point grid restriction of the scalar Gaussian-AWGN pair should land
  // near the continuous answer, within discretization error.
  class DiscretizedGaussian final : public JointModel {
   public:
    DiscretizedGaussian() {
      for (int i = 0; i < 61; ++i) grid_.push_back(-5.0 + 10.0 * i / 60.0);
    }
    int input_dim() const override { return 1; }
    int output_dim() const override { return 1; }
    CoordinateDomain input_domain(int) const override { return FiniteSet{grid_}; }
    std::optional<CoordinateDomain> output_domain(int) const override {
      return FiniteSet{grid_};
    }
    double log_prior(const Eigen::VectorXd& x) const override { return -0.5 * x[0] * x[0]; }
    double log_channel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override {
      return -0.5 * (y[0] - x[0]) * (y[0] - x[0]);
    }

   private:
    std::vector<double> grid_;
  };
  DiscretizedGaussian dg;
  const double got = oracle::oracle_mmse(dg, ExpectationConfig::enumerate()).value;
  CHECK(got == doctest::Approx(0.5).epsilon(5e-3));
}
