#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "logz/expectation.hpp"
#include "logz/models/cauchy.hpp"
#include "logz/models/gaussian.hpp"
#include "logz/oracle.hpp"
#include "logz/spherical.hpp"

using namespace logz;
namespace sph = logz::spherical;

namespace {

// Gaussian product model written as a degenerate mixture: a narrow positive
// bump at t0 with the prior folded into the x-weight.
sph::SphericalKernel bump_gaussian_kernel(int n, double sigma2, double t0, double width) {
  sph::SphericalKernel k;
  k.n = n;
  k.phi = [](double x, double y) { return (y - x) * (y - x); };
  k.log_f = sph::bump_logf(t0, width);
  k.t_domain = Interval{std::max(0.0, t0 - 30.0 * width), t0 + 30.0 * width, std::nullopt};
  const double s = std::sqrt(sigma2);
  k.x_domain = Interval{-12.0 * s, 12.0 * s, GaussianHint{0.0, s}};
  k.y_domain = Interval{-12.0 * s - 8.0, 12.0 * s + 8.0, std::nullopt};
  k.log_x_weight = [sigma2](double x) {
    return -0.5 * x * x / sigma2 - 0.5 * std::log(2.0 * std::numbers::pi * sigma2);
  };
  return k;
}

}  // namespace

TEST_CASE("degenerate mixture reproduces the Gaussian product model") {
  const double t0 = 0.8, sigma2 = 1.0;
  const auto kernel = bump_gaussian_kernel(2, sigma2, t0, 1e-4);
  Eigen::VectorXd y(2);
  y << 1.1, -0.6;
  const auto est = sph::spherical_estimator(kernel, y);
  CHECK(est.t_hat.argmax == doctest::Approx(t0).epsilon(1e-6));
  // zeta(y, t0) = t0 y / (t0 + 1/(2 sigma^2)): the AWGN posterior mean at
  // noise precision 2 t0.
  models::GaussianAwgnModel g(2, sigma2, 2.0 * t0);
  const Eigen::VectorXd want = conditional_mean(g, y);
  CHECK((est.zeta_at_saddle - want).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((est.exact_ratio - want).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("Cauchy instance: log partition matches the model within 1e-10") {
  models::CauchyModel model(3, 1.0, 6.0);
  const auto kernel = sph::cauchy_kernel(3, 1.0, 6.0, true);
  models::CauchyJointAdapter adapter(model);
  CounterRng rng = CounterRng::make(5, {stream::kChannel});
  const Eigen::VectorXd y = adapter.sample_y(adapter.sample_x(rng), rng);
  const TiltVector zero = TiltVector::zeros(3);
  const SignedLogValue z = sph::spherical_log_partition(kernel, y, zero);
  REQUIRE(z.sign == +1);
  CHECK(z.log_mag ==
        doctest::Approx(models::cauchy_log_partition(model, y, zero)).epsilon(1e-10));
  // The numeric-rho0 kernel agrees too, at a slightly looser tolerance.
  const auto numeric = sph::cauchy_kernel(3, 1.0, 6.0, false);
  CHECK(sph::spherical_log_partition(numeric, y, zero).log_mag ==
        doctest::Approx(models::cauchy_log_partition(model, y, zero)).epsilon(1e-9));
}

TEST_CASE("Cauchy instance: t-hat agrees across modules to 1e-8") {
  models::CauchyModel model(50, 1.0, 30.0);
  models::CauchyJointAdapter adapter(model);
  CounterRng rng = CounterRng::make(6, {stream::kChannel});
  const Eigen::VectorXd y = adapter.sample_y(adapter.sample_x(rng), rng);
  const auto kernel = sph::cauchy_kernel(50, 1.0, 30.0, true);
  const auto sol_model = models::cauchy_saddle_t(model, y);
  const auto sol_kernel = sph::spherical_saddle_t(kernel, y);
  CHECK(std::abs(sol_model.argmax - sol_kernel.argmax) <=
        1e-8 * std::max(1.0, sol_model.argmax));
}

TEST_CASE("sign-changing f_n: mixture equals the direct transform value") {
  // F(s) = alpha / (s^2 + alpha^2) is the Laplace transform of sin(alpha t).
  const double alpha = 2.0;
  sph::SphericalKernel k;
  k.n = 1;
  k.phi = [](double x, double y) { return (y - x) * (y - x); };
  k.log_f = sph::sin_logf(alpha);
  k.x_domain = sph::Grid{{0.0}};
  CounterRng rng = CounterRng::make(7, {stream::kModelGen});
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd y(1);
    y << 0.8 + 2.2 * rng.uniform();
    const double s = y[0] * y[0];
    const SignedLogValue z = sph::spherical_log_partition(k, y, TiltVector::zeros(1));
    worst = std::max(worst, std::abs(z.to_double() - alpha / (s * s + alpha * alpha)));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("sign cancellation is reported, not silently returned") {
  // f = sin(t) on [0, 2 pi] with a flat phi: the t-integral is exactly zero.
  sph::SphericalKernel k;
  k.n = 1;
  k.phi = [](double, double) { return 0.0; };
  k.log_f = sph::sin_logf(1.0);
  k.t_domain = Interval{0.0, 2.0 * std::numbers::pi, std::nullopt};
  k.x_domain = sph::Grid{{1.0}};
  Eigen::VectorXd y(1);
  y << 0.0;
  CHECK_THROWS_AS(sph::spherical_log_partition(k, y, TiltVector::zeros(1)), SignCancellation);
}

TEST_CASE("non-decaying mixtures raise NonConvergent") {
  sph::SphericalKernel k;
  k.n = 1;
  k.phi = [](double, double) { return 0.0; };
  k.log_f = [](double t) { return SignedLogValue::from_log(t, +1); };  // grows forever
  k.x_domain = sph::Grid{{1.0}};
  Eigen::VectorXd y(1);
  y << 0.0;
  CHECK_THROWS_AS(sph::spherical_log_partition(k, y, TiltVector::zeros(1)), NonConvergent);
}

TEST_CASE("scaling f_n leaves t-hat unchanged") {
  const auto base = sph::cauchy_kernel(10, 1.0, 9.0, true);
  auto scaled = base;
  scaled.log_f = sph::gamma_density_logf(
      9.0, 3.7 - 0.5 * 10 * std::log(std::numbers::pi) - std::lgamma(9.0 - 5.0) +
               std::lgamma(9.0));
  Eigen::VectorXd y(10);
  CounterRng rng = CounterRng::make(8, {stream::kChannel});
  for (int i = 0; i < 10; ++i) y[i] = rng.gaussian();
  const auto a = sph::spherical_saddle_t(base, y);
  const auto b = sph::spherical_saddle_t(scaled, y);
  CHECK(a.argmax == doctest::Approx(b.argmax).epsilon(1e-10));
}

TEST_CASE("symmetric phi gives an estimator odd in y") {
  // Log-curvature here is ~ k - n/2 = 4; gate accordingly.
  const auto kernel = sph::cauchy_kernel(2, 1.0, 5.0, false);
  Eigen::VectorXd y(2);
  y << 0.9, -1.3;
  const auto a = sph::spherical_estimator(kernel, y, 2.0);
  const auto b = sph::spherical_estimator(kernel, -y, 2.0);
  CHECK((a.zeta_at_saddle + b.zeta_at_saddle).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((a.exact_ratio + b.exact_ratio).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("n=12 discretized instance matches the enumeration oracle") {
  // P(x, y) = (1 + sum (y_i - x_i)^2)^{-k} on a 3-point input grid.
  const int n = 12;
  const double kk = 8.0;
  sph::SphericalKernel kernel;
  kernel.n = n;
  kernel.phi = [](double x, double y) { return (y - x) * (y - x); };
  kernel.log_f = sph::gamma_density_logf(kk);
  kernel.x_domain = sph::Grid{{-1.0, 0.0, 1.0}};
  Eigen::VectorXd y(n);
  CounterRng rng = CounterRng::make(13, {stream::kChannel});
  for (int i = 0; i < n; ++i) y[i] = 0.8 * rng.gaussian();

  class GridCauchyModel final : public JointModel {
   public:
    GridCauchyModel(int n, double k) : n_(n), k_(k) {}
    int input_dim() const override { return n_; }
    int output_dim() const override { return n_; }
    CoordinateDomain input_domain(int) const override {
      return FiniteSet{{-1.0, 0.0, 1.0}};
    }
    double log_prior(const Eigen::VectorXd&) const override { return 0.0; }
    double log_channel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override {
      return -k_ * std::log1p((y - x).squaredNorm());
    }

   private:
    int n_;
    double k_;
  };
  GridCauchyModel model(n, kk);
  const Eigen::VectorXd want = oracle::enumerate_posterior(model, y).mean();
  const auto est = sph::spherical_estimator(kernel, y, /*min_curvature=*/1.0);
  CHECK((est.exact_ratio - want).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("saddle validity improves with n on a fixed kernel family") {
  std::vector<int> ns = {10, 50, 200};
  std::vector<double> errs;
  for (int n : ns) {
    const auto kernel = sph::cauchy_kernel(n, 1.0, 0.5 * n + 10.0, true);
    Eigen::VectorXd y(n);
    CounterRng rng = CounterRng::make(14, {stream::kChannel, (uint64_t)n});
    for (int i = 0; i < n; ++i) y[i] = 1.2 * rng.gaussian();
    const auto est = sph::spherical_estimator(kernel, y, 5.0);
    const double scale = est.exact_ratio.cwiseAbs().maxCoeff();
    errs.push_back((est.zeta_at_saddle - est.exact_ratio).cwiseAbs().maxCoeff() / scale);
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
  CHECK(errs[2] <= 0.05);
}

TEST_CASE("t0(t) collapses to the bump location for degenerate mixtures") {
  const auto kernel = bump_gaussian_kernel(4, 1.0, 0.9, 1e-4);
  for (double t : {0.85, 0.9, 1.0}) {
    CHECK(sph::single_letter_t0(kernel, t) == doctest::Approx(0.9).epsilon(1e-4));
  }
}

TEST_CASE("single-letter mmse: degenerate mixture equals the product-model mmse") {
  const double t0 = 0.8, sigma2 = 1.0;
  const auto kernel = bump_gaussian_kernel(4, sigma2, t0, 1e-4);
  const auto sl = sph::spherical_single_letter_mmse(kernel);
  models::GaussianAwgnModel g(1, sigma2, 2.0 * t0);
  const double want = mmse(g, ExpectationConfig::quadrature()).value;
  CHECK(sl.mmse == doctest::Approx(want).epsilon(1e-4));
  CHECK(sl.e_x2 == doctest::Approx(sigma2).epsilon(1e-4));
}

TEST_CASE("single-letter mmse: mixture weights integrate to one and E{X^2} is exact") {
  const auto kernel = sph::cauchy_kernel(8, 1.3, 12.0, true);
  const auto sl = sph::spherical_single_letter_mmse(kernel);
  CHECK(sl.weight_norm == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sl.e_x2 == doctest::Approx(1.3).epsilon(1e-4));
  CHECK(sl.mmse > 0.0);
}
