#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "logz/errors.hpp"
#include "logz/model.hpp"
#include "logz/quadrature.hpp"
#include "logz/rng.hpp"
#include "logz/solvers.hpp"

namespace logz::models {

// i.i.d. Gaussian source X_i ~ N(0, sigma^2) with additive noise from the
// generalized multivariate Cauchy density C_{n,k} / [1 + ||z||^2]^k (S = I).
// Second moments require k > n/2 + 1.
struct CauchyModel {
  int n = 1;
  double sigma2 = 1.0;
  double k = 3.0;

  CauchyModel(int n_, double sigma2_, double k_) : n(n_), sigma2(sigma2_), k(k_) {
    if (n < 1) throw DomainError("CauchyModel: n >= 1");
    if (sigma2 <= 0) throw DomainError("CauchyModel: sigma^2 > 0");
    if (!(k > 0.5 * n + 1.0))
      throw InvalidTailExponent("CauchyModel: k must exceed n/2 + 1 for second moments");
  }

  // ln C_{n,k} = ln Gamma(k) - (n/2) ln pi - ln Gamma(k - n/2).
  double log_channel_constant() const {
    return std::lgamma(k) - 0.5 * n * std::log(std::numbers::pi) - std::lgamma(k - 0.5 * n);
  }
};

namespace detail {

// Exponent of the 1-D Laplace representation in u = ln t:
//   G(u) = k u - t - (n/2) ln(1 + 2 t sigma^2) + Q(t),  t = e^u,
// where Q collects the completed squares of the x-integrals. At lambda = 0,
// Q(t) = -(t / (1 + 2 t sigma^2)) ||y||^2.
struct CauchyExponent {
  const CauchyModel* model;
  const Eigen::VectorXd* y;
  const Eigen::VectorXd* lambda;  // may be nullptr for the zero tilt
  double y2;

  CauchyExponent(const CauchyModel& m, const Eigen::VectorXd& yy, const Eigen::VectorXd* l)
      : model(&m), y(&yy), lambda(l), y2(yy.squaredNorm()) {}

  double q(double t) const {
    const double alpha = t + 1.0 / (2.0 * model->sigma2);
    if (!lambda) return -t / (1.0 + 2.0 * t * model->sigma2) * y2;
    double s = -t * y2;
    for (int i = 0; i < model->n; ++i) {
      const double c = t * (*y)[i] + 0.5 * (*lambda)[i];
      s += c * c / alpha;
    }
    return s;
  }

  double operator()(double u) const {
    const double t = std::exp(u);
    return model->k * u - t - 0.5 * model->n * std::log1p(2.0 * t * model->sigma2) + q(t);
  }
};

inline std::pair<double, double> cauchy_u_range(const CauchyExponent& g) {
  // The peak sits near t ~ k for small ||y||^2 and moves left as the data
  // penalty grows; probe log-spaced t to bracket it, then expand to decay.
  const ScalarOpt coarse = grid_max(g, -25.0, std::log(10.0 * (g.model->k + g.y2 + 1.0)), 401);
  return expand_to_decay(g, coarse.x, 1.0, 45.0);
}

}  // namespace detail

// ln Z(y, lambda) through the Laplace-transform identity, with exact
// constants: Z(y, 0) equals the marginal density P(y).
inline double cauchy_log_partition(const CauchyModel& model, const Eigen::VectorXd& y,
                                   const TiltVector& tilt, const QuadOptions& quad = {}) {
  if (y.size() != model.n || tilt.lambda.size() != model.n)
    throw DimensionMismatch("cauchy_log_partition: bad vector length");
  const bool zero_tilt = tilt.is_zero();
  const detail::CauchyExponent g(model, y, zero_tilt ? nullptr : &tilt.lambda);
  const auto [lo, hi] = detail::cauchy_u_range(g);
  const LogQuadResult r = integrate_log(g, lo, hi, quad, 513);
  if (r.log_value == kNegInf) throw QuadratureFailure("cauchy_log_partition: no mass");
  return -0.5 * model.n * std::log(std::numbers::pi) - std::lgamma(model.k - 0.5 * model.n) +
         r.log_value;
}

// Exact conditional mean at lambda = 0. All coordinates share the scalar
// shrinkage coefficient E{ t / (t + 1/(2 sigma^2)) } under the t-posterior, so
// one pair of 1-D integrals covers any n.
inline Eigen::VectorXd cauchy_conditional_mean(const CauchyModel& model,
                                               const Eigen::VectorXd& y,
                                               const QuadOptions& quad = {}) {
  if (y.size() != model.n) throw DimensionMismatch("cauchy_conditional_mean: y length");
  const detail::CauchyExponent g(model, y, nullptr);
  const auto [lo, hi] = detail::cauchy_u_range(g);
  std::vector<std::pair<double, double>> nodes;
  QuadOptions q = quad;
  q.nodes_out = &nodes;
  const LogQuadResult denom = integrate_log(g, lo, hi, q, 513);
  if (denom.log_value == kNegInf) throw QuadratureFailure("cauchy_conditional_mean: no mass");
  double d = 0.0, num = 0.0;
  const double half_prec = 1.0 / (2.0 * model.sigma2);
  for (const auto& [u, w] : nodes) {
    const double t = std::exp(u);
    const double f = w * std::exp(g(u) - denom.log_shift);
    d += f;
    num += f * (t / (t + half_prec));
  }
  return (num / d) * y;
}

// t-hat maximizing the full integrand exponent at lambda = 0,
//   (k-1) ln t - t - (n/2) ln(1 + 2 t sigma^2) - (t/(1 + 2 t sigma^2)) ||y||^2,
// solved in u = ln t by grid bracketing, golden section, and Newton polish.
// The curvature field carries -d^2/du^2 at the maximizer (dimensionless).
inline SaddleSolution cauchy_saddle_t(const CauchyModel& model, const Eigen::VectorXd& y) {
  if (y.size() != model.n) throw DimensionMismatch("cauchy_saddle_t: y length");
  const double y2 = y.squaredNorm();
  const double s2 = model.sigma2;
  auto psi_u = [&](double u) {
    const double t = std::exp(u);
    return (model.k - 1.0) * u - t - 0.5 * model.n * std::log1p(2.0 * t * s2) -
           t / (1.0 + 2.0 * t * s2) * y2;
  };
  auto dpsi_dt = [&](double t) {
    const double den = 1.0 + 2.0 * t * s2;
    return (model.k - 1.0) / t - 1.0 - model.n * s2 / den - y2 / (den * den);
  };
  auto d2psi_dt2 = [&](double t) {
    const double den = 1.0 + 2.0 * t * s2;
    return -(model.k - 1.0) / (t * t) + 2.0 * model.n * s2 * s2 / (den * den) +
           4.0 * s2 * y2 / (den * den * den);
  };
  const ScalarOpt coarse = grid_max(psi_u, -25.0, std::log(10.0 * (model.k + y2 + 1.0)), 801);
  const double step = (std::log(10.0 * (model.k + y2 + 1.0)) + 25.0) / 800.0;
  const ScalarOpt fine = golden_max(psi_u, coarse.x - step, coarse.x + step, 1e-13);
  const RootResult polish =
      newton_polish(dpsi_dt, d2psi_dt2, std::exp(fine.x), std::exp(fine.x - 2.0 * step),
                    std::exp(fine.x + 2.0 * step), 1e-14);
  SaddleSolution sol;
  sol.argmax = polish.converged ? polish.x : std::exp(fine.x);
  sol.exponent_value = psi_u(std::log(sol.argmax));
  sol.iterations = fine.iters + polish.iters;
  sol.residual = std::abs(dpsi_dt(sol.argmax)) * sol.argmax;  // d psi / du at the max
  sol.converged = sol.residual <= 1e-9 * std::max(1.0, std::abs(sol.exponent_value));
  sol.curvature = -(sol.argmax * sol.argmax * d2psi_dt2(sol.argmax) +
                    sol.argmax * dpsi_dt(sol.argmax));
  return sol;
}

// Saddle-point estimator t-hat y_i / (t-hat + 1/(2 sigma^2)); refuses flat
// maxima where the single-point approximation of the t-integral is meaningless.
inline Eigen::VectorXd cauchy_saddle_estimator(const CauchyModel& model,
                                               const Eigen::VectorXd& y,
                                               double min_curvature = 10.0) {
  const SaddleSolution sol = cauchy_saddle_t(model, y);
  if (sol.curvature < min_curvature)
    throw FlatMaximum("cauchy_saddle_estimator: log-curvature " +
                      std::to_string(sol.curvature) + " below " +
                      std::to_string(min_curvature));
  return (sol.argmax / (sol.argmax + 1.0 / (2.0 * model.sigma2))) * y;
}

// JointModel adapter for the oracle paths (nested quadrature, importance
// sampling, Monte Carlo). Sampling uses the scale-mixture form of the noise:
// normalizing e^{-t ||z||^2} in z turns the t density into Gamma(k - n/2), so
// t ~ Gamma(k - n/2), z | t ~ N(0, I/(2t)). The model constraint k > n/2 + 1
// keeps that shape above 1.
class CauchyJointAdapter final : public JointModel {
 public:
  explicit CauchyJointAdapter(const CauchyModel& m) : m_(m) {
    sigma_ = std::sqrt(m.sigma2);
    log_c_ = m.log_channel_constant();
  }

  int input_dim() const override { return m_.n; }
  int output_dim() const override { return m_.n; }
  CoordinateDomain input_domain(int) const override {
    return Interval{-14.0 * sigma_, 14.0 * sigma_, GaussianHint{0.0, sigma_}};
  }
  std::optional<CoordinateDomain> output_domain(int) const override {
    return Interval{-14.0 * sigma_ - 30.0, 14.0 * sigma_ + 30.0, std::nullopt};
  }

  double log_prior(const Eigen::VectorXd& x) const override {
    return -0.5 * x.squaredNorm() / m_.sigma2 -
           0.5 * m_.n * std::log(2.0 * std::numbers::pi * m_.sigma2);
  }
  double log_channel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override {
    return log_c_ - m_.k * std::log1p((y - x).squaredNorm());
  }

  bool can_sample() const override { return true; }
  Eigen::VectorXd sample_x(CounterRng& rng) const override {
    Eigen::VectorXd x(m_.n);
    for (int i = 0; i < m_.n; ++i) x[i] = sigma_ * rng.gaussian();
    return x;
  }
  Eigen::VectorXd sample_y(const Eigen::VectorXd& x, CounterRng& rng) const override {
    const double t = rng.gamma(m_.k - 0.5 * m_.n);
    const double sd = 1.0 / std::sqrt(2.0 * t);
    Eigen::VectorXd y(m_.n);
    for (int i = 0; i < m_.n; ++i) y[i] = x[i] + sd * rng.gaussian();
    return y;
  }

  const CauchyModel& base() const { return m_; }

 private:
  CauchyModel m_;
  double sigma_, log_c_;
};

}  // namespace logz::models
