#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <variant>

#include <Eigen/Dense>

#include "logz/diff.hpp"
#include "logz/enumeration.hpp"
#include "logz/errors.hpp"
#include "logz/logsumexp.hpp"
#include "logz/model.hpp"
#include "logz/quadrature.hpp"

namespace logz {

enum class PartitionMethod { enumeration, quadrature, saddle };

struct PartitionOptions {
  uint64_t enumeration_cap = kDefaultEnumerationCap;
  QuadOptions quad;
  int max_nested_dim = 3;  // continuous non-factorized models beyond this are refused
  int gh_order = 0;  // > 0: fixed Hermite rule on Gaussian-hinted coordinates
};

struct PartitionDiagnostics {
  PartitionMethod method = PartitionMethod::enumeration;
  double quad_rel_error = 0.0;
  double step_used = 0.0;
};

struct LogPartitionResult {
  double log_z = kNegInf;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  PartitionMethod method = PartitionMethod::enumeration;
  PartitionDiagnostics diagnostics;
};

namespace detail {

enum class ModelKind { finite, factorized_continuous, nested_continuous };

inline ModelKind classify(const JointModel& model, const PartitionOptions& opts) {
  bool all_finite = true, all_interval = true;
  for (int i = 0; i < model.input_dim(); ++i) {
    const CoordinateDomain d = model.input_domain(i);
    all_finite = all_finite && is_finite_domain(d);
    all_interval = all_interval && !is_finite_domain(d);
  }
  if (all_finite) return ModelKind::finite;
  if (!all_interval) throw Unsupported("mixed finite/continuous input alphabets");
  if (model.factorizes()) return ModelKind::factorized_continuous;
  if (model.input_dim() > opts.max_nested_dim)
    throw Unsupported("non-factorized continuous model with dimension above the nested cap");
  return ModelKind::nested_continuous;
}

// ln of the per-coordinate tilted integral for a factorized continuous model.
// Adaptive Gauss-Kronrod on the declared interval by default; with gh_order
// set and a Gaussian hint on the coordinate, a fixed Hermite rule after
// affine standardization x = mean + sqrt(2) sigma u is used instead.
template <class Extra>
double coord_log_integral(const JointModel& model, int i, const Eigen::VectorXd& y,
                          double lambda_i, const PartitionOptions& opts, const Extra& extra) {
  const auto iv = std::get<Interval>(model.input_domain(i));
  auto g = [&](double x) {
    return lambda_i * x + model.coord_log_prior(i, x) + model.coord_log_channel(i, x, y) +
           extra(x);
  };
  if (opts.gh_order > 0 && iv.hint) {
    const auto nodes = gauss_hermite(opts.gh_order);
    const double s = std::numbers::sqrt2 * iv.hint->sigma;
    LogAccumulator acc;
    for (const auto& [u, w] : nodes)
      acc.add(g(iv.hint->mean + s * u) + u * u + std::log(w * s));
    return acc.value();
  }
  return integrate_log(g, iv.lo, iv.hi, opts.quad).log_value;
}

inline double nested_log_integral(const JointModel& model, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& lambda, const PartitionOptions& opts,
                                  const std::function<double(const Eigen::VectorXd&)>& extra) {
  const int n = model.input_dim();
  Eigen::VectorXd x(n);
  std::function<double(int)> level = [&](int k) -> double {
    const auto iv = std::get<Interval>(model.input_domain(k));
    auto g = [&](double xk) {
      x[k] = xk;
      if (k + 1 == n)
        return lambda.dot(x) + model.log_prior(x) + model.log_channel(x, y) + extra(x);
      return level(k + 1);
    };
    QuadOptions q = opts.quad;
    q.rel_tol = std::max(q.rel_tol, 1e-9);  // nested levels multiply the cost sharply
    return integrate_log(g, iv.lo, iv.hi, q).log_value;
  };
  return level(0);
}

}  // namespace detail

// ln Z(y, lambda) = ln sum_x exp{lambda^T x} P(x, y)  (integral over declared
// intervals in the continuous case). Returns -inf when every term vanishes.
inline double log_partition(const JointModel& model, const Eigen::VectorXd& y,
                            const TiltVector& tilt, const PartitionOptions& opts = {}) {
  check_output_dim(model, y);
  check_tilt_dim(model, tilt);
  const auto kind = detail::classify(model, opts);
  switch (kind) {
    case detail::ModelKind::finite: {
      const StateSpace xs = StateSpace::inputs(model, opts.enumeration_cap);
      LogAccumulator acc;
      xs.for_each([&](const Eigen::VectorXd& x) {
        acc.add(tilt.lambda.dot(x) + model.log_prior(x) + model.log_channel(x, y));
      });
      return acc.value();
    }
    case detail::ModelKind::factorized_continuous: {
      double total = 0.0;
      for (int i = 0; i < model.input_dim(); ++i) {
        const double li = detail::coord_log_integral(model, i, y, tilt.lambda[i], opts,
                                                     [](double) { return 0.0; });
        if (li == kNegInf) return kNegInf;
        total += li;
      }
      return total;
    }
    case detail::ModelKind::nested_continuous:
      return detail::nested_log_integral(model, y, tilt.lambda, opts,
                                         [](const Eigen::VectorXd&) { return 0.0; });
  }
  return kNegInf;
}

// Conditional mean and covariance of X given y, together with ln Z. The
// analytic path uses exact tilted-posterior moments (enumeration) or
// per-coordinate quadrature ratios (factorized continuous models).
struct PosteriorMoments {
  double log_z = kNegInf;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  PartitionMethod method = PartitionMethod::enumeration;
};

inline bool analytic_moments_available(const JointModel& model) {
  bool all_finite = true, all_interval = true;
  for (int i = 0; i < model.input_dim(); ++i) {
    const bool f = is_finite_domain(model.input_domain(i));
    all_finite = all_finite && f;
    all_interval = all_interval && !f;
  }
  return all_finite || (all_interval && model.factorizes());
}

inline PosteriorMoments analytic_posterior_moments(const JointModel& model,
                                                   const Eigen::VectorXd& y,
                                                   const TiltVector& tilt,
                                                   const PartitionOptions& opts = {}) {
  check_output_dim(model, y);
  check_tilt_dim(model, tilt);
  const int n = model.input_dim();
  PosteriorMoments out;
  if (detail::classify(model, opts) == detail::ModelKind::finite) {
    const StateSpace xs = StateSpace::inputs(model, opts.enumeration_cap);
    double m = kNegInf, s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(n, n);
    xs.for_each([&](const Eigen::VectorXd& x) {
      const double g = tilt.lambda.dot(x) + model.log_prior(x) + model.log_channel(x, y);
      if (g == kNegInf) return;
      if (g <= m) {
        const double w = std::exp(g - m);
        s0 += w;
        s1 += w * x;
        s2 += w * x * x.transpose();
      } else {
        const double r = m == kNegInf ? 0.0 : std::exp(m - g);
        s0 = s0 * r + 1.0;
        s1 = s1 * r + x;
        s2 = s2 * r + x * x.transpose();
        m = g;
      }
    });
    if (m == kNegInf) throw ZeroMarginal("posterior moments: P(y) = 0 for the given y");
    out.log_z = m + std::log(s0);
    out.mean = s1 / s0;
    out.cov = s2 / s0 - out.mean * out.mean.transpose();
    out.method = PartitionMethod::enumeration;
    return out;
  }
  if (!model.factorizes())
    throw Unsupported("analytic posterior moments need a finite or factorized model");
  out.mean.resize(n);
  out.cov = Eigen::MatrixXd::Zero(n, n);
  out.log_z = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto iv = std::get<Interval>(model.input_domain(i));
    auto g = [&](double x) {
      return tilt.lambda[i] * x + model.coord_log_prior(i, x) +
             model.coord_log_channel(i, x, y);
    };
    const double l0 = integrate_log(g, iv.lo, iv.hi, opts.quad).log_value;
    if (l0 == kNegInf) throw ZeroMarginal("posterior moments: coordinate weight vanished");
    auto lf1 = [&](double x) {
      return SignedLogValue::from_log(std::log(std::abs(x)) + g(x),
                                      x > 0 ? +1 : (x < 0 ? -1 : 0));
    };
    const SignedQuadResult l1 = integrate_signed_log(lf1, iv.lo, iv.hi, opts.quad, 513);
    auto g2 = [&](double x) { return 2.0 * std::log(std::abs(x)) + g(x); };
    const double l2 = integrate_log(g2, iv.lo, iv.hi, opts.quad).log_value;
    const double mean = l1.value.sign * std::exp(l1.value.log_mag - l0);
    out.mean[i] = mean;
    out.cov(i, i) = std::exp(l2 - l0) - mean * mean;
    out.log_z += l0;
  }
  out.method = PartitionMethod::quadrature;
  return out;
}

// E{X | Y = y} as the gradient of ln Z at lambda = 0.
inline Eigen::VectorXd conditional_mean(const JointModel& model, const Eigen::VectorXd& y,
                                        const DiffConfig& cfg = {},
                                        const PartitionOptions& opts = {}) {
  if (cfg.scheme == DiffScheme::analytic_if_available && analytic_moments_available(model))
    return analytic_posterior_moments(model, y, TiltVector::zeros(model.input_dim()), opts).mean;
  check_output_dim(model, y);
  if (log_partition(model, y, TiltVector::zeros(model.input_dim()), opts) == kNegInf)
    throw ZeroMarginal("conditional_mean: P(y) = 0 for the given y");
  auto f = [&](const Eigen::VectorXd& l) { return log_partition(model, y, TiltVector(l), opts); };
  return fd_gradient(f, Eigen::VectorXd::Zero(model.input_dim()), cfg, coordinate_scales(model));
}

// Cov{X | Y = y} as the Hessian of ln Z at lambda = 0.
inline Eigen::MatrixXd conditional_covariance(const JointModel& model, const Eigen::VectorXd& y,
                                              const DiffConfig& cfg = {},
                                              const PartitionOptions& opts = {}) {
  if (cfg.scheme == DiffScheme::analytic_if_available && analytic_moments_available(model))
    return analytic_posterior_moments(model, y, TiltVector::zeros(model.input_dim()), opts).cov;
  check_output_dim(model, y);
  if (log_partition(model, y, TiltVector::zeros(model.input_dim()), opts) == kNegInf)
    throw ZeroMarginal("conditional_covariance: P(y) = 0 for the given y");
  auto f = [&](const Eigen::VectorXd& l) { return log_partition(model, y, TiltVector(l), opts); };
  return fd_hessian(f, Eigen::VectorXd::Zero(model.input_dim()), cfg, coordinate_scales(model));
}

inline LogPartitionResult log_partition_full(const JointModel& model, const Eigen::VectorXd& y,
                                             const DiffConfig& cfg = {},
                                             const PartitionOptions& opts = {}) {
  LogPartitionResult r;
  if (cfg.scheme == DiffScheme::analytic_if_available && analytic_moments_available(model)) {
    const PosteriorMoments pm =
        analytic_posterior_moments(model, y, TiltVector::zeros(model.input_dim()), opts);
    r.log_z = pm.log_z;
    r.gradient = pm.mean;
    r.hessian = pm.cov;
    r.method = pm.method;
  } else {
    r.log_z = log_partition(model, y, TiltVector::zeros(model.input_dim()), opts);
    if (r.log_z == kNegInf) throw ZeroMarginal("log_partition_full: P(y) = 0");
    auto f = [&](const Eigen::VectorXd& l) {
      return log_partition(model, y, TiltVector(l), opts);
    };
    const Eigen::VectorXd scales = coordinate_scales(model);
    r.gradient = fd_gradient(f, Eigen::VectorXd::Zero(model.input_dim()), cfg, scales);
    r.hessian = fd_hessian(f, Eigen::VectorXd::Zero(model.input_dim()), cfg, scales);
    r.method = PartitionMethod::quadrature;
    r.diagnostics.step_used = cfg.step;
  }
  r.diagnostics.quad_rel_error = opts.quad.rel_tol;
  r.diagnostics.method = r.method;
  return r;
}

// ln Theta(lambda) = ln sum_x P(x) exp{lambda^T x} and the tilted-prior
// moments. The tilted source P_lambda(x) = e^{lambda^T x} P(x) / Theta.
struct PriorMoments {
  double log_theta = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd second_moment;
  Eigen::MatrixXd cov;
};

inline PriorMoments tilted_prior_moments(const JointModel& model, const TiltVector& tilt,
                                         const PartitionOptions& opts = {}) {
  check_tilt_dim(model, tilt);
  const int n = model.input_dim();
  PriorMoments out;
  const auto kind = detail::classify(model, opts);
  if (kind == detail::ModelKind::finite) {
    const StateSpace xs = StateSpace::inputs(model, opts.enumeration_cap);
    double m = kNegInf, s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(n, n);
    // ln Theta is reported relative to the lambda = 0 normalization, so that
    // Theta(0) = 1 holds even when log_prior is shifted by a constant.
    LogAccumulator norm;
    xs.for_each([&](const Eigen::VectorXd& x) {
      const double lp = model.log_prior(x);
      norm.add(lp);
      const double g = tilt.lambda.dot(x) + lp;
      if (g == kNegInf) return;
      if (g <= m) {
        const double w = std::exp(g - m);
        s0 += w;
        s1 += w * x;
        s2 += w * x * x.transpose();
      } else {
        const double r = m == kNegInf ? 0.0 : std::exp(m - g);
        s0 = s0 * r + 1.0;
        s1 = s1 * r + x;
        s2 = s2 * r + x * x.transpose();
        m = g;
      }
    });
    if (m == kNegInf) throw NonConvergent("tilted prior has no mass");
    out.log_theta = m + std::log(s0) - norm.value();
    out.mean = s1 / s0;
    out.second_moment = s2 / s0;
  } else if (kind == detail::ModelKind::factorized_continuous) {
    out.mean.resize(n);
    out.second_moment = Eigen::MatrixXd::Zero(n, n);
    out.log_theta = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto iv = std::get<Interval>(model.input_domain(i));
      auto g = [&](double x) { return tilt.lambda[i] * x + model.coord_log_prior(i, x); };
      auto g0 = [&](double x) { return model.coord_log_prior(i, x); };
      const double l0 = integrate_log(g, iv.lo, iv.hi, opts.quad).log_value;
      const double lnorm = integrate_log(g0, iv.lo, iv.hi, opts.quad).log_value;
      auto lf1 = [&](double x) {
        return SignedLogValue::from_log(std::log(std::abs(x)) + g(x),
                                        x > 0 ? +1 : (x < 0 ? -1 : 0));
      };
      const SignedQuadResult l1 = integrate_signed_log(lf1, iv.lo, iv.hi, opts.quad, 513);
      auto g2 = [&](double x) { return 2.0 * std::log(std::abs(x)) + g(x); };
      const double l2 = integrate_log(g2, iv.lo, iv.hi, opts.quad).log_value;
      out.mean[i] = l1.value.sign * std::exp(l1.value.log_mag - l0);
      out.second_moment(i, i) = std::exp(l2 - l0);
      out.log_theta += l0 - lnorm;
    }
    // Independent coordinates: off-diagonal second moments are products.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) out.second_moment(i, j) = out.mean[i] * out.mean[j];
  } else {
    throw Unsupported("tilted prior moments need a finite or factorized model");
  }
  out.cov = out.second_moment - out.mean * out.mean.transpose();
  return out;
}

inline double log_theta(const JointModel& model, const TiltVector& tilt,
                        const PartitionOptions& opts = {}) {
  return tilted_prior_moments(model, tilt, opts).log_theta;
}

inline PriorMoments prior_moments(const JointModel& model, const PartitionOptions& opts = {}) {
  return tilted_prior_moments(model, TiltVector::zeros(model.input_dim()), opts);
}

}  // namespace logz
