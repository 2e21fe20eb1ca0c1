#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "logz/diff.hpp"
#include "logz/errors.hpp"
#include "logz/expectation.hpp"
#include "logz/log_partition.hpp"
#include "logz/model.hpp"

namespace logz {

// The source reweighted by e^{lambda^T x} / Theta(lambda), together with the
// output marginal it induces through the channel.
struct TiltedEnsemble {
  const JointModel* base = nullptr;
  TiltVector lambda;
  double log_theta = 0.0;

  double log_marginal(const Eigen::VectorXd& y, const PartitionOptions& opts = {}) const {
    return log_partition(*base, y, lambda, opts) - log_theta;
  }
};

inline TiltedEnsemble make_tilted(const JointModel& model, const TiltVector& tilt,
                                  const PartitionOptions& opts = {}) {
  return {&model, tilt, log_theta(model, tilt, opts)};
}

// i_lambda(x; y) = ln[P(y|x) / P_lambda(y)], in nats.
inline double information_density(const TiltedEnsemble& ens, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y, const PartitionOptions& opts = {}) {
  const double lm = ens.log_marginal(y, opts);
  if (lm == kNegInf) throw ZeroMarginal("information_density: P_lambda(y) = 0");
  return ens.base->log_channel(x, y) - lm;
}

namespace detail {

struct YDerivs {
  Eigen::VectorXd grad;   // gradient of ln Z(y, .) at 0
  Eigen::MatrixXd hess;   // Hessian of ln Z(y, .) at 0
};

inline YDerivs y_derivs(const JointModel& model, const Eigen::VectorXd& y, const DiffConfig& cfg,
                        const PartitionOptions& opts, bool need_hessian) {
  if (cfg.scheme == DiffScheme::analytic_if_available && analytic_moments_available(model)) {
    const PosteriorMoments pm =
        analytic_posterior_moments(model, y, TiltVector::zeros(model.input_dim()), opts);
    return {pm.mean, pm.cov};
  }
  auto f = [&](const Eigen::VectorXd& l) { return log_partition(model, y, TiltVector(l), opts); };
  const Eigen::VectorXd scales = coordinate_scales(model);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.input_dim());
  YDerivs d;
  d.grad = fd_gradient(f, zero, cfg, scales);
  if (need_hessian) d.hess = fd_hessian(f, zero, cfg, scales);
  return d;
}

struct PriorDerivs {
  Eigen::VectorXd mean;       // gradient of ln Theta at 0 = E{X}
  Eigen::MatrixXd cov;        // Hessian of ln Theta at 0 = Cov{X}
  Eigen::VectorXd x2_diag;    // E{X_i^2}
};

inline PriorDerivs prior_derivs(const JointModel& model, const DiffConfig& cfg,
                                const PartitionOptions& opts) {
  PriorDerivs out;
  if (cfg.scheme == DiffScheme::analytic_if_available && analytic_moments_available(model)) {
    const PriorMoments pm = prior_moments(model, opts);
    out.mean = pm.mean;
    out.cov = pm.cov;
    out.x2_diag = pm.second_moment.diagonal();
    return out;
  }
  auto f = [&](const Eigen::VectorXd& l) { return log_theta(model, TiltVector(l), opts); };
  const Eigen::VectorXd scales = coordinate_scales(model);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.input_dim());
  out.mean = fd_gradient(f, zero, cfg, scales);
  out.cov = fd_hessian(f, zero, cfg, scales);
  out.x2_diag = out.cov.diagonal() + out.mean.cwiseProduct(out.mean);
  return out;
}

inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, int offset, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = v[offset + i * n + j];
  return m;
}

inline void vec_into(Eigen::VectorXd& v, int offset, const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v[offset + i * n + j] = m(i, j);
}

}  // namespace detail

// Fisher information matrix J for estimating lambda from Y at lambda = 0,
// via the outer-product (score covariance) form.
inline Eigen::MatrixXd fisher_matrix(const JointModel& model, const ExpectationConfig& cfg,
                                     const DiffConfig& dcfg = {},
                                     const PartitionOptions& opts = {}) {
  const int n = model.input_dim();
  const detail::PriorDerivs prior = detail::prior_derivs(model, dcfg, opts);
  auto h = [&](const Eigen::VectorXd& y) {
    const detail::YDerivs d = detail::y_derivs(model, y, dcfg, opts, false);
    const Eigen::VectorXd score = d.grad - prior.mean;
    Eigen::VectorXd v(n * n);
    detail::vec_into(v, 0, (score * score.transpose()).eval());
    return v;
  };
  return detail::unvec(expect_over_y(model, cfg, n * n, h, opts).mean, 0, n);
}

// J via the negative expected Hessian of ln P_lambda(Y); used as the
// consistency cross-check against the outer-product form.
inline Eigen::MatrixXd fisher_matrix_hessian_route(const JointModel& model,
                                                   const ExpectationConfig& cfg,
                                                   const DiffConfig& dcfg = {},
                                                   const PartitionOptions& opts = {}) {
  const int n = model.input_dim();
  const detail::PriorDerivs prior = detail::prior_derivs(model, dcfg, opts);
  auto h = [&](const Eigen::VectorXd& y) {
    const detail::YDerivs d = detail::y_derivs(model, y, dcfg, opts, true);
    Eigen::VectorXd v(n * n);
    detail::vec_into(v, 0, d.hess);
    return v;
  };
  const Eigen::MatrixXd mean_hess_z = detail::unvec(expect_over_y(model, cfg, n * n, h, opts).mean, 0, n);
  // Hessian of ln P_lambda(y) is hess(ln Z) - Cov{X}; J = -E{...}.
  return prior.cov - mean_hess_z;
}

// Xi = E{ grad ln Z(Y) grad ln Z(Y)^T }; satisfies E = E{XX^T} - Xi.
inline Eigen::MatrixXd xi_matrix(const JointModel& model, const ExpectationConfig& cfg,
                                 const DiffConfig& dcfg = {},
                                 const PartitionOptions& opts = {}) {
  const int n = model.input_dim();
  auto h = [&](const Eigen::VectorXd& y) {
    const detail::YDerivs d = detail::y_derivs(model, y, dcfg, opts, false);
    Eigen::VectorXd v(n * n);
    detail::vec_into(v, 0, (d.grad * d.grad.transpose()).eval());
    return v;
  };
  return detail::unvec(expect_over_y(model, cfg, n * n, h, opts).mean, 0, n);
}

// The four equivalent MMSE formulas, evaluated side by side, with the
// decomposition matrices they imply.
struct MmseReport {
  Eigen::Vector4d formula_values;
  std::optional<Eigen::Vector4d> formula_stderr;
  Eigen::MatrixXd fisher;     // J
  Eigen::MatrixXd xi;         // Xi
  Eigen::MatrixXd cov_x;      // Cov{X}
  Eigen::MatrixXd error_cov;  // E = E{Cov{X|Y}}
  double spread = 0.0;        // max pairwise deviation of the four values
  double tolerance = 0.0;
  std::string method;

  double mmse() const { return formula_values[0]; }
};

struct AgreementTolerance {
  double absolute = 1e-8;  // enumeration / quadrature backends
  double mc_sigmas = 3.0;  // Monte Carlo backends
};

inline MmseReport mmse_all_formulas(const JointModel& model, const ExpectationConfig& cfg,
                                    const DiffConfig& dcfg = {},
                                    const PartitionOptions& opts = {},
                                    const AgreementTolerance& tol = {}) {
  const int n = model.input_dim();
  const detail::PriorDerivs prior = detail::prior_derivs(model, dcfg, opts);
  const double sum_var = prior.cov.diagonal().sum();
  const double sum_x2 = prior.x2_diag.sum();

  // Layout: [v1 v2 v3 v4, six pairwise diffs, vec Xi, vec J, vec E].
  const int dim = 10 + 3 * n * n;
  auto h = [&](const Eigen::VectorXd& y) {
    const detail::YDerivs d = detail::y_derivs(model, y, dcfg, opts, true);
    const Eigen::VectorXd score = d.grad - prior.mean;
    const double v1 = d.hess.trace();
    const double v2 = sum_var + (d.hess.diagonal() - prior.cov.diagonal()).sum();
    const double v3 = sum_var - score.squaredNorm();
    const double v4 = sum_x2 - d.grad.squaredNorm();
    Eigen::VectorXd v(dim);
    v[0] = v1;
    v[1] = v2;
    v[2] = v3;
    v[3] = v4;
    const double vals[4] = {v1, v2, v3, v4};
    int k = 4;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) v[k++] = vals[a] - vals[b];
    detail::vec_into(v, 10, (d.grad * d.grad.transpose()).eval());
    detail::vec_into(v, 10 + n * n, (score * score.transpose()).eval());
    detail::vec_into(v, 10 + 2 * n * n, d.hess);
    return v;
  };
  const VecExpectation e = expect_over_y(model, cfg, dim, h, opts);

  MmseReport rep;
  rep.formula_values = e.mean.head<4>();
  rep.xi = detail::unvec(e.mean, 10, n);
  rep.fisher = detail::unvec(e.mean, 10 + n * n, n);
  rep.error_cov = detail::unvec(e.mean, 10 + 2 * n * n, n);
  rep.cov_x = prior.cov;
  rep.method = strategy_name(cfg.strategy);
  double spread = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      spread = std::max(spread, std::abs(rep.formula_values[a] - rep.formula_values[b]));
  rep.spread = spread;

  if (cfg.strategy == YStrategy::monte_carlo && e.stderr_) {
    rep.formula_stderr = e.stderr_->head<4>();
    rep.tolerance = 0.0;
    int k = 4;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b, ++k) {
        // Some formula pairs coincide per sample up to rounding; keep an
        // absolute floor so a zero sample-stderr cannot reject 1e-17 noise.
        const double scale = std::max(1.0, rep.formula_values.cwiseAbs().maxCoeff());
        const double allowed = tol.mc_sigmas * (*e.stderr_)[k] + 1e-12 * scale;
        rep.tolerance = std::max(rep.tolerance, allowed);
        if (std::abs(e.mean[k]) > allowed)
          throw FormulaDisagreement(
              "MMSE formulas " + std::to_string(a + 1) + " and " + std::to_string(b + 1) +
              " differ by " + std::to_string(e.mean[k]) + " (> " + std::to_string(tol.mc_sigmas) +
              " sigma = " + std::to_string(allowed) + ")");
      }
  } else {
    rep.tolerance = tol.absolute;
    if (spread > tol.absolute)
      throw FormulaDisagreement("MMSE formula spread " + std::to_string(spread) +
                                " exceeds tolerance " + std::to_string(tol.absolute));
  }
  return rep;
}

// MSE of the conditional-mean estimator built from the wrong joint law Q,
// evaluated under the true law P, plus the full error-covariance matrix.
struct MismatchReport {
  Eigen::MatrixXd error_cov;
  double mse = 0.0;
  std::optional<double> stderr_;
  std::string method;
};

namespace detail {

inline void check_compatible(const JointModel& p, const JointModel& q) {
  if (p.input_dim() != q.input_dim() || p.output_dim() != q.output_dim())
    throw AlphabetMismatch("true and assumed models disagree on dimensions");
  for (int i = 0; i < p.input_dim(); ++i) {
    const CoordinateDomain dp = p.input_domain(i);
    const CoordinateDomain dq = q.input_domain(i);
    if (is_finite_domain(dp) != is_finite_domain(dq))
      throw AlphabetMismatch("input alphabet kinds differ at coordinate " + std::to_string(i));
    if (const auto* fp = std::get_if<FiniteSet>(&dp)) {
      const auto& fq = std::get<FiniteSet>(dq);
      if (fp->values != fq.values)
        throw AlphabetMismatch("finite input alphabets differ at coordinate " +
                               std::to_string(i));
    }
  }
}

}  // namespace detail

inline MismatchReport mismatched_mse(const JointModel& true_model,
                                     const JointModel& assumed_model,
                                     const ExpectationConfig& cfg, const DiffConfig& dcfg = {},
                                     const PartitionOptions& opts = {}) {
  detail::check_compatible(true_model, assumed_model);
  const int n = true_model.input_dim();
  const detail::PriorDerivs prior_p = detail::prior_derivs(true_model, dcfg, opts);
  const Eigen::MatrixXd xx_p = prior_p.cov + prior_p.mean * prior_p.mean.transpose();

  // Layout: [scalar cross part, vec(m_P m_Q^T), vec(m_Q m_Q^T)].
  const int dim = 1 + 2 * n * n;
  auto h = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd m_p = detail::y_derivs(true_model, y, dcfg, opts, false).grad;
    const Eigen::VectorXd m_q = detail::y_derivs(assumed_model, y, dcfg, opts, false).grad;
    Eigen::VectorXd v(dim);
    v[0] = -2.0 * m_p.dot(m_q) + m_q.squaredNorm();
    detail::vec_into(v, 1, (m_p * m_q.transpose()).eval());
    detail::vec_into(v, 1 + n * n, (m_q * m_q.transpose()).eval());
    return v;
  };
  const VecExpectation e = expect_over_y(true_model, cfg, dim, h, opts);
  const Eigen::MatrixXd cross = detail::unvec(e.mean, 1, n);
  const Eigen::MatrixXd quad = detail::unvec(e.mean, 1 + n * n, n);

  MismatchReport rep;
  rep.error_cov = xx_p - cross - cross.transpose() + quad;
  rep.mse = xx_p.trace() + e.mean[0];
  if (e.stderr_) rep.stderr_ = (*e.stderr_)[0];
  rep.method = strategy_name(cfg.strategy);
  return rep;
}

// E{i_0(X; Y)} = I(X; Y); exposed for tests of the information-density link.
inline double mutual_information(const JointModel& model, const ExpectationConfig& cfg,
                                 const PartitionOptions& opts = {}) {
  const TiltedEnsemble ens = make_tilted(model, TiltVector::zeros(model.input_dim()), opts);
  auto h = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::VectorXd v(1);
    v[0] = information_density(ens, x, y, opts);
    return v;
  };
  return expect_over_xy(model, cfg, 1, h, opts).mean[0];
}

}  // namespace logz
