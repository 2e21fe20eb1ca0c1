#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "logz/errors.hpp"

namespace logz {

enum class DiffScheme { analytic_if_available, central_difference };

struct DiffConfig {
  DiffScheme scheme = DiffScheme::analytic_if_available;
  double step = 1e-5;        // base step; scaled per coordinate by max(1, |scale_i|)
  bool richardson = true;    // one extrapolation level (h and h/2)
  double grad_check_tol = 1e-4;   // Richardson disagreement threshold, gradient
  double hess_check_tol = 1e-2;   // same for second derivatives (roundoff is ~eps/h^2)
};

namespace detail {

inline double coord_step(const DiffConfig& cfg, const Eigen::VectorXd& scales, int i) {
  const double s = scales.size() > i ? scales[i] : 1.0;
  return cfg.step * std::max(1.0, std::abs(s));
}

inline void check_agreement(double coarse, double fine, double tol, const char* what) {
  const double denom = std::max(1.0, std::abs(fine));
  if (std::abs(fine - coarse) > tol * denom)
    throw StepTooLarge(std::string(what) +
                       ": finite-difference estimates at h and h/2 disagree beyond tolerance");
}

}  // namespace detail

// Central-difference gradient of f at x0 with optional one-level Richardson
// extrapolation. f: (const VectorXd&) -> double.
template <class F>
Eigen::VectorXd fd_gradient(const F& f, const Eigen::VectorXd& x0, const DiffConfig& cfg = {},
                            const Eigen::VectorXd& scales = Eigen::VectorXd()) {
  const int n = static_cast<int>(x0.size());
  Eigen::VectorXd g(n);
  Eigen::VectorXd x = x0;
  for (int i = 0; i < n; ++i) {
    const double h = detail::coord_step(cfg, scales, i);
    auto central = [&](double hh) {
      x[i] = x0[i] + hh;
      const double fp = f(x);
      x[i] = x0[i] - hh;
      const double fm = f(x);
      x[i] = x0[i];
      return (fp - fm) / (2.0 * hh);
    };
    const double d1 = central(h);
    if (!cfg.richardson) {
      g[i] = d1;
      continue;
    }
    const double d2 = central(h / 2.0);
    detail::check_agreement(d1, d2, cfg.grad_check_tol, "fd_gradient");
    g[i] = (4.0 * d2 - d1) / 3.0;
  }
  return g;
}

// Central-difference Hessian; symmetric by construction (each off-diagonal
// entry is computed once from the 4-point cross stencil).
template <class F>
Eigen::MatrixXd fd_hessian(const F& f, const Eigen::VectorXd& x0, const DiffConfig& cfg = {},
                           const Eigen::VectorXd& scales = Eigen::VectorXd()) {
  const int n = static_cast<int>(x0.size());
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd x = x0;
  const double f0 = f(x0);

  auto diag = [&](int i, double h) {
    x[i] = x0[i] + h;
    const double fp = f(x);
    x[i] = x0[i] - h;
    const double fm = f(x);
    x[i] = x0[i];
    return (fp - 2.0 * f0 + fm) / (h * h);
  };
  auto cross = [&](int i, int j, double hi, double hj) {
    x[i] = x0[i] + hi;
    x[j] = x0[j] + hj;
    const double fpp = f(x);
    x[j] = x0[j] - hj;
    const double fpm = f(x);
    x[i] = x0[i] - hi;
    const double fmm = f(x);
    x[j] = x0[j] + hj;
    const double fmp = f(x);
    x[i] = x0[i];
    x[j] = x0[j];
    return (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
  };

  for (int i = 0; i < n; ++i) {
    const double h = detail::coord_step(cfg, scales, i);
    double v = diag(i, h);
    if (cfg.richardson) {
      const double v2 = diag(i, h / 2.0);
      detail::check_agreement(v, v2, cfg.hess_check_tol, "fd_hessian");
      v = (4.0 * v2 - v) / 3.0;
    }
    hess(i, i) = v;
    for (int j = i + 1; j < n; ++j) {
      const double hj = detail::coord_step(cfg, scales, j);
      double c = cross(i, j, h, hj);
      if (cfg.richardson) {
        const double c2 = cross(i, j, h / 2.0, hj / 2.0);
        detail::check_agreement(c, c2, cfg.hess_check_tol, "fd_hessian");
        c = (4.0 * c2 - c) / 3.0;
      }
      hess(i, j) = c;
      hess(j, i) = c;
    }
  }
  return hess;
}

}  // namespace logz
