#pragma once

// Joint laws of the form P(x, y) = F_n(sum_i phi(x_i, y_i)), handled through
// the inverse-Laplace mixture representation
//   Z(y, lambda) = integral f_n(t) prod_i integral e^{lambda_i x - t phi(x, y_i)} w(x) dx dt,
// where f_n may change sign, so every t-integral is sign-tracked. The optional
// per-coordinate weight w(x) folds a product prior into the inner integrals.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "logz/errors.hpp"
#include "logz/logsumexp.hpp"
#include "logz/model.hpp"
#include "logz/quadrature.hpp"
#include "logz/solvers.hpp"

namespace logz::spherical {

struct Grid {
  std::vector<double> points;
};

using SampleDomain = std::variant<Interval, Grid>;

struct SphericalKernel {
  int n = 1;
  std::function<double(double, double)> phi;    // phi(x, y)
  std::function<SignedLogValue(double)> log_f;  // t -> (log|f_n(t)|, sign)
  Interval t_domain{0.0, std::numeric_limits<double>::infinity()};
  SampleDomain x_domain = Interval{-10.0, 10.0};
  SampleDomain y_domain = Interval{-10.0, 10.0};
  std::function<double(double)> log_x_weight;  // optional folded prior, may be empty

  // Optional closed forms; the generic quadrature paths are used when absent.
  std::function<double(double, double)> rho0_analytic;  // (y, t)
  std::function<double(double, double)> zeta_analytic;  // (y, t)
  std::function<double(double, double)> x2_analytic;    // (y, t), E{X^2 | y, t}

  QuadOptions quad{1e-11, 1e-300, 8000, nullptr};    // x and y integrals
  QuadOptions t_quad{1e-10, 1e-300, 8000, nullptr};  // outer t integrals
  int t_probe = 2049;
};

namespace detail {

inline double xw(const SphericalKernel& k, double x) {
  return k.log_x_weight ? k.log_x_weight(x) : 0.0;
}

}  // namespace detail

// rho(lambda, y, t) = ln integral e^{lambda x - t phi(x, y)} w(x) dx.
inline double rho(const SphericalKernel& k, double lambda, double y, double t) {
  if (const auto* grid = std::get_if<Grid>(&k.x_domain)) {
    LogAccumulator acc;
    for (double x : grid->points) acc.add(lambda * x - t * k.phi(x, y) + detail::xw(k, x));
    return acc.value();
  }
  const auto& iv = std::get<Interval>(k.x_domain);
  auto g = [&](double x) { return lambda * x - t * k.phi(x, y) + detail::xw(k, x); };
  return integrate_log(g, iv.lo, iv.hi, k.quad, 257).log_value;
}

inline double rho0(const SphericalKernel& k, double y, double t) {
  if (k.rho0_analytic) return k.rho0_analytic(y, t);
  return rho(k, 0.0, y, t);
}

// zeta(y, t) = d rho / d lambda at 0 = E{X | y, t} under the per-t kernel.
inline double zeta(const SphericalKernel& k, double y, double t) {
  if (k.zeta_analytic) return k.zeta_analytic(y, t);
  auto g = [&](double x) { return -t * k.phi(x, y) + detail::xw(k, x); };
  if (const auto* grid = std::get_if<Grid>(&k.x_domain)) {
    double m = kNegInf;
    for (double x : grid->points) m = std::max(m, g(x));
    double s0 = 0.0, s1 = 0.0;
    for (double x : grid->points) {
      const double w = std::exp(g(x) - m);
      s0 += w;
      s1 += w * x;
    }
    return s1 / s0;
  }
  const auto& iv = std::get<Interval>(k.x_domain);
  const double l0 = integrate_log(g, iv.lo, iv.hi, k.quad, 257).log_value;
  auto lf = [&](double x) {
    return SignedLogValue::from_log(std::log(std::abs(x)) + g(x), x > 0 ? +1 : (x < 0 ? -1 : 0));
  };
  const SignedQuadResult l1 = integrate_signed_log(lf, iv.lo, iv.hi, k.quad, 513);
  if (l1.value.sign == 0) return 0.0;
  return l1.value.sign * std::exp(l1.value.log_mag - l0);
}

// E{X^2 | y, t} under the per-t kernel.
inline double x_second_moment(const SphericalKernel& k, double y, double t) {
  if (k.x2_analytic) return k.x2_analytic(y, t);
  auto g = [&](double x) { return -t * k.phi(x, y) + detail::xw(k, x); };
  if (const auto* grid = std::get_if<Grid>(&k.x_domain)) {
    double m = kNegInf;
    for (double x : grid->points) m = std::max(m, g(x));
    double s0 = 0.0, s2 = 0.0;
    for (double x : grid->points) {
      const double w = std::exp(g(x) - m);
      s0 += w;
      s2 += w * x * x;
    }
    return s2 / s0;
  }
  const auto& iv = std::get<Interval>(k.x_domain);
  const double l0 = integrate_log(g, iv.lo, iv.hi, k.quad, 257).log_value;
  auto g2 = [&](double x) { return 2.0 * std::log(std::abs(x)) + g(x); };
  const double l2 = integrate_log(g2, iv.lo, iv.hi, k.quad, 257).log_value;
  return std::exp(l2 - l0);
}

// ln Z_t for one coordinate: ln integral_y e^{rho0(y, t)} dy (sum on grids).
inline double log_zt(const SphericalKernel& k, double t) {
  if (const auto* grid = std::get_if<Grid>(&k.y_domain)) {
    LogAccumulator acc;
    for (double y : grid->points) acc.add(rho0(k, y, t));
    return acc.value();
  }
  const auto& iv = std::get<Interval>(k.y_domain);
  auto g = [&](double y) { return rho0(k, y, t); };
  return integrate_log(g, iv.lo, iv.hi, k.quad, 257).log_value;
}

namespace detail {

// Finite truncation of the t-range: the declared domain when finite, else
// expanded from the probed peak of `log_mag` until a 45-nat drop.
template <class G>
std::pair<double, double> effective_t_range(const SphericalKernel& k, const G& log_mag) {
  const double lo = k.t_domain.lo;
  double hi = k.t_domain.hi;
  if (std::isfinite(hi)) return {lo, hi};
  double best_t = lo + 1.0, best_v = kNegInf;
  for (int i = 0; i <= 100; ++i) {
    const double t = lo + std::exp(-4.0 + 12.0 * i / 100.0);
    const double v = log_mag(t);
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  if (best_v == kNegInf) throw NonConvergent("spherical: |f_n| e^{sum rho0} has no mass");
  const auto range = expand_to_decay(log_mag, best_t, std::max(1.0, best_t), 45.0, lo);
  return range;
}

inline int f_sign(const SphericalKernel& k, double t) { return k.log_f(t).sign; }

}  // namespace detail

// Signed log value of Z(y, lambda) through the t-mixture.
inline SignedLogValue spherical_log_partition(const SphericalKernel& k, const Eigen::VectorXd& y,
                                              const TiltVector& tilt,
                                              double cancellation_tol = 1e-12) {
  if (y.size() != k.n || tilt.lambda.size() != k.n)
    throw DimensionMismatch("spherical_log_partition: bad vector length");
  auto sum_rho = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < k.n; ++i) {
      const double li = tilt.lambda[i];
      s += (li == 0.0) ? rho0(k, y[i], t) : rho(k, li, y[i], t);
    }
    return s;
  };
  auto log_mag = [&](double t) {
    const SignedLogValue f = k.log_f(t);
    if (f.sign == 0) return kNegInf;
    return f.log_mag + sum_rho(t);
  };
  const auto [lo, hi] = detail::effective_t_range(k, log_mag);
  auto lf = [&](double t) {
    const SignedLogValue f = k.log_f(t);
    if (f.sign == 0) return SignedLogValue::zero();
    return SignedLogValue::from_log(f.log_mag + sum_rho(t), f.sign);
  };
  const SignedQuadResult r = integrate_signed_log(lf, lo, hi, k.t_quad, k.t_probe,
                                                  [&](double t) { return detail::f_sign(k, t); });
  if (r.log_pos != kNegInf && r.log_neg != kNegInf && r.cancellation <= cancellation_tol)
    throw SignCancellation("spherical_log_partition: positive and negative parts cancel to " +
                           std::to_string(r.cancellation) + " relative");
  return r.value;
}

// t-hat maximizing ln|f_n(t)| + sum_i rho0(y_i, t). Intervals where f_n
// vanishes contribute -inf. Secondary local maxima within e^{-comparable}
// reach of the global one are reported in `other_maxima`.
inline SaddleSolution spherical_saddle_t(const SphericalKernel& k, const Eigen::VectorXd& y,
                                         double report_ratio = 1e-3) {
  if (y.size() != k.n) throw DimensionMismatch("spherical_saddle_t: y has wrong length");
  auto objective = [&](double t) {
    const SignedLogValue f = k.log_f(t);
    if (f.sign == 0) return kNegInf;
    double s = f.log_mag;
    for (int i = 0; i < k.n; ++i) s += rho0(k, y[i], t);
    return s;
  };
  const auto [lo, hi] = detail::effective_t_range(k, objective);

  const int m = std::max(257, k.t_probe / 4);
  std::vector<double> ts(m), vs(m);
  for (int i = 0; i < m; ++i) {
    ts[i] = lo + (hi - lo) * (i + 0.5) / m;
    vs[i] = objective(ts[i]);
  }
  int best = 0;
  std::vector<int> local;
  for (int i = 0; i < m; ++i) {
    if (vs[i] > vs[best]) best = i;
    const bool up = i == 0 || vs[i] >= vs[i - 1];
    const bool down = i == m - 1 || vs[i] >= vs[i + 1];
    if (up && down && vs[i] != kNegInf) local.push_back(i);
  }
  if (vs[best] == kNegInf) throw FlatMaximum("spherical_saddle_t: objective has no mass");
  const double step = (hi - lo) / m;
  const ScalarOpt fine =
      golden_max(objective, std::max(lo, ts[best] - step), std::min(hi, ts[best] + step), 1e-13);

  SaddleSolution sol;
  sol.argmax = fine.x;
  sol.exponent_value = fine.fx;
  sol.iterations = fine.iters;
  sol.converged = fine.converged;
  // Golden section stalls at ~sqrt(eps) around the maximum; polish with a
  // finite-difference Newton step in u = ln t.
  if (sol.argmax > 0.0) {
    double u = std::log(sol.argmax);
    auto ou = [&](double uu) { return objective(std::exp(uu)); };
    const double h = 1e-5;
    for (int it = 0; it < 12; ++it) {
      const double op = ou(u + h), o0 = ou(u), om = ou(u - h);
      if (op == kNegInf || om == kNegInf) break;
      const double d1 = (op - om) / (2.0 * h);
      const double d2 = (op - 2.0 * o0 + om) / (h * h);
      if (!(d2 < 0.0)) break;
      const double du = d1 / d2;
      const double un = u - du;
      if (std::exp(un) <= lo || std::exp(un) >= hi) break;
      u = un;
      ++sol.iterations;
      if (std::abs(du) < 1e-12) break;
    }
    const double t_polished = std::exp(u);
    const double v_polished = objective(t_polished);
    // Near the maximum the objective differences sit below evaluation noise;
    // keep the polished point unless it is genuinely worse.
    if (v_polished >= sol.exponent_value - 1e-9 * (1.0 + std::abs(sol.exponent_value))) {
      sol.argmax = t_polished;
      sol.exponent_value = std::max(v_polished, sol.exponent_value);
    }
  }
  // Dimensionless curvature in u = ln t (t > 0 on the default domain).
  if (sol.argmax > 0) {
    const double du = 1e-4;
    auto ou = [&](double u) { return objective(std::exp(u)); };
    const double u0 = std::log(sol.argmax);
    sol.curvature = -(ou(u0 + du) - 2.0 * ou(u0) + ou(u0 - du)) / (du * du);
  } else {
    const double dt = 1e-6 * std::max(1.0, std::abs(sol.argmax));
    sol.curvature = -(objective(sol.argmax + dt) - 2.0 * sol.exponent_value +
                      objective(sol.argmax - dt)) /
                    (dt * dt);
  }
  if (!std::isfinite(sol.curvature) || sol.curvature <= 0.0)
    throw FlatMaximum("spherical_saddle_t: no curvature at the maximizer");
  const double cutoff = sol.exponent_value + std::log(report_ratio);
  for (int i : local) {
    if (std::abs(ts[i] - sol.argmax) <= 2.0 * step) continue;
    const bool interior_peak = i > 0 && i + 1 < m && vs[i] > vs[i - 1] && vs[i] > vs[i + 1];
    if (interior_peak && vs[i] >= cutoff) sol.other_maxima.push_back(ts[i]);
  }
  return sol;
}

// The approximate estimator zeta(y_i, t-hat) next to the exact mixture ratio
//   integral f_n zeta(y_i, t) e^{sum rho0} dt / integral f_n e^{sum rho0} dt,
// both computed from one adaptively refined node set.
struct SphericalEstimate {
  Eigen::VectorXd zeta_at_saddle;
  Eigen::VectorXd exact_ratio;
  SaddleSolution t_hat;
};

inline SphericalEstimate spherical_estimator(const SphericalKernel& k, const Eigen::VectorXd& y,
                                             double min_curvature = 10.0,
                                             double cancellation_tol = 1e-12) {
  SphericalEstimate est;
  est.t_hat = spherical_saddle_t(k, y);
  if (est.t_hat.curvature < min_curvature)
    throw FlatMaximum("spherical_estimator: log-curvature " +
                      std::to_string(est.t_hat.curvature) + " below " +
                      std::to_string(min_curvature));
  est.zeta_at_saddle.resize(k.n);
  for (int i = 0; i < k.n; ++i) est.zeta_at_saddle[i] = zeta(k, y[i], est.t_hat.argmax);

  std::vector<double> rho_cache(k.n);
  auto sum_rho0 = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < k.n; ++i) s += rho0(k, y[i], t);
    return s;
  };
  auto log_mag = [&](double t) {
    const SignedLogValue f = k.log_f(t);
    return f.sign == 0 ? kNegInf : f.log_mag + sum_rho0(t);
  };
  const auto [lo, hi] = detail::effective_t_range(k, log_mag);
  std::vector<std::pair<double, double>> nodes;
  QuadOptions q = k.t_quad;
  q.nodes_out = &nodes;
  auto lf = [&](double t) {
    const SignedLogValue f = k.log_f(t);
    if (f.sign == 0) return SignedLogValue::zero();
    return SignedLogValue::from_log(f.log_mag + sum_rho0(t), f.sign);
  };
  const SignedQuadResult denom = integrate_signed_log(
      lf, lo, hi, q, k.t_probe, [&](double t) { return detail::f_sign(k, t); });
  if (denom.value.sign == 0)
    throw SignCancellation("spherical_estimator: mixture denominator vanished");
  if (denom.log_pos != kNegInf && denom.log_neg != kNegInf &&
      denom.cancellation <= cancellation_tol)
    throw SignCancellation("spherical_estimator: denominator cancels beyond tolerance");

  const double shift = denom.value.log_mag;
  double d_nodes = 0.0;
  Eigen::VectorXd num = Eigen::VectorXd::Zero(k.n);
  for (const auto& [t, w] : nodes) {
    const SignedLogValue f = k.log_f(t);
    if (f.sign == 0) continue;
    const double g = f.log_mag + sum_rho0(t);
    const double c = w * f.sign * std::exp(g - shift);
    d_nodes += c;
    for (int i = 0; i < k.n; ++i) num[i] += c * zeta(k, y[i], t);
  }
  est.exact_ratio = num / d_nodes;
  return est;
}

namespace detail {

// Nodes and normalized weights of the per-t output marginal e^{rho0(y, t)}.
inline void per_t_y_weights(const SphericalKernel& k, double t, std::vector<double>& ys,
                            std::vector<double>& wy) {
  ys.clear();
  wy.clear();
  if (const auto* grid = std::get_if<Grid>(&k.y_domain)) {
    ys = grid->points;
    wy.resize(ys.size());
    double m = kNegInf;
    for (size_t j = 0; j < ys.size(); ++j) {
      wy[j] = rho0(k, ys[j], t);
      m = std::max(m, wy[j]);
    }
    for (double& v : wy) v = std::exp(v - m);
  } else {
    const auto& iv = std::get<Interval>(k.y_domain);
    std::vector<std::pair<double, double>> ynodes;
    QuadOptions yq = k.quad;
    yq.rel_tol = std::max(yq.rel_tol, 1e-8);
    yq.nodes_out = &ynodes;
    auto gy = [&](double yy) { return rho0(k, yy, t); };
    const LogQuadResult yr = integrate_log(gy, iv.lo, iv.hi, yq, 257);
    if (yr.log_value == kNegInf) return;
    for (const auto& [yy, ww] : ynodes) {
      ys.push_back(yy);
      wy.push_back(ww * std::exp(gy(yy) - yr.log_shift));
    }
  }
  double wsum = 0.0;
  for (double v : wy) wsum += v;
  for (double& v : wy) v /= wsum;
}

}  // namespace detail

// t0(t): maximizer over t' of ln|f_n(t')| + n E_{y|t}{rho0(y, t')}, the
// per-component tilt that dominates the mixture once the t-level output
// statistics are pinned at t.
inline double single_letter_t0(const SphericalKernel& k, double t) {
  std::vector<double> ys, wy;
  detail::per_t_y_weights(k, t, ys, wy);
  if (ys.empty()) throw QuadratureFailure("single_letter_t0: empty output marginal");
  auto objective = [&](double tp) {
    const SignedLogValue fp = k.log_f(tp);
    if (fp.sign == 0) return kNegInf;
    double e = 0.0;
    for (size_t j = 0; j < ys.size(); ++j) e += wy[j] * rho0(k, ys[j], tp);
    return fp.log_mag + k.n * e;
  };
  const auto [lo, hi] = detail::effective_t_range(k, objective);
  const ScalarOpt coarse = grid_max(objective, lo, hi, 201);
  const double st = (hi - lo) / 200.0;
  return golden_max(objective, std::max(lo, coarse.x - st), std::min(hi, coarse.x + st), 1e-10)
      .x;
}

// Single-letter MMSE per symbol: E{X_i^2} - E{zeta^2(Y_i, t0(t))}, with the
// outer expectation over the signed mixture weight w_n(t) = f_n(t) Z_t^n and
// the inner one over the per-t output marginal e^{rho0(y, t)}. t0(t) maximizes
// ln|f_n(t')| + n E_{y|t}{rho0(y, t')}.
struct SingleLetterMmse {
  double mmse = 0.0;
  double e_x2 = 0.0;
  double e_zeta2 = 0.0;
  double weight_norm = 1.0;  // signed integral of w_n; 1 for a normalized kernel
};

inline SingleLetterMmse spherical_single_letter_mmse(const SphericalKernel& k,
                                                     double negative_tol = 1e-8) {
  auto w_mag = [&](double t) {
    const SignedLogValue f = k.log_f(t);
    if (f.sign == 0) return kNegInf;
    return f.log_mag + k.n * log_zt(k, t);
  };
  const auto [lo, hi] = detail::effective_t_range(k, w_mag);
  std::vector<std::pair<double, double>> nodes;
  QuadOptions q = k.t_quad;
  q.rel_tol = std::max(q.rel_tol, 1e-8);
  q.nodes_out = &nodes;
  auto lf = [&](double t) {
    const SignedLogValue f = k.log_f(t);
    if (f.sign == 0) return SignedLogValue::zero();
    return SignedLogValue::from_log(w_mag(t), f.sign);
  };
  const SignedQuadResult outer = integrate_signed_log(
      lf, lo, hi, q, 513, [&](double t) { return detail::f_sign(k, t); });
  if (outer.value.sign == 0) throw SignCancellation("single-letter mmse: weight integral vanished");
  std::sort(nodes.begin(), nodes.end());

  const double shift = outer.value.log_mag;
  double s1 = 0.0, s_zeta2 = 0.0, s_x2 = 0.0;
  double prev_t0 = std::numeric_limits<double>::quiet_NaN();
  for (const auto& [t, w] : nodes) {
    const SignedLogValue f = k.log_f(t);
    if (f.sign == 0) continue;
    const double c = w * f.sign * std::exp(w_mag(t) - shift);

    // Per-t output weights.
    std::vector<double> ys, wy;
    detail::per_t_y_weights(k, t, ys, wy);
    if (ys.empty()) continue;

    // t0(t): warm-started local search, falling back to a full scan.
    auto objective = [&](double tp) {
      const SignedLogValue fp = k.log_f(tp);
      if (fp.sign == 0) return kNegInf;
      double e = 0.0;
      for (size_t j = 0; j < ys.size(); ++j) e += wy[j] * rho0(k, ys[j], tp);
      return fp.log_mag + k.n * e;
    };
    double t0;
    if (std::isnan(prev_t0)) {
      const ScalarOpt coarse = grid_max(objective, lo, hi, 201);
      const double st = (hi - lo) / 200.0;
      t0 = golden_max(objective, std::max(lo, coarse.x - st), std::min(hi, coarse.x + st), 1e-10)
               .x;
    } else {
      double wlo = std::max(lo, prev_t0 - (hi - lo) / 50.0);
      double whi = std::min(hi, prev_t0 + (hi - lo) / 50.0);
      for (int grow = 0; grow < 8; ++grow) {
        const ScalarOpt g = golden_max(objective, wlo, whi, 1e-10);
        const bool at_lo = g.x - wlo < 2e-3 * (whi - wlo) && wlo > lo;
        const bool at_hi = whi - g.x < 2e-3 * (whi - wlo) && whi < hi;
        if (!at_lo && !at_hi) {
          t0 = g.x;
          break;
        }
        wlo = std::max(lo, wlo - (whi - wlo));
        whi = std::min(hi, whi + (whi - wlo));
        t0 = g.x;
      }
    }
    prev_t0 = t0;

    double inner_z2 = 0.0, inner_x2 = 0.0;
    for (size_t j = 0; j < ys.size(); ++j) {
      const double z = zeta(k, ys[j], t0);
      inner_z2 += wy[j] * z * z;
      inner_x2 += wy[j] * x_second_moment(k, ys[j], t);
    }
    s1 += c;
    s_zeta2 += c * inner_z2;
    s_x2 += c * inner_x2;
  }

  SingleLetterMmse out;
  out.weight_norm = s1 * std::exp(shift);
  out.e_zeta2 = s_zeta2 / s1;
  out.e_x2 = s_x2 / s1;
  out.mmse = out.e_x2 - out.e_zeta2;
  if (out.mmse < -negative_tol * std::max(1.0, out.e_x2))
    throw NegativeMmse("single-letter mmse " + std::to_string(out.mmse) +
                       " is negative beyond tolerance (approximation breakdown)");
  return out;
}

// --- kernel builders -------------------------------------------------------

inline std::function<SignedLogValue(double)> gamma_density_logf(double k, double log_scale = 0.0) {
  const double lg = std::lgamma(k);
  return [k, lg, log_scale](double t) {
    if (t <= 0.0) return SignedLogValue::zero();
    return SignedLogValue::from_log(log_scale + (k - 1.0) * std::log(t) - t - lg, +1);
  };
}

inline std::function<SignedLogValue(double)> sin_logf(double alpha, double log_scale = 0.0) {
  return [alpha, log_scale](double t) {
    const double s = std::sin(alpha * t);
    if (s == 0.0) return SignedLogValue::zero();
    return SignedLogValue::from_log(log_scale + std::log(std::abs(s)), s > 0 ? +1 : -1);
  };
}

// Piecewise-linear signed table for f_n; zero outside the tabulated range.
inline std::function<SignedLogValue(double)> table_logf(std::vector<double> ts,
                                                        std::vector<double> fs) {
  if (ts.size() != fs.size() || ts.size() < 2)
    throw ConfigError("table f_n needs matching t/f lists of length >= 2");
  for (size_t i = 1; i < ts.size(); ++i)
    if (ts[i] <= ts[i - 1]) throw ConfigError("table f_n: t values must be increasing");
  return [ts = std::move(ts), fs = std::move(fs)](double t) {
    if (t < ts.front() || t > ts.back()) return SignedLogValue::zero();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const size_t j = std::min(ts.size() - 1, static_cast<size_t>(it - ts.begin()));
    const size_t i = j == 0 ? 0 : j - 1;
    const double u = (t - ts[i]) / (ts[j] - ts[i]);
    return SignedLogValue::from_double((1.0 - u) * fs[i] + u * fs[j]);
  };
}

// Narrow positive Gaussian bump at t0: a point-mass surrogate.
inline std::function<SignedLogValue(double)> bump_logf(double t0, double width) {
  const double lc = -std::log(width * std::sqrt(2.0 * std::numbers::pi));
  return [t0, width, lc](double t) {
    return SignedLogValue::from_log(lc - 0.5 * (t - t0) * (t - t0) / (width * width), +1);
  };
}

// The generalized-Cauchy model as a spherical kernel: phi = (y - x)^2 with the
// Gaussian prior folded into the x-weight and f_n(t) carrying the exact
// constants, so Z matches the model's marginal density. Analytic closed forms
// for rho0/zeta/x2 are attached when `analytic` is set.
inline SphericalKernel cauchy_kernel(int n, double sigma2, double k, bool analytic = false) {
  SphericalKernel ker;
  ker.n = n;
  ker.phi = [](double x, double y) { return (y - x) * (y - x); };
  const double log_scale =
      -0.5 * n * std::log(std::numbers::pi) - std::lgamma(k - 0.5 * n) + std::lgamma(k);
  ker.log_f = gamma_density_logf(k, log_scale);
  const double sigma = std::sqrt(sigma2);
  ker.x_domain = Interval{-14.0 * sigma, 14.0 * sigma, GaussianHint{0.0, sigma}};
  ker.y_domain = Interval{-14.0 * sigma - 20.0, 14.0 * sigma + 20.0, std::nullopt};
  ker.log_x_weight = [sigma2](double x) {
    return -0.5 * x * x / sigma2 - 0.5 * std::log(2.0 * std::numbers::pi * sigma2);
  };
  if (analytic) {
    ker.rho0_analytic = [sigma2](double y, double t) {
      return -0.5 * std::log1p(2.0 * t * sigma2) - t * y * y / (1.0 + 2.0 * t * sigma2);
    };
    ker.zeta_analytic = [sigma2](double y, double t) {
      return t * y / (t + 1.0 / (2.0 * sigma2));
    };
    ker.x2_analytic = [sigma2](double y, double t) {
      const double alpha = t + 1.0 / (2.0 * sigma2);
      const double mean = t * y / alpha;
      return mean * mean + 0.5 / alpha;
    };
  }
  return ker;
}

}  // namespace logz::spherical
