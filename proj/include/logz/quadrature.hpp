#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "logz/errors.hpp"
#include "logz/logsumexp.hpp"

namespace logz {

struct QuadOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-300;
  int max_panels = 8000;
  // When set, every accepted panel appends its Kronrod nodes and weights here,
  // giving a reusable quadrature rule for integrands with the same peak
  // structure.
  std::vector<std::pair<double, double>>* nodes_out = nullptr;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
};

namespace detail {

// Gauss 7 / Kronrod 15 abscissae and weights on [-1, 1].
inline constexpr double kKronrodX[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline constexpr double kKronrodW[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kGaussW[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F>
void gk15(const F& f, double a, double b, double& k15, double& err,
          std::vector<std::pair<double, double>>* nodes_out) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  // Nodes ordered: pairs (c - h x, c + h x) for i = 0..6, then the center.
  for (int i = 0; i < 7; ++i) {
    fv[2 * i] = f(c - h * kKronrodX[i]);
    fv[2 * i + 1] = f(c + h * kKronrodX[i]);
  }
  fv[14] = f(c);
  double g7 = kGaussW[3] * fv[14];
  double k = kKronrodW[7] * fv[14];
  for (int i = 0; i < 7; ++i) {
    const double pair = fv[2 * i] + fv[2 * i + 1];
    k += kKronrodW[i] * pair;
    if (i % 2 == 1) g7 += kGaussW[i / 2] * pair;
  }
  k15 = k * h;
  err = std::abs((k - g7) * h);
  err = std::min(err, std::pow(200.0 * err, 1.5));
  if (nodes_out) {
    for (int i = 0; i < 7; ++i) {
      nodes_out->push_back({c - h * kKronrodX[i], h * kKronrodW[i]});
      nodes_out->push_back({c + h * kKronrodX[i], h * kKronrodW[i]});
    }
    nodes_out->push_back({c, h * kKronrodW[7]});
  }
}

}  // namespace detail

// Adaptive Gauss-Kronrod on a finite interval.
template <class F>
QuadResult integrate(const F& f, double a, double b, const QuadOptions& opt = {}) {
  if (!(a < b)) {
    if (a == b) return {0.0, 0.0, 0};
    throw DomainError("integrate: empty interval");
  }
  struct Panel {
    double a, b, value, error;
  };
  // Seed with several panels: a single G7/K15 pair on a far-under-resolved
  // peak can agree by coincidence, and acceptance at that stage plants an
  // error invisible to the refinement loop.
  std::vector<Panel> stack;
  double scale = 0.0;
  const int seed_panels = 8;
  const double min_width = (b - a) * 1e-10;
  for (int p = 0; p < seed_panels; ++p) {
    const double pa = a + (b - a) * p / seed_panels;
    const double pb = a + (b - a) * (p + 1) / seed_panels;
    double v, e;
    detail::gk15(f, pa, pb, v, e, nullptr);
    stack.push_back({pa, pb, v, e});
    scale += std::abs(v);
  }
  double total = 0.0, total_err = 0.0;
  int panels = 0;
  while (!stack.empty()) {
    Panel p = stack.back();
    stack.pop_back();
    if (++panels > opt.max_panels) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "integrate: panel budget exhausted on [%g, %g] (active [%g, %g])", a, b,
                    p.a, p.b);
      throw QuadratureFailure(buf);
    }
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::max(scale, std::abs(total)));
    if (p.error <= tol * std::max(1e-6, (p.b - p.a) / (b - a)) || p.error <= opt.abs_tol ||
        p.b - p.a <= min_width) {
      if (opt.nodes_out) {
        double dummy_v, dummy_e;
        detail::gk15(f, p.a, p.b, dummy_v, dummy_e, opt.nodes_out);
      }
      total += p.value;
      total_err += p.error;
      scale = std::max(scale, std::abs(total));
      continue;
    }
    const double mid = 0.5 * (p.a + p.b);
    double vl, el, vr, er;
    detail::gk15(f, p.a, mid, vl, el, nullptr);
    detail::gk15(f, mid, p.b, vr, er, nullptr);
    stack.push_back({p.a, mid, vl, el});
    stack.push_back({mid, p.b, vr, er});
  }
  return {total, total_err, panels};
}

struct LogQuadResult {
  double log_value = kNegInf;  // ln of the (positive) integral
  double rel_error = 0.0;
  double log_shift = 0.0;  // max of the log-integrand used for scaling
};

// Integrates exp(g(x)) dx over [a, b] for a log-integrand g, stably: the
// integrand is rescaled by its probed maximum, and the adaptive pass runs
// only over the probed window holding mass within e^{-60} of the peak.
// Without the window, a steep exponential ramp (hundreds of nats across the
// interval) drags the subdivision through magnitudes that contribute nothing.
template <class G>
LogQuadResult integrate_log(const G& g, double a, double b, const QuadOptions& opt = {},
                            int probe_points = 129) {
  if (!(a < b)) throw DomainError("integrate_log: empty interval");
  // Probe includes the endpoints: a boundary maximum (steep ramp against the
  // domain edge) must set the normalization, or exp(g - gmax) overflows.
  const double spacing = (b - a) / probe_points;
  double gmax = kNegInf;
  std::vector<double> xs(probe_points + 2), probe(probe_points + 2);
  xs[0] = a;
  xs[probe_points + 1] = b;
  for (int i = 0; i < probe_points; ++i) xs[i + 1] = a + (b - a) * (i + 0.5) / probe_points;
  for (size_t i = 0; i < xs.size(); ++i) {
    probe[i] = g(xs[i]);
    gmax = std::max(gmax, probe[i]);
  }
  if (gmax == kNegInf) return {kNegInf, 0.0, 0.0};
  constexpr double kWindowDrop = 60.0;
  double lo = b, hi = a;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (probe[i] < gmax - kWindowDrop) continue;
    lo = std::min(lo, xs[i]);
    hi = std::max(hi, xs[i]);
  }
  lo = std::max(a, lo - 1.5 * spacing);
  hi = std::min(b, hi + 1.5 * spacing);
  auto f = [&](double x) {
    const double v = g(x);
    return v == kNegInf ? 0.0 : std::exp(v - gmax);
  };
  const QuadResult r = integrate(f, lo, hi, opt);
  if (r.value <= 0.0) return {kNegInf, 0.0, gmax};
  return {gmax + std::log(r.value), r.error / r.value, gmax};
}

struct SignedQuadResult {
  SignedLogValue value;
  double log_pos = kNegInf;
  double log_neg = kNegInf;
  // |pos - neg| / max(pos, neg): small values mean the result is dominated by
  // cancellation between the sign parts.
  double cancellation = 1.0;
};

// Integrates a signed integrand given as x -> (log|f(x)|, sign). The domain is
// split at probed sign changes (refined by bisection) and the positive and
// negative parts are accumulated separately in log space. When the sign is
// computable without the magnitude, pass it as `sign_fn` so probing stays cheap.
template <class LF>
SignedQuadResult integrate_signed_log(const LF& lf, double a, double b,
                                      const QuadOptions& opt = {}, int probe_points = 2049,
                                      const std::function<int(double)>& sign_fn = {}) {
  if (!(a < b)) throw DomainError("integrate_signed_log: empty interval");
  auto sign_at = [&](double x) { return sign_fn ? sign_fn(x) : lf(x).sign; };
  // Collect breakpoints where the sign changes between adjacent probes.
  std::vector<double> cuts{a};
  double x_prev = a;
  int s_prev = sign_at(a);
  for (int i = 1; i <= probe_points; ++i) {
    const double x = a + (b - a) * i / probe_points;
    const int s = sign_at(x);
    if (s != s_prev && s_prev != 0 && s != 0) {
      double lo = x_prev, hi = x;
      for (int it = 0; it < 60 && (hi - lo) > 1e-14 * (b - a); ++it) {
        const double mid = 0.5 * (lo + hi);
        (sign_at(mid) == s_prev ? lo : hi) = mid;
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    if (s != 0) s_prev = s;
    x_prev = x;
  }
  cuts.push_back(b);

  LogAccumulator pos, neg;
  double max_piece_rel_err = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    if (hi - lo <= 0.0) continue;
    const int s = sign_at(0.5 * (lo + hi));
    if (s == 0) continue;
    auto piece = [&](double x) {
      const SignedLogValue v = lf(x);
      return v.log_mag;
    };
    const LogQuadResult r = integrate_log(piece, lo, hi, opt, 257);
    if (r.log_value == kNegInf) continue;
    max_piece_rel_err = std::max(max_piece_rel_err, r.rel_error);
    (s > 0 ? pos : neg).add(r.log_value);
  }
  SignedQuadResult out;
  out.log_pos = pos.value();
  out.log_neg = neg.value();
  SignedAccumulator acc;
  acc.pos = pos;
  acc.neg = neg;
  out.value = acc.value();
  out.cancellation = acc.cancellation_ratio();
  return out;
}

// Expands [center - w, center + w] until the log-integrand has dropped `drop`
// nats below its running maximum on both sides (tail truncation point).
// Throws NonConvergent when no such decay is found.
template <class G>
std::pair<double, double> expand_to_decay(const G& g, double center, double width,
                                          double drop = 40.0, double lo_bound = kNegInf,
                                          double hi_bound = -kNegInf) {
  double gmax = g(center);
  double lo = center - width, hi = center + width;
  auto grow = [&](double& end, double dir, double bound) {
    for (int it = 0; it < 200; ++it) {
      if (dir < 0 && end <= bound) {
        end = bound;
        return;
      }
      if (dir > 0 && end >= bound) {
        end = bound;
        return;
      }
      // Re-probe interior points so a peak between center and the end keeps
      // the maximum honest; the endpoint itself stays out of the max, else
      // its own value would absorb the drop margin.
      for (int j = 1; j <= 3; ++j) gmax = std::max(gmax, g(center + (end - center) * j / 4.0));
      const double ge = g(end);
      if (ge <= gmax - drop && !(ge >= gmax)) return;
      end = center + (end - center) * 2.0;
    }
    throw NonConvergent("expand_to_decay: integrand does not decay");
  };
  grow(lo, -1.0, lo_bound);
  grow(hi, +1.0, hi_bound);
  return {lo, hi};
}

// Gauss-Hermite nodes/weights for integrals of f(x) e^{-x^2} dx, via
// Golub-Welsch on the Jacobi matrix.
inline std::vector<std::pair<double, double>> gauss_hermite(int order) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    const double beta = std::sqrt(i / 2.0);
    jacobi(i, i - 1) = beta;
    jacobi(i - 1, i) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  std::vector<std::pair<double, double>> out(order);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int i = 0; i < order; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    out[i] = {es.eigenvalues()(i), sqrt_pi * v0 * v0};
  }
  return out;
}

}  // namespace logz
