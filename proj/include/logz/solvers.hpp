#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "logz/errors.hpp"

namespace logz {

enum class Multiplicity { unique, symmetric_pair };

// Result of a 1-D exponent maximization (theta*, t-hat, rho-type problems).
struct SaddleSolution {
  double argmax = 0.0;
  double exponent_value = 0.0;
  int iterations = 0;
  bool converged = false;
  Multiplicity multiplicity = Multiplicity::unique;
  std::optional<double> second_argmax;  // set for symmetric pairs
  double residual = 0.0;                // stationarity residual at argmax
  double curvature = 0.0;               // -(second derivative) diagnostic, problem-specific scaling
  std::vector<double> other_maxima;     // non-global local maxima within reporting threshold
};

struct ScalarOpt {
  double x = 0.0;
  double fx = 0.0;
  int iters = 0;
  bool converged = false;
};

template <class F>
ScalarOpt golden_max(const F& f, double lo, double hi, double xtol = 1e-12,
                     int max_iter = 300) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  int it = 0;
  while (b - a > xtol && it++ < max_iter) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x), it, b - a <= xtol * 4};
}

// Coarse scan returning the best grid point; used to bracket before golden.
template <class F>
ScalarOpt grid_max(const F& f, double lo, double hi, int points) {
  ScalarOpt best{lo, f(lo), points, true};
  for (int i = 1; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    const double v = f(x);
    if (v > best.fx) {
      best.x = x;
      best.fx = v;
    }
  }
  return best;
}

struct RootResult {
  double x = 0.0;
  int iters = 0;
  bool converged = false;
};

// Bisection on a sign change of f.
template <class F>
RootResult bisect_root(const F& f, double lo, double hi, double xtol = 1e-14,
                       int max_iter = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return {lo, 0, true};
  if (fhi == 0.0) return {hi, 0, true};
  if ((flo > 0) == (fhi > 0)) throw DomainError("bisect_root: no sign change in bracket");
  int it = 0;
  while (hi - lo > xtol && it++ < max_iter) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return {mid, it, true};
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return {0.5 * (lo + hi), it, true};
}

// x_{k+1} = (1-d) x_k + d g(x_k); returns when |g(x) - x| <= tol.
template <class G>
RootResult damped_fixed_point(const G& g, double x0, double damping = 0.5,
                              double tol = 1e-12, int max_iter = 10000) {
  double x = x0;
  for (int it = 1; it <= max_iter; ++it) {
    const double gx = g(x);
    if (std::abs(gx - x) <= tol) return {x, it, true};
    x = (1.0 - damping) * x + damping * gx;
  }
  return {x, max_iter, false};
}

// Newton polish for f'(x) = 0 given derivative and second derivative of the
// objective; falls back to the start point if it wanders outside [lo, hi].
template <class DF, class D2F>
RootResult newton_polish(const DF& df, const D2F& d2f, double x0, double lo, double hi,
                         double tol = 1e-13, int max_iter = 60) {
  double x = x0;
  for (int it = 1; it <= max_iter; ++it) {
    const double d1 = df(x);
    const double d2 = d2f(x);
    if (d2 == 0.0) break;
    const double step = d1 / d2;
    const double xn = x - step;
    if (!(xn >= lo && xn <= hi)) break;
    x = xn;
    if (std::abs(step) <= tol * std::max(1.0, std::abs(x))) return {x, it, true};
  }
  return {x, max_iter, std::abs(df(x)) <= 1e-9};
}

}  // namespace logz
