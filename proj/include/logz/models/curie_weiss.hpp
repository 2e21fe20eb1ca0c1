#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "logz/logsumexp.hpp"
#include "logz/model.hpp"
#include "logz/quadrature.hpp"
#include "logz/rng.hpp"
#include "logz/solvers.hpp"

namespace logz::models {

// Binary source P(x) = C_n exp{(a/2n)(sum x_i)^2 + b sum x_i} on {-1,+1}^n,
// observed through the symmetric channel P(y|x) = e^{beta x y} / (2 cosh beta).
// C_n is fixed so the prior is normalized, which pins Z(y, 0) = P(y).
class CurieWeissModel final : public JointModel {
 public:
  CurieWeissModel(int n, double a, double b, double beta)
      : n_(n), a_(a), b_(b), beta_(beta) {
    if (n < 1) throw DomainError("CurieWeissModel: n >= 1");
    if (a < 0) throw DomainError("CurieWeissModel: a >= 0");
    build_magnetization_table();
  }

  int input_dim() const override { return n_; }
  int output_dim() const override { return n_; }
  CoordinateDomain input_domain(int) const override { return FiniteSet{{-1.0, +1.0}}; }
  std::optional<CoordinateDomain> output_domain(int) const override {
    return FiniteSet{{-1.0, +1.0}};
  }

  double log_prior(const Eigen::VectorXd& x) const override {
    const double s = x.sum();
    return a_ / (2.0 * n_) * s * s + b_ * s - log_prior_norm_;
  }
  double log_channel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override {
    return beta_ * x.dot(y) - n_ * std::log(2.0 * std::cosh(beta_));
  }

  bool factorizes() const override { return a_ == 0.0; }
  double coord_log_prior(int, double x) const override {
    if (a_ != 0.0) throw Unsupported("coupled Curie-Weiss prior does not factorize");
    return b_ * x - std::log(2.0 * std::cosh(b_));
  }
  double coord_log_channel(int i, double x, const Eigen::VectorXd& y) const override {
    return beta_ * x * y[i] - std::log(2.0 * std::cosh(beta_));
  }

  bool can_sample() const override { return true; }
  // Exact source sampling: draw the magnetization s from its marginal, then
  // place the (n + s)/2 positive spins uniformly at random.
  Eigen::VectorXd sample_x(CounterRng& rng) const override {
    const double u = rng.uniform();
    size_t lo = 0, hi = mag_cum_.size() - 1;
    while (lo < hi) {
      const size_t mid = (lo + hi) / 2;
      if (mag_cum_[mid] < u)
        lo = mid + 1;
      else
        hi = mid;
    }
    const int s = -n_ + 2 * static_cast<int>(lo);
    int remaining_pos = (n_ + s) / 2;
    Eigen::VectorXd x(n_);
    for (int i = 0; i < n_; ++i) {
      const int remaining = n_ - i;
      if (rng.uniform() * remaining < remaining_pos) {
        x[i] = +1.0;
        --remaining_pos;
      } else {
        x[i] = -1.0;
      }
    }
    return x;
  }
  Eigen::VectorXd sample_y(const Eigen::VectorXd& x, CounterRng& rng) const override {
    const double p_same = 1.0 / (1.0 + std::exp(-2.0 * beta_));
    Eigen::VectorXd y(n_);
    for (int i = 0; i < n_; ++i) y[i] = rng.uniform() < p_same ? x[i] : -x[i];
    return y;
  }

  int n() const { return n_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double beta() const { return beta_; }
  double log_prior_norm() const { return log_prior_norm_; }

 private:
  void build_magnetization_table() {
    // ln sum_x exp{(a/2n) s^2 + b s} over s = sum x_i, via binomial counts.
    std::vector<double> lw(n_ + 1);
    LogAccumulator acc;
    for (int k = 0; k <= n_; ++k) {
      const int s = -n_ + 2 * k;
      lw[k] = std::lgamma(n_ + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n_ - k + 1.0) +
              a_ / (2.0 * n_) * s * s + b_ * s;
      acc.add(lw[k]);
    }
    log_prior_norm_ = acc.value();
    mag_cum_.resize(n_ + 1);
    double c = 0.0;
    for (int k = 0; k <= n_; ++k) {
      c += std::exp(lw[k] - log_prior_norm_);
      mag_cum_[k] = c;
    }
    mag_cum_.back() = 1.0;
  }

  int n_;
  double a_, b_, beta_;
  double log_prior_norm_ = 0.0;
  std::vector<double> mag_cum_;
};

namespace detail {

// Hubbard-Stratonovich exponent g(theta) = -n theta^2 / (2a) + sum ln 2cosh(h_i + theta),
// with h_i = beta y_i + lambda_i + b.
struct HsExponent {
  const CurieWeissModel* model;
  Eigen::VectorXd h;

  HsExponent(const CurieWeissModel& m, const Eigen::VectorXd& y, const TiltVector& tilt)
      : model(&m) {
    check_output_dim(m, y);
    check_tilt_dim(m, tilt);
    h = m.beta() * y + tilt.lambda + Eigen::VectorXd::Constant(m.n(), m.b());
  }

  double operator()(double theta) const {
    double s = -model->n() * theta * theta / (2.0 * model->a());
    for (int i = 0; i < model->n(); ++i)
      s += std::log(2.0 * std::cosh(h[i] + theta));
    return s;
  }
  double mean_field(double theta) const {  // (a/n) sum tanh(h_i + theta)
    double s = 0.0;
    for (int i = 0; i < model->n(); ++i) s += std::tanh(h[i] + theta);
    return model->a() / model->n() * s;
  }
  double second_derivative(double theta) const {
    double s = -model->n() / model->a();
    for (int i = 0; i < model->n(); ++i) {
      const double c = std::cosh(h[i] + theta);
      s += 1.0 / (c * c);
    }
    return s;
  }
  // All stationary points satisfy |theta| <= a; the quadratic term kills the
  // integrand within sqrt(80 a / n) beyond that.
  std::pair<double, double> domain() const {
    const double d = model->a() + std::sqrt(80.0 * model->a() / model->n()) + 1e-6;
    return {-d, d};
  }
};

}  // namespace detail

// theta* maximizing the Hubbard-Stratonovich exponent: damped fixed-point
// iteration on theta = (a/n) sum tanh(beta y_i + lambda_i + b + theta), with a
// bisection fallback, plus a root scan that detects the symmetric pair when
// b = 0 puts two maximizers at +-theta*.
inline SaddleSolution cw_saddle_fixed_point(const CurieWeissModel& model,
                                            const Eigen::VectorXd& y,
                                            const TiltVector& tilt,
                                            double residual_tol = 1e-12, int max_iter = 10000,
                                            double damping = 0.5) {
  if (model.a() <= 0.0) {
    SaddleSolution s;
    s.argmax = 0.0;
    s.converged = true;
    return s;
  }
  const detail::HsExponent g(model, y, tilt);
  const auto [lo, hi] = g.domain();

  // Collect stationary points from sign changes of r(theta) = theta - mean_field.
  auto r = [&](double th) { return th - g.mean_field(th); };
  std::vector<double> roots;
  const int grid = 2001;
  double prev_x = lo, prev_r = r(lo);
  for (int i = 1; i < grid; ++i) {
    const double x = lo + (hi - lo) * i / (grid - 1);
    const double rv = r(x);
    if ((rv > 0) != (prev_r > 0)) {
      const RootResult br = bisect_root(r, prev_x, x);
      roots.push_back(br.x);
    }
    prev_x = x;
    prev_r = rv;
  }
  if (roots.empty()) roots.push_back(0.0);

  // Polish the best root with the prescribed damped fixed point.
  double best = roots[0], best_g = g(roots[0]);
  for (double th : roots) {
    const double v = g(th);
    if (v > best_g) {
      best_g = v;
      best = th;
    }
  }
  const RootResult fp =
      damped_fixed_point([&](double th) { return g.mean_field(th); }, best, damping,
                         residual_tol, max_iter);
  SaddleSolution sol;
  sol.argmax = fp.converged ? fp.x : best;
  sol.iterations = fp.iters;
  sol.residual = std::abs(r(sol.argmax));
  if (sol.residual > residual_tol) {
    // Fixed point can stall near marginal stability; bisect on the gradient.
    const double eps = 1e-9;
    if (r(sol.argmax - eps) * r(sol.argmax + eps) >= 0) {
      const RootResult br = bisect_root(r, lo, hi);
      sol.argmax = br.x;
    }
    sol.residual = std::abs(r(sol.argmax));
  }
  if (sol.residual > 1e-10)
    throw NoConvergence("cw_saddle_fixed_point: residual " + std::to_string(sol.residual));
  sol.converged = true;
  sol.exponent_value = g(sol.argmax);
  sol.curvature = -g.second_derivative(sol.argmax);

  // Symmetric pair: another global maximizer of opposite sign.
  for (double th : roots) {
    if (std::abs(th - sol.argmax) < 1e-8) continue;
    if (std::abs(g(th) - sol.exponent_value) <=
            1e-9 * std::max(1.0, std::abs(sol.exponent_value)) &&
        th * sol.argmax < 0) {
      sol.multiplicity = Multiplicity::symmetric_pair;
      sol.second_argmax = th;
    }
  }
  if (sol.second_argmax && sol.argmax < 0) std::swap(sol.argmax, *sol.second_argmax);
  return sol;
}

// ln Z(y, lambda) through the Hubbard-Stratonovich 1-D integral. Constants are
// carried explicitly so this agrees with the enumeration definition of Z.
inline double cw_log_partition_hs(const CurieWeissModel& model, const Eigen::VectorXd& y,
                                  const TiltVector& tilt, const QuadOptions& quad = {}) {
  if (model.a() <= 0.0) {
    // Decoupled product form.
    check_output_dim(model, y);
    check_tilt_dim(model, tilt);
    double s = 0.0;
    for (int i = 0; i < model.n(); ++i)
      s += std::log(2.0 * std::cosh(model.beta() * y[i] + tilt.lambda[i] + model.b()));
    return s - model.log_prior_norm() - model.n() * std::log(2.0 * std::cosh(model.beta()));
  }
  const detail::HsExponent g(model, y, tilt);
  const auto [lo, hi] = g.domain();
  const LogQuadResult integral = integrate_log(g, lo, hi, quad, 513);
  if (integral.log_value == kNegInf) throw QuadratureFailure("cw_log_partition_hs: empty integral");
  const double n = model.n();
  return -model.log_prior_norm() - n * std::log(2.0 * std::cosh(model.beta())) +
         0.5 * std::log(n / (2.0 * std::numbers::pi * model.a())) + integral.log_value;
}

// Gradient of ln Z(y, lambda) via the ratio of theta-integrals: component i is
// the integral average of tanh(beta y_i + lambda_i + b + theta).
inline Eigen::VectorXd cw_conditional_mean_hs(const CurieWeissModel& model,
                                              const Eigen::VectorXd& y, const TiltVector& tilt,
                                              const QuadOptions& quad = {}) {
  check_output_dim(model, y);
  check_tilt_dim(model, tilt);
  if (model.a() <= 0.0) {
    Eigen::VectorXd m(model.n());
    for (int i = 0; i < model.n(); ++i)
      m[i] = std::tanh(model.beta() * y[i] + tilt.lambda[i] + model.b());
    return m;
  }
  const detail::HsExponent g(model, y, tilt);
  const auto [lo, hi] = g.domain();
  std::vector<std::pair<double, double>> nodes;
  QuadOptions q = quad;
  q.nodes_out = &nodes;
  const LogQuadResult denom = integrate_log(g, lo, hi, q, 513);
  if (denom.log_value == kNegInf) throw QuadratureFailure("cw_conditional_mean_hs: no mass");
  double d = 0.0;
  Eigen::VectorXd num = Eigen::VectorXd::Zero(model.n());
  for (const auto& [theta, w] : nodes) {
    const double f = w * std::exp(g(theta) - denom.log_shift);
    d += f;
    for (int i = 0; i < model.n(); ++i) num[i] += f * std::tanh(g.h[i] + theta);
  }
  return num / d;
}

// Saddle-point estimator tanh(beta y_i + b + theta*). When b = 0 yields a
// symmetric pair of maximizers, both branches are averaged with equal weight
// rather than silently picking a sign.
inline Eigen::VectorXd cw_saddle_estimator(const CurieWeissModel& model,
                                           const Eigen::VectorXd& y) {
  const SaddleSolution sol =
      cw_saddle_fixed_point(model, y, TiltVector::zeros(model.n()));
  Eigen::VectorXd m(model.n());
  for (int i = 0; i < model.n(); ++i) {
    const double h = model.beta() * y[i] + model.b();
    if (sol.second_argmax)
      m[i] = 0.5 * (std::tanh(h + sol.argmax) + std::tanh(h + *sol.second_argmax));
    else
      m[i] = std::tanh(h + sol.argmax);
  }
  return m;
}

// Large-n closed forms: the dominant magnetization m*, the auxiliary field
// theta_0 solving theta = a E{tanh(beta Y + b + theta)}, and the per-symbol
// MMSE 1 - E{tanh^2(beta Y + b + theta_0)}. For b = 0 in the ordered phase the
// two symmetric branches are both reported and the MMSE averages them.
struct CwAsymptoticBranch {
  double y_mean = 0.0;   // E{Y} = +-m* tanh(beta)
  double theta0 = 0.0;
  double mmse = 0.0;
};

struct CwAsymptotics {
  double m_star = 0.0;
  std::vector<CwAsymptoticBranch> branches;
  double mmse = 0.0;  // branch average
};

inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

inline CwAsymptotics cw_asymptotic_mmse(const CurieWeissModel& model) {
  const double a = model.a(), b = model.b(), beta = model.beta();
  auto phi = [&](double m) {
    return binary_entropy(0.5 * (1.0 + m)) + 0.5 * a * m * m + b * m;
  };
  const ScalarOpt coarse = grid_max(phi, -1.0, 1.0, 10001);
  const ScalarOpt fine =
      golden_max(phi, std::max(-1.0, coarse.x - 0.01), std::min(1.0, coarse.x + 0.01), 1e-12);
  double m_star = fine.x;
  // Golden section stalls at ~sqrt(eps) near the maximum; the stationarity
  // form m = tanh(am + b) polishes to full precision.
  {
    auto r = [&](double m) { return m - std::tanh(a * m + b); };
    auto dr = [&](double m) {
      const double t = std::tanh(a * m + b);
      return 1.0 - a * (1.0 - t * t);
    };
    for (int it = 0; it < 60; ++it) {
      const double d = dr(m_star);
      if (std::abs(d) < 1e-8) break;  // critical point a ~ 1: keep the grid value
      const double step = r(m_star) / d;
      const double next = m_star - step;
      if (std::abs(r(next)) > std::abs(r(m_star))) break;
      m_star = next;
      if (std::abs(step) < 1e-16) break;
    }
  }
  if (std::abs(m_star) < 1e-9) m_star = 0.0;
  if (b == 0.0) m_star = std::abs(m_star);  // the pair is reported through the branches

  CwAsymptotics out;
  out.m_star = m_star;
  std::vector<double> branch_means;
  if (b == 0.0 && std::abs(m_star) > 1e-9)
    branch_means = {std::abs(m_star) * std::tanh(beta), -std::abs(m_star) * std::tanh(beta)};
  else
    branch_means = {m_star * std::tanh(beta)};

  for (double mu : branch_means) {
    const double p_plus = 0.5 * (1.0 + mu);
    auto mean_tanh = [&](double th) {
      return p_plus * std::tanh(beta + b + th) + (1.0 - p_plus) * std::tanh(-beta + b + th);
    };
    double theta0 = 0.0;
    if (a > 0.0) {
      // Maximize the per-symbol exponent -theta^2/(2a) + E ln cosh(...); its
      // stationary points are theta = a E{tanh(...)}.
      auto psi = [&](double th) {
        return -th * th / (2.0 * a) +
               p_plus * std::log(2.0 * std::cosh(beta + b + th)) +
               (1.0 - p_plus) * std::log(2.0 * std::cosh(-beta + b + th));
      };
      const double d = a + 1.0;
      const ScalarOpt g0 = grid_max(psi, -d, d, 4001);
      const ScalarOpt g1 =
          golden_max(psi, std::max(-d, g0.x - 0.01), std::min(d, g0.x + 0.01), 1e-12);
      theta0 = g1.x;
      // Newton polish on the stationarity equation theta = a E{tanh(...)}.
      auto mean_sech2 = [&](double th) {
        const double tp = std::tanh(beta + b + th);
        const double tm = std::tanh(-beta + b + th);
        return p_plus * (1.0 - tp * tp) + (1.0 - p_plus) * (1.0 - tm * tm);
      };
      for (int it = 0; it < 60; ++it) {
        const double deriv = 1.0 - a * mean_sech2(theta0);
        if (deriv == 0.0) break;
        const double step = (theta0 - a * mean_tanh(theta0)) / deriv;
        theta0 -= step;
        if (std::abs(step) < 1e-16) break;
      }
      if (std::abs(theta0) < 1e-12) theta0 = 0.0;
    }
    CwAsymptoticBranch br;
    br.y_mean = mu;
    br.theta0 = theta0;
    const double tp = std::tanh(beta + b + theta0);
    const double tm = std::tanh(-beta + b + theta0);
    br.mmse = 1.0 - (p_plus * tp * tp + (1.0 - p_plus) * tm * tm);
    out.branches.push_back(br);
  }
  double s = 0.0;
  for (const auto& br : out.branches) s += br.mmse;
  out.mmse = s / out.branches.size();
  return out;
}

}  // namespace logz::models
