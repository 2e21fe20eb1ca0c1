#pragma once

// Reference implementations used to validate the rest of the library. These
// deliberately do not share numerical kernels with the code they check: sums
// use Kahan compensation on explicitly max-shifted terms, quadrature is
// adaptive Simpson rather than Gauss-Kronrod, and random streams carry
// oracle-only tags.

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "logz/errors.hpp"
#include "logz/expectation.hpp"
#include "logz/model.hpp"
#include "logz/rng.hpp"

namespace logz::oracle {

namespace detail {

struct KahanSum {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

// Recursive adaptive Simpson on [a, b]. `force` levels are always split:
// the h-vs-h/2 delta can cross zero coincidentally on an unresolved peak, and
// accepting there plants a large error that looks like a discontinuity to any
// enclosing quadrature. `min_width` bounds the descent on such induced
// discontinuities; at that scale the local contribution is negligible.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth, int force, double min_width) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (force <= 0) {
    if (std::abs(delta) <= 15.0 * tol || (b - a) <= min_width)
      return left + right + delta / 15.0;
    if (depth <= 0) throw QuadratureFailure("oracle simpson: depth exhausted");
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1, force - 1,
                          min_width) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1, force - 1,
                          min_width);
}

inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double tol = 1e-11, int depth = 48) {
  // Scale the absolute tolerance by a coarse magnitude probe.
  double mag = 0.0;
  for (int i = 0; i <= 64; ++i)
    mag = std::max(mag, std::abs(f(a + (b - a) * i / 64.0)) * (b - a));
  const double scaled = tol * std::max(mag, 1e-300);
  // A mandatory initial split keeps narrow peaks from being mistaken for an
  // identically-zero integrand.
  const int panels = 32;
  const double min_width = (b - a) * 1e-9;
  KahanSum total;
  for (int p = 0; p < panels; ++p) {
    const double pa = a + (b - a) * p / panels;
    const double pb = a + (b - a) * (p + 1) / panels;
    const double fa = f(pa), fb = f(pb), fm = f(0.5 * (pa + pb));
    const double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
    total.add(
        adaptive_simpson(f, pa, pb, fa, fm, fb, whole, scaled / panels, depth, 3, min_width));
  }
  return total.value();
}

inline std::vector<std::vector<double>> finite_values(const JointModel& model, bool input) {
  const int n = input ? model.input_dim() : model.output_dim();
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    CoordinateDomain d = input ? model.input_domain(i)
                               : model.output_domain(i).value_or(CoordinateDomain{Interval{}});
    const auto* fs = std::get_if<FiniteSet>(&d);
    if (!fs) throw Unsupported("oracle: coordinate is not a finite alphabet");
    out.push_back(fs->values);
  }
  return out;
}

template <class F>
void visit_product(const std::vector<std::vector<double>>& vals, F&& f) {
  const int n = static_cast<int>(vals.size());
  Eigen::VectorXd x(n);
  std::vector<size_t> idx(n, 0);
  for (int i = 0; i < n; ++i) x[i] = vals[i][0];
  for (;;) {
    f(static_cast<const Eigen::VectorXd&>(x));
    int k = n - 1;
    while (k >= 0) {
      if (++idx[k] < vals[k].size()) {
        x[k] = vals[k][idx[k]];
        break;
      }
      idx[k] = 0;
      x[k] = vals[k][0];
      --k;
    }
    if (k < 0) break;
  }
}

inline double product_count(const std::vector<std::vector<double>>& vals) {
  double t = 1.0;
  for (const auto& v : vals) t *= static_cast<double>(v.size());
  return t;
}

}  // namespace detail

// Exact posterior over X^n for a given y, stored as normalized log weights.
// Materializes the state list, so it is meant for desk-scale models; the cap
// guards runtime, memory is states * n doubles.
struct PosteriorTable {
  Eigen::MatrixXd states;       // one state per row
  Eigen::VectorXd log_weights;  // normalized: logsumexp == 0

  Eigen::VectorXd mean() const {
    const int n = static_cast<int>(states.cols());
    detail::KahanSum acc[64];
    for (Eigen::Index r = 0; r < states.rows(); ++r) {
      const double w = std::exp(log_weights[r]);
      for (int i = 0; i < n; ++i) acc[i].add(w * states(r, i));
    }
    Eigen::VectorXd m(n);
    for (int i = 0; i < n; ++i) m[i] = acc[i].value();
    return m;
  }

  Eigen::MatrixXd second_moment() const {
    const int n = static_cast<int>(states.cols());
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index r = 0; r < states.rows(); ++r) {
      const double w = std::exp(log_weights[r]);
      s += w * states.row(r).transpose() * states.row(r);
    }
    return s;
  }

  Eigen::MatrixXd covariance() const {
    const Eigen::VectorXd m = mean();
    return second_moment() - m * m.transpose();
  }

  double variance_trace() const { return covariance().trace(); }
};

inline PosteriorTable enumerate_posterior(const JointModel& model, const Eigen::VectorXd& y,
                                          uint64_t cap = kDefaultEnumerationCap) {
  check_output_dim(model, y);
  const auto vals = detail::finite_values(model, true);
  const double count = detail::product_count(vals);
  if (count > static_cast<double>(cap))
    throw StateSpaceTooLarge("enumerate_posterior: state space exceeds cap");
  if (model.input_dim() > 64) throw StateSpaceTooLarge("enumerate_posterior: n > 64");
  const long rows = static_cast<long>(count);
  PosteriorTable t;
  t.states.resize(rows, model.input_dim());
  t.log_weights.resize(rows);
  long r = 0;
  double max_lw = -std::numeric_limits<double>::infinity();
  detail::visit_product(vals, [&](const Eigen::VectorXd& x) {
    const double lw = model.log_prior(x) + model.log_channel(x, y);
    t.states.row(r) = x;
    t.log_weights[r] = lw;
    max_lw = std::max(max_lw, lw);
    ++r;
  });
  if (!std::isfinite(max_lw)) throw ZeroMarginal("enumerate_posterior: P(y) = 0");
  detail::KahanSum z;
  for (long i = 0; i < rows; ++i) z.add(std::exp(t.log_weights[i] - max_lw));
  const double log_norm = max_lw + std::log(z.value());
  for (long i = 0; i < rows; ++i) t.log_weights[i] -= log_norm;
  return t;
}

struct OracleMmse {
  double value = 0.0;
  std::optional<double> stderr_;
};

// Ground-truth mmse(X|Y) = E{ trace Cov{X|Y} }.
inline OracleMmse oracle_mmse(const JointModel& model, const ExpectationConfig& cfg,
                              uint64_t cap = kDefaultEnumerationCap) {
  switch (cfg.strategy) {
    case YStrategy::enumerate_y: {
      const auto yvals = detail::finite_values(model, false);
      const auto xvals = detail::finite_values(model, true);
      if (detail::product_count(yvals) * detail::product_count(xvals) >
          static_cast<double>(cap))
        throw StateSpaceTooLarge("oracle_mmse: joint state space exceeds cap");
      // First pass: global max of log P(y) for stable weighting.
      std::vector<double> log_py;
      log_py.reserve(static_cast<size_t>(detail::product_count(yvals)));
      double max_lpy = -std::numeric_limits<double>::infinity();
      detail::visit_product(yvals, [&](const Eigen::VectorXd& y) {
        double max_lw = -std::numeric_limits<double>::infinity();
        std::vector<double> lws;
        detail::visit_product(xvals, [&](const Eigen::VectorXd& x) {
          const double lw = model.log_prior(x) + model.log_channel(x, y);
          lws.push_back(lw);
          max_lw = std::max(max_lw, lw);
        });
        if (!std::isfinite(max_lw)) {
          log_py.push_back(-std::numeric_limits<double>::infinity());
          return;
        }
        detail::KahanSum s;
        for (double lw : lws) s.add(std::exp(lw - max_lw));
        log_py.push_back(max_lw + std::log(s.value()));
        max_lpy = std::max(max_lpy, log_py.back());
      });
      detail::KahanSum total, weighted;
      size_t yi = 0;
      detail::visit_product(yvals, [&](const Eigen::VectorXd& y) {
        const double lpy = log_py[yi++];
        if (!std::isfinite(lpy)) return;
        const double w = std::exp(lpy - max_lpy);
        total.add(w);
        weighted.add(w * enumerate_posterior(model, y, cap).variance_trace());
      });
      return {weighted.value() / total.value(), std::nullopt};
    }
    case YStrategy::quadrature_y: {
      if (model.output_dim() != 1 || model.input_dim() != 1)
        throw Unsupported("oracle quadrature_y path is scalar-only");
      const auto ydom = model.output_domain(0);
      if (!ydom || is_finite_domain(*ydom))
        throw Unsupported("oracle quadrature_y needs a continuous output domain");
      const auto xdom = model.input_domain(0);
      if (is_finite_domain(xdom)) throw Unsupported("oracle quadrature_y needs continuous input");
      const auto xiv = std::get<Interval>(xdom);
      const auto yiv = std::get<Interval>(*ydom);
      Eigen::VectorXd xv(1), yv(1);
      auto joint = [&](double x, double y) {
        xv[0] = x;
        yv[0] = y;
        return std::exp(model.log_prior(xv) + model.log_channel(xv, yv));
      };
      // The inner integrals run ~1000x tighter than the outer one: their
      // quadrature noise is an effective noise floor on the outer integrand.
      auto posterior_var_times_py = [&](double y) {
        const double s0 =
            detail::simpson([&](double x) { return joint(x, y); }, xiv.lo, xiv.hi, 1e-13);
        if (s0 <= 0.0) return std::pair<double, double>{0.0, 0.0};
        const double s1 =
            detail::simpson([&](double x) { return x * joint(x, y); }, xiv.lo, xiv.hi, 1e-13);
        const double s2 = detail::simpson([&](double x) { return x * x * joint(x, y); },
                                          xiv.lo, xiv.hi, 1e-13);
        const double m = s1 / s0;
        return std::pair<double, double>{s0, s2 / s0 - m * m};
      };
      const double num = detail::simpson(
          [&](double y) {
            auto [py, var] = posterior_var_times_py(y);
            return py * var;
          },
          yiv.lo, yiv.hi, 1e-8, 36);
      const double den = detail::simpson(
          [&](double y) { return posterior_var_times_py(y).first; }, yiv.lo, yiv.hi, 1e-8, 36);
      return {num / den, std::nullopt};
    }
    case YStrategy::monte_carlo: {
      if (!model.can_sample()) throw Unsupported("oracle_mmse monte_carlo needs samplers");
      detail::KahanSum s, s2;
      for (long i = 0; i < cfg.samples; ++i) {
        CounterRng rng =
            CounterRng::make(cfg.seed, {stream::kOracleMc, static_cast<uint64_t>(i)});
        const Eigen::VectorXd x = model.sample_x(rng);
        const Eigen::VectorXd y = model.sample_y(x, rng);
        const double v = enumerate_posterior(model, y, cap).variance_trace();
        s.add(v);
        s2.add(v * v);
      }
      const double mean = s.value() / cfg.samples;
      const double var = std::max(0.0, s2.value() / cfg.samples - mean * mean);
      OracleMmse out{mean, std::nullopt};
      if (cfg.report_stderr) out.stderr_ = std::sqrt(var / cfg.samples);
      return out;
    }
  }
  throw Error("unreachable");
}

// Self-normalized importance sampling estimate of E{X | y} under a Gaussian
// proposal, with bootstrap standard errors.
struct GaussianProposal {
  Eigen::VectorXd mean;
  double sigma = 1.0;
};

struct ImportanceResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd stderr_;
  double ess = 0.0;
};

inline ImportanceResult importance_sampling_mean(const JointModel& model,
                                                 const Eigen::VectorXd& y,
                                                 const GaussianProposal& proposal,
                                                 const ExpectationConfig& cfg) {
  check_output_dim(model, y);
  const int n = model.input_dim();
  if (proposal.mean.size() != n) throw DimensionMismatch("proposal mean has wrong length");
  const long N = cfg.samples;
  Eigen::MatrixXd xs(N, n);
  Eigen::VectorXd logw(N);
  const double log_q_const = -0.5 * n * std::log(2.0 * std::numbers::pi * proposal.sigma *
                                                 proposal.sigma);
  for (long i = 0; i < N; ++i) {
    CounterRng rng = CounterRng::make(cfg.seed, {stream::kOracleIs, static_cast<uint64_t>(i)});
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = proposal.mean[j] + proposal.sigma * rng.gaussian();
    const double log_q =
        log_q_const - (x - proposal.mean).squaredNorm() / (2.0 * proposal.sigma * proposal.sigma);
    xs.row(i) = x;
    logw[i] = model.log_prior(x) + model.log_channel(x, y) - log_q;
  }
  const double mx = logw.maxCoeff();
  Eigen::VectorXd w = (logw.array() - mx).exp();
  const double wsum = w.sum();
  const double ess = wsum * wsum / w.squaredNorm();
  if (ess < 0.05 * static_cast<double>(N))
    throw DegenerateWeights("importance sampling ESS " + std::to_string(ess) + " below 5% of " +
                            std::to_string(N));
  w /= wsum;
  ImportanceResult out;
  out.mean = xs.transpose() * w;
  out.ess = ess;

  const int B = 200;
  Eigen::MatrixXd boot(B, n);
  for (int b = 0; b < B; ++b) {
    CounterRng rng =
        CounterRng::make(cfg.seed, {stream::kOracleBootstrap, static_cast<uint64_t>(b)});
    detail::KahanSum bw;
    Eigen::VectorXd bx = Eigen::VectorXd::Zero(n);
    for (long i = 0; i < N; ++i) {
      const long idx = static_cast<long>(rng.next_u64() % static_cast<uint64_t>(N));
      bw.add(w[idx]);
      bx += w[idx] * xs.row(idx).transpose();
    }
    boot.row(b) = (bx / bw.value()).transpose();
  }
  out.stderr_.resize(n);
  for (int j = 0; j < n; ++j) {
    const double mu = boot.col(j).mean();
    out.stderr_[j] = std::sqrt((boot.col(j).array() - mu).square().sum() / (B - 1));
  }
  return out;
}

namespace detail {

// Gauss-Legendre 16 on [-1, 1] (positive half; the rule is symmetric).
inline constexpr double kGl16X[8] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
inline constexpr double kGl16W[8] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

inline void gl16_panel_nodes(double a, double b, std::vector<std::pair<double, double>>& out) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 0; i < 8; ++i) {
    out.push_back({c - h * kGl16X[i], h * kGl16W[i]});
    out.push_back({c + h * kGl16X[i], h * kGl16W[i]});
  }
}

}  // namespace detail

// E{X | y} by direct tensor quadrature over the input intervals (n <= 3).
// A coarse probe locates the posterior support (log-joint within 50 nats of
// its maximum), and a composite 16-point Gauss-Legendre rule is tensorized
// over the shrunk box. One pass accumulates the weight and all first moments.
inline Eigen::VectorXd nested_quadrature_mean(const JointModel& model, const Eigen::VectorXd& y,
                                              int panels_per_dim = 12) {
  check_output_dim(model, y);
  const int n = model.input_dim();
  if (n > 3) throw Unsupported("nested_quadrature_mean: n > 3");
  std::vector<Interval> ivs;
  for (int i = 0; i < n; ++i) {
    const auto d = model.input_domain(i);
    if (is_finite_domain(d)) throw Unsupported("nested_quadrature_mean: finite alphabet");
    ivs.push_back(std::get<Interval>(d));
  }

  const int grid = n == 1 ? 513 : 33;
  Eigen::VectorXd probe(n);
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> lo(n, std::numeric_limits<double>::infinity());
  std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
  std::vector<std::pair<Eigen::VectorXd, double>> probes;
  std::function<void(int)> scan = [&](int k) {
    for (int i = 0; i < grid; ++i) {
      probe[k] = ivs[k].lo + (ivs[k].hi - ivs[k].lo) * (i + 0.5) / grid;
      if (k + 1 == n) {
        const double lg = model.log_prior(probe) + model.log_channel(probe, y);
        probes.push_back({probe, lg});
        max_log = std::max(max_log, lg);
      } else {
        scan(k + 1);
      }
    }
  };
  scan(0);
  if (!std::isfinite(max_log)) throw ZeroMarginal("nested_quadrature_mean: P(y) = 0");
  for (const auto& [p, lg] : probes) {
    if (lg < max_log - 50.0) continue;
    for (int i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }
  }
  for (int i = 0; i < n; ++i) {
    const double pad = (ivs[i].hi - ivs[i].lo) / grid;
    lo[i] = std::max(ivs[i].lo, lo[i] - 2.0 * pad);
    hi[i] = std::min(ivs[i].hi, hi[i] + 2.0 * pad);
  }

  std::vector<std::vector<std::pair<double, double>>> nodes(n);
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < panels_per_dim; ++p)
      detail::gl16_panel_nodes(lo[i] + (hi[i] - lo[i]) * p / panels_per_dim,
                               lo[i] + (hi[i] - lo[i]) * (p + 1) / panels_per_dim, nodes[i]);

  detail::KahanSum s0;
  std::vector<detail::KahanSum> sj(n);
  Eigen::VectorXd x(n);
  std::function<void(int, double)> visit = [&](int k, double w) {
    for (const auto& [xv, wv] : nodes[k]) {
      x[k] = xv;
      if (k + 1 == n) {
        const double f =
            w * wv * std::exp(model.log_prior(x) + model.log_channel(x, y) - max_log);
        s0.add(f);
        for (int j = 0; j < n; ++j) sj[j].add(f * x[j]);
      } else {
        visit(k + 1, w * wv);
      }
    }
  };
  visit(0, 1.0);
  if (s0.value() <= 0.0) throw ZeroMarginal("nested_quadrature_mean: posterior mass vanished");
  Eigen::VectorXd mean(n);
  for (int j = 0; j < n; ++j) mean[j] = sj[j].value() / s0.value();
  return mean;
}

}  // namespace logz::oracle
