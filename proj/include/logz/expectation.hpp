#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "logz/enumeration.hpp"
#include "logz/errors.hpp"
#include "logz/log_partition.hpp"
#include "logz/model.hpp"
#include "logz/parallel.hpp"
#include "logz/rng.hpp"

namespace logz {

enum class YStrategy { enumerate_y, quadrature_y, monte_carlo };

struct ExpectationConfig {
  YStrategy strategy = YStrategy::enumerate_y;
  long samples = 100000;   // monte_carlo only
  uint64_t seed = 1;
  bool report_stderr = true;
  int workers = 1;
  uint64_t stream_tag = stream::kMonteCarlo;

  static ExpectationConfig enumerate() { return {}; }
  static ExpectationConfig quadrature() { return {YStrategy::quadrature_y}; }
  static ExpectationConfig monte_carlo(long n, uint64_t seed) {
    ExpectationConfig c;
    c.strategy = YStrategy::monte_carlo;
    c.samples = n;
    c.seed = seed;
    return c;
  }
};

inline const char* strategy_name(YStrategy s) {
  switch (s) {
    case YStrategy::enumerate_y: return "enumerate_y";
    case YStrategy::quadrature_y: return "quadrature_y";
    case YStrategy::monte_carlo: return "monte_carlo";
  }
  return "?";
}

// E over Y of a vector statistic h(y). Under enumerate/quadrature the weights
// are P(y) = Z(y, 0); under Monte Carlo, (x, y) pairs are drawn from the model
// with counter-based per-sample streams, so the result does not depend on the
// worker count.
struct VecExpectation {
  Eigen::VectorXd mean;
  std::optional<Eigen::VectorXd> stderr_;  // per-component standard error (MC only)
  long samples = 0;
};

template <class H>
VecExpectation expect_over_y(const JointModel& model, const ExpectationConfig& cfg, int out_dim,
                             const H& h, const PartitionOptions& opts = {}) {
  VecExpectation out;
  switch (cfg.strategy) {
    case YStrategy::enumerate_y: {
      const StateSpace ys = StateSpace::outputs(model, opts.enumeration_cap);
      // Two-pass in spirit: track the running max log-weight and rescale.
      double m = kNegInf, w0 = 0.0;
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(out_dim);
      ys.for_each([&](const Eigen::VectorXd& y) {
        const double lw = log_partition(model, y, TiltVector::zeros(model.input_dim()), opts);
        if (lw == kNegInf) return;
        const Eigen::VectorXd hy = h(y);
        if (lw <= m) {
          const double w = std::exp(lw - m);
          w0 += w;
          acc += w * hy;
        } else {
          const double r = m == kNegInf ? 0.0 : std::exp(m - lw);
          w0 = w0 * r + 1.0;
          acc = acc * r + hy;
          m = lw;
        }
      });
      if (m == kNegInf) throw NonConvergent("expect_over_y: output law has no mass");
      out.mean = acc / w0;
      return out;
    }
    case YStrategy::quadrature_y: {
      if (model.output_dim() != 1)
        throw Unsupported("quadrature_y expectation requires a scalar output");
      const auto dom = model.output_domain(0);
      if (!dom || is_finite_domain(*dom))
        throw Unsupported("quadrature_y expectation needs a continuous output domain");
      const auto iv = std::get<Interval>(*dom);
      // Shared-panel vector quadrature: component 0 carries the weight, the
      // rest carry weight * h. One adaptive pass on the weight shape, reused
      // for all components through recorded nodes.
      std::vector<std::pair<double, double>> nodes;
      QuadOptions q = opts.quad;
      q.nodes_out = &nodes;
      Eigen::VectorXd y1(1);
      auto logw = [&](double y) {
        y1[0] = y;
        return log_partition(model, y1, TiltVector::zeros(model.input_dim()), opts);
      };
      const LogQuadResult norm = integrate_log(logw, iv.lo, iv.hi, q, 257);
      if (norm.log_value == kNegInf)
        throw NonConvergent("expect_over_y: output law has no mass");
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(out_dim);
      double w0 = 0.0;
      for (const auto& [ynode, wnode] : nodes) {
        y1[0] = ynode;
        const double lw = logw(ynode);
        if (lw == kNegInf) continue;
        const double w = wnode * std::exp(lw - norm.log_shift);
        w0 += w;
        acc += w * h(y1);
      }
      out.mean = acc / w0;
      return out;
    }
    case YStrategy::monte_carlo: {
      if (!model.can_sample())
        throw Unsupported("monte_carlo expectation needs model samplers");
      const long n = cfg.samples;
      if (n < 1) throw DomainError("monte_carlo expectation needs samples >= 1");
      constexpr long kBlock = 1024;
      const long blocks = (n + kBlock - 1) / kBlock;
      std::vector<Eigen::VectorXd> sum(blocks), sum2(blocks);
      parallel_for_index(blocks, cfg.workers, [&](long b) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(out_dim);
        Eigen::VectorXd s2 = Eigen::VectorXd::Zero(out_dim);
        const long lo = b * kBlock, hi = std::min(n, lo + kBlock);
        for (long i = lo; i < hi; ++i) {
          CounterRng rng = CounterRng::make(cfg.seed, {cfg.stream_tag, static_cast<uint64_t>(i)});
          const Eigen::VectorXd x = model.sample_x(rng);
          const Eigen::VectorXd y = model.sample_y(x, rng);
          const Eigen::VectorXd hy = h(y);
          s += hy;
          s2 += hy.cwiseProduct(hy);
        }
        sum[b] = s;
        sum2[b] = s2;
      });
      Eigen::VectorXd s = Eigen::VectorXd::Zero(out_dim);
      Eigen::VectorXd s2 = Eigen::VectorXd::Zero(out_dim);
      for (long b = 0; b < blocks; ++b) {
        s += sum[b];
        s2 += sum2[b];
      }
      out.mean = s / static_cast<double>(n);
      out.samples = n;
      if (cfg.report_stderr) {
        Eigen::VectorXd var =
            (s2 / static_cast<double>(n) - out.mean.cwiseProduct(out.mean)).cwiseMax(0.0);
        out.stderr_ = (var / static_cast<double>(n)).cwiseSqrt();
      }
      return out;
    }
  }
  throw Error("unreachable");
}

// Same driver but the statistic sees the drawn (x, y) pair; enumerate mode
// iterates the joint product space.
template <class H>
VecExpectation expect_over_xy(const JointModel& model, const ExpectationConfig& cfg, int out_dim,
                              const H& h, const PartitionOptions& opts = {}) {
  VecExpectation out;
  switch (cfg.strategy) {
    case YStrategy::enumerate_y: {
      const StateSpace ys = StateSpace::outputs(model, opts.enumeration_cap);
      const StateSpace xs = StateSpace::inputs(model, opts.enumeration_cap);
      double m = kNegInf, w0 = 0.0;
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(out_dim);
      ys.for_each([&](const Eigen::VectorXd& y) {
        xs.for_each([&](const Eigen::VectorXd& x) {
          const double lw = model.log_prior(x) + model.log_channel(x, y);
          if (lw == kNegInf) return;
          const Eigen::VectorXd v = h(x, y);
          if (lw <= m) {
            const double w = std::exp(lw - m);
            w0 += w;
            acc += w * v;
          } else {
            const double r = m == kNegInf ? 0.0 : std::exp(m - lw);
            w0 = w0 * r + 1.0;
            acc = acc * r + v;
            m = lw;
          }
        });
      });
      if (m == kNegInf) throw NonConvergent("expect_over_xy: joint law has no mass");
      out.mean = acc / w0;
      return out;
    }
    case YStrategy::quadrature_y:
      throw Unsupported("expect_over_xy does not implement joint quadrature");
    case YStrategy::monte_carlo: {
      if (!model.can_sample()) throw Unsupported("monte_carlo expectation needs model samplers");
      const long n = cfg.samples;
      constexpr long kBlock = 1024;
      const long blocks = (n + kBlock - 1) / kBlock;
      std::vector<Eigen::VectorXd> sum(blocks), sum2(blocks);
      parallel_for_index(blocks, cfg.workers, [&](long b) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(out_dim);
        Eigen::VectorXd s2 = Eigen::VectorXd::Zero(out_dim);
        const long lo = b * kBlock, hi = std::min(n, lo + kBlock);
        for (long i = lo; i < hi; ++i) {
          CounterRng rng = CounterRng::make(cfg.seed, {cfg.stream_tag, static_cast<uint64_t>(i)});
          const Eigen::VectorXd x = model.sample_x(rng);
          const Eigen::VectorXd y = model.sample_y(x, rng);
          const Eigen::VectorXd v = h(x, y);
          s += v;
          s2 += v.cwiseProduct(v);
        }
        sum[b] = s;
        sum2[b] = s2;
      });
      Eigen::VectorXd s = Eigen::VectorXd::Zero(out_dim);
      Eigen::VectorXd s2 = Eigen::VectorXd::Zero(out_dim);
      for (long b = 0; b < blocks; ++b) {
        s += sum[b];
        s2 += sum2[b];
      }
      out.mean = s / static_cast<double>(n);
      out.samples = n;
      if (cfg.report_stderr) {
        Eigen::VectorXd var =
            (s2 / static_cast<double>(n) - out.mean.cwiseProduct(out.mean)).cwiseMax(0.0);
        out.stderr_ = (var / static_cast<double>(n)).cwiseSqrt();
      }
      return out;
    }
  }
  throw Error("unreachable");
}

// mmse(X | Y) = trace E{Cov{X|Y}}, the trace of the error covariance matrix.
struct MmseEstimate {
  double value = 0.0;
  std::optional<double> stderr_;
  std::string method;
};

inline MmseEstimate mmse(const JointModel& model, const ExpectationConfig& cfg,
                         const DiffConfig& dcfg = {}, const PartitionOptions& opts = {}) {
  auto h = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd v(1);
    v[0] = conditional_covariance(model, y, dcfg, opts).trace();
    return v;
  };
  const VecExpectation e = expect_over_y(model, cfg, 1, h, opts);
  MmseEstimate r;
  r.value = e.mean[0];
  if (e.stderr_) r.stderr_ = (*e.stderr_)[0];
  r.method = strategy_name(cfg.strategy);
  return r;
}

}  // namespace logz
