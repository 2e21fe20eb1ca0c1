#pragma once

#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "logz/errors.hpp"
#include "logz/rng.hpp"

namespace logz {

// Finite real-valued alphabet for one coordinate.
struct FiniteSet {
  std::vector<double> values;
};

struct GaussianHint {
  double mean = 0.0;
  double sigma = 1.0;
};

// Continuous coordinate with a declared quadrature interval. The optional
// hint marks a Gaussian-weighted integrand (enables Hermite quadrature).
struct Interval {
  double lo = -1.0;
  double hi = 1.0;
  std::optional<GaussianHint> hint;
};

using CoordinateDomain = std::variant<FiniteSet, Interval>;

inline bool is_finite_domain(const CoordinateDomain& d) {
  return std::holds_alternative<FiniteSet>(d);
}

// Tilt parameters lambda, one per input coordinate. All entries must be finite.
struct TiltVector {
  Eigen::VectorXd lambda;

  TiltVector() = default;
  explicit TiltVector(Eigen::VectorXd l) : lambda(std::move(l)) {
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
      if (!std::isfinite(lambda[i])) throw DomainError("TiltVector: entries must be finite");
  }
  static TiltVector zeros(int n) { return TiltVector(Eigen::VectorXd::Zero(n)); }
  bool is_zero() const { return lambda.size() == 0 || lambda.isZero(0.0); }
};

// A source-channel pair P(x, y) = P(x) P(y|x) with x in R^n and y in R^m.
// Log evaluators are in nats and may be unnormalized by a constant (the
// derived estimators are invariant to scaling of P).
class JointModel {
 public:
  virtual ~JointModel() = default;

  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual CoordinateDomain input_domain(int i) const = 0;
  virtual std::optional<CoordinateDomain> output_domain(int /*j*/) const { return std::nullopt; }

  virtual double log_prior(const Eigen::VectorXd& x) const = 0;
  virtual double log_channel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const = 0;

  // True when both prior and channel split across input coordinates, so the
  // posterior factorizes and per-coordinate tilt derivatives are exact.
  virtual bool factorizes() const { return false; }
  virtual double coord_log_prior(int, double) const {
    throw Unsupported("model does not factorize per coordinate");
  }
  virtual double coord_log_channel(int, double, const Eigen::VectorXd&) const {
    throw Unsupported("model does not factorize per coordinate");
  }

  virtual bool can_sample() const { return false; }
  virtual Eigen::VectorXd sample_x(CounterRng&) const {
    throw Unsupported("model does not provide a source sampler");
  }
  virtual Eigen::VectorXd sample_y(const Eigen::VectorXd&, CounterRng&) const {
    throw Unsupported("model does not provide a channel sampler");
  }
};

inline void check_output_dim(const JointModel& model, const Eigen::VectorXd& y) {
  if (y.size() != model.output_dim())
    throw DimensionMismatch("y has length " + std::to_string(y.size()) + ", model expects " +
                            std::to_string(model.output_dim()));
}

inline void check_tilt_dim(const JointModel& model, const TiltVector& tilt) {
  if (tilt.lambda.size() != model.input_dim())
    throw DimensionMismatch("lambda has length " + std::to_string(tilt.lambda.size()) +
                            ", model expects " + std::to_string(model.input_dim()));
}

// Differentiation step scales, taken from the coordinate alphabets.
inline Eigen::VectorXd coordinate_scales(const JointModel& model) {
  const int n = model.input_dim();
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) {
    const CoordinateDomain d = model.input_domain(i);
    if (const auto* fs = std::get_if<FiniteSet>(&d)) {
      double m = 0.0;
      for (double v : fs->values) m = std::max(m, std::abs(v));
      s[i] = m;
    } else {
      const auto& iv = std::get<Interval>(d);
      s[i] = iv.hint ? iv.hint->sigma : 0.125 * (iv.hi - iv.lo);
    }
  }
  return s;
}

}  // namespace logz
