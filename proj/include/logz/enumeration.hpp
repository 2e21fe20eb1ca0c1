#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "logz/errors.hpp"
#include "logz/model.hpp"

namespace logz {

inline constexpr uint64_t kDefaultEnumerationCap = uint64_t{1} << 24;

// Cartesian product of per-coordinate finite alphabets, visited with a
// mutating odometer so no state list is ever materialized.
class StateSpace {
 public:
  explicit StateSpace(std::vector<std::vector<double>> values) : values_(std::move(values)) {}

  static StateSpace inputs(const JointModel& model, uint64_t cap = kDefaultEnumerationCap) {
    return build(model, /*input=*/true, cap);
  }
  static StateSpace outputs(const JointModel& model, uint64_t cap = kDefaultEnumerationCap) {
    return build(model, /*input=*/false, cap);
  }

  int dim() const { return static_cast<int>(values_.size()); }

  double total_states() const {
    double t = 1.0;
    for (const auto& v : values_) t *= static_cast<double>(v.size());
    return t;
  }

  template <class F>
  void for_each(F&& f) const {
    const int n = dim();
    Eigen::VectorXd x(n);
    std::vector<size_t> idx(n, 0);
    for (int i = 0; i < n; ++i) x[i] = values_[i][0];
    for (;;) {
      f(static_cast<const Eigen::VectorXd&>(x));
      int k = n - 1;
      while (k >= 0) {
        if (++idx[k] < values_[k].size()) {
          x[k] = values_[k][idx[k]];
          break;
        }
        idx[k] = 0;
        x[k] = values_[k][0];
        --k;
      }
      if (k < 0) break;
    }
  }

  const std::vector<std::vector<double>>& values() const { return values_; }

 private:
  static StateSpace build(const JointModel& model, bool input, uint64_t cap) {
    const int n = input ? model.input_dim() : model.output_dim();
    std::vector<std::vector<double>> vals;
    vals.reserve(n);
    double total = 1.0;
    for (int i = 0; i < n; ++i) {
      CoordinateDomain d =
          input ? model.input_domain(i)
                : model.output_domain(i).value_or(CoordinateDomain{Interval{}});
      const auto* fs = std::get_if<FiniteSet>(&d);
      if (!fs)
        throw Unsupported(std::string(input ? "input" : "output") +
                          " coordinate " + std::to_string(i) + " is not a finite alphabet");
      if (fs->values.empty()) throw DomainError("empty alphabet");
      total *= static_cast<double>(fs->values.size());
      if (total > static_cast<double>(cap))
        throw StateSpaceTooLarge("state space exceeds cap of " + std::to_string(cap) +
                                 " states; use a Monte Carlo expectation strategy instead");
      vals.push_back(fs->values);
    }
    return StateSpace(std::move(vals));
  }

  std::vector<std::vector<double>> values_;
};

}  // namespace logz
