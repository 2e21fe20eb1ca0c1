#pragma once

// Small hand-rolled models and brute-force helpers shared by the test suites.
// The brute-force sums here are written directly against the model densities,
// independent of the library's accumulation kernels.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "logz/model.hpp"

namespace logz::testing {

// Uniform +-1 source observed through a noiseless identity channel.
class NoiselessBinaryModel final : public JointModel {
 public:
  explicit NoiselessBinaryModel(int n) : n_(n) {}
  int input_dim() const override { return n_; }
  int output_dim() const override { return n_; }
  CoordinateDomain input_domain(int) const override { return FiniteSet{{-1.0, +1.0}}; }
  std::optional<CoordinateDomain> output_domain(int) const override {
    return FiniteSet{{-1.0, +1.0}};
  }
  double log_prior(const Eigen::VectorXd&) const override { return -n_ * std::log(2.0); }
  double log_channel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override {
    return (x - y).cwiseAbs().maxCoeff() < 1e-12 ? 0.0
                                                 : -std::numeric_limits<double>::infinity();
  }
  bool can_sample() const override { return true; }
  Eigen::VectorXd sample_x(CounterRng& rng) const override {
    Eigen::VectorXd x(n_);
    for (int i = 0; i < n_; ++i) x[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return x;
  }
  Eigen::VectorXd sample_y(const Eigen::VectorXd& x, CounterRng&) const override { return x; }

 private:
  int n_;
};

// X and Y independent: a biased binary source and a channel that ignores x.
class IndependentModel final : public JointModel {
 public:
  IndependentModel(int n, double p_plus) : n_(n), p_(p_plus) {}
  int input_dim() const override { return n_; }
  int output_dim() const override { return n_; }
  CoordinateDomain input_domain(int) const override { return FiniteSet{{-1.0, +1.0}}; }
  std::optional<CoordinateDomain> output_domain(int) const override {
    return FiniteSet{{0.0, 1.0}};
  }
  double log_prior(const Eigen::VectorXd& x) const override {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += std::log(x[i] > 0 ? p_ : 1.0 - p_);
    return s;
  }
  double log_channel(const Eigen::VectorXd&, const Eigen::VectorXd&) const override {
    return -n_ * std::log(2.0);
  }

 private:
  int n_;
  double p_;
};

// Scales an existing model's joint density by a constant c > 0.
class ScaledModel final : public JointModel {
 public:
  ScaledModel(const JointModel& base, double log_c) : base_(&base), log_c_(log_c) {}
  int input_dim() const override { return base_->input_dim(); }
  int output_dim() const override { return base_->output_dim(); }
  CoordinateDomain input_domain(int i) const override { return base_->input_domain(i); }
  std::optional<CoordinateDomain> output_domain(int i) const override {
    return base_->output_domain(i);
  }
  double log_prior(const Eigen::VectorXd& x) const override {
    return base_->log_prior(x) + log_c_;
  }
  double log_channel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override {
    return base_->log_channel(x, y);
  }

 private:
  const JointModel* base_;
  double log_c_;
};

// Brute-force posterior mean over {-1,+1}^n, summed in plain long double.
inline Eigen::VectorXd brute_posterior_mean_pm1(const JointModel& model,
                                                const Eigen::VectorXd& y) {
  const int n = model.input_dim();
  Eigen::VectorXd num = Eigen::VectorXd::Zero(n);
  long double den = 0.0L;
  Eigen::VectorXd x(n);
  for (long s = 0; s < (1L << n); ++s) {
    for (int i = 0; i < n; ++i) x[i] = (s >> i) & 1 ? 1.0 : -1.0;
    const long double w = std::exp((long double)(model.log_prior(x) + model.log_channel(x, y)));
    den += w;
    for (int i = 0; i < n; ++i) num[i] += static_cast<double>(w * x[i]);
  }
  return num / static_cast<double>(den);
}

}  // namespace logz::testing
