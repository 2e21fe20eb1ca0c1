#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "logz/model.hpp"

namespace logz::models {

// i.i.d. Gaussian source X_i ~ N(0, P_x) observed through AWGN with noise
// variance 1/beta. Fully factorized, so analytic per-coordinate quadrature
// applies; the declared interval covers the posterior for |y_i| within
// several output standard deviations.
class GaussianAwgnModel final : public JointModel {
 public:
  GaussianAwgnModel(int n, double px, double beta) : n_(n), px_(px), beta_(beta) {
    if (n < 1) throw DomainError("GaussianAwgnModel: n >= 1");
    if (px <= 0 || beta <= 0) throw DomainError("GaussianAwgnModel: P_x > 0, beta > 0");
    sigma_ = std::sqrt(px);
    const double sigma_y = std::sqrt(px + 1.0 / beta);
    half_width_ = 16.0 * std::max(sigma_, sigma_y);
  }

  int input_dim() const override { return n_; }
  int output_dim() const override { return n_; }

  CoordinateDomain input_domain(int) const override {
    return Interval{-half_width_, half_width_, GaussianHint{0.0, sigma_}};
  }
  std::optional<CoordinateDomain> output_domain(int) const override {
    return Interval{-half_width_, half_width_, GaussianHint{0.0, std::sqrt(px_ + 1.0 / beta_)}};
  }

  double log_prior(const Eigen::VectorXd& x) const override {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += coord_log_prior(i, x[i]);
    return s;
  }
  double log_channel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += -0.5 * beta_ * (y[i] - x[i]) * (y[i] - x[i]);
    return s + 0.5 * n_ * std::log(beta_ / (2.0 * std::numbers::pi));
  }

  bool factorizes() const override { return true; }
  double coord_log_prior(int, double x) const override {
    return -0.5 * x * x / px_ - 0.5 * std::log(2.0 * std::numbers::pi * px_);
  }
  double coord_log_channel(int i, double x, const Eigen::VectorXd& y) const override {
    return -0.5 * beta_ * (y[i] - x) * (y[i] - x) +
           0.5 * std::log(beta_ / (2.0 * std::numbers::pi));
  }

  bool can_sample() const override { return true; }
  Eigen::VectorXd sample_x(CounterRng& rng) const override {
    Eigen::VectorXd x(n_);
    for (int i = 0; i < n_; ++i) x[i] = sigma_ * rng.gaussian();
    return x;
  }
  Eigen::VectorXd sample_y(const Eigen::VectorXd& x, CounterRng& rng) const override {
    Eigen::VectorXd y(n_);
    const double noise_sd = 1.0 / std::sqrt(beta_);
    for (int i = 0; i < n_; ++i) y[i] = x[i] + noise_sd * rng.gaussian();
    return y;
  }

  double power() const { return px_; }
  double beta() const { return beta_; }

 private:
  int n_;
  double px_, beta_, sigma_, half_width_;
};

}  // namespace logz::models
