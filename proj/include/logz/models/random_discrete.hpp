#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "logz/enumeration.hpp"
#include "logz/logsumexp.hpp"
#include "logz/model.hpp"
#include "logz/rng.hpp"

namespace logz::models {

// Randomized finite source-channel pairs for property tests: a log-linear
// prior with pairwise couplings (so the posterior does not factorize) and an
// independent random DMC per coordinate.
struct RandomDiscreteSpec {
  int n_max = 8;
  int x_size_max = 3;
  int y_size_max = 3;
  double joint_cap = 6e6;   // |X|^n * |Y|^n bound, keeps enumeration fast
  bool couplings = true;
};

class RandomDiscreteModel final : public JointModel {
 public:
  RandomDiscreteModel(CounterRng& rng, const RandomDiscreteSpec& spec = {}) {
    for (;;) {
      n_ = 1 + static_cast<int>(rng.next_u64() % spec.n_max);
      x_size_ = 2 + static_cast<int>(rng.next_u64() % (spec.x_size_max - 1));
      y_size_ = 2 + static_cast<int>(rng.next_u64() % (spec.y_size_max - 1));
      const double joint = std::pow(x_size_, n_) * std::pow(y_size_, n_);
      if (joint <= spec.joint_cap) break;
    }
    x_values_.resize(x_size_);
    for (int v = 0; v < x_size_; ++v) x_values_[v] = 2.0 * rng.uniform() - 1.0;
    y_values_.resize(y_size_);
    for (int v = 0; v < y_size_; ++v) y_values_[v] = static_cast<double>(v);

    fields_.resize(n_, std::vector<double>(x_size_));
    for (auto& f : fields_)
      for (double& v : f) v = 0.7 * rng.gaussian();
    couplings_ = Eigen::MatrixXd::Zero(n_, n_);
    if (spec.couplings)
      for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j) couplings_(i, j) = 0.4 * rng.gaussian();

    channel_.resize(n_, Eigen::MatrixXd(x_size_, y_size_));
    for (int i = 0; i < n_; ++i)
      for (int v = 0; v < x_size_; ++v) {
        Eigen::VectorXd row(y_size_);
        for (int w = 0; w < y_size_; ++w) row[w] = rng.gaussian();
        const double mx = row.maxCoeff();
        const double lse = mx + std::log((row.array() - mx).exp().sum());
        for (int w = 0; w < y_size_; ++w) channel_[i](v, w) = row[w] - lse;
      }

    // Prior normalizer and a cumulative table for exact sampling.
    build_sampling_table();
  }

  int input_dim() const override { return n_; }
  int output_dim() const override { return n_; }
  CoordinateDomain input_domain(int) const override { return FiniteSet{x_values_}; }
  std::optional<CoordinateDomain> output_domain(int) const override {
    return FiniteSet{y_values_};
  }

  double log_prior(const Eigen::VectorXd& x) const override {
    double s = -log_prior_norm_;
    for (int i = 0; i < n_; ++i) {
      s += fields_[i][x_index(x[i])];
      for (int j = i + 1; j < n_; ++j) s += couplings_(i, j) * x[i] * x[j];
    }
    return s;
  }

  double log_channel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += channel_[i](x_index(x[i]), y_index(y[i]));
    return s;
  }

  bool can_sample() const override { return true; }
  Eigen::VectorXd sample_x(CounterRng& rng) const override {
    const double u = rng.uniform();
    size_t lo = 0, hi = cum_.size() - 1;
    while (lo < hi) {
      const size_t mid = (lo + hi) / 2;
      if (cum_[mid] < u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return state_of(lo);
  }
  Eigen::VectorXd sample_y(const Eigen::VectorXd& x, CounterRng& rng) const override {
    Eigen::VectorXd y(n_);
    for (int i = 0; i < n_; ++i) {
      const double u = rng.uniform();
      double c = 0.0;
      int w = 0;
      for (; w < y_size_; ++w) {
        c += std::exp(channel_[i](x_index(x[i]), w));
        if (u <= c) break;
      }
      y[i] = y_values_[std::min(w, y_size_ - 1)];
    }
    return y;
  }

 private:
  int x_index(double v) const {
    for (int k = 0; k < x_size_; ++k)
      if (x_values_[k] == v) return k;
    throw DomainError("value not in the input alphabet");
  }
  int y_index(double v) const {
    const int k = static_cast<int>(v);
    if (k < 0 || k >= y_size_) throw DomainError("value not in the output alphabet");
    return k;
  }

  Eigen::VectorXd state_of(size_t flat) const {
    Eigen::VectorXd x(n_);
    for (int i = n_ - 1; i >= 0; --i) {
      x[i] = x_values_[flat % x_size_];
      flat /= x_size_;
    }
    return x;
  }

  void build_sampling_table() {
    log_prior_norm_ = 0.0;
    size_t total = 1;
    for (int i = 0; i < n_; ++i) total *= x_size_;
    std::vector<double> lw(total);
    double mx = kNegInf;
    for (size_t s = 0; s < total; ++s) {
      lw[s] = log_prior(state_of(s));
      mx = std::max(mx, lw[s]);
    }
    double z = 0.0;
    for (double v : lw) z += std::exp(v - mx);
    log_prior_norm_ = mx + std::log(z);
    cum_.resize(total);
    double c = 0.0;
    for (size_t s = 0; s < total; ++s) {
      c += std::exp(lw[s] - log_prior_norm_);
      cum_[s] = c;
    }
    cum_.back() = 1.0;
  }

  int n_ = 1, x_size_ = 2, y_size_ = 2;
  std::vector<double> x_values_, y_values_;
  std::vector<std::vector<double>> fields_;
  Eigen::MatrixXd couplings_;
  std::vector<Eigen::MatrixXd> channel_;
  double log_prior_norm_ = 0.0;
  std::vector<double> cum_;
};

inline std::unique_ptr<RandomDiscreteModel> make_random_discrete(
    uint64_t seed, const RandomDiscreteSpec& spec = {}) {
  CounterRng rng = CounterRng::make(seed, {stream::kModelGen});
  return std::make_unique<RandomDiscreteModel>(rng, spec);
}

// A deliberately wrong joint law sharing the base model's alphabets: the
// channel is reweighted by e^{eps x_i y_i} per coordinate. Normalization is
// irrelevant for the estimator it induces.
class PerturbedChannelModel final : public JointModel {
 public:
  PerturbedChannelModel(const JointModel& base, double eps) : base_(&base), eps_(eps) {}
  int input_dim() const override { return base_->input_dim(); }
  int output_dim() const override { return base_->output_dim(); }
  CoordinateDomain input_domain(int i) const override { return base_->input_domain(i); }
  std::optional<CoordinateDomain> output_domain(int i) const override {
    return base_->output_domain(i);
  }
  double log_prior(const Eigen::VectorXd& x) const override { return base_->log_prior(x); }
  double log_channel(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const override {
    return base_->log_channel(x, y) + eps_ * x.dot(y);
  }

 private:
  const JointModel* base_;
  double eps_;
};

}  // namespace logz::models
