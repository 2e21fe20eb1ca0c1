#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <span>
#include <vector>

namespace logz {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(e^a + e^b); tolerates -inf on either side.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log(e^a - e^b), requires a >= b; -inf when the terms cancel exactly.
inline double log_sub(double a, double b) {
  if (b == kNegInf) return a;
  if (a == b) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> vals) {
  double m = kNegInf;
  for (double v : vals) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : vals) s += std::exp(v - m);
  return m + std::log(s);
}

// Streaming log-sum-exp with on-the-fly rescaling, for sums too large to store.
class LogAccumulator {
 public:
  void add(double log_term) {
    if (log_term == kNegInf) return;
    if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      if (max_ != kNegInf) sum_ *= std::exp(max_ - log_term);
      sum_ += 1.0;
      max_ = log_term;
    }
  }
  double value() const {
    if (max_ == kNegInf) return kNegInf;
    return max_ + std::log(sum_);
  }
  bool empty() const { return max_ == kNegInf; }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

// A real number stored as (sign, log|value|). Signed mixture weights in the
// Laplace representation make genuinely negative "probabilities" unavoidable.
struct SignedLogValue {
  double log_mag = kNegInf;
  int sign = 0;  // -1, 0, +1; sign == 0 iff log_mag == -inf

  static SignedLogValue zero() { return {}; }

  static SignedLogValue from_double(double v) {
    if (v == 0.0) return {};
    return {std::log(std::abs(v)), v > 0 ? +1 : -1};
  }

  static SignedLogValue from_log(double log_mag, int sign) {
    if (sign == 0 || log_mag == kNegInf) return {};
    return {log_mag, sign};
  }

  double to_double() const { return sign == 0 ? 0.0 : sign * std::exp(log_mag); }

  bool is_zero() const { return sign == 0; }

  friend SignedLogValue operator*(const SignedLogValue& a, const SignedLogValue& b) {
    if (a.sign == 0 || b.sign == 0) return {};
    return {a.log_mag + b.log_mag, a.sign * b.sign};
  }

  friend SignedLogValue operator/(const SignedLogValue& a, const SignedLogValue& b) {
    return {a.log_mag - b.log_mag, a.sign * b.sign};
  }

  friend SignedLogValue operator+(const SignedLogValue& a, const SignedLogValue& b) {
    if (a.sign == 0) return b;
    if (b.sign == 0) return a;
    if (a.sign == b.sign) return {log_add(a.log_mag, b.log_mag), a.sign};
    const SignedLogValue& big = a.log_mag >= b.log_mag ? a : b;
    const SignedLogValue& small = a.log_mag >= b.log_mag ? b : a;
    const double lm = log_sub(big.log_mag, small.log_mag);
    if (lm == kNegInf) return {};
    return {lm, big.sign};
  }

  friend SignedLogValue operator-(const SignedLogValue& a, const SignedLogValue& b) {
    return a + SignedLogValue{b.log_mag, -b.sign};
  }
};

// Accumulates positive and negative contributions separately so that the
// degree of cancellation stays observable.
struct SignedAccumulator {
  LogAccumulator pos, neg;

  void add(const SignedLogValue& v) {
    if (v.sign > 0) pos.add(v.log_mag);
    if (v.sign < 0) neg.add(v.log_mag);
  }

  SignedLogValue value() const {
    return SignedLogValue::from_log(pos.value(), pos.empty() ? 0 : +1) +
           SignedLogValue::from_log(neg.value(), neg.empty() ? 0 : -1);
  }

  // |pos - neg| relative to max(pos, neg); 1 means no cancellation.
  double cancellation_ratio() const {
    const double p = pos.value(), n = neg.value();
    if (p == kNegInf || n == kNegInf) return 1.0;
    const double diff = value().log_mag;
    if (diff == kNegInf) return 0.0;
    return std::exp(diff - std::max(p, n));
  }
};

}  // namespace logz
