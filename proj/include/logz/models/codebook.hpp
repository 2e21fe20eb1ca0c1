#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include <Eigen/Dense>

#include "logz/errors.hpp"
#include "logz/logsumexp.hpp"
#include "logz/model.hpp"
#include "logz/rng.hpp"

namespace logz::models {

inline constexpr uint64_t kDefaultCodebookCap = 1000000;

// Random spherical codebook over an AWGN channel with noise variance 1/beta.
// Codewords are sampled lazily from counter-based streams and renormalized to
// the radius sqrt(n P_x) sphere, so codeword i is a pure function of (seed, i)
// and books far beyond memory limits still expose individual codewords.
struct CodebookModel {
  int n = 1;
  double rate = 1.0;   // nats per symbol
  double power = 1.0;  // P_x
  double beta = 1.0;   // inverse noise variance
  uint64_t seed = 1;
  int transmitted_index = 0;

  CodebookModel(int n_, double rate_, double power_, double beta_, uint64_t seed_)
      : n(n_), rate(rate_), power(power_), beta(beta_), seed(seed_) {
    if (n < 1 || rate < 0 || power <= 0 || beta <= 0)
      throw DomainError("CodebookModel: need n >= 1, R >= 0, P_x > 0, beta > 0");
  }

  double codeword_count() const { return std::ceil(std::exp(n * rate)); }

  bool enumerable(uint64_t cap = kDefaultCodebookCap) const {
    return codeword_count() <= static_cast<double>(cap);
  }

  Eigen::VectorXd codeword(uint64_t i) const {
    CounterRng rng = CounterRng::make(seed, {stream::kCodebook, i});
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = rng.gaussian();
    x *= std::sqrt(n * power) / x.norm();
    return x;
  }

  // y = x_transmitted + z with z ~ N(0, I / beta); noise stream separate from
  // the codebook stream.
  Eigen::VectorXd observe(CounterRng& noise_rng) const {
    Eigen::VectorXd y = codeword(transmitted_index);
    const double sd = 1.0 / std::sqrt(beta);
    for (int j = 0; j < n; ++j) y[j] += sd * noise_rng.gaussian();
    return y;
  }
};

// Gamma(rho) = (1/2) ln(1 - rho^2): the exponential rate of the cap of half
// angle arccos(rho) on the sphere.
inline double gamma_exponent(double rho) {
  if (std::abs(rho) >= 1.0) throw DomainError("gamma_exponent: |rho| must be < 1");
  return 0.5 * std::log1p(-rho * rho);
}

// Exact posterior mean over the codebook: sum_i w_i x_i with
// w_i proportional to exp{-beta ||y - x_i||^2 / 2}.
inline Eigen::VectorXd codebook_exact_posterior_mean(const CodebookModel& model,
                                                     const Eigen::VectorXd& y,
                                                     uint64_t cap = kDefaultCodebookCap) {
  if (y.size() != model.n) throw DimensionMismatch("codebook posterior: y has wrong length");
  if (!model.enumerable(cap))
    throw CodebookTooLarge("codebook has " + std::to_string(model.codeword_count()) +
                           " codewords, cap is " + std::to_string(cap));
  const uint64_t m = static_cast<uint64_t>(model.codeword_count());
  double max_lw = kNegInf, s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(model.n);
  for (uint64_t i = 0; i < m; ++i) {
    const Eigen::VectorXd x = model.codeword(i);
    const double lw = -0.5 * model.beta * (y - x).squaredNorm();
    if (lw <= max_lw) {
      const double w = std::exp(lw - max_lw);
      s0 += w;
      s1 += w * x;
    } else {
      const double r = max_lw == kNegInf ? 0.0 : std::exp(max_lw - lw);
      s0 = s0 * r + 1.0;
      s1 = s1 * r + x;
      max_lw = lw;
    }
  }
  return s1 / s0;
}

// (1/1) ln Z(y, lambda) with the codeword sum evaluated exactly; uses the
// paper-scale convention Z = sum_i (1/M) exp{-beta ||y - x_i||^2/2 + lambda^T x_i}
// (the Gaussian channel constant is dropped; it cancels in all derivatives).
inline double codebook_exact_log_partition(const CodebookModel& model, const Eigen::VectorXd& y,
                                           const Eigen::VectorXd& lambda,
                                           uint64_t cap = kDefaultCodebookCap) {
  if (y.size() != model.n || lambda.size() != model.n)
    throw DimensionMismatch("codebook log partition: bad vector length");
  if (!model.enumerable(cap))
    throw CodebookTooLarge("codebook too large for the exact codeword sum");
  const uint64_t m = static_cast<uint64_t>(model.codeword_count());
  LogAccumulator acc;
  for (uint64_t i = 0; i < m; ++i) {
    const Eigen::VectorXd x = model.codeword(i);
    acc.add(-0.5 * model.beta * (y - x).squaredNorm() + lambda.dot(x));
  }
  return acc.value() - std::log(static_cast<double>(m));
}

// The lambda = 0 large-n quantities of the typical-code analysis.
struct CodebookAsymptotics {
  double p_y = 0.0;       // ||y||^2 / n
  double p_a = 0.0;       // (P_x + P_y) / 2
  double p_g = 0.0;       // sqrt(P_x P_y)
  double theta = 0.0;     // 1 / (2 beta P_g)
  double rho_beta = 0.0;  // sqrt(1 + theta^2) - theta
  double rho_star = 0.0;  // sqrt(1 - e^{-2R})
  double eps1 = 0.0;      // P_a - P_g rho_star
  double eps2 = 0.0;      // P_a + P_g rho_star
  double beta_r = 0.0;    // (e^{2R} - 1) / P_x

  static CodebookAsymptotics from_p_y(const CodebookModel& model, double p_y) {
    CodebookAsymptotics c;
    c.p_y = p_y;
    c.p_a = 0.5 * (model.power + p_y);
    c.p_g = std::sqrt(model.power * p_y);
    c.theta = 1.0 / (2.0 * model.beta * c.p_g);
    c.rho_beta = std::sqrt(1.0 + c.theta * c.theta) - c.theta;
    c.rho_star = std::sqrt(1.0 - std::exp(-2.0 * model.rate));
    c.eps1 = c.p_a - c.p_g * c.rho_star;
    c.eps2 = c.p_a + c.p_g * c.rho_star;
    c.beta_r = (std::exp(2.0 * model.rate) - 1.0) / model.power;
    return c;
  }

  static CodebookAsymptotics from_y(const CodebookModel& model, const Eigen::VectorXd& y) {
    if (y.size() != model.n) throw DimensionMismatch("CodebookAsymptotics: y has wrong length");
    return from_p_y(model, y.squaredNorm() / model.n);
  }

  // Typical channel output energy P_y = P_x + 1/beta, for which
  // rho_beta = sqrt(P_x / (P_x + 1/beta)) holds as an identity.
  static CodebookAsymptotics typical(const CodebookModel& model) {
    return from_p_y(model, model.power + 1.0 / model.beta);
  }
};

enum class CodebookRegime { error_dominated, correct_dominated };

// Piecewise asymptote of (ln Z)/1 at lambda = 0 for a typical code: the
// wrong-codeword sea dominates below beta_R (rho maximization clamped to the
// populated band |rho| <= rho_star), the transmitted codeword above it.
inline std::pair<double, CodebookRegime> codebook_asymptotic_log_partition(
    const CodebookModel& model, const Eigen::VectorXd& y) {
  const CodebookAsymptotics c = CodebookAsymptotics::from_y(model, y);
  if (model.beta < c.beta_r) {
    const double rho = std::clamp(c.rho_beta, -c.rho_star, c.rho_star);
    const double v =
        model.n * (gamma_exponent(rho) - model.beta * (c.p_a - rho * c.p_g));
    return {v, CodebookRegime::error_dominated};
  }
  return {-model.n * (model.rate + 0.5), CodebookRegime::correct_dominated};
}

// Saddle-point estimator in the error-dominated regime: the Wiener rule
// P_x / (P_x + 1/beta) * y. Outside that regime the posterior collapses onto
// the transmitted codeword and this linear form does not apply.
inline Eigen::VectorXd codebook_saddle_estimator(const CodebookModel& model,
                                                 const Eigen::VectorXd& y) {
  if (y.size() != model.n) throw DimensionMismatch("codebook saddle: y has wrong length");
  const double beta_r = (std::exp(2.0 * model.rate) - 1.0) / model.power;
  if (model.beta >= beta_r)
    throw RegimeError("codebook_saddle_estimator: beta >= beta_R (correct-codeword regime)");
  return model.power / (model.power + 1.0 / model.beta) * y;
}

}  // namespace logz::models
