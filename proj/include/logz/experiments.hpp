#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "logz/emit.hpp"
#include "logz/errors.hpp"
#include "logz/expectation.hpp"
#include "logz/identities.hpp"
#include "logz/models/cauchy.hpp"
#include "logz/models/codebook.hpp"
#include "logz/models/curie_weiss.hpp"
#include "logz/models/gaussian.hpp"
#include "logz/models/random_discrete.hpp"
#include "logz/oracle.hpp"
#include "logz/parallel.hpp"
#include "logz/spherical.hpp"

namespace logz::cli {

enum class ExperimentKind { verify_identities, awgn_codebook, curie_weiss, cauchy, spherical };

inline const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::verify_identities: return "verify_identities";
    case ExperimentKind::awgn_codebook: return "awgn_codebook";
    case ExperimentKind::curie_weiss: return "curie_weiss";
    case ExperimentKind::cauchy: return "cauchy";
    case ExperimentKind::spherical: return "spherical";
  }
  return "?";
}

struct SweepSpec {
  std::string name;
  std::vector<double> values;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::verify_identities;
  std::map<std::string, double> params;
  std::optional<SweepSpec> sweep;
  std::vector<uint64_t> seeds;
  std::string output;  // empty -> stdout
  OutputFormat format = OutputFormat::jsonl;
  nlohmann::json kernel;  // spherical only
};

namespace detail {

inline const std::set<std::string>& allowed_params(ExperimentKind k) {
  static const std::map<ExperimentKind, std::set<std::string>> table = {
      {ExperimentKind::verify_identities, {"count", "n_max", "alphabet_max"}},
      {ExperimentKind::awgn_codebook, {"n", "rate", "power", "beta"}},
      {ExperimentKind::curie_weiss, {"n", "a", "b", "beta", "samples"}},
      {ExperimentKind::cauchy, {"n", "k", "sigma2", "samples", "analytic_kernel"}},
      {ExperimentKind::spherical, {"n", "y_sigma"}},
  };
  return table.at(k);
}

inline double get_param(const std::map<std::string, double>& p, const std::string& k,
                        double def) {
  const auto it = p.find(k);
  return it == p.end() ? def : it->second;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  if (!j.contains("experiment") || !j["experiment"].is_string())
    throw ConfigError("config field 'experiment' (string) is required");
  const std::string name = j["experiment"].get<std::string>();
  bool known = false;
  for (ExperimentKind k :
       {ExperimentKind::verify_identities, ExperimentKind::awgn_codebook,
        ExperimentKind::curie_weiss, ExperimentKind::cauchy, ExperimentKind::spherical}) {
    if (name == kind_name(k)) {
      cfg.kind = k;
      known = true;
    }
  }
  if (!known) throw ConfigError("unknown experiment '" + name + "'");

  const auto& allowed = detail::allowed_params(cfg.kind);
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConfigError("'params' must be an object");
    for (const auto& [k, v] : j["params"].items()) {
      if (!allowed.count(k))
        throw ConfigError("params." + k + " is not a parameter of " + name);
      if (!v.is_number()) throw ConfigError("params." + k + " must be a number");
      cfg.params[k] = v.get<double>();
    }
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    if (!s.is_object() || !s.contains("name") || !s.contains("values"))
      throw ConfigError("'sweep' needs fields 'name' and 'values'");
    SweepSpec sw;
    sw.name = s["name"].get<std::string>();
    if (!allowed.count(sw.name))
      throw ConfigError("sweep.name '" + sw.name + "' is not a parameter of " + name);
    for (const auto& v : s["values"]) {
      if (!v.is_number()) throw ConfigError("sweep.values must be numbers");
      sw.values.push_back(v.get<double>());
    }
    if (sw.values.empty()) throw ConfigError("sweep.values must be nonempty");
    cfg.sweep = sw;
  }
  if (!j.contains("seeds") || !j["seeds"].is_array() || j["seeds"].empty())
    throw ConfigError("config field 'seeds' (nonempty array) is required");
  for (const auto& s : j["seeds"]) {
    if (!s.is_number_integer() || (s.is_number_integer() && s.get<long long>() < 0))
      throw ConfigError("seeds must be nonnegative integers");
    cfg.seeds.push_back(s.get<uint64_t>());
  }
  if (j.contains("output")) cfg.output = j["output"].get<std::string>();
  if (j.contains("format")) {
    const std::string f = j["format"].get<std::string>();
    if (f == "csv")
      cfg.format = OutputFormat::csv;
    else if (f == "jsonl")
      cfg.format = OutputFormat::jsonl;
    else
      throw ConfigError("format must be 'csv' or 'jsonl'");
  }
  if (cfg.kind == ExperimentKind::spherical) {
    if (!j.contains("kernel")) throw ConfigError("spherical experiment requires 'kernel'");
    cfg.kernel = j["kernel"];
  }
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse_config(j);
}

// Declarative kernel description: a registered phi, a registered f_n form,
// and the integration domains.
inline spherical::SphericalKernel parse_kernel(const nlohmann::json& j, int n) {
  spherical::SphericalKernel ker;
  ker.n = n;
  if (!j.is_object()) throw ConfigError("kernel must be an object");

  const auto& phi = j.at("phi");
  const std::string phi_type = phi.at("type").get<std::string>();
  if (phi_type == "squared_difference") {
    ker.phi = [](double x, double y) { return (y - x) * (y - x); };
  } else if (phi_type == "product") {
    ker.phi = [](double x, double y) { return x * y; };
  } else if (phi_type == "tabulated") {
    std::vector<double> xs = phi.at("x").get<std::vector<double>>();
    std::vector<double> ys = phi.at("y").get<std::vector<double>>();
    std::vector<std::vector<double>> vals =
        phi.at("values").get<std::vector<std::vector<double>>>();
    if (vals.size() != xs.size()) throw ConfigError("tabulated phi: values rows != |x|");
    for (const auto& row : vals)
      if (row.size() != ys.size()) throw ConfigError("tabulated phi: values cols != |y|");
    ker.phi = [xs, ys, vals](double x, double y) {
      auto clamp_index = [](const std::vector<double>& g, double v) {
        const auto it = std::upper_bound(g.begin(), g.end(), v);
        return std::min<size_t>(g.size() - 1, std::max<ptrdiff_t>(1, it - g.begin()));
      };
      const size_t i = clamp_index(xs, x), k = clamp_index(ys, y);
      const double u = std::clamp((x - xs[i - 1]) / (xs[i] - xs[i - 1]), 0.0, 1.0);
      const double v = std::clamp((y - ys[k - 1]) / (ys[k] - ys[k - 1]), 0.0, 1.0);
      return (1 - u) * (1 - v) * vals[i - 1][k - 1] + u * (1 - v) * vals[i][k - 1] +
             (1 - u) * v * vals[i - 1][k] + u * v * vals[i][k];
    };
  } else {
    throw ConfigError("kernel.phi.type '" + phi_type + "' is not registered");
  }

  const auto& fn = j.at("f_n");
  const std::string fn_type = fn.at("type").get<std::string>();
  if (fn_type == "gamma_density") {
    ker.log_f = spherical::gamma_density_logf(fn.at("k").get<double>(),
                                              fn.value("log_scale", 0.0));
  } else if (fn_type == "table") {
    ker.log_f = spherical::table_logf(fn.at("t").get<std::vector<double>>(),
                                      fn.at("f").get<std::vector<double>>());
  } else if (fn_type == "expression") {
    const std::string id = fn.at("id").get<std::string>();
    if (id == "sin")
      ker.log_f = spherical::sin_logf(fn.at("alpha").get<double>(), fn.value("log_scale", 0.0));
    else if (id == "bump")
      ker.log_f = spherical::bump_logf(fn.at("t0").get<double>(), fn.at("width").get<double>());
    else
      throw ConfigError("kernel.f_n expression id '" + id + "' is not registered");
  } else {
    throw ConfigError("kernel.f_n.type '" + fn_type + "' is not registered");
  }

  auto parse_domain = [](const nlohmann::json& d,
                         const char* what) -> spherical::SampleDomain {
    if (d.is_object() && d.contains("grid"))
      return spherical::Grid{d["grid"].get<std::vector<double>>()};
    if (d.is_array() && d.size() == 2)
      return Interval{d[0].get<double>(), d[1].get<double>(), std::nullopt};
    throw ConfigError(std::string(what) + " must be [lo, hi] or {\"grid\": [...]}");
  };
  if (j.contains("x_domain")) ker.x_domain = parse_domain(j["x_domain"], "kernel.x_domain");
  if (j.contains("y_domain")) ker.y_domain = parse_domain(j["y_domain"], "kernel.y_domain");
  if (j.contains("t_domain")) {
    const auto& d = j["t_domain"];
    if (!d.is_array() || d.size() != 2) throw ConfigError("kernel.t_domain must be [lo, hi]");
    ker.t_domain.lo = d[0].get<double>();
    ker.t_domain.hi =
        d[1].is_null() ? std::numeric_limits<double>::infinity() : d[1].get<double>();
  }
  if (j.contains("x_weight")) {
    const auto& w = j["x_weight"];
    if (w.at("type").get<std::string>() != "gaussian")
      throw ConfigError("kernel.x_weight.type must be 'gaussian'");
    const double s2 = w.at("sigma2").get<double>();
    ker.log_x_weight = [s2](double x) {
      return -0.5 * x * x / s2 - 0.5 * std::log(2.0 * std::numbers::pi * s2);
    };
  }
  return ker;
}

// ---------------------------------------------------------------------------
// Per-experiment runners: one call produces the metrics of a single
// (parameter point, seed) record.

namespace detail {

using Metrics = std::map<std::string, MetricValue>;

inline void put(Metrics& m, const std::string& name, double v, const char* method,
                std::optional<double> se = std::nullopt) {
  m[name] = MetricValue{v, method, se};
}

inline Metrics run_verify_identities_one(const std::map<std::string, double>& params,
                                         uint64_t seed, long& samples_out) {
  models::RandomDiscreteSpec spec;
  spec.n_max = static_cast<int>(get_param(params, "n_max", 8));
  spec.x_size_max = static_cast<int>(get_param(params, "alphabet_max", 3));
  const auto model = models::make_random_discrete(seed, spec);
  const ExpectationConfig cfg = ExpectationConfig::enumerate();
  const MmseReport rep = mmse_all_formulas(*model, cfg);
  const auto om = oracle::oracle_mmse(*model, cfg);
  const PriorMoments prior = prior_moments(*model);

  const Eigen::MatrixXd second = prior.cov + prior.mean * prior.mean.transpose();
  const double j_res = (rep.fisher - (rep.cov_x - rep.error_cov)).cwiseAbs().maxCoeff();
  const double xi_res = (rep.xi - (second - rep.error_cov)).cwiseAbs().maxCoeff();
  const double xi_j_res =
      (rep.xi - rep.fisher - prior.mean * prior.mean.transpose()).cwiseAbs().maxCoeff();
  // Law of total variance: Cov{X} = E{Cov{X|Y}} + Cov{E{X|Y}}.
  const double ltv_res =
      (rep.cov_x - rep.error_cov - (rep.xi - prior.mean * prior.mean.transpose()))
          .cwiseAbs()
          .maxCoeff();

  Metrics m;
  put(m, "mmse", rep.mmse(), "enumeration");
  put(m, "spread", rep.spread, "enumeration");
  put(m, "oracle_mmse", om.value, "oracle_enumeration");
  put(m, "oracle_delta", std::abs(om.value - rep.mmse()), "enumeration");
  put(m, "j_residual", j_res, "enumeration");
  put(m, "xi_residual", xi_res, "enumeration");
  put(m, "xi_vs_j_residual", xi_j_res, "enumeration");
  put(m, "total_variance_residual", ltv_res, "enumeration");
  const bool pass = rep.spread <= 1e-8 && std::abs(om.value - rep.mmse()) <= 1e-8 &&
                    j_res <= 1e-8 && xi_res <= 1e-8 && xi_j_res <= 1e-8 && ltv_res <= 1e-8;
  put(m, "pass", pass ? 1.0 : 0.0, "enumeration");
  samples_out = static_cast<long>(std::pow(2, model->input_dim()));
  return m;
}

inline Metrics run_awgn_codebook_one(const std::map<std::string, double>& params,
                                     uint64_t seed, long& samples_out) {
  const int n = static_cast<int>(get_param(params, "n", 20));
  const models::CodebookModel model(n, get_param(params, "rate", 1.0),
                                    get_param(params, "power", 1.0),
                                    get_param(params, "beta", 1.0), seed);
  CounterRng noise = CounterRng::make(seed, {stream::kChannel});
  const Eigen::VectorXd x0 = model.codeword(model.transmitted_index);
  const Eigen::VectorXd y = model.observe(noise);

  Metrics m;
  const auto typical = models::CodebookAsymptotics::typical(model);
  put(m, "beta_r", typical.beta_r, "closed_form");
  put(m, "rho_beta_typical", typical.rho_beta, "closed_form");
  put(m, "rho_beta_identity_residual",
      std::abs(typical.rho_beta - std::sqrt(model.power / (model.power + 1.0 / model.beta))),
      "closed_form");
  const auto [asym, regime] = models::codebook_asymptotic_log_partition(model, y);
  put(m, "regime_error_dominated",
      regime == models::CodebookRegime::error_dominated ? 1.0 : 0.0, "saddle");
  put(m, "asym_logz_per_symbol", asym / n, "saddle");
  if (model.enumerable()) {
    const double exact =
        models::codebook_exact_log_partition(model, y, Eigen::VectorXd::Zero(n));
    put(m, "exact_logz_per_symbol", exact / n, "enumeration");
    put(m, "logz_gap_per_symbol", std::abs(exact - asym) / n, "enumeration");
    const Eigen::VectorXd post = models::codebook_exact_posterior_mean(model, y);
    put(m, "exact_posterior_mse", (x0 - post).squaredNorm() / n, "enumeration");
  }
  if (regime == models::CodebookRegime::error_dominated) {
    const Eigen::VectorXd wiener = models::codebook_saddle_estimator(model, y);
    put(m, "wiener_mse", (x0 - wiener).squaredNorm() / n, "saddle");
    put(m, "wiener_mse_prediction", model.power / (1.0 + model.beta * model.power),
        "closed_form");
  }
  samples_out = 1;
  return m;
}

inline Metrics run_curie_weiss_one(const std::map<std::string, double>& params, uint64_t seed,
                                   long& samples_out) {
  const int n = static_cast<int>(get_param(params, "n", 1000));
  const long samples = static_cast<long>(get_param(params, "samples", 200));
  const models::CurieWeissModel model(n, get_param(params, "a", 1.0),
                                      get_param(params, "b", 0.0),
                                      get_param(params, "beta", 1.0));
  Metrics m;
  const auto asym = models::cw_asymptotic_mmse(model);
  put(m, "asymptotic_mmse", asym.mmse, "saddle");
  put(m, "m_star", asym.m_star, "saddle");
  put(m, "theta0", asym.branches.front().theta0, "saddle");

  // Per-symbol MSE of the saddle estimator, Monte Carlo over model draws.
  double s = 0.0, s2 = 0.0;
  for (long i = 0; i < samples; ++i) {
    CounterRng rng = CounterRng::make(seed, {stream::kMonteCarlo, static_cast<uint64_t>(i)});
    const Eigen::VectorXd x = model.sample_x(rng);
    const Eigen::VectorXd y = model.sample_y(x, rng);
    const Eigen::VectorXd xhat = models::cw_saddle_estimator(model, y);
    const double v = (x - xhat).squaredNorm() / n;
    s += v;
    s2 += v * v;
  }
  const double emp = s / samples;
  const double sd = std::sqrt(std::max(0.0, s2 / samples - emp * emp) / samples);
  put(m, "empirical_mmse", emp, "monte_carlo", sd);
  put(m, "asym_vs_empirical_rel", std::abs(emp - asym.mmse) / std::max(1e-12, asym.mmse),
      "monte_carlo");

  if (n <= 14) {
    CounterRng rng = CounterRng::make(seed, {stream::kChannel});
    const Eigen::VectorXd x = model.sample_x(rng);
    const Eigen::VectorXd y = model.sample_y(x, rng);
    const TiltVector zero = TiltVector::zeros(n);
    const Eigen::VectorXd mean_enum = analytic_posterior_moments(model, y, zero).mean;
    const Eigen::VectorXd mean_hs = models::cw_conditional_mean_hs(model, y, zero);
    DiffConfig fd;
    fd.scheme = DiffScheme::central_difference;
    const Eigen::VectorXd mean_fd = conditional_mean(model, y, fd);
    put(m, "agree_enum_hs", (mean_enum - mean_hs).cwiseAbs().maxCoeff(), "quadrature");
    put(m, "agree_enum_fd", (mean_enum - mean_fd).cwiseAbs().maxCoeff(), "central_difference");
  }
  samples_out = samples;
  return m;
}

inline Metrics run_cauchy_one(const std::map<std::string, double>& params, uint64_t seed,
                              long& samples_out) {
  const int n = static_cast<int>(get_param(params, "n", 10));
  const long samples = static_cast<long>(get_param(params, "samples", 400));
  const models::CauchyModel model(n, get_param(params, "sigma2", 1.0),
                                  get_param(params, "k", 0.5 * n + 2.0));
  const models::CauchyJointAdapter adapter(model);
  Metrics m;
  CounterRng rng = CounterRng::make(seed, {stream::kChannel});
  const Eigen::VectorXd x = adapter.sample_x(rng);
  const Eigen::VectorXd y = adapter.sample_y(x, rng);

  const Eigen::VectorXd exact = models::cauchy_conditional_mean(model, y);
  const auto saddle = models::cauchy_saddle_t(model, y);
  put(m, "t_hat", saddle.argmax, "saddle");
  put(m, "curvature", saddle.curvature, "saddle");
  try {
    // Log-curvature of the t-posterior is ~ k - n/2; gate against flatness
    // rather than the default large-n threshold.
    const Eigen::VectorXd approx = models::cauchy_saddle_estimator(model, y, 3.0);
    put(m, "saddle_vs_integral_rel",
        (approx - exact).cwiseAbs().maxCoeff() /
            std::max(1e-12, exact.cwiseAbs().maxCoeff()),
        "saddle");
  } catch (const FlatMaximum&) {
    put(m, "saddle_flat", 1.0, "saddle");
  }

  double s = 0.0, s2 = 0.0;
  for (long i = 0; i < samples; ++i) {
    CounterRng r = CounterRng::make(seed, {stream::kMonteCarlo, static_cast<uint64_t>(i)});
    const Eigen::VectorXd xs = adapter.sample_x(r);
    const Eigen::VectorXd ys = adapter.sample_y(xs, r);
    const double v = (xs - models::cauchy_conditional_mean(model, ys)).squaredNorm() / n;
    s += v;
    s2 += v * v;
  }
  const double emp = s / samples;
  put(m, "mc_mmse", emp, "monte_carlo",
      std::sqrt(std::max(0.0, s2 / samples - emp * emp) / samples));

  const bool analytic = get_param(params, "analytic_kernel", 1.0) != 0.0;
  const auto ker = spherical::cauchy_kernel(n, model.sigma2, model.k, analytic);
  const auto sl = spherical::spherical_single_letter_mmse(ker);
  put(m, "single_letter_mmse", sl.mmse, "saddle");
  put(m, "single_letter_vs_mc_rel", std::abs(sl.mmse - emp) / std::max(1e-12, emp),
      "monte_carlo");
  samples_out = samples;
  return m;
}

inline Metrics run_spherical_one(const nlohmann::json& kernel_json,
                                 const std::map<std::string, double>& params, uint64_t seed,
                                 long& samples_out) {
  const int n = static_cast<int>(get_param(params, "n", 10));
  const double y_sigma = get_param(params, "y_sigma", 1.0);
  const spherical::SphericalKernel ker = parse_kernel(kernel_json, n);
  CounterRng rng = CounterRng::make(seed, {stream::kChannel});
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = y_sigma * rng.gaussian();

  Metrics m;
  const auto est = spherical::spherical_estimator(ker, y);
  put(m, "t_hat", est.t_hat.argmax, "saddle");
  put(m, "curvature", est.t_hat.curvature, "saddle");
  put(m, "saddle_gap",
      (est.exact_ratio - est.zeta_at_saddle).cwiseAbs().maxCoeff(), "quadrature");
  const auto sl = spherical::spherical_single_letter_mmse(ker);
  put(m, "single_letter_mmse", sl.mmse, "saddle");
  put(m, "weight_norm", sl.weight_norm, "quadrature");
  samples_out = 1;
  return m;
}

}  // namespace detail

struct RunOptions {
  int workers = 1;
  std::optional<uint64_t> seed_override;
  bool timing = false;
};

// Executes one record per (parameter point x seed) in a deterministic order,
// embedding per-record failures, then appends one aggregate row per point
// with the cross-seed mean and sample standard deviation of every metric.
inline std::vector<ResultRecord> run(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  std::vector<std::map<std::string, double>> points;
  if (cfg.sweep) {
    for (double v : cfg.sweep->values) {
      auto p = cfg.params;
      p[cfg.sweep->name] = v;
      points.push_back(std::move(p));
    }
  } else {
    points.push_back(cfg.params);
  }
  std::vector<uint64_t> seeds = cfg.seeds;
  if (opt.seed_override) seeds = {*opt.seed_override};

  const long tasks = static_cast<long>(points.size()) * static_cast<long>(seeds.size());
  std::vector<ResultRecord> records(tasks);
  parallel_for_index(tasks, opt.workers, [&](long idx) {
    const size_t pi = static_cast<size_t>(idx) / seeds.size();
    const size_t si = static_cast<size_t>(idx) % seeds.size();
    ResultRecord& r = records[idx];
    r.experiment = kind_name(cfg.kind);
    r.point_index = static_cast<int>(pi);
    r.params = points[pi];
    r.seed = seeds[si];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      long samples = 0;
      switch (cfg.kind) {
        case ExperimentKind::verify_identities:
          r.metrics = detail::run_verify_identities_one(points[pi], seeds[si], samples);
          break;
        case ExperimentKind::awgn_codebook:
          r.metrics = detail::run_awgn_codebook_one(points[pi], seeds[si], samples);
          break;
        case ExperimentKind::curie_weiss:
          r.metrics = detail::run_curie_weiss_one(points[pi], seeds[si], samples);
          break;
        case ExperimentKind::cauchy:
          r.metrics = detail::run_cauchy_one(points[pi], seeds[si], samples);
          break;
        case ExperimentKind::spherical:
          r.metrics = detail::run_spherical_one(cfg.kernel, points[pi], seeds[si], samples);
          break;
      }
      r.samples = samples;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    if (opt.timing) {
      const auto t1 = std::chrono::steady_clock::now();
      r.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
  });

  std::vector<ResultRecord> out;
  out.reserve(records.size() + points.size());
  for (size_t pi = 0; pi < points.size(); ++pi) {
    std::map<std::string, std::vector<double>> columns;
    long n_ok = 0;
    for (size_t si = 0; si < seeds.size(); ++si) {
      const ResultRecord& r = records[pi * seeds.size() + si];
      out.push_back(r);
      if (r.error) continue;
      ++n_ok;
      for (const auto& [k, v] : r.metrics) columns[k].push_back(v.value);
    }
    if (n_ok == 0) continue;
    ResultRecord agg;
    agg.experiment = kind_name(cfg.kind);
    agg.point_index = static_cast<int>(pi);
    agg.params = points[pi];
    agg.aggregate = true;
    agg.samples = n_ok;
    for (const auto& [k, vals] : columns) {
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= vals.size();
      double sd = 0.0;
      if (vals.size() > 1) {
        for (double v : vals) sd += (v - mean) * (v - mean);
        sd = std::sqrt(sd / (vals.size() - 1));
      }
      agg.metrics[k] = MetricValue{mean, "aggregate", sd};
    }
    out.push_back(agg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// The built-in verification suite behind `logz verify`.

namespace detail {

inline ResultRecord make_check(const std::string& name, bool pass,
                               std::map<std::string, MetricValue> metrics,
                               std::map<std::string, double> tolerances) {
  ResultRecord r;
  r.experiment = "verify." + name;
  r.metrics = std::move(metrics);
  r.tolerances = std::move(tolerances);
  r.metrics["pass"] = MetricValue{pass ? 1.0 : 0.0, "check"};
  return r;
}

}  // namespace detail

inline std::vector<ResultRecord> run_verify_suite(bool quick, int workers = 1) {
  std::vector<ResultRecord> out;

  // Four-formula MMSE agreement and decomposition identities on random models.
  {
    const int count = quick ? 5 : 20;
    std::vector<ResultRecord> rows(count);
    parallel_for_index(count, workers, [&](long i) {
      long samples = 0;
      ResultRecord r;
      r.experiment = "verify.identities";
      r.point_index = static_cast<int>(i);
      r.seed = static_cast<uint64_t>(1000 + i);
      try {
        r.metrics = detail::run_verify_identities_one({}, *r.seed, samples);
      } catch (const std::exception& e) {
        r.error = e.what();
        r.metrics["pass"] = MetricValue{0.0, "check"};
      }
      r.samples = samples;
      r.tolerances = {{"spread", 1e-8}, {"oracle_delta", 1e-8}, {"residuals", 1e-8}};
      rows[i] = r;
    });
    for (auto& r : rows) out.push_back(std::move(r));
  }

  // Gaussian closed form mmse = P_x / (1 + beta P_x).
  {
    const std::vector<std::pair<double, double>> combos =
        quick ? std::vector<std::pair<double, double>>{{1.0, 1.0}, {0.5, 2.0}, {2.0, 0.5}}
              : [] {
                  std::vector<std::pair<double, double>> v;
                  for (double p : {0.5, 1.0, 2.0})
                    for (double b : {0.5, 1.0, 2.0}) v.push_back({p, b});
                  return v;
                }();
    for (const auto& [px, beta] : combos) {
      const models::GaussianAwgnModel g(1, px, beta);
      const double got = mmse(g, ExpectationConfig::quadrature()).value;
      const double want = px / (1.0 + beta * px);
      std::map<std::string, MetricValue> m;
      m["mmse"] = MetricValue{got, "quadrature"};
      m["closed_form"] = MetricValue{want, "closed_form"};
      m["delta"] = MetricValue{std::abs(got - want), "quadrature"};
      auto r = detail::make_check("gaussian_closed_form", std::abs(got - want) <= 1e-6,
                                  std::move(m), {{"delta", 1e-6}});
      r.params = {{"power", px}, {"beta", beta}};
      out.push_back(std::move(r));
    }
  }

  // Mismatch: Q = P reduction and dominance, plus the Gaussian 5/9 case.
  {
    const int count = quick ? 2 : 5;
    for (int i = 0; i < count; ++i) {
      const auto model = models::make_random_discrete(2000 + i);
      const ExpectationConfig cfg = ExpectationConfig::enumerate();
      const double matched = mmse_all_formulas(*model, cfg).mmse();
      const auto self = mismatched_mse(*model, *model, cfg);
      const models::PerturbedChannelModel wrong(*model, 0.4);
      const auto mis = mismatched_mse(*model, wrong, cfg);
      std::map<std::string, MetricValue> m;
      m["self_delta"] = MetricValue{std::abs(self.mse - matched), "enumeration"};
      m["dominance_margin"] = MetricValue{mis.mse - matched, "enumeration"};
      const bool pass =
          std::abs(self.mse - matched) <= 1e-8 && mis.mse >= matched - 1e-10;
      auto r = detail::make_check("mismatch_reduction", pass, std::move(m),
                                  {{"self_delta", 1e-8}});
      r.seed = static_cast<uint64_t>(2000 + i);
      out.push_back(std::move(r));
    }
    const models::GaussianAwgnModel p(1, 1.0, 1.0), q(1, 2.0, 1.0);
    const auto rep = mismatched_mse(p, q, ExpectationConfig::quadrature());
    std::map<std::string, MetricValue> m;
    m["mse_q"] = MetricValue{rep.mse, "quadrature"};
    m["delta_vs_5_9"] = MetricValue{std::abs(rep.mse - 5.0 / 9.0), "quadrature"};
    out.push_back(detail::make_check("mismatch_gaussian", std::abs(rep.mse - 5.0 / 9.0) <= 1e-6,
                                     std::move(m), {{"delta", 1e-6}}));
  }

  // Curie-Weiss three-way agreement at small n.
  {
    const int draws = quick ? 3 : 10;
    double worst = 0.0;
    for (int i = 0; i < draws; ++i) {
      CounterRng rng = CounterRng::make(3000 + i, {stream::kModelGen});
      const models::CurieWeissModel model(8, 0.3 + 1.4 * rng.uniform(),
                                          -0.3 + 0.6 * rng.uniform(),
                                          0.4 + 1.0 * rng.uniform());
      const Eigen::VectorXd x = model.sample_x(rng);
      const Eigen::VectorXd y = model.sample_y(x, rng);
      const TiltVector zero = TiltVector::zeros(8);
      const Eigen::VectorXd a = analytic_posterior_moments(model, y, zero).mean;
      const Eigen::VectorXd b = models::cw_conditional_mean_hs(model, y, zero);
      DiffConfig fd;
      fd.scheme = DiffScheme::central_difference;
      const Eigen::VectorXd c = conditional_mean(model, y, fd);
      worst = std::max({worst, (a - b).cwiseAbs().maxCoeff(), (a - c).cwiseAbs().maxCoeff()});
    }
    std::map<std::string, MetricValue> m;
    m["max_disagreement"] = MetricValue{worst, "quadrature"};
    out.push_back(detail::make_check("curie_weiss_threeway", worst <= 1e-6, std::move(m),
                                     {{"max_disagreement", 1e-6}}));
  }

  // Cauchy against the nested-quadrature oracle, and the spherical-kernel
  // representation against the direct model.
  {
    const models::CauchyModel model(1, 1.0, 5.0);
    const models::CauchyJointAdapter adapter(model);
    Eigen::VectorXd y(1);
    y << 1.3;
    const double direct = models::cauchy_conditional_mean(model, y)[0];
    const double nested = oracle::nested_quadrature_mean(adapter, y)[0];
    const auto ker = spherical::cauchy_kernel(1, 1.0, 5.0, true);
    const double lz_kernel =
        spherical::spherical_log_partition(ker, y, TiltVector::zeros(1)).log_mag;
    const double lz_model = models::cauchy_log_partition(model, y, TiltVector::zeros(1));
    std::map<std::string, MetricValue> m;
    m["mean_vs_oracle"] = MetricValue{std::abs(direct - nested), "quadrature"};
    m["logz_vs_kernel"] = MetricValue{std::abs(lz_kernel - lz_model), "quadrature"};
    out.push_back(detail::make_check(
        "cauchy_oracle",
        std::abs(direct - nested) <= 1e-8 && std::abs(lz_kernel - lz_model) <= 1e-10,
        std::move(m), {{"mean_vs_oracle", 1e-8}, {"logz_vs_kernel", 1e-10}}));
  }

  // Sign-tracked quadrature against direct F(sum phi) evaluation.
  {
    const int points = quick ? 20 : 100;
    const double alpha = 2.0;
    spherical::SphericalKernel ker;
    ker.n = 1;
    ker.phi = [](double x, double y) { return (y - x) * (y - x); };
    ker.log_f = spherical::sin_logf(alpha);
    ker.x_domain = spherical::Grid{{0.0}};  // point mass: Z reduces to F(phi(0, y))
    double worst = 0.0;
    CounterRng rng = CounterRng::make(4000, {stream::kModelGen});
    for (int i = 0; i < points; ++i) {
      Eigen::VectorXd y(1);
      y << 0.8 + 2.2 * rng.uniform();
      const SignedLogValue z =
          spherical::spherical_log_partition(ker, y, TiltVector::zeros(1));
      const double s = y[0] * y[0];
      const double direct = alpha / (s * s + alpha * alpha);
      worst = std::max(worst, std::abs(z.to_double() - direct));
    }
    std::map<std::string, MetricValue> m;
    m["max_abs_error"] = MetricValue{worst, "quadrature"};
    out.push_back(detail::make_check("sin_kernel_signed", worst <= 1e-8, std::move(m),
                                     {{"max_abs_error", 1e-8}}));
  }

  for (size_t i = 0; i < out.size(); ++i) out[i].point_index = static_cast<int>(i);
  return out;
}

inline bool all_checks_pass(const std::vector<ResultRecord>& records) {
  for (const auto& r : records) {
    const auto it = r.metrics.find("pass");
    if (it != r.metrics.end() && it->second.value == 0.0) return false;
    if (r.error) return false;
  }
  return true;
}

}  // namespace logz::cli
