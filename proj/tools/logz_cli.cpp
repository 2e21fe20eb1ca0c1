// Batch experiment runner and verification harness. `run` executes a
// declarative experiment config and emits machine-readable records; `verify`
// runs the built-in identity suite and exits nonzero on any out-of-tolerance
// check. Output is byte-identical for identical configs and seeds, for any
// worker count.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "logz/emit.hpp"
#include "logz/experiments.hpp"

namespace {

void emit_records(const std::vector<logz::cli::ResultRecord>& records,
                  logz::cli::OutputFormat format, const std::string& output, bool timing) {
  const std::string content = format == logz::cli::OutputFormat::csv
                                  ? logz::cli::emit_csv(records, timing)
                                  : logz::cli::emit_jsonl(records);
  if (output.empty())
    std::cout << content;
  else
    logz::cli::write_output_atomic(content, output);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"partition-function estimators: experiment runner"};
  app.require_subcommand(1);

  std::string config_path, output_override, format_override;
  int workers = 1;
  bool timing = false;
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;

  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
  run_cmd->add_option("--output", output_override, "output path (default: from config/stdout)");
  run_cmd->add_option("--format", format_override, "csv or jsonl (default: from config)");
  run_cmd->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed-override", seed_override, "replace the config seed list")
      ->each([&](const std::string&) { has_seed_override = true; });
  run_cmd->add_flag("--timing", timing, "attach wall-clock times (breaks byte-reproducibility)");

  bool quick = false;
  std::string verify_output;
  int verify_workers = 1;
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the built-in identity suite");
  verify_cmd->add_flag("--quick", quick, "reduced model count and sample sizes");
  verify_cmd->add_option("--workers", verify_workers, "worker threads")
      ->check(CLI::PositiveNumber);
  verify_cmd->add_option("--output", verify_output, "also write records (jsonl)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      logz::cli::ExperimentConfig cfg = logz::cli::parse_config_file(config_path);
      if (!output_override.empty()) cfg.output = output_override;
      if (!format_override.empty()) {
        if (format_override == "csv")
          cfg.format = logz::cli::OutputFormat::csv;
        else if (format_override == "jsonl")
          cfg.format = logz::cli::OutputFormat::jsonl;
        else
          throw logz::ConfigError("--format must be csv or jsonl");
      }
      logz::cli::RunOptions opt;
      opt.workers = workers;
      opt.timing = timing;
      if (has_seed_override) opt.seed_override = seed_override;
      const auto records = logz::cli::run(cfg, opt);
      emit_records(records, cfg.format, cfg.output, timing);
      return 0;
    }

    const auto records = logz::cli::run_verify_suite(quick, verify_workers);
    for (const auto& r : records) {
      const auto pass = r.metrics.find("pass");
      const bool ok = !r.error && (pass == r.metrics.end() || pass->second.value != 0.0);
      std::string detail;
      for (const auto& [k, m] : r.metrics) {
        if (k == "pass") continue;
        detail += " " + k + "=" + logz::cli::detail::fmt17(m.value);
      }
      std::cout << (ok ? "ok   " : "FAIL ") << r.experiment << detail;
      if (r.error) std::cout << " error=" << *r.error;
      std::cout << "\n";
    }
    const bool ok = logz::cli::all_checks_pass(records);
    std::cout << (ok ? "verify: all checks in tolerance\n" : "verify: FAILURES above\n");
    if (!verify_output.empty())
      logz::cli::write_output_atomic(logz::cli::emit_jsonl(records), verify_output);
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
