#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "logz/errors.hpp"

namespace logz::cli {

struct MetricValue {
  double value = 0.0;
  std::string method;
  std::optional<double> stderr_;

  friend bool operator==(const MetricValue& a, const MetricValue& b) {
    return a.value == b.value && a.method == b.method && a.stderr_ == b.stderr_;
  }
};

struct ResultRecord {
  std::string experiment;
  int point_index = 0;
  std::map<std::string, double> params;
  std::optional<uint64_t> seed;  // absent on aggregate rows
  bool aggregate = false;
  std::map<std::string, MetricValue> metrics;
  long samples = 0;
  std::map<std::string, double> tolerances;
  std::optional<double> wall_ms;  // attached only when timing is requested
  std::optional<std::string> error;

  friend bool operator==(const ResultRecord& a, const ResultRecord& b) {
    return a.experiment == b.experiment && a.point_index == b.point_index &&
           a.params == b.params && a.seed == b.seed && a.aggregate == b.aggregate &&
           a.metrics == b.metrics && a.samples == b.samples && a.tolerances == b.tolerances &&
           a.wall_ms == b.wall_ms && a.error == b.error;
  }
};

enum class OutputFormat { csv, jsonl };

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += "\"";
  return out;
}

}  // namespace detail

// One JSON object per record, numbers at 17 significant digits, keys in a
// fixed order so byte-identical reproducibility is meaningful.
inline std::string to_jsonl_line(const ResultRecord& r) {
  std::ostringstream os;
  os << "{\"experiment\":\"" << detail::json_escape(r.experiment) << "\"";
  os << ",\"point_index\":" << r.point_index;
  if (r.seed) os << ",\"seed\":" << *r.seed;
  if (r.aggregate) os << ",\"aggregate\":true";
  os << ",\"params\":{";
  bool first = true;
  for (const auto& [k, v] : r.params) {
    if (!first) os << ",";
    first = false;
    os << "\"" << detail::json_escape(k) << "\":" << detail::fmt17(v);
  }
  os << "},\"metrics\":{";
  first = true;
  for (const auto& [k, m] : r.metrics) {
    if (!first) os << ",";
    first = false;
    os << "\"" << detail::json_escape(k) << "\":{\"value\":" << detail::fmt17(m.value)
       << ",\"method\":\"" << detail::json_escape(m.method) << "\"";
    if (m.stderr_) os << ",\"stderr\":" << detail::fmt17(*m.stderr_);
    os << "}";
  }
  os << "},\"provenance\":{\"samples\":" << r.samples << ",\"tolerances\":{";
  first = true;
  for (const auto& [k, v] : r.tolerances) {
    if (!first) os << ",";
    first = false;
    os << "\"" << detail::json_escape(k) << "\":" << detail::fmt17(v);
  }
  os << "}}";
  if (r.wall_ms) os << ",\"wall_ms\":" << detail::fmt17(*r.wall_ms);
  if (r.error) os << ",\"error\":\"" << detail::json_escape(*r.error) << "\"";
  os << "}";
  return os.str();
}

inline ResultRecord from_jsonl_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("jsonl parse failure: ") + e.what());
  }
  ResultRecord r;
  r.experiment = j.at("experiment").get<std::string>();
  r.point_index = j.at("point_index").get<int>();
  if (j.contains("seed")) r.seed = j["seed"].get<uint64_t>();
  r.aggregate = j.value("aggregate", false);
  for (const auto& [k, v] : j.at("params").items()) r.params[k] = v.get<double>();
  for (const auto& [k, v] : j.at("metrics").items()) {
    MetricValue m;
    m.value = v.at("value").get<double>();
    m.method = v.at("method").get<std::string>();
    if (v.contains("stderr")) m.stderr_ = v["stderr"].get<double>();
    r.metrics[k] = m;
  }
  r.samples = j.at("provenance").at("samples").get<long>();
  for (const auto& [k, v] : j.at("provenance").at("tolerances").items())
    r.tolerances[k] = v.get<double>();
  if (j.contains("wall_ms")) r.wall_ms = j["wall_ms"].get<double>();
  if (j.contains("error")) r.error = j["error"].get<std::string>();
  return r;
}

inline std::string emit_jsonl(const std::vector<ResultRecord>& records) {
  if (records.empty()) throw ConfigError("emit: no records to write");
  std::string out;
  for (const auto& r : records) {
    out += to_jsonl_line(r);
    out += "\n";
  }
  return out;
}

// Plot-ready long format: one row per (record, metric).
inline std::string emit_csv(const std::vector<ResultRecord>& records, bool with_timing = false) {
  if (records.empty()) throw ConfigError("emit: no records to write");
  std::set<std::string> param_keys;
  for (const auto& r : records)
    for (const auto& [k, v] : r.params) param_keys.insert(k);
  std::ostringstream os;
  os << "experiment,point_index,seed,aggregate";
  for (const auto& k : param_keys) os << ",param." << k;
  os << ",metric,value,stderr,method,samples";
  if (with_timing) os << ",wall_ms";
  os << ",error\n";
  for (const auto& r : records) {
    std::ostringstream prefix;
    prefix << detail::csv_escape(r.experiment) << "," << r.point_index << ",";
    if (r.seed) prefix << *r.seed;
    prefix << "," << (r.aggregate ? 1 : 0);
    for (const auto& k : param_keys) {
      prefix << ",";
      const auto it = r.params.find(k);
      if (it != r.params.end()) prefix << detail::fmt17(it->second);
    }
    auto row_tail = [&](std::ostringstream& row) {
      row << "," << r.samples;
      if (with_timing) {
        row << ",";
        if (r.wall_ms) row << detail::fmt17(*r.wall_ms);
      }
      row << ",";
      if (r.error) row << detail::csv_escape(*r.error);
      row << "\n";
    };
    if (r.metrics.empty()) {
      std::ostringstream row;
      row << prefix.str() << ",,,,";
      row_tail(row);
      os << row.str();
      continue;
    }
    for (const auto& [name, m] : r.metrics) {
      std::ostringstream row;
      row << prefix.str() << "," << detail::csv_escape(name) << "," << detail::fmt17(m.value)
          << ",";
      if (m.stderr_) row << detail::fmt17(*m.stderr_);
      row << "," << detail::csv_escape(m.method);
      row_tail(row);
      os << row.str();
    }
  }
  return os.str();
}

// Atomic write: stage in LOGZ_CACHE_DIR (if set) or next to the target, then
// rename into place.
inline void write_output_atomic(const std::string& content, const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path dir = target.parent_path();
  if (const char* cache = std::getenv("LOGZ_CACHE_DIR")) dir = cache;
  if (dir.empty()) dir = ".";
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path tmp = dir / (target.filename().string() + ".tmp." +
                              std::to_string(static_cast<unsigned long>(::getpid())));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f << content;
    if (!f.good()) throw IoError("write failure on " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    // Cross-device staging directories cannot be renamed; fall back to copy.
    fs::copy_file(tmp, target, fs::copy_options::overwrite_existing, ec);
    std::error_code rm;
    fs::remove(tmp, rm);
    if (ec) throw IoError("cannot move output into place: " + ec.message());
  }
}

}  // namespace logz::cli
