#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oplab/errors.hpp"

namespace oplab {

inline constexpr const char* kToolVersion = "0.1.0";

// One measured-vs-theoretical comparison row.
struct BoundRecord {
  std::string name;
  std::map<std::string, nlohmann::json> params;  // sorted by key
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  std::string notes;
};

inline double bound_ratio(double lhs, double rhs) {
  if (rhs > 0.0) return lhs / rhs;
  if (lhs == 0.0) return 0.0;
  return std::numeric_limits<double>::infinity();
}

inline BoundRecord make_record(std::string name, std::map<std::string, nlohmann::json> params, double lhs, double rhs,
                               std::string notes = {}) {
  return {std::move(name), std::move(params), lhs, rhs, bound_ratio(lhs, rhs), std::move(notes)};
}

namespace detail {
inline nlohmann::json finite_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}
inline double from_json_number(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}
}  // namespace detail

inline nlohmann::json to_json(const BoundRecord& r) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  return {{"name", r.name},
          {"params", params},
          {"lhs", detail::finite_or_null(r.lhs)},
          {"rhs", detail::finite_or_null(r.rhs)},
          {"ratio", detail::finite_or_null(r.ratio)},
          {"notes", r.notes}};
}

inline BoundRecord record_from_json(const nlohmann::json& j) {
  BoundRecord r;
  r.name = j.at("name").get<std::string>();
  for (const auto& [k, v] : j.at("params").items()) r.params[k] = v;
  r.lhs = detail::from_json_number(j.at("lhs"));
  r.rhs = detail::from_json_number(j.at("rhs"));
  r.ratio = detail::from_json_number(j.at("ratio"));
  r.notes = j.value("notes", "");
  return r;
}

// ratio = lhs/rhs recomputation; tolerant to the last bit of the serialized value.
inline bool ratio_consistent(const BoundRecord& r) {
  const double expect = bound_ratio(r.lhs, r.rhs);
  if (std::isinf(expect) || std::isinf(r.ratio)) return std::isinf(expect) && std::isinf(r.ratio);
  return std::abs(expect - r.ratio) <= 1e-15 * std::max(1.0, std::abs(expect));
}

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string params_string(const std::map<std::string, nlohmann::json>& params) {
  std::string s;
  for (const auto& [k, v] : params) {
    if (!s.empty()) s += ';';
    s += k + '=' + (v.is_string() ? v.get<std::string>() : (v.is_number_float() ? format_double(v.get<double>()) : v.dump()));
  }
  return s;
}

// Fixed column order: name,params,lhs,rhs,ratio,notes.
inline std::string records_csv(const std::vector<BoundRecord>& records) {
  std::string out = "name,params,lhs,rhs,ratio,notes\n";
  for (const auto& r : records)
    out += csv_escape(r.name) + ',' + csv_escape(params_string(r.params)) + ',' + format_double(r.lhs) + ',' +
           format_double(r.rhs) + ',' + format_double(r.ratio) + ',' + csv_escape(r.notes) + '\n';
  return out;
}

// x = chosen parameter, y = ratio.
inline std::string records_tsv(const std::vector<BoundRecord>& records, const std::string& x_param) {
  std::string out = x_param + "\tratio\n";
  for (const auto& r : records) {
    auto it = r.params.find(x_param);
    if (it == r.params.end() || !it->second.is_number()) continue;
    out += format_double(it->second.get<double>()) + '\t' + format_double(r.ratio) + '\n';
  }
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline nlohmann::json report_json(const std::string& command, const nlohmann::json& params,
                                  const std::vector<BoundRecord>& records, const std::string& timestamp) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) recs.push_back(to_json(r));
  return {{"header", {{"timestamp", timestamp}}},
          {"tool_version", kToolVersion},
          {"command", command},
          {"params", params},
          {"records", recs}};
}

// Temp file + rename, so readers never observe a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("write_atomic: cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write_atomic: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace oplab
