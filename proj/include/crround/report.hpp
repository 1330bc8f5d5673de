#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace crround {

/// Structured result of one CLI invocation. Serializes losslessly to JSON;
/// the CSV and pretty renderings are derived views of the same rows.
struct RunReport {
  std::string command;
  std::map<std::string, std::string> parameters;
  std::vector<nlohmann::json> results;
  std::optional<bool> pass;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> wall_time_ms;

  friend bool operator==(const RunReport& a, const RunReport& b) {
    return a.command == b.command && a.parameters == b.parameters && a.results == b.results &&
           a.pass == b.pass && a.seed == b.seed && a.wall_time_ms == b.wall_time_ms;
  }
};

inline void to_json(nlohmann::json& j, const RunReport& r) {
  j = nlohmann::json{{"command", r.command},
                     {"parameters", r.parameters},
                     {"results", r.results},
                     {"seed", r.seed}};
  j["pass"] = r.pass ? nlohmann::json(*r.pass) : nlohmann::json(nullptr);
  if (r.wall_time_ms) j["wall_time_ms"] = *r.wall_time_ms;
}

inline void from_json(const nlohmann::json& j, RunReport& r) {
  j.at("command").get_to(r.command);
  j.at("parameters").get_to(r.parameters);
  r.results = std::vector<nlohmann::json>(j.at("results").begin(), j.at("results").end());
  r.pass = j.at("pass").is_null() ? std::nullopt : std::optional<bool>(j.at("pass").get<bool>());
  j.at("seed").get_to(r.seed);
  r.wall_time_ms = j.contains("wall_time_ms")
                       ? std::optional<std::int64_t>(j.at("wall_time_ms").get<std::int64_t>())
                       : std::nullopt;
}

namespace detail {

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_cell(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return csv_escape(v.get<std::string>());
  return csv_escape(v.dump());
}

}  // namespace detail

/// Rows flattened to CSV with a header built from the union of row keys, in
/// first-seen order.
inline std::string to_csv(const RunReport& r) {
  std::vector<std::string> columns;
  for (const nlohmann::json& row : r.results) {
    if (!row.is_object()) continue;
    for (auto it = row.begin(); it != row.end(); ++it) {
      if (std::find(columns.begin(), columns.end(), it.key()) == columns.end())
        columns.push_back(it.key());
    }
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    out << (i ? "," : "") << detail::csv_escape(columns[i]);
  out << '\n';
  for (const nlohmann::json& row : r.results) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out << ',';
      if (row.is_object() && row.contains(columns[i])) out << detail::csv_cell(row.at(columns[i]));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace crround
