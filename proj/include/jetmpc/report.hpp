#pragma once

// Per-axis MAE comparison table across run directories.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "config.hpp"

namespace jetmpc {

inline constexpr std::array<const char*, 6> kMaeColumns = {"X", "Y", "Z", "Roll", "Pitch", "Yaw"};

struct ComparisonRow {
  std::string label;
  std::string status = "completed";
  std::array<double, 6> mae{};  ///< x, y, z [m], roll, pitch, yaw [rad]
  double solve_mean_ms = 0.0;
  double solve_p99_ms = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  /// Per MAE column: index of the unique best row, -1 when tied or single row.
  std::array<int, 6> winner{};
  std::array<bool, 6> tie{};
  std::vector<std::string> warnings;
};

inline ComparisonRow comparison_row_from_metrics(const Json& m, const std::string& label) {
  ComparisonRow r;
  r.label = label;
  r.status = m.at("status").get<std::string>();
  const Json& mae = m.at("mae");
  const char* keys[6] = {"x", "y", "z", "roll", "pitch", "yaw"};
  for (int i = 0; i < 6; ++i) r.mae[static_cast<std::size_t>(i)] = mae.at(keys[i]).get<double>();
  if (m.contains("solve_time_ms")) {
    r.solve_mean_ms = m["solve_time_ms"].value("mean", 0.0);
    r.solve_p99_ms = m["solve_time_ms"].value("p99", 0.0);
  }
  return r;
}

inline void mark_winners(ComparisonTable& t) {
  for (std::size_t c = 0; c < 6; ++c) {
    t.winner[c] = -1;
    t.tie[c] = false;
    if (t.rows.size() < 2) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : t.rows) best = std::min(best, r.mae[c]);
    int count = 0, idx = -1;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      if (t.rows[i].mae[c] == best) {
        ++count;
        idx = static_cast<int>(i);
      }
    }
    if (count == 1) {
      t.winner[c] = idx;
    } else {
      t.tie[c] = true;
    }
  }
}

/// Rows for every directory holding a readable metrics.json; others become warnings.
inline ComparisonTable compare_runs(const std::vector<std::filesystem::path>& dirs) {
  ComparisonTable t;
  for (const auto& dir : dirs) {
    const auto file = dir / "metrics.json";
    try {
      const Json m = read_json_file(file);
      t.rows.push_back(comparison_row_from_metrics(m, dir.filename().empty()
                                                          ? dir.parent_path().filename().string()
                                                          : dir.filename().string()));
    } catch (const std::exception& e) {
      t.warnings.push_back("skipping " + dir.string() + ": " + e.what());
    }
  }
  mark_winners(t);
  return t;
}

inline std::string format_table(const ComparisonTable& t) {
  std::size_t label_w = 5;
  for (const auto& r : t.rows) label_w = std::max(label_w, r.label.size());
  std::string out;
  char buf[64];
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  out += pad("run", label_w) + "  " + pad("status", 9);
  for (const char* c : kMaeColumns) {
    std::snprintf(buf, sizeof(buf), "%10s ", c);
    out += buf;
  }
  out += "  solve mean/p99 [ms]\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    out += pad(r.label, label_w) + "  " + pad(r.status, 9);
    for (std::size_t c = 0; c < 6; ++c) {
      const char mark = t.winner[c] == static_cast<int>(i) ? '*' : (t.tie[c] ? '=' : ' ');
      std::snprintf(buf, sizeof(buf), "%10.4f%c", r.mae[c], mark);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), "  %.3f / %.3f\n", r.solve_mean_ms, r.solve_p99_ms);
    out += buf;
  }
  if (t.rows.size() > 1) out += "(* best in column, = tie; MAE in m and rad)\n";
  return out;
}

inline Json table_to_json(const ComparisonTable& t) {
  Json j;
  Json rows = Json::array();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    Json row;
    row["run"] = r.label;
    row["status"] = r.status;
    Json mae;
    for (std::size_t c = 0; c < 6; ++c) mae[kMaeColumns[c]] = r.mae[c];
    row["mae"] = mae;
    row["solve_mean_ms"] = r.solve_mean_ms;
    row["solve_p99_ms"] = r.solve_p99_ms;
    rows.push_back(row);
  }
  j["rows"] = rows;
  Json winners;
  for (std::size_t c = 0; c < 6; ++c) {
    if (t.winner[c] >= 0) {
      winners[kMaeColumns[c]] = t.rows[static_cast<std::size_t>(t.winner[c])].label;
    } else if (t.tie[c]) {
      winners[kMaeColumns[c]] = "tie";
    } else {
      winners[kMaeColumns[c]] = nullptr;
    }
  }
  j["winner"] = winners;
  j["warnings"] = t.warnings;
  return j;
}

}  // namespace jetmpc
