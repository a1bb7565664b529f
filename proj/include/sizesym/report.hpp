#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sizesym/baselines.hpp"

namespace sizesym {

/// Per-condition, per-model bin statistics plus cells and importance, as JSON
/// with sorted keys. `echo` is embedded verbatim.
std::string baselines_to_json(const std::vector<AblationRow>& rows, const ImportanceReport* importance,
                              const std::map<std::string, std::string>& echo);

struct BinRow {
  std::string condition;
  std::string model;
  double mean = 0.0;
  std::array<double, kNumBins> bin_mean{};
  std::array<std::optional<double>, kNumBins> bin_p{};
  std::optional<double> anova_p;
};

std::vector<BinRow> bin_rows_from_json(const std::string& text);

/// Accuracy table (one row per model) for the given condition.
std::string format_bin_rows(const std::vector<BinRow>& rows, const std::string& condition = "baseline");
/// Condition x model means and bin means.
std::string format_condition_rows(const std::vector<BinRow>& rows);

/// Aggregates whatever of baselines.json, ablations.json and scrub/report.json
/// exists under `dir` into one text report.
std::string render_report(const std::string& dir);

}  // namespace sizesym
