#include "sizesym/report.hpp"

#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "sizesym/adversarial.hpp"
#include "sizesym/error.hpp"

namespace sizesym {

using json = nlohmann::json;

namespace {

json table_json(const BinAccuracyTable& t) {
  json bins = json::array();
  for (const auto& b : t.bins) {
    json entry{{"bin", std::string(to_string(b.bin))}, {"languages", b.languages}, {"mean", b.ci.mean},
               {"ci_lower", b.ci.lower}, {"ci_upper", b.ci.upper}};
    entry["p"] = b.vs_chance ? json(b.vs_chance->p) : json(nullptr);
    entry["t"] = b.vs_chance ? json(b.vs_chance->statistic) : json(nullptr);
    entry["cohens_d"] = b.cohens_d ? json(*b.cohens_d) : json(nullptr);
    entry["pooled_p"] = b.pooled_vs_chance ? json(b.pooled_vs_chance->p) : json(nullptr);
    bins.push_back(entry);
  }
  json cells = json::array();
  for (const auto& c : t.cells) {
    json cell{{"target", c.target}, {"bin", std::string(to_string(c.bin))}, {"correct", c.correct}, {"total", c.total},
              {"out_of_vocabulary", c.out_of_vocabulary}};
    cell["root_segment"] = c.root_segment ? json(*c.root_segment) : json(nullptr);
    cells.push_back(cell);
  }
  json out{{"model", std::string(to_string(t.model))}, {"condition", std::string(to_string(t.condition))},
           {"mean", t.mean}, {"bins", bins}, {"cells", cells}};
  out["anova_p"] = t.anova ? json(t.anova->p) : json(nullptr);
  out["anova_f"] = t.anova ? json(t.anova->statistic) : json(nullptr);
  return out;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::string stars(const std::optional<double>& p) {
  if (!p) return "";
  if (*p < 0.001) return "***";
  if (*p < 0.01) return "**";
  if (*p < 0.05) return "*";
  return "";
}

}  // namespace

std::string baselines_to_json(const std::vector<AblationRow>& rows, const ImportanceReport* importance,
                              const std::map<std::string, std::string>& echo) {
  json j;
  j["config"] = echo;
  j["tables"] = json::array();
  for (const auto& r : rows) {
    j["tables"].push_back(table_json(r.logistic));
    j["tables"].push_back(table_json(r.tree));
  }
  if (importance != nullptr) {
    json imp;
    imp["logistic_models"] = importance->logistic_models;
    imp["tree_models"] = importance->tree_models;
    imp["root_splits"] = importance->root_splits;
    json segs = json::array();
    for (const auto& s : importance->logistic) {
      segs.push_back({{"segment", s.segment}, {"models", s.models}, {"mean_coefficient", s.mean_coefficient},
                      {"positive_fraction", s.positive_fraction}, {"sign_consistency", s.sign_consistency}});
    }
    imp["segments"] = segs;
    j["importance"] = imp;
  }
  return j.dump(2) + "\n";
}

std::vector<BinRow> bin_rows_from_json(const std::string& text) {
  std::vector<BinRow> rows;
  try {
    const json j = json::parse(text);
    for (const auto& t : j.at("tables")) {
      BinRow r;
      r.condition = t.at("condition").get<std::string>();
      r.model = t.at("model").get<std::string>();
      r.mean = t.at("mean").get<double>();
      if (!t.at("anova_p").is_null()) r.anova_p = t.at("anova_p").get<double>();
      const auto& bins = t.at("bins");
      if (bins.size() != kNumBins) throw DataError("baseline table must have three bins");
      for (int b = 0; b < kNumBins; ++b) {
        r.bin_mean[b] = bins[b].at("mean").get<double>();
        if (!bins[b].at("p").is_null()) r.bin_p[b] = bins[b].at("p").get<double>();
      }
      rows.push_back(r);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("baseline report: ") + e.what());
  }
  return rows;
}

std::string format_bin_rows(const std::vector<BinRow>& rows, const std::string& condition) {
  std::string out = "Model           Most Similar   Somewhat Similar   Least Similar\n";
  char buf[200];
  for (const auto& r : rows) {
    if (r.condition != condition) continue;
    std::snprintf(buf, sizeof buf, "%-15s %-14s %-18s %s\n", r.model == "logistic" ? "Logistic Reg." : "Decision Tree",
                  (pct(r.bin_mean[0]) + stars(r.bin_p[0])).c_str(), (pct(r.bin_mean[1]) + stars(r.bin_p[1])).c_str(),
                  (pct(r.bin_mean[2]) + stars(r.bin_p[2])).c_str());
    out += buf;
  }
  return out;
}

std::string format_condition_rows(const std::vector<BinRow>& rows) {
  std::string out = "Condition              Model      Mean   Most   Somewhat  Least\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-22s %-10s %-6s %-6s %-9s %s\n", r.condition.c_str(), r.model.c_str(),
                  pct(r.mean).c_str(), pct(r.bin_mean[0]).c_str(), pct(r.bin_mean[1]).c_str(), pct(r.bin_mean[2]).c_str());
    out += buf;
  }
  return out;
}

std::string render_report(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path d(dir);
  std::string out;
  bool any = false;
  if (fs::exists(d / "baselines.json")) {
    out += "== Baseline accuracy by similarity bin (%) ==\n";
    out += format_bin_rows(bin_rows_from_json(read_file((d / "baselines.json").string())));
    out += "* p<0.05, ** p<0.01, *** p<0.001 (one-sided t vs 50% over languages)\n\n";
    any = true;
  }
  if (fs::exists(d / "ablations.json")) {
    out += "== Ablations ==\n";
    out += format_condition_rows(bin_rows_from_json(read_file((d / "ablations.json").string())));
    out += "\n";
    any = true;
  }
  if (fs::exists(d / "scrub" / "report.json")) {
    out += "== Adversarial scrubber ==\n";
    out += format_suite(report_from_json(read_file((d / "scrub" / "report.json").string())));
    any = true;
  }
  if (!any) throw DataError("no results found under '" + dir + "'");
  return out;
}

}  // namespace sizesym
