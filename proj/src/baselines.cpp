#include "sizesym/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "sizesym/error.hpp"
#include "sizesym/parallel.hpp"
#include "sizesym/random.hpp"

namespace sizesym {

namespace {

std::string percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * value);
  return buf;
}

std::string stars(const std::optional<stats::TestResult>& t) {
  if (!t) return "";
  if (t->p < 0.001) return "***";
  if (t->p < 0.01) return "**";
  if (t->p < 0.05) return "*";
  return "";
}

CellResult fit_cell(const Lexicon& lexicon, const TertileBinning& binning, SimilarityBin bin, ModelKind model,
                    const BaselineConfig& config, const AblationFilter& filter) {
  CellResult cell;
  cell.target = binning.target;
  cell.bin = bin;

  std::vector<WordEntry> train;
  for (const auto& lang : binning[bin]) {
    auto words = lexicon.entries_for(lang);
    train.insert(train.end(), words.begin(), words.end());
  }
  if (train.empty()) {
    throw DataError("empty training bin " + std::string(to_string(bin)) + " for target '" + binning.target + "'");
  }
  auto test = lexicon.entries_for(binning.target);
  if (test.empty()) throw DataError("target language '" + binning.target + "' has no lexicon entries");
  if (filter.kind == AblationKind::scrambled_labels) {
    test = scramble_labels(std::move(test), derive_seed(config.seed, "scramble:" + binning.target));
  }

  const SegmentVocabulary vocab = filter_vocabulary(build_vocabulary(train), filter);
  FeaturizeStats test_stats;
  const Eigen::MatrixXd X_train = feature_matrix(train, vocab, filter);
  const Eigen::MatrixXd X_test = feature_matrix(test, vocab, filter, &test_stats);
  const Eigen::VectorXi y_train = label_vector(train);
  const Eigen::VectorXi y_test = label_vector(test);
  cell.out_of_vocabulary = test_stats.out_of_vocabulary;

  Eigen::VectorXi predicted;
  if (model == ModelKind::logistic) {
    const auto fit = train_logistic(X_train, y_train, config.logistic);
    for (Eigen::Index c = 0; c < vocab.size(); ++c) cell.coefficients[vocab.segment(c)] = fit.weights(c);
    predicted = fit.predict(X_test);
  } else {
    const auto fit = train_tree(X_train, y_train, config.tree);
    if (auto root = fit.root_feature()) cell.root_segment = vocab.segment(*root);
    predicted = fit.predict(X_test);
  }
  cell.total = static_cast<std::size_t>(y_test.size());
  cell.correct = static_cast<std::size_t>((predicted.array() == y_test.array()).count());
  return cell;
}

}  // namespace

std::string_view to_string(ModelKind kind) { return kind == ModelKind::logistic ? "logistic" : "tree"; }

const CellResult& BinAccuracyTable::cell(const std::string& target, SimilarityBin bin) const {
  for (const auto& c : cells) {
    if (c.target == target && c.bin == bin) return c;
  }
  throw DataError("no cell for target '" + target + "' / " + std::string(to_string(bin)));
}

void summarize(BinAccuracyTable& table) {
  std::array<std::vector<double>, kNumBins> per_bin;
  std::array<std::vector<double>, kNumBins> per_word;
  double total = 0.0;
  for (const auto& c : table.cells) {
    const int b = static_cast<int>(c.bin);
    per_bin[b].push_back(c.accuracy());
    per_word[b].insert(per_word[b].end(), c.correct, 1.0);
    per_word[b].insert(per_word[b].end(), c.total - c.correct, 0.0);
    total += c.accuracy();
  }
  table.mean = table.cells.empty() ? 0.0 : total / static_cast<double>(table.cells.size());

  std::vector<Eigen::VectorXd> groups;
  for (int b = 0; b < kNumBins; ++b) {
    auto& s = table.bins[b];
    s = BinSummary{};
    s.bin = static_cast<SimilarityBin>(b);
    s.languages = per_bin[b].size();
    const Eigen::VectorXd acc = stats::to_vector(per_bin[b]);
    s.ci = stats::mean_ci(acc);
    try {
      s.vs_chance = stats::one_sample_t(acc, 0.5, stats::Tail::one_sided_greater);
      s.cohens_d = stats::cohens_d(acc, 0.5);
    } catch (const DegenerateSample&) {
    }
    try {
      s.pooled_vs_chance = stats::one_sample_t(stats::to_vector(per_word[b]), 0.5, stats::Tail::one_sided_greater);
    } catch (const DegenerateSample&) {
    }
    groups.push_back(acc);
  }
  try {
    table.anova = stats::anova_oneway(groups);
  } catch (const DegenerateSample&) {
    table.anova.reset();
  }
}

BinAccuracyTable run_loo_bins(const Lexicon& lexicon, const std::vector<TertileBinning>& binnings, ModelKind model,
                              const BaselineConfig& config, const AblationFilter& filter) {
  for (const auto& b : binnings) {
    if (!lexicon.has_language(b.target)) throw DataError("binning target '" + b.target + "' missing from lexicon");
    for (const auto& bin : b.bins) {
      for (const auto& lang : bin) {
        if (!lexicon.has_language(lang)) throw DataError("binned language '" + lang + "' missing from lexicon");
      }
    }
  }
  BinAccuracyTable table;
  table.model = model;
  table.condition = filter.kind;
  table.cells.resize(binnings.size() * kNumBins);
  parallel_for(table.cells.size(), config.jobs, [&](std::size_t k) {
    const auto& binning = binnings[k / kNumBins];
    table.cells[k] = fit_cell(lexicon, binning, static_cast<SimilarityBin>(k % kNumBins), model, config, filter);
  });
  std::stable_sort(table.cells.begin(), table.cells.end(), [](const CellResult& a, const CellResult& b) {
    return std::tie(a.target, a.bin) < std::tie(b.target, b.bin);
  });
  summarize(table);
  return table;
}

std::vector<SegmentImportance> ImportanceReport::consistent(double threshold) const {
  std::vector<SegmentImportance> out;
  std::copy_if(logistic.begin(), logistic.end(), std::back_inserter(out),
               [&](const SegmentImportance& s) { return s.sign_consistency > threshold; });
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::abs(a.mean_coefficient) > std::abs(b.mean_coefficient);
  });
  return out;
}

const SegmentImportance* ImportanceReport::find(const std::string& segment) const {
  for (const auto& s : logistic) {
    if (s.segment == segment) return &s;
  }
  return nullptr;
}

ImportanceReport importance_report(const BinAccuracyTable& logistic, const BinAccuracyTable& tree) {
  struct Tally {
    std::size_t models = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
    double sum = 0.0;
  };
  std::map<std::string, Tally> tallies;
  ImportanceReport report;
  for (const auto& c : logistic.cells) {
    ++report.logistic_models;
    for (const auto& [segment, w] : c.coefficients) {
      auto& t = tallies[segment];
      ++t.models;
      t.sum += w;
      if (w > 0) ++t.positive;
      if (w < 0) ++t.negative;
    }
  }
  for (const auto& [segment, t] : tallies) {
    SegmentImportance s;
    s.segment = segment;
    s.models = t.models;
    s.mean_coefficient = t.sum / static_cast<double>(t.models);
    s.positive_fraction = static_cast<double>(t.positive) / static_cast<double>(t.models);
    s.sign_consistency = static_cast<double>(std::max(t.positive, t.negative)) / static_cast<double>(t.models);
    report.logistic.push_back(s);
  }
  for (const auto& c : tree.cells) {
    ++report.tree_models;
    report.root_splits[c.root_segment.value_or("(leaf)")] += 1;
  }
  return report;
}

std::vector<AblationRow> run_ablations(const Lexicon& lexicon, const std::vector<TertileBinning>& binnings,
                                       const std::vector<AblationKind>& conditions, const BaselineConfig& config,
                                       const SegmentSets& sets) {
  std::vector<AblationRow> rows;
  for (auto kind : conditions) {
    const auto filter = make_filter(kind, sets);
    AblationRow row;
    row.condition = kind;
    row.logistic = run_loo_bins(lexicon, binnings, ModelKind::logistic, config, filter);
    row.tree = run_loo_bins(lexicon, binnings, ModelKind::tree, config, filter);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_bin_table(const BinAccuracyTable& logistic, const BinAccuracyTable& tree) {
  std::ostringstream out;
  out << "Mean accuracy (%) by model and similarity bin (condition: " << to_string(logistic.condition) << ")\n";
  out << "Model           Most Similar   Somewhat Similar   Least Similar\n";
  for (const auto* t : {&logistic, &tree}) {
    char line[160];
    std::snprintf(line, sizeof line, "%-15s %-14s %-18s %s\n",
                  t->model == ModelKind::logistic ? "Logistic Reg." : "Decision Tree",
                  (percent(t->bins[0].ci.mean) + stars(t->bins[0].vs_chance)).c_str(),
                  (percent(t->bins[1].ci.mean) + stars(t->bins[1].vs_chance)).c_str(),
                  (percent(t->bins[2].ci.mean) + stars(t->bins[2].vs_chance)).c_str());
    out << line;
  }
  out << "Significance vs 50% (one-sided t over languages): * p<0.05, ** p<0.01, *** p<0.001\n";
  for (const auto* t : {&logistic, &tree}) {
    out << to_string(t->model) << ":";
    for (const auto& b : t->bins) {
      char buf[200];
      std::snprintf(buf, sizeof buf, " [%s %s, 95%% CI %s-%s, d=%s, p=%s, pooled p=%s]", std::string(to_string(b.bin)).c_str(),
                    percent(b.ci.mean).c_str(), percent(b.ci.lower).c_str(), percent(b.ci.upper).c_str(),
                    b.cohens_d ? std::to_string(*b.cohens_d).substr(0, 5).c_str() : "n/a",
                    b.vs_chance ? std::to_string(b.vs_chance->p).c_str() : "n/a",
                    b.pooled_vs_chance ? std::to_string(b.pooled_vs_chance->p).c_str() : "n/a");
      out << buf;
    }
    out << " ANOVA p=" << (t->anova ? std::to_string(t->anova->p) : std::string("n/a")) << '\n';
  }
  return out.str();
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "ID  Ablation Condition      LR Mean  DT Mean  LR / DT by Bin (Most / Somewhat / Least)\n";
  for (const auto& r : rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%-3d %-23s %-8s %-8s %s / %s / %s  |  %s / %s / %s\n",
                  static_cast<int>(r.condition), std::string(to_string(r.condition)).c_str(),
                  percent(r.logistic.mean).c_str(), percent(r.tree.mean).c_str(),
                  percent(r.logistic.bins[0].ci.mean).c_str(), percent(r.logistic.bins[1].ci.mean).c_str(),
                  percent(r.logistic.bins[2].ci.mean).c_str(), percent(r.tree.bins[0].ci.mean).c_str(),
                  percent(r.tree.bins[1].ci.mean).c_str(), percent(r.tree.bins[2].ci.mean).c_str());
    out << line;
  }
  return out.str();
}

std::string cells_tsv(const std::vector<const BinAccuracyTable*>& tables) {
  std::ostringstream out;
  out << "condition\tmodel\ttarget\tbin\tcorrect\ttotal\taccuracy\troot_segment\n";
  for (const auto* t : tables) {
    for (const auto& c : t->cells) {
      char acc[32];
      std::snprintf(acc, sizeof acc, "%.6f", c.accuracy());
      out << to_string(t->condition) << '\t' << to_string(t->model) << '\t' << c.target << '\t' << to_string(c.bin)
          << '\t' << c.correct << '\t' << c.total << '\t' << acc << '\t' << c.root_segment.value_or("") << '\n';
    }
  }
  return out.str();
}

}  // namespace sizesym
