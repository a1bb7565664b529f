#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sizesym/corpus.hpp"
#include "sizesym/decision_tree.hpp"
#include "sizesym/features.hpp"
#include "sizesym/logistic.hpp"
#include "sizesym/stats.hpp"
#include "sizesym/typology.hpp"

namespace sizesym {

enum class ModelKind { logistic, tree };
std::string_view to_string(ModelKind kind);

struct BaselineConfig {
  LogisticConfig logistic;
  TreeConfig tree;
  std::uint64_t seed = 0;  ///< drives label scrambling
  int jobs = 1;
};

/// One (target language, training bin) fit evaluated on the target's words.
struct CellResult {
  std::string target;
  SimilarityBin bin = SimilarityBin::most_similar;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t out_of_vocabulary = 0;
  std::map<std::string, double> coefficients;  ///< logistic fits: segment -> weight
  std::optional<std::string> root_segment;     ///< tree fits: root split segment

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct BinSummary {
  SimilarityBin bin = SimilarityBin::most_similar;
  std::size_t languages = 0;
  stats::ConfidenceInterval ci;  ///< mean and 95% t-interval over per-language accuracies
  std::optional<stats::TestResult> vs_chance;         ///< one-sided t over languages, mu = 0.5
  std::optional<double> cohens_d;
  std::optional<stats::TestResult> pooled_vs_chance;  ///< one-sided t over all word predictions
};

struct BinAccuracyTable {
  ModelKind model = ModelKind::logistic;
  AblationKind condition = AblationKind::none;
  std::vector<CellResult> cells;  ///< ordered by target, then bin
  std::array<BinSummary, kNumBins> bins;
  double mean = 0.0;                          ///< over all cells
  std::optional<stats::TestResult> anova;     ///< across the three bins

  const CellResult& cell(const std::string& target, SimilarityBin bin) const;
};

/// Leave-one-language-out over tertiles: for every target and bin, fit on
/// that bin's languages only and score on all of the target's words.
BinAccuracyTable run_loo_bins(const Lexicon& lexicon, const std::vector<TertileBinning>& binnings, ModelKind model,
                              const BaselineConfig& config, const AblationFilter& filter = {});

/// Fills bin summaries and the ANOVA from the cells.
void summarize(BinAccuracyTable& table);

struct SegmentImportance {
  std::string segment;
  std::size_t models = 0;        ///< fits whose vocabulary contains the segment
  double mean_coefficient = 0.0;
  double positive_fraction = 0.0;
  double sign_consistency = 0.0;  ///< share of fits agreeing with the majority sign
};

struct ImportanceReport {
  std::vector<SegmentImportance> logistic;  ///< sorted by segment
  std::map<std::string, std::size_t> root_splits;
  std::size_t logistic_models = 0;
  std::size_t tree_models = 0;

  /// Segments whose sign consistency exceeds the threshold, by descending |mean|.
  std::vector<SegmentImportance> consistent(double threshold = 0.6) const;
  const SegmentImportance* find(const std::string& segment) const;
};

ImportanceReport importance_report(const BinAccuracyTable& logistic, const BinAccuracyTable& tree);

struct AblationRow {
  AblationKind condition = AblationKind::none;
  BinAccuracyTable logistic;
  BinAccuracyTable tree;
};

std::vector<AblationRow> run_ablations(const Lexicon& lexicon, const std::vector<TertileBinning>& binnings,
                                       const std::vector<AblationKind>& conditions, const BaselineConfig& config,
                                       const SegmentSets& sets = default_segment_sets());

/// Table-1 style text: mean accuracy (%) by model and bin.
std::string format_bin_table(const BinAccuracyTable& logistic, const BinAccuracyTable& tree);
/// Table-2 style text: per-condition means and bin-wise accuracies.
std::string format_ablation_table(const std::vector<AblationRow>& rows);
/// One line per cell: condition, model, target, bin, correct, total, accuracy.
std::string cells_tsv(const std::vector<const BinAccuracyTable*>& tables);

}  // namespace sizesym
