#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sizesym/corpus.hpp"
#include "sizesym/nn/adam.hpp"
#include "sizesym/nn/encoder.hpp"
#include "sizesym/nn/graph.hpp"
#include "sizesym/stats.hpp"
#include "sizesym/typology.hpp"

namespace sizesym {

struct LambdaSchedule {
  double lambda_max = 1.0;
  int total_epochs = 20;

  void validate() const;
};

/// lambda_max * (2 / (1 + exp(-10 p)) - 1) with p = epoch / total_epochs.
double lambda_at(const LambdaSchedule& schedule, double epoch);

enum class Condition { adversarial, baseline };
std::string_view to_string(Condition c);
Condition parse_condition(std::string_view name);

/// Held-out target plus a class label for every training language.
struct FoldSpec {
  std::string target;
  std::map<std::string, int> labels;
  int num_classes = kNumBins;

  static FoldSpec from_binning(const TertileBinning& binning);
  /// Relabels training languages by family instead of similarity bin.
  static FoldSpec by_family(const std::string& target, const Lexicon& lexicon);
  /// Throws DataError unless the labels cover exactly the non-target languages.
  void validate(const Lexicon& lexicon) const;
};

/// Frozen-encoder vectors for every lexicon entry, in lexicon order.
struct FeatureBank {
  nn::Matrix features;
  std::vector<std::string> language;
  Eigen::VectorXi size;
  std::map<std::string, std::vector<int>> rows_of;

  static FeatureBank build(const Lexicon& lexicon, const nn::TransformerEncoder& encoder,
                           const TokenizerRules& rules = default_rules());
  static FeatureBank from_matrix(const Lexicon& lexicon, nn::Matrix features);
};

struct ScrubberConfig {
  int projection = 64;
  int head_hidden = 32;
  double dropout = 0.1;
  int batch_size = 32;
  nn::AdamConfig adam;
  LambdaSchedule schedule;

  void validate() const;
  std::map<std::string, std::string> to_map() const;
};

/// Projection E, size head C and bin adversary A.
class ScrubberModel {
 public:
  ScrubberModel(int input_dim, int num_bins, const ScrubberConfig& config, std::uint64_t seed);

  struct Output {
    nn::Var size_logits;
    nn::Var bin_logits;
    nn::Var size_loss;
    nn::Var bin_loss;
    nn::Var loss;  ///< size_loss + bin_loss; A sees the projection through grl(lambda)
    nn::Var size_hidden_input;  ///< pre-activation of the size head's relu
    nn::Var bin_hidden_input;   ///< pre-activation of the adversary's relu
  };

  /// With detach_adversary the adversary reads a gradient-free copy of the
  /// projection instead of the reversal layer.
  Output forward(nn::Graph& graph, const nn::Matrix& x, const std::vector<int>& size_targets,
                 const std::vector<int>& bin_targets, double lambda, bool train, std::mt19937_64& rng,
                 bool detach_adversary = false) const;
  /// Same, reading the features from a node of the graph.
  Output forward(nn::Graph& graph, nn::Var x, const std::vector<int>& size_targets, const std::vector<int>& bin_targets,
                 double lambda, bool train, std::mt19937_64& rng, bool detach_adversary = false) const;
  /// Eval-mode projection output.
  nn::Matrix project(const nn::Matrix& x) const;
  /// Eval-mode argmax predictions.
  std::pair<Eigen::VectorXi, Eigen::VectorXi> predict(const nn::Matrix& x) const;

  std::vector<nn::Parameter*> parameters() const;
  std::vector<nn::Parameter*> projection_parameters() const;
  std::vector<nn::Parameter*> size_head_parameters() const;
  std::vector<nn::Parameter*> adversary_parameters() const;

 private:
  nn::Parameter* make(const std::string& name, int rows, int cols, int fan_in, std::mt19937_64& rng);

  ScrubberConfig config_;
  std::vector<std::unique_ptr<nn::Parameter>> params_;
  nn::Parameter *proj_w_, *proj_b_;
  nn::Parameter *c1_w_, *c1_b_, *c2_w_, *c2_b_;
  nn::Parameter *a1_w_, *a1_b_, *a2_w_, *a2_b_;
};

struct EpochMetrics {
  int epoch = 0;  ///< 1-based
  double lambda = 0.0;
  double train_size_accuracy = 0.0;
  double train_bin_accuracy = 0.0;
  double test_size_accuracy = 0.0;
  double size_loss = 0.0;  ///< mean training-batch loss over the epoch
  double bin_loss = 0.0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct RunRecord {
  std::string target;
  Condition condition = Condition::adversarial;
  int run = 0;
  std::uint64_t seed = 0;
  std::vector<EpochMetrics> epochs;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// One training run. The baseline condition holds lambda at 0. Bin accuracy
/// is measured on the full training set at the end of each epoch.
RunRecord train_scrubber(const FoldSpec& fold, const Lexicon& lexicon, const FeatureBank& bank, Condition condition,
                         const ScrubberConfig& config, std::uint64_t seed, int run = 0);
RunRecord train_scrubber(const FoldSpec& fold, const Lexicon& lexicon, const nn::TransformerEncoder& encoder,
                         Condition condition, const ScrubberConfig& config, std::uint64_t seed, int run = 0);

inline constexpr int kFirstAdversarialEpoch = 8;
inline constexpr int kLastExcludedBaselineEpoch = 10;

/// Returns the selected 1-based epoch.
int select_epoch(const RunRecord& record, Condition condition, double chance_bin = 1.0 / 3.0);

struct RunSummary {
  std::string target;
  Condition condition = Condition::adversarial;
  int run = 0;
  std::uint64_t seed = 0;
  int selected_epoch = 0;
  double test_size_accuracy = 0.0;
  double train_size_accuracy = 0.0;
  double train_bin_accuracy = 0.0;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

struct LanguageResult {
  std::string target;
  std::string family;
  Condition condition = Condition::adversarial;
  std::vector<double> size_accuracy;  ///< one entry per run
  std::vector<double> bin_accuracy;
  double mean_size = 0.0;
  double mean_bin = 0.0;
  std::optional<stats::TestResult> size_test;  ///< one-sided vs 0.5; empty when not tested
  std::optional<stats::TestResult> bin_test;   ///< two-sided vs chance; empty when not tested
  bool size_above_chance = false;  ///< size p < 0.05
  bool bin_at_chance_01 = false;   ///< bin p >= 0.01
  bool bin_at_chance_05 = false;   ///< bin p >= 0.05

  friend bool operator==(const LanguageResult&, const LanguageResult&) = default;
};

struct ConditionSummary {
  Condition condition = Condition::adversarial;
  double mean_size = 0.0;
  double mean_bin = 0.0;
  std::size_t languages = 0;
  std::size_t size_above_chance = 0;
  std::size_t bin_at_chance_01 = 0;
  std::size_t bin_at_chance_05 = 0;
  std::size_t both_01 = 0;
  std::size_t both_05 = 0;
  std::vector<std::string> not_tested;
  std::optional<stats::TestResult> size_vs_chance;  ///< one-sided t over language means

  friend bool operator==(const ConditionSummary&, const ConditionSummary&) = default;
};

struct SuiteConfig {
  ScrubberConfig scrubber;
  int runs = 5;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::vector<Condition> conditions{Condition::adversarial, Condition::baseline};
};

struct ExperimentReport {
  std::map<std::string, std::string> config;
  std::vector<RunSummary> runs;
  std::vector<LanguageResult> languages;
  std::vector<ConditionSummary> conditions;
  std::optional<stats::TestResult> paired_size;  ///< adversarial vs baseline size accuracy across languages
  std::vector<RunRecord> records;

  const ConditionSummary& summary(Condition c) const;

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

ExperimentReport evaluate_suite(const Lexicon& lexicon, const std::vector<TertileBinning>& binnings,
                                const FeatureBank& bank, const SuiteConfig& config);

/// Aggregates finished run records into the report.
ExperimentReport summarize_runs(const Lexicon& lexicon, std::vector<RunRecord> records, const SuiteConfig& config);

std::string report_to_json(const ExperimentReport& report, int indent = 2);
ExperimentReport report_from_json(const std::string& text);

/// Per-run, per-epoch curves.
std::string curves_tsv(const ExperimentReport& report);
/// Per-condition curves averaged over languages and runs, with standard deviations.
std::string mean_curves_tsv(const ExperimentReport& report);
/// Text summary with per-language flags and condition averages.
std::string format_suite(const ExperimentReport& report);

}  // namespace sizesym
