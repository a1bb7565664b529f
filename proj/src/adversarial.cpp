#include "sizesym/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sizesym/error.hpp"
#include "sizesym/parallel.hpp"
#include "sizesym/random.hpp"

namespace sizesym {

using nn::Graph;
using nn::Matrix;
using nn::Parameter;
using nn::Var;
using json = nlohmann::json;

void LambdaSchedule::validate() const {
  if (!(lambda_max >= 0.0)) throw ConfigError("lambda_max must be non-negative");
  if (total_epochs < 1) throw ConfigError("total_epochs must be positive");
}

double lambda_at(const LambdaSchedule& schedule, double epoch) {
  schedule.validate();
  if (!(epoch >= 0.0 && epoch <= schedule.total_epochs)) {
    throw ConfigError("lambda schedule: epoch outside [0, total_epochs]");
  }
  const double p = epoch / schedule.total_epochs;
  return schedule.lambda_max * (2.0 / (1.0 + std::exp(-10.0 * p)) - 1.0);
}

std::string_view to_string(Condition c) { return c == Condition::adversarial ? "adversarial" : "baseline"; }

Condition parse_condition(std::string_view name) {
  if (name == "adversarial") return Condition::adversarial;
  if (name == "baseline") return Condition::baseline;
  throw ConfigError("unknown condition '" + std::string(name) + "'");
}

FoldSpec FoldSpec::from_binning(const TertileBinning& binning) {
  FoldSpec f;
  f.target = binning.target;
  for (int b = 0; b < kNumBins; ++b) {
    for (const auto& lang : binning.bins[b]) f.labels[lang] = b;
  }
  return f;
}

FoldSpec FoldSpec::by_family(const std::string& target, const Lexicon& lexicon) {
  FoldSpec f;
  f.target = target;
  std::map<std::string, int> family_ids;
  for (const auto& lang : lexicon.languages()) {
    if (lang == target) continue;
    family_ids.emplace(lexicon.family_of(lang), 0);
  }
  int next = 0;
  for (auto& [family, id] : family_ids) id = next++;
  for (const auto& lang : lexicon.languages()) {
    if (lang != target) f.labels[lang] = family_ids.at(lexicon.family_of(lang));
  }
  f.num_classes = std::max(1, next);
  return f;
}

void FoldSpec::validate(const Lexicon& lexicon) const {
  if (!lexicon.has_language(target)) throw DataError("fold target '" + target + "' is not in the lexicon");
  if (num_classes < 2) throw DataError("fold needs at least two adversary classes");
  for (const auto& [lang, label] : labels) {
    if (lang == target) throw DataError("fold labels the target language '" + target + "'");
    if (!lexicon.has_language(lang)) throw DataError("fold language '" + lang + "' is not in the lexicon");
    if (label < 0 || label >= num_classes) throw DataError("fold label out of range for '" + lang + "'");
  }
  if (labels.size() + 1 != lexicon.families().size()) {
    throw DataError("fold for '" + target + "' covers " + std::to_string(labels.size()) + " of " +
                    std::to_string(lexicon.families().size() - 1) + " training languages");
  }
}

FeatureBank FeatureBank::from_matrix(const Lexicon& lexicon, Matrix features) {
  if (features.rows() != static_cast<Eigen::Index>(lexicon.size())) throw DataError("feature rows do not match the lexicon");
  FeatureBank bank;
  bank.features = std::move(features);
  bank.size.resize(static_cast<Eigen::Index>(lexicon.size()));
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    const auto& e = lexicon.entries()[i];
    bank.language.push_back(e.language);
    bank.size(static_cast<Eigen::Index>(i)) = static_cast<int>(e.size);
    bank.rows_of[e.language].push_back(static_cast<int>(i));
  }
  return bank;
}

FeatureBank FeatureBank::build(const Lexicon& lexicon, const nn::TransformerEncoder& encoder, const TokenizerRules& rules) {
  std::vector<std::vector<std::string>> words;
  words.reserve(lexicon.size());
  for (const auto& e : lexicon.entries()) words.push_back(segment_strings(e.ipa, rules));
  return from_matrix(lexicon, encoder.encode(words));
}

void ScrubberConfig::validate() const {
  if (projection < 1 || head_hidden < 1 || batch_size < 1) throw ConfigError("scrubber: sizes must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("scrubber: dropout must lie in [0, 1)");
  adam.validate();
  schedule.validate();
}

std::map<std::string, std::string> ScrubberConfig::to_map() const {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  return {{"scrub.projection", std::to_string(projection)}, {"scrub.head_hidden", std::to_string(head_hidden)},
          {"scrub.dropout", num(dropout)},                  {"scrub.batch_size", std::to_string(batch_size)},
          {"scrub.learning_rate", num(adam.learning_rate)}, {"scrub.lambda_max", num(schedule.lambda_max)},
          {"scrub.epochs", std::to_string(schedule.total_epochs)}};
}

Parameter* ScrubberModel::make(const std::string& name, int rows, int cols, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix value(rows, cols);
  for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = bound * (2.0 * nn::uniform01(rng) - 1.0);
  params_.push_back(std::make_unique<Parameter>(name, std::move(value)));
  return params_.back().get();
}

ScrubberModel::ScrubberModel(int input_dim, int num_bins, const ScrubberConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  if (input_dim < 1 || num_bins < 2) throw ConfigError("scrubber: invalid input or class count");
  std::mt19937_64 rng(seed);
  const int p = config_.projection;
  const int h = config_.head_hidden;
  proj_w_ = make("projection.weight", input_dim, p, input_dim, rng);
  proj_b_ = make("projection.bias", 1, p, input_dim, rng);
  c1_w_ = make("size.hidden.weight", p, h, p, rng);
  c1_b_ = make("size.hidden.bias", 1, h, p, rng);
  c2_w_ = make("size.out.weight", h, 2, h, rng);
  c2_b_ = make("size.out.bias", 1, 2, h, rng);
  a1_w_ = make("bin.hidden.weight", p, h, p, rng);
  a1_b_ = make("bin.hidden.bias", 1, h, p, rng);
  a2_w_ = make("bin.out.weight", h, num_bins, h, rng);
  a2_b_ = make("bin.out.bias", 1, num_bins, h, rng);
}

ScrubberModel::Output ScrubberModel::forward(Graph& g, const Matrix& x, const std::vector<int>& size_targets,
                                             const std::vector<int>& bin_targets, double lambda, bool train,
                                             std::mt19937_64& rng, bool detach_adversary) const {
  return forward(g, g.constant(x), size_targets, bin_targets, lambda, train, rng, detach_adversary);
}

ScrubberModel::Output ScrubberModel::forward(Graph& g, Var in, const std::vector<int>& size_targets,
                                             const std::vector<int>& bin_targets, double lambda, bool train,
                                             std::mt19937_64& rng, bool detach_adversary) const {
  const double p = config_.dropout;
  Var z = nn::dropout(nn::add_bias(nn::matmul(in, g.parameter(*proj_w_)), g.parameter(*proj_b_)), p, train, rng);
  Output out;
  out.size_hidden_input = nn::add_bias(nn::matmul(z, g.parameter(*c1_w_)), g.parameter(*c1_b_));
  Var c = nn::dropout(nn::relu(out.size_hidden_input), p, train, rng);
  out.size_logits = nn::add_bias(nn::matmul(c, g.parameter(*c2_w_)), g.parameter(*c2_b_));
  Var za = detach_adversary ? nn::stop_gradient(z) : nn::grl(z, lambda);
  out.bin_hidden_input = nn::add_bias(nn::matmul(za, g.parameter(*a1_w_)), g.parameter(*a1_b_));
  Var a = nn::dropout(nn::relu(out.bin_hidden_input), p, train, rng);
  out.bin_logits = nn::add_bias(nn::matmul(a, g.parameter(*a2_w_)), g.parameter(*a2_b_));
  if (!size_targets.empty()) out.size_loss = nn::cross_entropy(out.size_logits, size_targets);
  if (!bin_targets.empty()) out.bin_loss = nn::cross_entropy(out.bin_logits, bin_targets);
  if (out.size_loss.valid() && out.bin_loss.valid()) out.loss = nn::add(out.size_loss, out.bin_loss);
  return out;
}

Matrix ScrubberModel::project(const Matrix& x) const {
  Matrix z = x * proj_w_->value;
  z.rowwise() += proj_b_->value.row(0);
  return z;
}

std::pair<Eigen::VectorXi, Eigen::VectorXi> ScrubberModel::predict(const Matrix& x) const {
  Graph g;
  std::mt19937_64 unused(0);
  const auto out = forward(g, x, {}, {}, 0.0, false, unused);
  Eigen::VectorXi size(x.rows());
  Eigen::VectorXi bin(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index arg = 0;
    out.size_logits.value().row(i).maxCoeff(&arg);
    size(i) = static_cast<int>(arg);
    out.bin_logits.value().row(i).maxCoeff(&arg);
    bin(i) = static_cast<int>(arg);
  }
  return {size, bin};
}

std::vector<Parameter*> ScrubberModel::parameters() const {
  std::vector<Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ScrubberModel::projection_parameters() const { return {proj_w_, proj_b_}; }
std::vector<Parameter*> ScrubberModel::size_head_parameters() const { return {c1_w_, c1_b_, c2_w_, c2_b_}; }
std::vector<Parameter*> ScrubberModel::adversary_parameters() const { return {a1_w_, a1_b_, a2_w_, a2_b_}; }

namespace {

Matrix gather(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

double agreement(const Eigen::VectorXi& a, const std::vector<int>& b) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < b.size(); ++i) hits += a(static_cast<Eigen::Index>(i)) == b[i] ? 1 : 0;
  return b.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(b.size());
}

}  // namespace

RunRecord train_scrubber(const FoldSpec& fold, const Lexicon& lexicon, const FeatureBank& bank, Condition condition,
                         const ScrubberConfig& config, std::uint64_t seed, int run) {
  config.validate();
  fold.validate(lexicon);
  if (bank.language.size() != lexicon.size()) throw DataError("feature bank does not match the lexicon");

  std::vector<int> train_rows;
  std::vector<int> train_size;
  std::vector<int> train_bin;
  for (std::size_t i = 0; i < bank.language.size(); ++i) {
    auto it = fold.labels.find(bank.language[i]);
    if (it == fold.labels.end()) continue;
    train_rows.push_back(static_cast<int>(i));
    train_size.push_back(bank.size(static_cast<Eigen::Index>(i)));
    train_bin.push_back(it->second);
  }
  const auto& test_rows = bank.rows_of.at(fold.target);
  std::vector<int> test_size;
  for (int r : test_rows) test_size.push_back(bank.size(r));
  const Matrix X = gather(bank.features, train_rows);
  const Matrix X_test = gather(bank.features, test_rows);

  ScrubberModel model(static_cast<int>(X.cols()), fold.num_classes, config, derive_seed(seed, "scrubber-init"));
  nn::Adam adam(model.parameters(), config.adam);
  std::mt19937_64 rng(derive_seed(seed, "scrubber-train"));

  RunRecord record;
  record.target = fold.target;
  record.condition = condition;
  record.run = run;
  record.seed = seed;
  std::vector<int> order(train_rows.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.schedule.total_epochs; ++epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    m.lambda = condition == Condition::baseline ? 0.0 : lambda_at(config.schedule, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double size_loss = 0.0;
    double bin_loss = 0.0;
    for (std::size_t s = 0; s < order.size(); s += bs) {
      const std::size_t e = std::min(order.size(), s + bs);
      std::vector<int> rows;
      std::vector<int> ys;
      std::vector<int> yb;
      for (std::size_t i = s; i < e; ++i) {
        rows.push_back(order[i]);
        ys.push_back(train_size[static_cast<std::size_t>(order[i])]);
        yb.push_back(train_bin[static_cast<std::size_t>(order[i])]);
      }
      Graph g;
      const auto out = model.forward(g, gather(X, rows), ys, yb, m.lambda, true, rng);
      adam.zero_grad();
      g.backward(out.loss);
      adam.step();
      size_loss += out.size_loss.value()(0, 0) * static_cast<double>(rows.size());
      bin_loss += out.bin_loss.value()(0, 0) * static_cast<double>(rows.size());
    }
    m.size_loss = size_loss / static_cast<double>(order.size());
    m.bin_loss = bin_loss / static_cast<double>(order.size());
    const auto [size_pred, bin_pred] = model.predict(X);
    m.train_size_accuracy = agreement(size_pred, train_size);
    m.train_bin_accuracy = agreement(bin_pred, train_bin);
    m.test_size_accuracy = agreement(model.predict(X_test).first, test_size);
    record.epochs.push_back(m);
  }
  return record;
}

RunRecord train_scrubber(const FoldSpec& fold, const Lexicon& lexicon, const nn::TransformerEncoder& encoder,
                         Condition condition, const ScrubberConfig& config, std::uint64_t seed, int run) {
  if (!encoder.frozen()) throw Error("the scrubber needs a frozen encoder");
  return train_scrubber(fold, lexicon, FeatureBank::build(lexicon, encoder), condition, config, seed, run);
}

int select_epoch(const RunRecord& record, Condition condition, double chance_bin) {
  const auto& ep = record.epochs;
  constexpr double tol = 1e-12;
  if (condition == Condition::adversarial) {
    if (static_cast<int>(ep.size()) < kFirstAdversarialEpoch) {
      throw DataError("epoch selection needs at least " + std::to_string(kFirstAdversarialEpoch) + " epochs");
    }
    auto pick = [&](bool constrained) {
      int best = -1;
      double best_gap = 0.0;
      for (std::size_t i = kFirstAdversarialEpoch - 1; i < ep.size(); ++i) {
        if (constrained && ep[i].train_bin_accuracy < chance_bin - tol) continue;
        const double gap = ep[i].train_size_accuracy - ep[i].train_bin_accuracy;
        if (best < 0 || gap > best_gap) {
          best = ep[i].epoch;
          best_gap = gap;
        }
      }
      return best;
    };
    const int constrained = pick(true);
    return constrained >= 0 ? constrained : pick(false);
  }
  if (static_cast<int>(ep.size()) <= kLastExcludedBaselineEpoch) {
    throw DataError("baseline epoch selection needs more than " + std::to_string(kLastExcludedBaselineEpoch) + " epochs");
  }
  int best = -1;
  double best_bin = 0.0;
  for (std::size_t i = kLastExcludedBaselineEpoch; i < ep.size(); ++i) {
    if (best < 0 || ep[i].train_bin_accuracy > best_bin) {
      best = ep[i].epoch;
      best_bin = ep[i].train_bin_accuracy;
    }
  }
  return best;
}

const ConditionSummary& ExperimentReport::summary(Condition c) const {
  for (const auto& s : conditions) {
    if (s.condition == c) return s;
  }
  throw DataError("report has no '" + std::string(to_string(c)) + "' condition");
}

namespace {

std::optional<stats::TestResult> try_test(const std::vector<double>& values, double mu, stats::Tail tail) {
  try {
    return stats::one_sample_t(stats::to_vector(values), mu, tail);
  } catch (const DegenerateSample&) {
    return std::nullopt;
  }
}

std::map<std::string, std::string> suite_echo(const SuiteConfig& config) {
  auto echo = config.scrubber.to_map();
  echo["suite.runs"] = std::to_string(config.runs);
  echo["suite.seed"] = std::to_string(config.seed);
  std::string conds;
  for (auto c : config.conditions) conds += (conds.empty() ? "" : ",") + std::string(to_string(c));
  echo["suite.conditions"] = conds;
  return echo;
}

}  // namespace

ExperimentReport summarize_runs(const Lexicon& lexicon, std::vector<RunRecord> records, const SuiteConfig& config) {
  ExperimentReport report;
  report.config = suite_echo(config);
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.condition, a.target, a.run) < std::tie(b.condition, b.target, b.run);
  });
  const double bin_chance = 1.0 / kNumBins;
  std::map<std::pair<Condition, std::string>, LanguageResult> grouped;
  for (const auto& r : records) {
    const int e = select_epoch(r, r.condition);
    const auto& m = r.epochs[static_cast<std::size_t>(e - 1)];
    report.runs.push_back(RunSummary{r.target, r.condition, r.run, r.seed, e, m.test_size_accuracy,
                                     m.train_size_accuracy, m.train_bin_accuracy});
    auto& lr = grouped[{r.condition, r.target}];
    lr.target = r.target;
    lr.family = lexicon.has_language(r.target) ? lexicon.family_of(r.target) : "";
    lr.condition = r.condition;
    lr.size_accuracy.push_back(m.test_size_accuracy);
    lr.bin_accuracy.push_back(m.train_bin_accuracy);
  }
  std::map<Condition, ConditionSummary> summaries;
  for (auto& [key, lr] : grouped) {
    lr.mean_size = stats::sample_mean(stats::to_vector(lr.size_accuracy));
    lr.mean_bin = stats::sample_mean(stats::to_vector(lr.bin_accuracy));
    lr.size_test = try_test(lr.size_accuracy, 0.5, stats::Tail::one_sided_greater);
    lr.bin_test = try_test(lr.bin_accuracy, bin_chance, stats::Tail::two_sided);
    lr.size_above_chance = lr.size_test && lr.size_test->p < 0.05;
    lr.bin_at_chance_01 = lr.bin_test && lr.bin_test->p >= 0.01;
    lr.bin_at_chance_05 = lr.bin_test && lr.bin_test->p >= 0.05;
    auto& s = summaries[lr.condition];
    s.condition = lr.condition;
    s.languages += 1;
    s.mean_size += lr.mean_size;
    s.mean_bin += lr.mean_bin;
    s.size_above_chance += lr.size_above_chance ? 1 : 0;
    s.bin_at_chance_01 += lr.bin_at_chance_01 ? 1 : 0;
    s.bin_at_chance_05 += lr.bin_at_chance_05 ? 1 : 0;
    s.both_01 += lr.size_above_chance && lr.bin_at_chance_01 ? 1 : 0;
    s.both_05 += lr.size_above_chance && lr.bin_at_chance_05 ? 1 : 0;
    if (!lr.size_test || !lr.bin_test) s.not_tested.push_back(lr.target);
    report.languages.push_back(lr);
  }
  for (auto& [c, s] : summaries) {
    std::vector<double> means;
    for (const auto& lr : report.languages) {
      if (lr.condition == c) means.push_back(lr.mean_size);
    }
    s.mean_size /= static_cast<double>(s.languages);
    s.mean_bin /= static_cast<double>(s.languages);
    s.size_vs_chance = try_test(means, 0.5, stats::Tail::one_sided_greater);
    report.conditions.push_back(s);
  }
  if (summaries.contains(Condition::adversarial) && summaries.contains(Condition::baseline)) {
    std::map<std::string, double> adv;
    std::map<std::string, double> base;
    for (const auto& lr : report.languages) (lr.condition == Condition::adversarial ? adv : base)[lr.target] = lr.mean_size;
    std::vector<double> a;
    std::vector<double> b;
    for (const auto& [t, v] : adv) {
      if (!base.contains(t)) continue;
      a.push_back(v);
      b.push_back(base.at(t));
    }
    try {
      report.paired_size = stats::paired_t(stats::to_vector(a), stats::to_vector(b));
    } catch (const DegenerateSample&) {
    }
  }
  report.records = std::move(records);
  return report;
}

ExperimentReport evaluate_suite(const Lexicon& lexicon, const std::vector<TertileBinning>& binnings,
                                const FeatureBank& bank, const SuiteConfig& config) {
  config.scrubber.validate();
  if (config.runs < 1) throw ConfigError("suite needs at least one run per condition");
  if (config.conditions.empty()) throw ConfigError("suite needs at least one condition");
  std::vector<FoldSpec> folds;
  for (const auto& b : binnings) {
    folds.push_back(FoldSpec::from_binning(b));
    folds.back().validate(lexicon);
  }
  const std::size_t per_fold = config.conditions.size() * static_cast<std::size_t>(config.runs);
  std::vector<RunRecord> records(folds.size() * per_fold);
  parallel_for(records.size(), config.jobs, [&](std::size_t k) {
    const auto& fold = folds[k / per_fold];
    const auto cond = config.conditions[(k % per_fold) / static_cast<std::size_t>(config.runs)];
    const int run = static_cast<int>(k % static_cast<std::size_t>(config.runs));
    const auto seed = derive_seed(config.seed, "scrub:" + fold.target + ":" + std::string(to_string(cond)),
                                  static_cast<std::uint64_t>(run));
    records[k] = train_scrubber(fold, lexicon, bank, cond, config.scrubber, seed, run);
  });
  return summarize_runs(lexicon, std::move(records), config);
}

namespace {

json test_json(const std::optional<stats::TestResult>& t) {
  if (!t) return nullptr;
  return json{{"statistic", t->statistic}, {"df", t->df}, {"df2", t->df2}, {"p", t->p}, {"tail", std::string(to_string(t->tail))}};
}

std::optional<stats::TestResult> test_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  stats::TestResult t;
  t.statistic = j.at("statistic").get<double>();
  t.df = j.at("df").get<double>();
  t.df2 = j.at("df2").get<double>();
  t.p = j.at("p").get<double>();
  const auto tail = j.at("tail").get<std::string>();
  t.tail = tail == to_string(stats::Tail::two_sided) ? stats::Tail::two_sided : stats::Tail::one_sided_greater;
  return t;
}

}  // namespace

std::string report_to_json(const ExperimentReport& r, int indent) {
  json j;
  j["config"] = r.config;
  j["runs"] = json::array();
  for (const auto& s : r.runs) {
    j["runs"].push_back({{"target", s.target}, {"condition", std::string(to_string(s.condition))}, {"run", s.run},
                         {"seed", s.seed}, {"selected_epoch", s.selected_epoch},
                         {"test_size_accuracy", s.test_size_accuracy}, {"train_size_accuracy", s.train_size_accuracy},
                         {"train_bin_accuracy", s.train_bin_accuracy}});
  }
  j["languages"] = json::array();
  for (const auto& l : r.languages) {
    j["languages"].push_back({{"target", l.target}, {"family", l.family}, {"condition", std::string(to_string(l.condition))},
                              {"size_accuracy", l.size_accuracy}, {"bin_accuracy", l.bin_accuracy},
                              {"mean_size", l.mean_size}, {"mean_bin", l.mean_bin}, {"size_test", test_json(l.size_test)},
                              {"bin_test", test_json(l.bin_test)}, {"size_above_chance", l.size_above_chance},
                              {"bin_at_chance_01", l.bin_at_chance_01}, {"bin_at_chance_05", l.bin_at_chance_05}});
  }
  j["conditions"] = json::array();
  for (const auto& c : r.conditions) {
    j["conditions"].push_back({{"condition", std::string(to_string(c.condition))}, {"mean_size", c.mean_size},
                               {"mean_bin", c.mean_bin}, {"languages", c.languages},
                               {"size_above_chance", c.size_above_chance}, {"bin_at_chance_01", c.bin_at_chance_01},
                               {"bin_at_chance_05", c.bin_at_chance_05}, {"both_01", c.both_01}, {"both_05", c.both_05},
                               {"not_tested", c.not_tested}, {"size_vs_chance", test_json(c.size_vs_chance)}});
  }
  j["paired_size"] = test_json(r.paired_size);
  j["records"] = json::array();
  for (const auto& rec : r.records) {
    json epochs = json::array();
    for (const auto& e : rec.epochs) {
      epochs.push_back({{"epoch", e.epoch}, {"lambda", e.lambda}, {"train_size_accuracy", e.train_size_accuracy},
                        {"train_bin_accuracy", e.train_bin_accuracy}, {"test_size_accuracy", e.test_size_accuracy},
                        {"size_loss", e.size_loss}, {"bin_loss", e.bin_loss}});
    }
    j["records"].push_back({{"target", rec.target}, {"condition", std::string(to_string(rec.condition))},
                            {"run", rec.run}, {"seed", rec.seed}, {"epochs", epochs}});
  }
  return j.dump(indent) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("experiment report: ") + e.what());
  }
  try {
    ExperimentReport r;
    r.config = j.at("config").get<std::map<std::string, std::string>>();
    for (const auto& s : j.at("runs")) {
      r.runs.push_back(RunSummary{s.at("target").get<std::string>(), parse_condition(s.at("condition").get<std::string>()),
                                  s.at("run").get<int>(), s.at("seed").get<std::uint64_t>(),
                                  s.at("selected_epoch").get<int>(), s.at("test_size_accuracy").get<double>(),
                                  s.at("train_size_accuracy").get<double>(), s.at("train_bin_accuracy").get<double>()});
    }
    for (const auto& l : j.at("languages")) {
      LanguageResult lr;
      lr.target = l.at("target").get<std::string>();
      lr.family = l.at("family").get<std::string>();
      lr.condition = parse_condition(l.at("condition").get<std::string>());
      lr.size_accuracy = l.at("size_accuracy").get<std::vector<double>>();
      lr.bin_accuracy = l.at("bin_accuracy").get<std::vector<double>>();
      lr.mean_size = l.at("mean_size").get<double>();
      lr.mean_bin = l.at("mean_bin").get<double>();
      lr.size_test = test_from(l.at("size_test"));
      lr.bin_test = test_from(l.at("bin_test"));
      lr.size_above_chance = l.at("size_above_chance").get<bool>();
      lr.bin_at_chance_01 = l.at("bin_at_chance_01").get<bool>();
      lr.bin_at_chance_05 = l.at("bin_at_chance_05").get<bool>();
      r.languages.push_back(std::move(lr));
    }
    for (const auto& c : j.at("conditions")) {
      ConditionSummary s;
      s.condition = parse_condition(c.at("condition").get<std::string>());
      s.mean_size = c.at("mean_size").get<double>();
      s.mean_bin = c.at("mean_bin").get<double>();
      s.languages = c.at("languages").get<std::size_t>();
      s.size_above_chance = c.at("size_above_chance").get<std::size_t>();
      s.bin_at_chance_01 = c.at("bin_at_chance_01").get<std::size_t>();
      s.bin_at_chance_05 = c.at("bin_at_chance_05").get<std::size_t>();
      s.both_01 = c.at("both_01").get<std::size_t>();
      s.both_05 = c.at("both_05").get<std::size_t>();
      s.not_tested = c.at("not_tested").get<std::vector<std::string>>();
      s.size_vs_chance = test_from(c.at("size_vs_chance"));
      r.conditions.push_back(std::move(s));
    }
    r.paired_size = test_from(j.at("paired_size"));
    for (const auto& rec : j.at("records")) {
      RunRecord rr;
      rr.target = rec.at("target").get<std::string>();
      rr.condition = parse_condition(rec.at("condition").get<std::string>());
      rr.run = rec.at("run").get<int>();
      rr.seed = rec.at("seed").get<std::uint64_t>();
      for (const auto& e : rec.at("epochs")) {
        rr.epochs.push_back(EpochMetrics{e.at("epoch").get<int>(), e.at("lambda").get<double>(),
                                         e.at("train_size_accuracy").get<double>(),
                                         e.at("train_bin_accuracy").get<double>(),
                                         e.at("test_size_accuracy").get<double>(), e.at("size_loss").get<double>(),
                                         e.at("bin_loss").get<double>()});
      }
      r.records.push_back(std::move(rr));
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("experiment report: ") + e.what());
  }
}

std::string curves_tsv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "condition\ttarget\trun\tepoch\tlambda\ttrain_size_accuracy\ttrain_bin_accuracy\ttest_size_accuracy\tsize_loss\tbin_loss\n";
  char buf[256];
  for (const auto& r : report.records) {
    for (const auto& e : r.epochs) {
      std::snprintf(buf, sizeof buf, "%s\t%s\t%d\t%d\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\n",
                    std::string(to_string(r.condition)).c_str(), r.target.c_str(), r.run, e.epoch, e.lambda,
                    e.train_size_accuracy, e.train_bin_accuracy, e.test_size_accuracy, e.size_loss, e.bin_loss);
      out << buf;
    }
  }
  return out.str();
}

std::string mean_curves_tsv(const ExperimentReport& report) {
  struct Acc {
    std::vector<double> size, bin, test;
  };
  std::map<std::pair<Condition, int>, Acc> acc;
  for (const auto& r : report.records) {
    for (const auto& e : r.epochs) {
      auto& a = acc[{r.condition, e.epoch}];
      a.size.push_back(e.train_size_accuracy);
      a.bin.push_back(e.train_bin_accuracy);
      a.test.push_back(e.test_size_accuracy);
    }
  }
  auto sd = [](const std::vector<double>& v) { return v.size() < 2 ? 0.0 : stats::sample_sd(stats::to_vector(v)); };
  auto mean = [](const std::vector<double>& v) { return stats::sample_mean(stats::to_vector(v)); };
  std::ostringstream out;
  out << "condition\tepoch\ttest_size_mean\ttest_size_sd\ttrain_bin_mean\ttrain_bin_sd\ttrain_size_mean\ttrain_size_sd\n";
  char buf[256];
  for (const auto& [key, a] : acc) {
    std::snprintf(buf, sizeof buf, "%s\t%d\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\n",
                  std::string(to_string(key.first)).c_str(), key.second, mean(a.test), sd(a.test), mean(a.bin),
                  sd(a.bin), mean(a.size), sd(a.size));
    out << buf;
  }
  return out.str();
}

std::string format_suite(const ExperimentReport& report) {
  std::ostringstream out;
  char buf[256];
  out << "target\tfamily\tcondition\tsize%\tbin%\tsize_p\tbin_p\tflags\n";
  for (const auto& l : report.languages) {
    std::string flags;
    if (!l.size_test || !l.bin_test) flags = "not tested";
    else {
      if (l.size_above_chance) flags += "size>chance ";
      if (l.bin_at_chance_05) flags += "bin@chance(.05)";
      else if (l.bin_at_chance_01) flags += "bin@chance(.01)";
    }
    std::snprintf(buf, sizeof buf, "%s\t%s\t%s\t%.1f\t%.1f\t%s\t%s\t%s\n", l.target.c_str(), l.family.c_str(),
                  std::string(to_string(l.condition)).c_str(), 100 * l.mean_size, 100 * l.mean_bin,
                  l.size_test ? std::to_string(l.size_test->p).c_str() : "n/a",
                  l.bin_test ? std::to_string(l.bin_test->p).c_str() : "n/a", flags.c_str());
    out << buf;
  }
  for (const auto& c : report.conditions) {
    std::snprintf(buf, sizeof buf,
                  "%s: size %.1f%%, bin %.1f%%; size above chance in %zu/%zu; both criteria %zu (p>=0.05) / %zu "
                  "(p>=0.01); not tested %zu\n",
                  std::string(to_string(c.condition)).c_str(), 100 * c.mean_size, 100 * c.mean_bin,
                  c.size_above_chance, c.languages, c.both_05, c.both_01, c.not_tested.size());
    out << buf;
  }
  if (report.paired_size) {
    std::snprintf(buf, sizeof buf, "paired t (adversarial vs baseline size): t(%.0f) = %.3f, p = %.4f\n",
                  report.paired_size->df, report.paired_size->statistic, report.paired_size->p);
    out << buf;
  }
  return out.str();
}

}  // namespace sizesym
