#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sizesym/adversarial.hpp"
#include "sizesym/baselines.hpp"
#include "sizesym/config.hpp"
#include "sizesym/corpus.hpp"
#include "sizesym/error.hpp"
#include "sizesym/features.hpp"
#include "sizesym/ipa.hpp"
#include "sizesym/nn/encoder.hpp"
#include "sizesym/report.hpp"
#include "sizesym/synthlab.hpp"
#include "sizesym/typology.hpp"

namespace fs = std::filesystem;
using namespace sizesym;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
  std::vector<std::string> overrides;
  std::string lexicon;
  std::string swadesh;
  std::string distances;
  std::string corpus;
  std::string encoder;
  std::string input;
  std::vector<std::string> words;
  std::string conditions;
};

class Context {
 public:
  explicit Context(const Options& o) {
    if (!o.config_path.empty()) settings_ = Settings::load(o.config_path);
    for (const auto& kv : o.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
      settings_.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) settings_.set("seed", std::to_string(*o.seed));
    if (o.jobs) settings_.set("jobs", std::to_string(*o.jobs));
    if (!o.out.empty()) settings_.set("out", o.out);
    auto path_flag = [&](const std::string& key, const std::string& value) {
      if (!value.empty()) settings_.set(key, value);
    };
    path_flag("data.lexicon", o.lexicon);
    path_flag("data.swadesh", o.swadesh);
    path_flag("data.distances", o.distances);
    path_flag("data.corpus", o.corpus);
    path_flag("data.encoder", o.encoder);
    seed = settings_.get_uint("seed", 0);
    jobs = settings_.get_int("jobs", 1);
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    out = settings_.get_string("out", "sizesym-out");
  }

  const Settings& settings() const { return settings_; }

  std::string data_path(const std::string& key, bool required = true) const {
    auto v = settings_.get(key);
    if (!v || v->empty()) {
      if (required) throw ConfigError("missing data path '" + key + "' (set it in the config or pass the flag)");
      return "";
    }
    fs::path p(*v);
    if (p.is_relative() && !fs::exists(p)) {
      if (const char* dir = std::getenv("SIZESYM_DATA_DIR")) p = fs::path(dir) / p;
    }
    if (!fs::exists(p)) throw ConfigError("data path for '" + key + "' does not exist: " + p.string());
    return p.string();
  }

  std::string out_path(const std::string& name) const {
    fs::create_directories(fs::path(out) / fs::path(name).parent_path());
    return (fs::path(out) / name).string();
  }

  std::map<std::string, std::string> echo(const std::string& command) const {
    auto e = settings_.values();
    e["command"] = command;
    e["seed"] = std::to_string(seed);
    e.erase("jobs");
    e.erase("out");
    return e;
  }

  void write_echo(const std::string& command) const {
    nlohmann::json j = echo(command);
    write_file_atomic(out_path(command + ".config.json"), j.dump(2) + "\n");
  }

  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;

 private:
  Settings settings_;
};

TokenizerRules rules_for(const Context& ctx) {
  const auto path = ctx.settings().get_string("tokenizer.rules", "");
  return path.empty() ? default_rules() : load_rules(ctx.data_path("tokenizer.rules"));
}

Lexicon lexicon_for(const Context& ctx) {
  const auto path = ctx.data_path("data.lexicon");
  const auto format = ctx.settings().get_string("data.lexicon_format", path.ends_with(".csv") ? "csv" : "tsv");
  if (format != "csv" && format != "tsv") throw ConfigError("data.lexicon_format must be tsv or csv");
  Lexicon lex = load_lexicon(path, format == "csv" ? LexiconFormat::csv : LexiconFormat::tsv);
  for (const auto& w : lex.warnings()) std::cerr << "warning: " << w << '\n';
  return lex;
}

DistanceMatrix distances_for(const Context& ctx) {
  if (ctx.settings().contains("data.distances")) return load_distance_matrix(ctx.data_path("data.distances"));
  const auto lists = load_swadesh(ctx.data_path("data.swadesh"));
  return distance_matrix(lists, parse_measure(ctx.settings().get_string("typology.measure", "ldn")),
                         parse_normalization(ctx.settings().get_string("typology.normalization", "max")), ctx.jobs);
}

std::vector<TertileBinning> binnings_for(const Lexicon& lexicon, const DistanceMatrix& matrix) {
  std::vector<TertileBinning> out;
  for (const auto& lang : lexicon.languages()) {
    if (!matrix.contains(lang)) throw DataError("language '" + lang + "' missing from the distance matrix");
  }
  std::vector<std::string> keep = lexicon.languages();
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j) sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = matrix(keep[i], keep[j]);
  }
  const DistanceMatrix restricted(keep, sub);
  for (const auto& lang : keep) out.push_back(bin_tertiles(lang, restricted));
  return out;
}

BaselineConfig baseline_config(const Context& ctx) {
  BaselineConfig c;
  c.seed = ctx.seed;
  c.jobs = ctx.jobs;
  c.logistic.l2 = ctx.settings().get_double("baselines.l2", c.logistic.l2);
  c.logistic.max_iterations = ctx.settings().get_int("baselines.max_iterations", c.logistic.max_iterations);
  c.tree.max_depth = ctx.settings().get_int("baselines.max_depth", c.tree.max_depth);
  c.tree.min_samples_split = ctx.settings().get_int("baselines.min_samples_split", c.tree.min_samples_split);
  return c;
}

SegmentSets segment_sets_for(const Context& ctx) {
  SegmentSets sets = default_segment_sets();
  auto load = [&](const std::string& key, std::set<std::string>& target) {
    if (ctx.settings().contains(key)) target = load_segment_set(ctx.data_path(key));
  };
  load("baselines.vowels", sets.vowels);
  load("baselines.plosives", sets.plosives);
  load("baselines.nasals", sets.nasals);
  load("baselines.high_frequency", sets.high_frequency);
  return sets;
}

nn::EncoderConfig encoder_config(const Context& ctx) {
  auto section = ctx.settings().section("encoder");
  return nn::EncoderConfig::from_map(section);
}

nn::PretrainConfig pretrain_config(const Context& ctx) {
  nn::PretrainConfig c;
  const auto& s = ctx.settings();
  c.seed = ctx.seed;
  c.epochs = s.get_int("pretrain.epochs", c.epochs);
  c.batch_size = s.get_int("pretrain.batch_size", c.batch_size);
  c.adam.learning_rate = s.get_double("pretrain.learning_rate", c.adam.learning_rate);
  c.masking.mask_probability = s.get_double("pretrain.mask_probability", c.masking.mask_probability);
  c.masking.replace_with_mask = s.get_double("pretrain.replace_with_mask", c.masking.replace_with_mask);
  c.masking.replace_with_random = s.get_double("pretrain.replace_with_random", c.masking.replace_with_random);
  c.masking.keep = s.get_double("pretrain.keep", c.masking.keep);
  c.eval_words = s.get_uint("pretrain.eval_words", c.eval_words);
  return c;
}

SuiteConfig suite_config(const Context& ctx) {
  SuiteConfig c;
  const auto& s = ctx.settings();
  c.seed = ctx.seed;
  c.jobs = ctx.jobs;
  c.runs = s.get_int("scrub.runs", c.runs);
  c.scrubber.projection = s.get_int("scrub.projection", c.scrubber.projection);
  c.scrubber.head_hidden = s.get_int("scrub.head_hidden", c.scrubber.head_hidden);
  c.scrubber.dropout = s.get_double("scrub.dropout", c.scrubber.dropout);
  c.scrubber.batch_size = s.get_int("scrub.batch_size", c.scrubber.batch_size);
  c.scrubber.adam.learning_rate = s.get_double("scrub.learning_rate", c.scrubber.adam.learning_rate);
  c.scrubber.schedule.lambda_max = s.get_double("scrub.lambda_max", c.scrubber.schedule.lambda_max);
  c.scrubber.schedule.total_epochs = s.get_int("scrub.epochs", c.scrubber.schedule.total_epochs);
  if (auto conds = s.get("scrub.conditions")) {
    c.conditions.clear();
    std::stringstream in(*conds);
    for (std::string item; std::getline(in, item, ',');) c.conditions.push_back(parse_condition(item));
  }
  c.scrubber.validate();
  return c;
}

int cmd_tokenize(const Context& ctx, const Options& o) {
  const auto rules = rules_for(ctx);
  std::vector<std::string> inputs = o.words;
  if (!o.input.empty()) {
    std::istringstream in(read_file(o.input));
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) inputs.push_back(line);
    }
  }
  if (inputs.empty()) throw ConfigError("tokenize: give IPA strings or --input FILE");
  std::string tsv = "ipa\tsegments\tcategories\n";
  for (const auto& s : inputs) {
    const auto tokens = tokenize(s, rules);
    std::string segs;
    std::string cats;
    for (const auto& t : tokens) {
      segs += (segs.empty() ? "" : " ") + t.text;
      cats += (cats.empty() ? "" : " ") + std::string(to_string(t.category));
    }
    tsv += s + "\t" + segs + "\t" + cats + "\n";
  }
  std::cout << tsv;
  write_file_atomic(ctx.out_path("tokens.tsv"), tsv);
  ctx.write_echo("tokenize");
  return 0;
}

int cmd_featurize(const Context& ctx, const Options&) {
  const auto rules = rules_for(ctx);
  const Lexicon lex = lexicon_for(ctx);
  const auto vocab = build_vocabulary(lex.entries(), rules);
  const Eigen::MatrixXd X = feature_matrix(lex.entries(), vocab);
  std::ostringstream out;
  out << "language\tlemma\tsize";
  for (const auto& s : vocab.segments()) out << '\t' << s;
  out << '\n';
  for (std::size_t i = 0; i < lex.size(); ++i) {
    const auto& e = lex.entries()[i];
    out << e.language << '\t' << e.lemma << '\t' << to_string(e.size);
    for (Eigen::Index c = 0; c < X.cols(); ++c) out << '\t' << static_cast<int>(X(static_cast<Eigen::Index>(i), c));
    out << '\n';
  }
  write_file_atomic(ctx.out_path("features.tsv"), out.str());
  ctx.write_echo("featurize");
  std::cout << lex.size() << " words, " << vocab.size() << " segments\n";
  return 0;
}

int cmd_distances(const Context& ctx, const Options&) {
  const auto matrix = distances_for(ctx);
  save_distance_matrix(matrix, ctx.out_path("distances.tsv"));
  std::string bins = "target\tlanguage\tbin\n";
  for (const auto& lang : matrix.languages()) {
    const auto b = bin_tertiles(lang, matrix);
    for (int k = 0; k < kNumBins; ++k) {
      for (const auto& other : b.bins[k]) bins += lang + "\t" + other + "\t" + std::string(to_string(static_cast<SimilarityBin>(k))) + "\n";
    }
  }
  write_file_atomic(ctx.out_path("bins.tsv"), bins);
  ctx.write_echo("distances");
  std::cout << matrix.languages().size() << " languages\n";
  return 0;
}

int cmd_baselines(const Context& ctx, const Options&) {
  const Lexicon lex = lexicon_for(ctx);
  const auto binnings = binnings_for(lex, distances_for(ctx));
  const auto config = baseline_config(ctx);
  const auto rows = run_ablations(lex, binnings, {AblationKind::none}, config, segment_sets_for(ctx));
  const auto importance = importance_report(rows[0].logistic, rows[0].tree);
  write_file_atomic(ctx.out_path("baselines.json"), baselines_to_json(rows, &importance, ctx.echo("baselines")));
  write_file_atomic(ctx.out_path("cells.tsv"), cells_tsv({&rows[0].logistic, &rows[0].tree}));
  const auto table = format_bin_table(rows[0].logistic, rows[0].tree);
  write_file_atomic(ctx.out_path("table_bins.txt"), table);
  std::cout << table;
  return 0;
}

int cmd_ablate(const Context& ctx, const Options& o) {
  const Lexicon lex = lexicon_for(ctx);
  const auto binnings = binnings_for(lex, distances_for(ctx));
  std::vector<AblationKind> kinds;
  const std::string list = !o.conditions.empty() ? o.conditions : ctx.settings().get_string("baselines.ablations", "");
  if (list.empty()) {
    kinds.assign(kAllAblations.begin(), kAllAblations.end());
  } else {
    std::stringstream in(list);
    for (std::string item; std::getline(in, item, ',');) kinds.push_back(parse_ablation_kind(item));
  }
  const auto rows = run_ablations(lex, binnings, kinds, baseline_config(ctx), segment_sets_for(ctx));
  write_file_atomic(ctx.out_path("ablations.json"), baselines_to_json(rows, nullptr, ctx.echo("ablate")));
  std::vector<const BinAccuracyTable*> tables;
  for (const auto& r : rows) {
    tables.push_back(&r.logistic);
    tables.push_back(&r.tree);
  }
  write_file_atomic(ctx.out_path("ablation_cells.tsv"), cells_tsv(tables));
  const auto table = format_ablation_table(rows);
  write_file_atomic(ctx.out_path("table_ablations.txt"), table);
  std::cout << table;
  return 0;
}

int cmd_pretrain(const Context& ctx, const Options&) {
  const auto corpus = load_pretrain_corpus(ctx.data_path("data.corpus"));
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << '\n';
  std::vector<std::vector<std::string>> words;
  for (const auto& item : corpus.items) words.push_back(segment_strings(item.ipa));
  const auto config = encoder_config(ctx);
  auto vocab = nn::build_token_vocabulary(words, config.vocab_size);
  nn::TransformerEncoder encoder(config, vocab, ctx.seed);
  const auto pcfg = pretrain_config(ctx);
  const auto report = nn::mlm_pretrain(encoder, words, pcfg);
  save_checkpoint(encoder.to_checkpoint(ctx.seed, pcfg.epochs), ctx.out_path("encoder.ckpt"));
  nn::save_vocabulary(encoder.vocabulary(), ctx.out_path("vocabulary.tsv"));
  nlohmann::json j;
  j["config"] = ctx.echo("pretrain");
  j["parameters"] = encoder.parameter_count();
  j["vocabulary_size"] = encoder.vocabulary().size();
  j["initial"] = {{"loss", report.initial.loss}, {"accuracy", report.initial.accuracy}, {"positions", report.initial.positions}};
  j["final"] = {{"loss", report.final.loss}, {"accuracy", report.final.accuracy}, {"positions", report.final.positions}};
  j["epoch_train_loss"] = report.epoch_train_loss;
  j["chance_accuracy"] = report.chance_accuracy;
  j["train_words"] = report.train_words;
  j["eval_words"] = report.eval_words;
  j["skipped"] = report.skipped;
  j["steps"] = report.steps;
  write_file_atomic(ctx.out_path("pretrain.json"), j.dump(2) + "\n");
  std::printf("masked-token loss %.4f -> %.4f, top-1 %.3f -> %.3f (chance %.3f)\n", report.initial.loss,
              report.final.loss, report.initial.accuracy, report.final.accuracy, report.chance_accuracy);
  return 0;
}

int cmd_scrub(const Context& ctx, const Options&) {
  const Lexicon lex = lexicon_for(ctx);
  const auto binnings = binnings_for(lex, distances_for(ctx));
  const auto ckpt = load_checkpoint(ctx.data_path("data.encoder"));
  const auto encoder = nn::TransformerEncoder::from_checkpoint(ckpt);
  if (!encoder.frozen()) throw ConfigError("scrub needs a frozen (pretrained) encoder checkpoint");
  const auto bank = FeatureBank::build(lex, encoder);
  auto report = evaluate_suite(lex, binnings, bank, suite_config(ctx));
  for (const auto& [k, v] : ctx.echo("scrub")) report.config["run." + k] = v;
  write_file_atomic(ctx.out_path("scrub/report.json"), report_to_json(report));
  write_file_atomic(ctx.out_path("scrub/curves.tsv"), curves_tsv(report));
  write_file_atomic(ctx.out_path("scrub/mean_curves.tsv"), mean_curves_tsv(report));
  const auto text = format_suite(report);
  write_file_atomic(ctx.out_path("scrub/summary.txt"), text);
  std::cout << text;
  return 0;
}

int cmd_synth(const Context& ctx, const Options&) {
  auto values = ctx.settings().section("synth");
  values["seed"] = std::to_string(ctx.seed);
  const auto data = generate(SynthConfig::from_map(values));
  write_synth(data, ctx.out);
  std::printf("%zu languages, %zu words, %zu pretraining words; expected accuracy %.4f\n",
              data.lexicon.languages().size(), data.lexicon.size(), data.pretrain.items.size(),
              data.manifest.expected_accuracy);
  return 0;
}

int cmd_report(const Context& ctx, const Options&) {
  const auto text = render_report(ctx.out);
  write_file_atomic(ctx.out_path("report.txt"), text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Size sound-symbolism analysis pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "Key-value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Base random seed");
  app.add_option("--jobs", o.jobs, "Maximum concurrent jobs");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--set", o.overrides, "Override a config entry (section.key=value)")->allow_extra_args(false);

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Context&, const Options&);
  };
  const Sub subs[] = {
      {"tokenize", "Segment IPA strings", cmd_tokenize},
      {"featurize", "Bag-of-segments feature matrix", cmd_featurize},
      {"distances", "LDN/LDND distance matrix and tertile bins", cmd_distances},
      {"baselines", "Leave-one-language-out classifiers by similarity bin", cmd_baselines},
      {"ablate", "Feature ablations", cmd_ablate},
      {"pretrain", "Masked-LM encoder pretraining", cmd_pretrain},
      {"scrub", "Adversarial scrubber suite", cmd_scrub},
      {"synth", "Generate a synthetic dataset", cmd_synth},
      {"report", "Aggregate results into text tables", cmd_report},
  };
  std::map<CLI::App*, const Sub*> lookup;
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    lookup[sc] = &s;
    const std::string n = s.name;
    if (n == "tokenize") {
      sc->add_option("words", o.words, "IPA strings");
      sc->add_option("--input", o.input, "File with one IPA string per line")->check(CLI::ExistingFile);
    }
    if (n == "featurize" || n == "baselines" || n == "ablate" || n == "scrub") {
      sc->add_option("--lexicon", o.lexicon, "Lexicon TSV/CSV");
    }
    if (n == "distances" || n == "baselines" || n == "ablate" || n == "scrub") {
      sc->add_option("--swadesh", o.swadesh, "Swadesh lists TSV");
      sc->add_option("--distances", o.distances, "Precomputed distance matrix TSV");
    }
    if (n == "ablate") sc->add_option("--conditions", o.conditions, "Comma-separated ablation ids or names");
    if (n == "pretrain") sc->add_option("--corpus", o.corpus, "Pretraining word list");
    if (n == "scrub") sc->add_option("--encoder", o.encoder, "Frozen encoder checkpoint");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    const Context ctx(o);
    for (auto* sc : app.get_subcommands()) return lookup.at(sc)->run(ctx, o);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
