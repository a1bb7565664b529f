#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sizesym/corpus.hpp"
#include "sizesym/typology.hpp"

namespace sizesym {

std::vector<std::string> default_synth_pool();

/// Knobs for the synthetic lexicon generator. Segment probabilities for a
/// word of language L (family F) with label y are
///   p(s) = (1 - beta) * q_F(s) + beta * uniform(label set of y)(s)
///   q_F = (1 - gamma) * uniform(pool) + gamma * Dirichlet(dirichlet_alpha)
/// label_skew moves the share of small words per family through
/// 0.5 + skew, 0.5 - skew, 0.5 (family index mod 3), which ties labels to
/// family without any link between form and size when beta = 0.
struct SynthConfig {
  int families = 9;
  int languages_per_family = 3;
  int words_per_language = 30;  ///< split evenly between small and large unless label_skew > 0
  int min_length = 3;
  int max_length = 6;
  std::vector<std::string> pool = default_synth_pool();
  std::vector<std::string> small_segments{"i", "e"};
  std::vector<std::string> large_segments{"a", "o", "u"};
  double beta = 0.0;
  double gamma = 0.0;
  double dirichlet_alpha = 0.3;
  double label_skew = 0.0;
  int swadesh_concepts = 40;
  double mutation_rate = 0.2;  ///< per-segment replacement when a form is inherited
  std::size_t pretrain_words = 10000;
  std::uint64_t seed = 0;

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  /// Applies `key=value` entries (keys as in to_map) over the defaults.
  static SynthConfig from_map(const std::map<std::string, std::string>& values);
};

struct LanguageModel {
  std::string language;
  std::string family;
  std::vector<double> base;                  ///< q_F over the pool
  int small_words = 0;
  std::array<std::vector<double>, 2> label;  ///< p(s | small), p(s | large) over the pool
  double bayes_accuracy = 0.0;
};

struct SynthManifest {
  std::map<std::string, std::string> config;
  std::vector<std::string> pool;
  std::vector<LanguageModel> languages;
  double expected_accuracy = 0.0;

  std::string to_json() const;
};

struct SynthData {
  Lexicon lexicon;
  std::vector<SwadeshList> swadesh;
  PretrainCorpus pretrain;
  SynthManifest manifest;
};

/// Deterministic per seed; each language draws from its own derived stream.
SynthData generate(const SynthConfig& config);

/// Sampling distributions only (no words drawn).
SynthManifest build_manifest(const SynthConfig& config);

/// Bayes accuracy of the optimal bag-of-segments classifier for one language
/// with lengths uniform on [min_length, max_length].
/// Segments with equal probability under both labels are pooled, which leaves
/// the likelihood ratio unchanged; the rest is enumerated exactly.
double bayes_accuracy(const std::vector<double>& p_small, const std::vector<double>& p_large, int min_length,
                      int max_length, double prior_small = 0.5);

/// Mean per-language Bayes accuracy under the manifest's distributions.
double expected_accuracy(const SynthConfig& config);

/// Writes lexicon.tsv, swadesh.tsv, pretrain.tsv and manifest.json into dir.
void write_synth(const SynthData& data, const std::string& dir);

/// Gamma(shape, 1) via Marsaglia-Tsang on portable uniforms.
double sample_gamma(std::mt19937_64& rng, double shape);
std::vector<double> sample_dirichlet(std::mt19937_64& rng, std::size_t k, double alpha);

}  // namespace sizesym
