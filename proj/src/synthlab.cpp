#include "sizesym/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>

#include <json.hpp>

#include "sizesym/error.hpp"
#include "sizesym/nn/graph.hpp"
#include "sizesym/random.hpp"

namespace sizesym {

using nn::normal;
using nn::uniform01;

std::vector<std::string> default_synth_pool() {
  return {"p", "t", "k", "b", "d", "g", "m", "n", "ŋ", "s", "f", "h", "l", "r",
          "j", "w", "ʃ", "z", "v", "x", "i", "e", "a", "o", "u", "ɛ", "ɔ", "ə"};
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : " ") + s;
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int index_in(const std::vector<std::string>& pool, const std::string& s) {
  auto it = std::find(pool.begin(), pool.end(), s);
  if (it == pool.end()) throw ConfigError("synth: segment '" + s + "' is not in the pool");
  return static_cast<int>(it - pool.begin());
}

std::size_t draw(const std::vector<double>& p, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  for (std::size_t i = p.size(); i-- > 0;) {
    if (p[i] > 0.0) return i;
  }
  return 0;
}

int draw_length(const SynthConfig& c, std::mt19937_64& rng) {
  return c.min_length + static_cast<int>(rng() % static_cast<std::uint64_t>(c.max_length - c.min_length + 1));
}

std::vector<int> draw_word(const std::vector<double>& p, int length, std::mt19937_64& rng) {
  std::vector<int> w(static_cast<std::size_t>(length));
  for (auto& s : w) s = static_cast<int>(draw(p, rng));
  return w;
}

std::string spell(const std::vector<int>& word, const std::vector<std::string>& pool) {
  std::string out;
  for (int s : word) out += pool[static_cast<std::size_t>(s)];
  return out;
}

std::string two_digits(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", i);
  return buf;
}

std::string family_id(int f) { return "F" + two_digits(f + 1); }

// Small-word shares cycle through 0.5 + skew, 0.5 - skew, 0.5 by family.
int small_count(const SynthConfig& c, int family) {
  static constexpr int kSign[3] = {1, -1, 0};
  const double share = 0.5 + c.label_skew * kSign[family % 3];
  return static_cast<int>(std::lround(share * c.words_per_language));
}

std::string language_id(int f, int l) { return family_id(f) + "_" + std::string(1, static_cast<char>('a' + l)); }

// Enumerates count vectors over k informative categories plus one pooled
// category, accumulating max(pi P(w|small), (1 - pi) P(w|large)) for multisets of size n.
// log_s and log_l start at the log priors.
void enumerate(const std::vector<double>& ps, const std::vector<double>& pl, double other, std::size_t cat, int left,
               double log_coef, double log_s, double log_l, double& acc) {
  if (cat == ps.size()) {
    double ls = log_s;
    double ll = log_l;
    if (left > 0) {
      if (other <= 0.0) return;
      ls += left * std::log(other);
      ll += left * std::log(other);
    }
    const double coef = log_coef - std::lgamma(left + 1.0);
    acc += std::exp(coef + std::max(ls, ll));
    return;
  }
  for (int c = 0; c <= left; ++c) {
    if (c > 0 && ps[cat] <= 0.0 && pl[cat] <= 0.0) break;
    const double ls = c == 0 ? log_s : (ps[cat] > 0.0 ? log_s + c * std::log(ps[cat]) : -INFINITY);
    const double ll = c == 0 ? log_l : (pl[cat] > 0.0 ? log_l + c * std::log(pl[cat]) : -INFINITY);
    enumerate(ps, pl, other, cat + 1, left - c, log_coef - std::lgamma(c + 1.0), ls, ll, acc);
  }
}

}  // namespace

double sample_gamma(std::mt19937_64& rng, double shape) {
  if (!(shape > 0.0)) throw ConfigError("gamma shape must be positive");
  if (shape < 1.0) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = normal(rng, 1.0);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> sample_dirichlet(std::mt19937_64& rng, std::size_t k, double alpha) {
  std::vector<double> g(k);
  double total = 0.0;
  for (auto& x : g) {
    x = sample_gamma(rng, alpha);
    total += x;
  }
  if (!(total > 0.0)) {
    std::fill(g.begin(), g.end(), 1.0 / static_cast<double>(k));
    return g;
  }
  for (auto& x : g) x /= total;
  return g;
}

void SynthConfig::validate() const {
  if (families < 1 || languages_per_family < 1) throw ConfigError("synth: need at least one family and language");
  if (words_per_language < 2 || words_per_language % 2 != 0) throw ConfigError("synth: words_per_language must be even and >= 2");
  if (min_length < 1 || max_length < min_length) throw ConfigError("synth: invalid word length range");
  if (pool.size() < 2) throw ConfigError("synth: degenerate segment pool");
  std::set<std::string> unique(pool.begin(), pool.end());
  if (unique.size() != pool.size()) throw ConfigError("synth: duplicate segments in the pool");
  for (const auto& s : pool) {
    const auto seg = segment_strings(s);
    if (seg.size() != 1 || seg[0] != to_nfd(s)) throw ConfigError("synth: pool entry '" + s + "' is not a single segment");
  }
  if (small_segments.empty() || large_segments.empty()) throw ConfigError("synth: empty label segment set");
  for (const auto& s : small_segments) {
    index_in(pool, s);
    if (std::find(large_segments.begin(), large_segments.end(), s) != large_segments.end()) {
      throw ConfigError("synth: small and large segment sets overlap");
    }
  }
  for (const auto& s : large_segments) index_in(pool, s);
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(beta) || !unit(gamma) || !unit(mutation_rate)) {
    throw ConfigError("synth: beta, gamma and mutation_rate must lie in [0, 1]");
  }
  if (!(label_skew >= 0.0 && label_skew <= 0.5)) throw ConfigError("synth: label_skew must lie in [0, 0.5]");
  if (!(dirichlet_alpha > 0.0)) throw ConfigError("synth: dirichlet_alpha must be positive");
  if (swadesh_concepts < 1) throw ConfigError("synth: swadesh_concepts must be positive");
}

std::map<std::string, std::string> SynthConfig::to_map() const {
  return {{"families", std::to_string(families)},
          {"languages_per_family", std::to_string(languages_per_family)},
          {"words_per_language", std::to_string(words_per_language)},
          {"min_length", std::to_string(min_length)},
          {"max_length", std::to_string(max_length)},
          {"pool", join(pool)},
          {"small_segments", join(small_segments)},
          {"large_segments", join(large_segments)},
          {"beta", num(beta)},
          {"gamma", num(gamma)},
          {"dirichlet_alpha", num(dirichlet_alpha)},
          {"label_skew", num(label_skew)},
          {"swadesh_concepts", std::to_string(swadesh_concepts)},
          {"mutation_rate", num(mutation_rate)},
          {"pretrain_words", std::to_string(pretrain_words)},
          {"seed", std::to_string(seed)}};
}

SynthConfig SynthConfig::from_map(const std::map<std::string, std::string>& values) {
  SynthConfig c;
  for (const auto& [key, value] : values) {
    try {
      if (key == "families") c.families = std::stoi(value);
      else if (key == "languages_per_family") c.languages_per_family = std::stoi(value);
      else if (key == "words_per_language") c.words_per_language = std::stoi(value);
      else if (key == "min_length") c.min_length = std::stoi(value);
      else if (key == "max_length") c.max_length = std::stoi(value);
      else if (key == "pool") c.pool = split_ws(value);
      else if (key == "small_segments") c.small_segments = split_ws(value);
      else if (key == "large_segments") c.large_segments = split_ws(value);
      else if (key == "beta") c.beta = std::stod(value);
      else if (key == "gamma") c.gamma = std::stod(value);
      else if (key == "dirichlet_alpha") c.dirichlet_alpha = std::stod(value);
      else if (key == "label_skew") c.label_skew = std::stod(value);
      else if (key == "swadesh_concepts") c.swadesh_concepts = std::stoi(value);
      else if (key == "mutation_rate") c.mutation_rate = std::stod(value);
      else if (key == "pretrain_words") c.pretrain_words = std::stoull(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else throw ConfigError("synth: unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("synth: bad value for '" + key + "': " + value);
    }
  }
  c.validate();
  return c;
}

double bayes_accuracy(const std::vector<double>& p_small, const std::vector<double>& p_large, int min_length,
                      int max_length, double prior_small) {
  if (!(prior_small >= 0.0 && prior_small <= 1.0)) throw ConfigError("bayes_accuracy: prior must lie in [0, 1]");
  if (p_small.size() != p_large.size()) throw ConfigError("bayes_accuracy: distributions differ in size");
  if (min_length < 1 || max_length < min_length) throw ConfigError("bayes_accuracy: invalid length range");
  std::vector<double> ps;
  std::vector<double> pl;
  double other = 0.0;
  for (std::size_t i = 0; i < p_small.size(); ++i) {
    if (p_small[i] == p_large[i]) {
      other += p_small[i];
    } else {
      ps.push_back(p_small[i]);
      pl.push_back(p_large[i]);
    }
  }
  double total = 0.0;
  for (int n = min_length; n <= max_length; ++n) {
    double acc = 0.0;
    enumerate(ps, pl, other, 0, n, std::lgamma(n + 1.0), std::log(prior_small), std::log1p(-prior_small), acc);
    total += acc;
  }
  return total / (max_length - min_length + 1);
}

SynthManifest build_manifest(const SynthConfig& config) {
  config.validate();
  SynthManifest m;
  m.config = config.to_map();
  m.pool = config.pool;
  const std::size_t k = config.pool.size();
  std::array<std::vector<double>, 2> label_uniform;
  for (int y = 0; y < 2; ++y) {
    label_uniform[y].assign(k, 0.0);
    const auto& set = y == 0 ? config.small_segments : config.large_segments;
    for (const auto& s : set) label_uniform[y][static_cast<std::size_t>(index_in(config.pool, s))] = 1.0 / static_cast<double>(set.size());
  }
  double acc_sum = 0.0;
  for (int f = 0; f < config.families; ++f) {
    std::mt19937_64 rng(derive_seed(config.seed, "synth-family", static_cast<std::uint64_t>(f)));
    const auto dir = sample_dirichlet(rng, k, config.dirichlet_alpha);
    std::vector<double> q(k);
    for (std::size_t i = 0; i < k; ++i) q[i] = (1.0 - config.gamma) / static_cast<double>(k) + config.gamma * dir[i];

    const int n_small = small_count(config, f);
    for (int l = 0; l < config.languages_per_family; ++l) {
      LanguageModel lm;
      lm.language = language_id(f, l);
      lm.family = family_id(f);
      lm.base = q;
      lm.small_words = n_small;
      for (int y = 0; y < 2; ++y) {
        lm.label[y].resize(k);
        for (std::size_t i = 0; i < k; ++i) lm.label[y][i] = (1.0 - config.beta) * q[i] + config.beta * label_uniform[y][i];
      }
      lm.bayes_accuracy = bayes_accuracy(lm.label[0], lm.label[1], config.min_length, config.max_length,
                                         static_cast<double>(n_small) / config.words_per_language);
      acc_sum += lm.bayes_accuracy;
      m.languages.push_back(std::move(lm));
    }
  }
  m.expected_accuracy = acc_sum / static_cast<double>(m.languages.size());
  return m;
}

double expected_accuracy(const SynthConfig& config) { return build_manifest(config).expected_accuracy; }

SynthData generate(const SynthConfig& config) {
  SynthData data;
  data.manifest = build_manifest(config);
  const auto& pool = config.pool;
  std::vector<WordEntry> entries;
  std::size_t lang_index = 0;
  for (int f = 0; f < config.families; ++f) {
    std::mt19937_64 proto_rng(derive_seed(config.seed, "synth-proto", static_cast<std::uint64_t>(f)));
    const auto& q = data.manifest.languages[static_cast<std::size_t>(f * config.languages_per_family)].base;
    std::vector<std::vector<int>> proto;
    for (int c = 0; c < config.swadesh_concepts; ++c) proto.push_back(draw_word(q, draw_length(config, proto_rng), proto_rng));

    for (int l = 0; l < config.languages_per_family; ++l, ++lang_index) {
      const auto& lm = data.manifest.languages[lang_index];
      std::mt19937_64 rng(derive_seed(config.seed, "synth-language:" + lm.language));
      const long n = config.words_per_language;
      int counts[2] = {0, 0};
      for (long w = 0; w < n; ++w) {
        // Spreads the small words evenly; alternates S, L when balanced.
        const int y = ((w + 1) * lm.small_words + n - 1) / n > (w * lm.small_words + n - 1) / n ? 0 : 1;
        const auto word = draw_word(lm.label[static_cast<std::size_t>(y)], draw_length(config, rng), rng);
        entries.push_back(WordEntry{"adj" + two_digits(++counts[y]) + (y ? "L" : "S"), lm.language, lm.family,
                                    spell(word, pool), static_cast<SizeLabel>(y)});
      }
      SwadeshList list;
      list.language = lm.language;
      for (int c = 0; c < config.swadesh_concepts; ++c) {
        std::vector<int> form;
        if (uniform01(rng) < config.gamma) {
          form = proto[static_cast<std::size_t>(c)];
          for (auto& s : form) {
            if (uniform01(rng) < config.mutation_rate) s = static_cast<int>(draw(lm.base, rng));
          }
        } else {
          form = draw_word(lm.base, draw_length(config, rng), rng);
        }
        list.entries["c" + two_digits(c + 1)] = spell(form, pool);
      }
      data.swadesh.push_back(std::move(list));

      const std::size_t n_lang = data.manifest.languages.size();
      const std::size_t n_words = config.pretrain_words / n_lang + (lang_index < config.pretrain_words % n_lang ? 1 : 0);
      std::mt19937_64 prng(derive_seed(config.seed, "synth-pretrain:" + lm.language));
      for (std::size_t i = 0; i < n_words; ++i) {
        const std::size_t y = uniform01(prng) * config.words_per_language < lm.small_words ? 0 : 1;
        data.pretrain.items.push_back(PretrainItem{lm.language, spell(draw_word(lm.label[y], draw_length(config, prng), prng), pool)});
      }
      data.pretrain.per_language[lm.language] = n_words;
    }
  }
  data.lexicon = Lexicon(std::move(entries));
  return data;
}

std::string SynthManifest::to_json() const {
  nlohmann::json j;
  j["config"] = config;
  j["pool"] = pool;
  j["expected_accuracy"] = expected_accuracy;
  j["languages"] = nlohmann::json::array();
  for (const auto& lm : languages) {
    nlohmann::json probs;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      probs[pool[i]] = {{"base", lm.base[i]}, {"small", lm.label[0][i]}, {"large", lm.label[1][i]}};
    }
    j["languages"].push_back({{"language", lm.language}, {"family", lm.family}, {"small_words", lm.small_words},
                              {"bayes_accuracy", lm.bayes_accuracy}, {"probabilities", probs}});
  }
  return j.dump(2) + "\n";
}

void write_synth(const SynthData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path d(dir);
  save_lexicon(data.lexicon, (d / "lexicon.tsv").string());
  save_swadesh(data.swadesh, (d / "swadesh.tsv").string());
  save_pretrain_corpus(data.pretrain, (d / "pretrain.tsv").string());
  write_file_atomic((d / "manifest.json").string(), data.manifest.to_json());
}

}  // namespace sizesym
