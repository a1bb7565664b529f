#include "sizesym/features.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "sizesym/error.hpp"

namespace sizesym {

SegmentVocabulary::SegmentVocabulary(std::set<std::string> segments)
    : segments_(segments.begin(), segments.end()) {
  for (std::size_t i = 0; i < segments_.size(); ++i) index_.emplace(segments_[i], static_cast<Eigen::Index>(i));
}

std::optional<Eigen::Index> SegmentVocabulary::index_of(const std::string& segment) const {
  auto it = index_.find(segment);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SegmentVocabulary build_vocabulary(const std::vector<WordEntry>& entries, const TokenizerRules& rules) {
  if (entries.empty()) throw DataError("cannot build a vocabulary from an empty lexicon");
  std::set<std::string> segments;
  for (const auto& e : entries) {
    for (auto& t : tokenize(e.ipa, rules)) segments.insert(std::move(t.text));
  }
  return SegmentVocabulary(std::move(segments));
}

std::string_view to_string(AblationKind kind) {
  switch (kind) {
    case AblationKind::none: return "baseline";
    case AblationKind::scrambled_labels: return "scrambled_labels";
    case AblationKind::no_vowels: return "no_vowels";
    case AblationKind::high_frequency_only: return "high_frequency_only";
    case AblationKind::plosives_only: return "plosives_only";
    case AblationKind::nasals_only: return "nasals_only";
  }
  return "baseline";
}

AblationKind parse_ablation_kind(std::string_view name) {
  for (auto kind : kAllAblations) {
    if (to_string(kind) == name) return kind;
  }
  if (name == "none") return AblationKind::none;
  if (name.size() == 1 && name[0] >= '0' && name[0] <= '5') return kAllAblations[static_cast<std::size_t>(name[0] - '0')];
  throw ConfigError("unknown ablation condition '" + std::string(name) + "'");
}

const SegmentSets& default_segment_sets() {
  static const SegmentSets sets = [] {
    SegmentSets s;
    for (const auto& [first, last] : default_rules().vowels.ranges()) {
      for (char32_t cp = first; cp <= last; ++cp) s.vowels.insert(encode_utf8(cp));
    }
    s.plosives = {"p", "b", "t", "d", "k", "g", "ɡ", "q", "ʔ", "c", "ɟ", "ʈ", "ɖ", "ɢ"};
    s.nasals = {"m", "ɱ", "n", "ɳ", "ɲ", "ŋ", "ɴ"};
    s.high_frequency = {"m", "k", "i", "a", "p", "u", "t", "s", "n", "l", "j", "w",
                        "h", "b", "d", "g", "ŋ", "f", "e", "o", "r", "ʔ", to_nfd("t͡ʃ")};
    return s;
  }();
  return sets;
}

std::set<std::string> load_segment_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open segment set '" + path + "'");
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    line.erase(0, line.find_first_not_of(" \t"));
    line.erase(line.find_last_not_of(" \t") + 1);
    if (line.empty() || line.front() == '#') continue;
    out.insert(to_nfd(line));
  }
  return out;
}

std::string membership_key(const SegmentToken& token, const TokenizerRules& rules) {
  std::u32string kept;
  for (char32_t cp : decode_utf8(token.text)) {
    if (!rules.length_marks.contains(cp)) kept.push_back(cp);
  }
  return encode_utf8(kept);
}

bool AblationFilter::retains(const SegmentToken& token, const TokenizerRules& rules) const {
  switch (kind) {
    case AblationKind::none:
    case AblationKind::scrambled_labels:
      return true;
    case AblationKind::no_vowels:
      return token.category != Category::vowel;
    case AblationKind::high_frequency_only:
    case AblationKind::plosives_only:
    case AblationKind::nasals_only:
      return segments.contains(membership_key(token, rules));
  }
  return true;
}

AblationFilter make_filter(AblationKind kind, const SegmentSets& sets) {
  AblationFilter f{kind, {}};
  if (kind == AblationKind::high_frequency_only) f.segments = sets.high_frequency;
  if (kind == AblationKind::plosives_only) f.segments = sets.plosives;
  if (kind == AblationKind::nasals_only) f.segments = sets.nasals;
  return f;
}

FeatureVector featurize(const WordEntry& word, const SegmentVocabulary& vocab, const AblationFilter& filter,
                        FeaturizeStats* stats, const TokenizerRules& rules) {
  FeatureVector counts = FeatureVector::Zero(vocab.size());
  for (const auto& token : tokenize(word.ipa, rules)) {
    const auto column = vocab.index_of(token.text);
    if (!column) {
      if (stats) ++stats->out_of_vocabulary;
      continue;
    }
    if (!filter.retains(token, rules)) {
      if (stats) ++stats->filtered;
      continue;
    }
    counts(*column) += 1;
  }
  return counts;
}

Eigen::MatrixXd feature_matrix(const std::vector<WordEntry>& entries, const SegmentVocabulary& vocab,
                               const AblationFilter& filter, FeaturizeStats* stats, const TokenizerRules& rules) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(entries.size()), vocab.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = featurize(entries[i], vocab, filter, stats, rules).cast<double>().transpose();
  }
  return X;
}

Eigen::VectorXi retained_columns(const SegmentVocabulary& vocab, const AblationFilter& filter,
                                 const TokenizerRules& rules) {
  Eigen::VectorXi mask(vocab.size());
  for (Eigen::Index c = 0; c < vocab.size(); ++c) {
    const auto tokens = tokenize(vocab.segment(c), rules);
    mask(c) = (tokens.size() == 1 && filter.retains(tokens.front(), rules)) ? 1 : 0;
  }
  return mask;
}

SegmentVocabulary filter_vocabulary(const SegmentVocabulary& vocab, const AblationFilter& filter,
                                    const TokenizerRules& rules) {
  const auto mask = retained_columns(vocab, filter, rules);
  std::set<std::string> kept;
  for (Eigen::Index c = 0; c < vocab.size(); ++c) {
    if (mask(c)) kept.insert(vocab.segment(c));
  }
  return SegmentVocabulary(std::move(kept));
}

Eigen::VectorXi label_vector(const std::vector<WordEntry>& entries) {
  Eigen::VectorXi y(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) y(static_cast<Eigen::Index>(i)) = static_cast<int>(entries[i].size);
  return y;
}

std::vector<WordEntry> scramble_labels(std::vector<WordEntry> entries, std::uint64_t seed) {
  std::vector<SizeLabel> labels;
  labels.reserve(entries.size());
  for (const auto& e : entries) labels.push_back(e.size);
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].size = labels[i];
  return entries;
}

}  // namespace sizesym
