#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sizesym/corpus.hpp"
#include "sizesym/ipa.hpp"

namespace sizesym {

/// Sorted (by code point) list of segment strings with a column index.
class SegmentVocabulary {
 public:
  SegmentVocabulary() = default;
  explicit SegmentVocabulary(std::set<std::string> segments);

  Eigen::Index size() const { return static_cast<Eigen::Index>(segments_.size()); }
  const std::string& segment(Eigen::Index column) const { return segments_.at(static_cast<std::size_t>(column)); }
  const std::vector<std::string>& segments() const { return segments_; }
  std::optional<Eigen::Index> index_of(const std::string& segment) const;
  bool contains(const std::string& segment) const { return index_.contains(segment); }

  friend bool operator==(const SegmentVocabulary& a, const SegmentVocabulary& b) {
    return a.segments_ == b.segments_;
  }

 private:
  std::vector<std::string> segments_;
  std::map<std::string, Eigen::Index> index_;
};

/// Union of all segments of the given entries. Throws DataError when empty.
SegmentVocabulary build_vocabulary(const std::vector<WordEntry>& entries, const TokenizerRules& rules = default_rules());

enum class AblationKind { none = 0, scrambled_labels, no_vowels, high_frequency_only, plosives_only, nasals_only };

std::string_view to_string(AblationKind kind);
AblationKind parse_ablation_kind(std::string_view name);
inline constexpr std::array<AblationKind, 6> kAllAblations{
    AblationKind::none,           AblationKind::scrambled_labels,    AblationKind::no_vowels,
    AblationKind::high_frequency_only, AblationKind::plosives_only, AblationKind::nasals_only};

struct SegmentSets {
  std::set<std::string> vowels;
  std::set<std::string> plosives;
  std::set<std::string> nasals;
  std::set<std::string> high_frequency;
};

/// Built-in sets; high_frequency holds 23 typologically common segments.
const SegmentSets& default_segment_sets();

/// Segment-set file: one segment per line, UTF-8 (NFD-normalized on load).
std::set<std::string> load_segment_set(const std::string& path);

/// Set-membership key: the token text with length marks removed
/// (so iː matches i, while nʲ stays distinct from n).
std::string membership_key(const SegmentToken& token, const TokenizerRules& rules = default_rules());

struct AblationFilter {
  AblationKind kind = AblationKind::none;
  std::set<std::string> segments;  ///< payload for the *_only kinds

  /// Whether the token survives the filter. Label scrambling keeps every token.
  bool retains(const SegmentToken& token, const TokenizerRules& rules = default_rules()) const;
};

AblationFilter make_filter(AblationKind kind, const SegmentSets& sets = default_segment_sets());

using FeatureVector = Eigen::VectorXi;

struct FeaturizeStats {
  std::size_t out_of_vocabulary = 0;
  std::size_t filtered = 0;
};

FeatureVector featurize(const WordEntry& word, const SegmentVocabulary& vocab, const AblationFilter& filter = {},
                        FeaturizeStats* stats = nullptr, const TokenizerRules& rules = default_rules());

/// Row i = featurize(entries[i]) as doubles, ready for the classifiers.
Eigen::MatrixXd feature_matrix(const std::vector<WordEntry>& entries, const SegmentVocabulary& vocab,
                               const AblationFilter& filter = {}, FeaturizeStats* stats = nullptr,
                               const TokenizerRules& rules = default_rules());

/// 1 for vocabulary columns whose segment the filter keeps, else 0.
Eigen::VectorXi retained_columns(const SegmentVocabulary& vocab, const AblationFilter& filter,
                                 const TokenizerRules& rules = default_rules());

/// The vocabulary restricted to segments the filter keeps.
SegmentVocabulary filter_vocabulary(const SegmentVocabulary& vocab, const AblationFilter& filter,
                                    const TokenizerRules& rules = default_rules());

Eigen::VectorXi label_vector(const std::vector<WordEntry>& entries);

/// Seeded permutation of the size labels; the label histogram is preserved.
std::vector<WordEntry> scramble_labels(std::vector<WordEntry> entries, std::uint64_t seed);

}  // namespace sizesym
