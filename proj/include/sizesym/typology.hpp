#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sizesym/ipa.hpp"

namespace sizesym {

/// Unit-cost edit distance (insert, delete, substitute) between two
/// random-access sequences whose elements compare with ==.
template <typename SequenceA, typename SequenceB>
std::size_t levenshtein(const SequenceA& a, const SequenceB& b) {
  const std::size_t n = std::size(a);
  const std::size_t m = std::size(b);
  std::vector<std::size_t> row(m + 1);
  for (std::size_t j = 0; j <= m; ++j) row[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t above = row[j];
      const std::size_t substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitute});
      diagonal = above;
    }
  }
  return row[m];
}

struct SwadeshList {
  std::string language;
  std::map<std::string, std::string> entries;  ///< concept id -> IPA
};

/// TSV `language concept ipa`; an optional header row with those names is skipped.
std::vector<SwadeshList> load_swadesh(const std::string& path, const TokenizerRules& rules = default_rules());
void save_swadesh(const std::vector<SwadeshList>& lists, const std::string& path);

enum class LdnNormalization { max_length, mean_length };
enum class DistanceMeasure { ldn, ldnd };

std::string_view to_string(LdnNormalization n);
std::string_view to_string(DistanceMeasure m);
LdnNormalization parse_normalization(std::string_view name);
DistanceMeasure parse_measure(std::string_view name);

/// Mean over shared concepts of LD(tokens) / max(len) (or mean length).
/// Throws DataError when the lists share no concept.
double ldn(const SwadeshList& a, const SwadeshList& b, LdnNormalization norm = LdnNormalization::max_length,
           const TokenizerRules& rules = default_rules());

/// LDN divided by the mean normalized distance over all non-matching
/// concept pairs. Throws DataError on a zero denominator.
double ldnd(const SwadeshList& a, const SwadeshList& b, LdnNormalization norm = LdnNormalization::max_length,
            const TokenizerRules& rules = default_rules());

class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::vector<std::string> languages, Eigen::MatrixXd values);

  const std::vector<std::string>& languages() const { return languages_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index index_of(const std::string& language) const;
  bool contains(const std::string& language) const;
  double operator()(const std::string& a, const std::string& b) const {
    return values_(index_of(a), index_of(b));
  }

 private:
  std::vector<std::string> languages_;
  Eigen::MatrixXd values_;
};

DistanceMatrix distance_matrix(const std::vector<SwadeshList>& lists, DistanceMeasure measure = DistanceMeasure::ldn,
                               LdnNormalization norm = LdnNormalization::max_length, int jobs = 1,
                               const TokenizerRules& rules = default_rules());

/// TSV with a header row of language ids and one labelled row per language.
DistanceMatrix load_distance_matrix(const std::string& path);
void save_distance_matrix(const DistanceMatrix& matrix, const std::string& path);

enum class SimilarityBin : int { most_similar = 0, somewhat_similar = 1, least_similar = 2 };
inline constexpr int kNumBins = 3;
std::string_view to_string(SimilarityBin bin);

struct TertileBinning {
  std::string target;
  std::array<std::vector<std::string>, kNumBins> bins;

  SimilarityBin bin_of(const std::string& language) const;  // throws DataError
  const std::vector<std::string>& operator[](SimilarityBin b) const { return bins[static_cast<int>(b)]; }
};

/// Ranks the other languages by ascending distance to the target (ties by
/// id) and cuts three contiguous groups, remainder to the earlier bins.
TertileBinning bin_tertiles(const std::string& target, const DistanceMatrix& matrix);

}  // namespace sizesym
