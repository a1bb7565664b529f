#include "sizesym/typology.hpp"

#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "sizesym/corpus.hpp"
#include "sizesym/error.hpp"
#include "sizesym/parallel.hpp"

namespace sizesym {

namespace {

using Tokens = std::vector<std::string>;
using TokenizedList = std::map<std::string, Tokens>;

TokenizedList tokenize_list(const SwadeshList& list, const TokenizerRules& rules) {
  TokenizedList out;
  for (const auto& [concept_id, ipa] : list.entries) out.emplace(concept_id, segment_strings(ipa, rules));
  return out;
}

double normalized_distance(const Tokens& a, const Tokens& b, LdnNormalization norm) {
  if (a.empty() && b.empty()) return 0.0;
  const double d = static_cast<double>(levenshtein(a, b));
  const double denom = norm == LdnNormalization::max_length
                           ? static_cast<double>(std::max(a.size(), b.size()))
                           : 0.5 * static_cast<double>(a.size() + b.size());
  return d / denom;
}

std::vector<std::string> shared_concepts(const TokenizedList& a, const TokenizedList& b) {
  std::vector<std::string> shared;
  for (const auto& [concept_id, tokens] : a) {
    if (b.contains(concept_id)) shared.push_back(concept_id);
  }
  return shared;
}

double ldn_tokens(const TokenizedList& a, const TokenizedList& b, LdnNormalization norm) {
  const auto shared = shared_concepts(a, b);
  if (shared.empty()) throw DataError("Swadesh lists share no concept");
  double total = 0.0;
  for (const auto& c : shared) total += normalized_distance(a.at(c), b.at(c), norm);
  return total / static_cast<double>(shared.size());
}

double ldnd_tokens(const TokenizedList& a, const TokenizedList& b, LdnNormalization norm) {
  const double numerator = ldn_tokens(a, b, norm);
  const auto shared = shared_concepts(a, b);
  double total = 0.0;
  std::size_t pairs = 0;
  for (const auto& ca : shared) {
    for (const auto& cb : shared) {
      if (ca == cb) continue;
      total += normalized_distance(a.at(ca), b.at(cb), norm);
      ++pairs;
    }
  }
  if (pairs == 0 || total == 0.0) {
    throw DataError("LDND undefined: non-matching word pairs have zero mean distance");
  }
  return numerator / (total / static_cast<double>(pairs));
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

}  // namespace

std::string_view to_string(LdnNormalization n) { return n == LdnNormalization::max_length ? "max" : "mean"; }
std::string_view to_string(DistanceMeasure m) { return m == DistanceMeasure::ldn ? "ldn" : "ldnd"; }

LdnNormalization parse_normalization(std::string_view name) {
  if (name == "max") return LdnNormalization::max_length;
  if (name == "mean") return LdnNormalization::mean_length;
  throw ConfigError("unknown LDN normalization '" + std::string(name) + "' (expected max or mean)");
}

DistanceMeasure parse_measure(std::string_view name) {
  if (name == "ldn") return DistanceMeasure::ldn;
  if (name == "ldnd") return DistanceMeasure::ldnd;
  throw ConfigError("unknown distance measure '" + std::string(name) + "' (expected ldn or ldnd)");
}

std::vector<SwadeshList> load_swadesh(const std::string& path, const TokenizerRules& rules) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open Swadesh file '" + path + "'");
  std::map<std::string, SwadeshList> by_language;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) throw RowError(path, row, "expected 3 fields (language concept ipa)");
    if (row == 1 && fields[0] == "language" && fields[1] == "concept" && fields[2] == "ipa") continue;
    try {
      tokenize(fields[2], rules);
    } catch (const DataError& err) {
      throw RowError(path, row, err.what());
    }
    auto& list = by_language[fields[0]];
    list.language = fields[0];
    if (!list.entries.emplace(fields[1], fields[2]).second) {
      throw RowError(path, row, "duplicate concept '" + fields[1] + "' for language '" + fields[0] + "'");
    }
  }
  std::vector<SwadeshList> out;
  for (auto& [lang, list] : by_language) out.push_back(std::move(list));
  return out;
}

void save_swadesh(const std::vector<SwadeshList>& lists, const std::string& path) {
  std::ostringstream out;
  out << "language\tconcept\tipa\n";
  for (const auto& list : lists) {
    for (const auto& [concept_id, ipa] : list.entries) out << list.language << '\t' << concept_id << '\t' << ipa << '\n';
  }
  write_file_atomic(path, out.str());
}

double ldn(const SwadeshList& a, const SwadeshList& b, LdnNormalization norm, const TokenizerRules& rules) {
  return ldn_tokens(tokenize_list(a, rules), tokenize_list(b, rules), norm);
}

double ldnd(const SwadeshList& a, const SwadeshList& b, LdnNormalization norm, const TokenizerRules& rules) {
  return ldnd_tokens(tokenize_list(a, rules), tokenize_list(b, rules), norm);
}

DistanceMatrix::DistanceMatrix(std::vector<std::string> languages, Eigen::MatrixXd values)
    : languages_(std::move(languages)), values_(std::move(values)) {
  const auto n = static_cast<Eigen::Index>(languages_.size());
  if (values_.rows() != n || values_.cols() != n) throw DataError("distance matrix shape does not match language list");
  if (std::set<std::string>(languages_.begin(), languages_.end()).size() != languages_.size()) {
    throw DataError("distance matrix has duplicate language ids");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (values_(i, i) != 0.0) throw DataError("distance matrix diagonal must be 0 (" + languages_[static_cast<std::size_t>(i)] + ")");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(values_(i, j) >= 0.0)) throw DataError("distance matrix entries must be finite and non-negative");
      if (values_(i, j) != values_(j, i)) throw DataError("distance matrix must be symmetric");
    }
  }
}

Eigen::Index DistanceMatrix::index_of(const std::string& language) const {
  auto it = std::find(languages_.begin(), languages_.end(), language);
  if (it == languages_.end()) throw DataError("language '" + language + "' not in distance matrix");
  return static_cast<Eigen::Index>(it - languages_.begin());
}

bool DistanceMatrix::contains(const std::string& language) const {
  return std::find(languages_.begin(), languages_.end(), language) != languages_.end();
}

DistanceMatrix distance_matrix(const std::vector<SwadeshList>& lists, DistanceMeasure measure, LdnNormalization norm,
                               int jobs, const TokenizerRules& rules) {
  const std::size_t n = lists.size();
  std::vector<TokenizedList> tokenized(n);
  std::vector<std::string> languages(n);
  for (std::size_t i = 0; i < n; ++i) {
    tokenized[i] = tokenize_list(lists[i], rules);
    languages[i] = lists[i].language;
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> result(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    result[k] = measure == DistanceMeasure::ldn ? ldn_tokens(tokenized[i], tokenized[j], norm)
                                                : ldnd_tokens(tokenized[i], tokenized[j], norm);
  });
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(pairs[k].first);
    const auto j = static_cast<Eigen::Index>(pairs[k].second);
    values(i, j) = values(j, i) = result[k];
  }
  return DistanceMatrix(std::move(languages), std::move(values));
}

DistanceMatrix load_distance_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open distance matrix '" + path + "'");
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_ids;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_tabs(line);
    if (header.empty()) {
      header.assign(fields.begin() + 1, fields.end());
      continue;
    }
    if (fields.size() != header.size() + 1) throw RowError(path, row, "row width does not match header");
    row_ids.push_back(fields[0]);
    std::vector<double> values;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(fields[k], &used));
        if (used != fields[k].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw RowError(path, row, "bad number '" + fields[k] + "'");
      }
    }
    rows.push_back(std::move(values));
  }
  if (header.empty()) throw RowError(path, 1, "empty matrix file");
  if (row_ids != header) throw DataError(path + ": row ids must match the header order");
  const auto n = static_cast<Eigen::Index>(header.size());
  Eigen::MatrixXd values(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return DistanceMatrix(std::move(header), std::move(values));
}

void save_distance_matrix(const DistanceMatrix& matrix, const std::string& path) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "language";
  for (const auto& l : matrix.languages()) out << '\t' << l;
  out << '\n';
  for (Eigen::Index i = 0; i < matrix.values().rows(); ++i) {
    out << matrix.languages()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < matrix.values().cols(); ++j) out << '\t' << matrix.values()(i, j);
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

std::string_view to_string(SimilarityBin bin) {
  switch (bin) {
    case SimilarityBin::most_similar: return "most_similar";
    case SimilarityBin::somewhat_similar: return "somewhat_similar";
    case SimilarityBin::least_similar: return "least_similar";
  }
  return "most_similar";
}

SimilarityBin TertileBinning::bin_of(const std::string& language) const {
  for (int b = 0; b < kNumBins; ++b) {
    if (std::find(bins[b].begin(), bins[b].end(), language) != bins[b].end()) return static_cast<SimilarityBin>(b);
  }
  throw DataError("language '" + language + "' is not binned relative to '" + target + "'");
}

TertileBinning bin_tertiles(const std::string& target, const DistanceMatrix& matrix) {
  const Eigen::Index t = matrix.index_of(target);
  std::vector<std::pair<double, std::string>> ranked;
  for (std::size_t i = 0; i < matrix.languages().size(); ++i) {
    if (static_cast<Eigen::Index>(i) == t) continue;
    ranked.emplace_back(matrix.values()(t, static_cast<Eigen::Index>(i)), matrix.languages()[i]);
  }
  if (ranked.size() < 3) throw DataError("tertile binning needs at least 3 languages besides '" + target + "'");
  std::sort(ranked.begin(), ranked.end());

  TertileBinning binning;
  binning.target = target;
  const std::size_t base = ranked.size() / 3;
  const std::size_t remainder = ranked.size() % 3;
  std::size_t k = 0;
  for (std::size_t b = 0; b < kNumBins; ++b) {
    const std::size_t size = base + (b < remainder ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) binning.bins[b].push_back(ranked[k++].second);
  }
  return binning;
}

}  // namespace sizesym
