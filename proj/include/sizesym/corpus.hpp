#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sizesym/ipa.hpp"

namespace sizesym {

enum class SizeLabel : int { small = 0, large = 1 };

std::string_view to_string(SizeLabel label);
SizeLabel parse_size_label(std::string_view text);  // throws DataError

struct WordEntry {
  std::string lemma;
  std::string language;
  std::string family;
  std::string ipa;
  SizeLabel size = SizeLabel::small;

  friend bool operator==(const WordEntry&, const WordEntry&) = default;
};

/// Per-language label counts, indexed by SizeLabel.
using LabelCounts = std::array<std::size_t, 2>;

class Lexicon {
 public:
  Lexicon() = default;
  /// Throws DataError if a language is assigned two different families.
  explicit Lexicon(std::vector<WordEntry> entries);

  const std::vector<WordEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Sorted language ids.
  std::vector<std::string> languages() const;
  const std::map<std::string, std::string>& families() const { return families_; }
  const std::string& family_of(const std::string& language) const;
  bool has_language(const std::string& language) const { return families_.contains(language); }

  std::vector<WordEntry> entries_for(const std::string& language) const;
  const std::map<std::string, LabelCounts>& counts() const { return counts_; }

  /// Balance warnings (languages not 15/15 small/large).
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Throws DataError unless the language has >= 2 entries of each label.
  void require_trainable(const std::string& language) const;

 private:
  std::vector<WordEntry> entries_;
  std::map<std::string, std::string> families_;
  std::map<std::string, LabelCounts> counts_;
  std::vector<std::string> warnings_;
};

enum class LexiconFormat { tsv, csv };

/// Reads a delimited lexicon with header `language family lemma ipa size`
/// (columns in any order). Every failure is row-addressed (RowError).
Lexicon load_lexicon(const std::string& path, LexiconFormat format = LexiconFormat::tsv,
                     const TokenizerRules& rules = default_rules());
void save_lexicon(const Lexicon& lexicon, const std::string& path);

struct PretrainItem {
  std::string language;
  std::string ipa;

  friend bool operator==(const PretrainItem&, const PretrainItem&) = default;
};

struct PretrainCorpus {
  std::vector<PretrainItem> items;
  std::map<std::string, std::size_t> per_language;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// One word per line, `lang<TAB>ipa` or a bare `ipa`. Lines that fail
/// tokenization are skipped and reported. Throws DataError if nothing remains.
PretrainCorpus load_pretrain_corpus(const std::string& path, const TokenizerRules& rules = default_rules());
void save_pretrain_corpus(const PretrainCorpus& corpus, const std::string& path);

struct NamedArray {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  ///< row-major

  friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

/// Model parameters plus provenance. The on-disk format is a text manifest
/// followed by a little-endian IEEE-754 double payload.
struct Checkpoint {
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::vector<NamedArray> params;

  const NamedArray& param(const std::string& name) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::string_view kCheckpointMagic = "sizesym-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Atomic write (temp file + rename).
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
/// As above, but throws ConfigError listing every key whose echo differs.
Checkpoint load_checkpoint(const std::string& path, const std::map<std::string, std::string>& expected_config);

/// Writes `contents` to `path` via a sibling temp file and rename.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace sizesym
