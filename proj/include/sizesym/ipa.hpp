#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sizesym {

enum class Category { vowel, consonant, unknown };

std::string_view to_string(Category c);

/// A set of code points stored as sorted, merged closed ranges.
class CodePointSet {
 public:
  CodePointSet() = default;
  CodePointSet(std::initializer_list<char32_t> points);

  void insert(char32_t cp) { insert(cp, cp); }
  void insert(char32_t first, char32_t last);
  bool contains(char32_t cp) const;
  bool intersects(const CodePointSet& other) const;
  bool empty() const { return ranges_.empty(); }
  const std::vector<std::pair<char32_t, char32_t>>& ranges() const { return ranges_; }

 private:
  std::vector<std::pair<char32_t, char32_t>> ranges_;
};

/// Pure-data segmentation rules. Modifiers (combining marks, length marks,
/// superscripts) attach to the preceding base; tie bars join two bases;
/// suprasegmentals are dropped before segmentation.
struct TokenizerRules {
  CodePointSet combining;
  CodePointSet length_marks;
  CodePointSet superscripts;
  CodePointSet tie_bars;
  bool join_tie_bars = true;
  CodePointSet suprasegmentals;
  CodePointSet vowels;

  bool is_modifier(char32_t cp) const {
    return combining.contains(cp) || length_marks.contains(cp) || superscripts.contains(cp) ||
           (!join_tie_bars && tie_bars.contains(cp));
  }

  /// Throws DataError if the suprasegmental and modifier sets overlap.
  void validate() const;
};

/// Built-in rule table (also available as text via default_rules_text()).
const TokenizerRules& default_rules();
std::string_view default_rules_text();

/// Parses a section-tagged rule file: `[combining]`, `[length]`,
/// `[superscript]`, `[tie]`, `[suprasegmental]`, `[vowel]`, `[options]`.
/// Entries are a literal character, `U+XXXX`, or `U+XXXX..U+YYYY`.
TokenizerRules parse_rules(std::string_view text);
TokenizerRules load_rules(const std::string& path);

struct SegmentToken {
  std::string text;  ///< NFD UTF-8: base plus attached marks
  char32_t base = 0;
  Category category = Category::unknown;

  friend bool operator==(const SegmentToken&, const SegmentToken&) = default;
};

/// Canonical decomposition of a UTF-8 string. Throws DataError on invalid UTF-8.
std::string to_nfd(std::string_view utf8);

std::u32string decode_utf8(std::string_view utf8);
std::string encode_utf8(std::u32string_view text);
std::string encode_utf8(char32_t cp);

/// Removes every suprasegmental code point. Output is NFD; idempotent.
std::string strip_suprasegmentals(std::string_view ipa, const TokenizerRules& rules = default_rules());

/// Segments an IPA string into phoneme tokens. Throws MalformedInput when a
/// modifier or tie bar has no base to attach to.
std::vector<SegmentToken> tokenize(std::string_view ipa, const TokenizerRules& rules = default_rules());

Category categorize(const SegmentToken& token, const TokenizerRules& rules = default_rules());

/// Token texts only, in order.
std::vector<std::string> segment_strings(std::string_view ipa, const TokenizerRules& rules = default_rules());

std::string join_tokens(const std::vector<SegmentToken>& tokens);

}  // namespace sizesym
