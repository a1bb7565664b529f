#include "sizesym/ipa.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "sizesym/error.hpp"

namespace sizesym {

namespace {

constexpr std::string_view kDefaultRules = R"(# Default IPA segmentation table.
[combining]
# U+0300..U+036F minus tone diacritics and tie bars
U+0303
U+0305..U+030A
U+030D..U+030E
U+0310..U+035B
U+035D..U+0360
U+0362..U+036F

[length]
ː
ˑ

[superscript]
ʰ
ʱ
ʲ
ʷ
ˠ
ˤ
ⁿ
ˡ
ʼ
˞

[tie]
U+0361
U+035C

[suprasegmental]
# stress
ˈ
ˌ
# tone letters, combining tone marks, superscript tone numbers
U+02E5..U+02E9
U+A700..U+A71F
U+0300..U+0302
U+0304
U+030B..U+030C
U+030F
U+1DC4..U+1DC9
U+00B2..U+00B3
U+00B9
U+2070
U+2074..U+2079
# intonation and boundaries
‖
|
↗
↘
‿
.
U+0020
U+0009

[vowel]
i
y
ɨ
ʉ
ɯ
u
ɪ
ʏ
ʊ
e
ø
ɘ
ɵ
ɤ
o
ə
ɛ
œ
ɜ
ɞ
ʌ
ɔ
æ
ɐ
a
ɶ
ɑ
ɒ
ɚ
ɝ
ᵻ
ᵿ

[options]
join_tie_bars = true
)";

std::string hex(char32_t cp) {
  std::ostringstream os;
  os << "U+" << std::uppercase << std::hex;
  os.width(4);
  os.fill('0');
  os << static_cast<unsigned>(cp);
  return os.str();
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

char32_t parse_code_point(std::string_view item, std::size_t line) {
  if (item.size() > 2 && (item.substr(0, 2) == "U+" || item.substr(0, 2) == "u+")) {
    unsigned value = 0;
    const auto digits = item.substr(2);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, 16);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
      throw DataError("rule table line " + std::to_string(line) + ": bad code point '" + std::string(item) + "'");
    }
    return static_cast<char32_t>(value);
  }
  const auto cps = decode_utf8(item);
  if (cps.size() != 1) {
    throw DataError("rule table line " + std::to_string(line) + ": expected a single character, got '" +
                    std::string(item) + "'");
  }
  return cps.front();
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::vowel: return "vowel";
    case Category::consonant: return "consonant";
    case Category::unknown: return "unknown";
  }
  return "unknown";
}

CodePointSet::CodePointSet(std::initializer_list<char32_t> points) {
  for (char32_t cp : points) insert(cp);
}

void CodePointSet::insert(char32_t first, char32_t last) {
  if (last < first) std::swap(first, last);
  ranges_.emplace_back(first, last);
  std::sort(ranges_.begin(), ranges_.end());
  std::vector<std::pair<char32_t, char32_t>> merged;
  for (const auto& r : ranges_) {
    if (!merged.empty() && r.first <= merged.back().second + 1) {
      merged.back().second = std::max(merged.back().second, r.second);
    } else {
      merged.push_back(r);
    }
  }
  ranges_ = std::move(merged);
}

bool CodePointSet::contains(char32_t cp) const {
  auto it = std::upper_bound(ranges_.begin(), ranges_.end(), cp,
                             [](char32_t v, const auto& r) { return v < r.first; });
  if (it == ranges_.begin()) return false;
  --it;
  return cp <= it->second;
}

bool CodePointSet::intersects(const CodePointSet& other) const {
  for (const auto& a : ranges_) {
    for (const auto& b : other.ranges_) {
      if (a.first <= b.second && b.first <= a.second) return true;
    }
  }
  return false;
}

void TokenizerRules::validate() const {
  if (suprasegmentals.intersects(combining) || suprasegmentals.intersects(length_marks) ||
      suprasegmentals.intersects(superscripts) || suprasegmentals.intersects(tie_bars)) {
    throw DataError("tokenizer rules: suprasegmental set overlaps the modifier set");
  }
}

TokenizerRules parse_rules(std::string_view text) {
  TokenizerRules rules;
  CodePointSet* current = nullptr;
  bool in_options = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    // A lone '#', '|' or '.' entry is data; comments need "# " or a bare "#".
    if (line.starts_with("# ") || line == "#") continue;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      const auto section = line.substr(1, line.size() - 2);
      in_options = false;
      if (section == "combining") current = &rules.combining;
      else if (section == "length") current = &rules.length_marks;
      else if (section == "superscript") current = &rules.superscripts;
      else if (section == "tie") current = &rules.tie_bars;
      else if (section == "suprasegmental") current = &rules.suprasegmentals;
      else if (section == "vowel") current = &rules.vowels;
      else if (section == "options") { current = nullptr; in_options = true; }
      else throw DataError("rule table line " + std::to_string(line_no) + ": unknown section '" + std::string(section) + "'");
      continue;
    }
    if (in_options) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw DataError("rule table line " + std::to_string(line_no) + ": expected key = value");
      }
      const auto key = trim(line.substr(0, eq));
      const auto value = trim(line.substr(eq + 1));
      if (key != "join_tie_bars") {
        throw DataError("rule table line " + std::to_string(line_no) + ": unknown option '" + std::string(key) + "'");
      }
      rules.join_tie_bars = (value == "true" || value == "on" || value == "1");
      continue;
    }
    if (current == nullptr) {
      throw DataError("rule table line " + std::to_string(line_no) + ": entry outside a section");
    }
    const auto dots = line.find("..");
    if (dots != std::string_view::npos && line.size() > 2) {
      current->insert(parse_code_point(line.substr(0, dots), line_no),
                      parse_code_point(line.substr(dots + 2), line_no));
    } else {
      current->insert(parse_code_point(line, line_no));
    }
  }
  rules.validate();
  return rules;
}

TokenizerRules load_rules(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open rule table '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str());
}

const TokenizerRules& default_rules() {
  static const TokenizerRules rules = parse_rules(kDefaultRules);
  return rules;
}

std::string_view default_rules_text() { return kDefaultRules; }

std::u32string decode_utf8(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) throw DataError("invalid UTF-8 at byte " + std::to_string(i));
    out.push_back(static_cast<char32_t>(c));
  }
  return out;
}

std::string encode_utf8(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) out += encode_utf8(cp);
  return out;
}

std::string to_nfd(std::string_view utf8) {
  decode_utf8(utf8);  // validates
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFD normalizer unavailable");
  const auto source = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  const icu::UnicodeString normalized = nfd->normalize(source, status);
  if (U_FAILURE(status)) throw DataError("NFD normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::string strip_suprasegmentals(std::string_view ipa, const TokenizerRules& rules) {
  std::u32string kept;
  for (char32_t cp : decode_utf8(to_nfd(ipa))) {
    if (!rules.suprasegmentals.contains(cp)) kept.push_back(cp);
  }
  return encode_utf8(kept);
}

Category categorize(const SegmentToken& token, const TokenizerRules& rules) {
  if (rules.vowels.contains(token.base)) return Category::vowel;
  if (u_isalpha(static_cast<UChar32>(token.base))) return Category::consonant;
  return Category::unknown;
}

std::vector<SegmentToken> tokenize(std::string_view ipa, const TokenizerRules& rules) {
  const std::u32string cps = decode_utf8(strip_suprasegmentals(ipa, rules));
  const auto is_tie = [&](char32_t cp) { return rules.join_tie_bars && rules.tie_bars.contains(cp); };

  std::vector<SegmentToken> tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t cp = cps[i];
    if (rules.is_modifier(cp) || is_tie(cp)) {
      throw MalformedInput("malformed IPA: " + hex(cp) + " at position " + std::to_string(i) +
                               " has no base character",
                           cp);
    }
    std::u32string text(1, cp);
    ++i;
    while (true) {
      while (i < cps.size() && rules.is_modifier(cps[i])) text.push_back(cps[i++]);
      if (i < cps.size() && is_tie(cps[i])) {
        if (i + 1 >= cps.size() || rules.is_modifier(cps[i + 1]) || is_tie(cps[i + 1])) {
          throw MalformedInput("malformed IPA: tie bar " + hex(cps[i]) + " at position " + std::to_string(i) +
                                   " is not followed by a base character",
                               cps[i]);
        }
        text.push_back(cps[i]);
        text.push_back(cps[i + 1]);
        i += 2;
        continue;
      }
      break;
    }
    SegmentToken token{encode_utf8(text), cp, Category::unknown};
    token.category = categorize(token, rules);
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::vector<std::string> segment_strings(std::string_view ipa, const TokenizerRules& rules) {
  std::vector<std::string> out;
  for (auto& t : tokenize(ipa, rules)) out.push_back(std::move(t.text));
  return out;
}

std::string join_tokens(const std::vector<SegmentToken>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += t.text;
  return out;
}

}  // namespace sizesym
