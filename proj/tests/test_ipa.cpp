#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sizesym/error.hpp"
#include "sizesym/ipa.hpp"

using namespace sizesym;

namespace {

struct GoldenCase {
  std::string input;
  std::vector<std::string> expected;
};

std::vector<GoldenCase> read_golden() {
  std::ifstream in(SIZESYM_TEST_DATA "/tokenizer_golden.tsv");
  REQUIRE(in);
  std::vector<GoldenCase> cases;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    REQUIRE(tab != std::string::npos);
    GoldenCase c{line.substr(0, tab), {}};
    std::istringstream fields(line.substr(tab + 1));
    for (std::string t; fields >> t;) c.expected.push_back(t);
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace

TEST_CASE("golden segmentations") {
  const auto cases = read_golden();
  REQUIRE(cases.size() == 30);
  for (const auto& c : cases) {
    CAPTURE(c.input);
    CHECK(segment_strings(c.input) == c.expected);
  }
}

TEST_CASE("precomposed and decomposed input agree") {
  CHECK(segment_strings("ã") == segment_strings("ã"));
  CHECK(segment_strings("ẽː") == segment_strings("ẽː"));
  CHECK(to_nfd("ã") == "ã");
}

TEST_CASE("tokens concatenate back to the stripped input") {
  for (const auto& c : read_golden()) {
    CAPTURE(c.input);
    CHECK(join_tokens(tokenize(c.input)) == strip_suprasegmentals(c.input));
  }
}

TEST_CASE("suprasegmental stripping is idempotent") {
  for (const std::string s : {"ˈka.ta", "ma˥˩", "tá ŋ̊", "ǎ‖b"}) {
    const auto once = strip_suprasegmentals(s);
    CHECK(strip_suprasegmentals(once) == once);
  }
}

TEST_CASE("stress placement does not change segments") {
  CHECK(segment_strings("ˈpata") == segment_strings("paˈta"));
  CHECK(segment_strings("pata") == segment_strings("ˌpaˈta"));
}

TEST_CASE("dangling modifiers are malformed") {
  CHECK_THROWS_AS(tokenize("ːa"), MalformedInput);
  CHECK_THROWS_AS(tokenize("̃"), MalformedInput);
  CHECK_THROWS_AS(tokenize("ʰ"), MalformedInput);
  CHECK_THROWS_AS(tokenize("t͡"), MalformedInput);
  try {
    tokenize("͡a");
    FAIL("expected MalformedInput");
  } catch (const MalformedInput& e) {
    CHECK(e.code_point() == U'͡');
  }
}

TEST_CASE("invalid UTF-8 is a data error") { CHECK_THROWS_AS(tokenize("\xC3\x28"), DataError); }

TEST_CASE("empty and all-suprasegmental input gives no tokens") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("ˈ ˌ").empty());
}

TEST_CASE("categories") {
  const auto t = tokenize("t͡ʃaːŋ");
  REQUIRE(t.size() == 3);
  CHECK(t[0].category == Category::consonant);
  CHECK(t[0].base == U't');
  CHECK(t[1].category == Category::vowel);
  CHECK(t[2].category == Category::consonant);
}

TEST_CASE("rule table parsing") {
  SUBCASE("default text reproduces the built-in table") {
    const auto parsed = parse_rules(default_rules_text());
    const auto& d = default_rules();
    CHECK(parsed.combining.ranges() == d.combining.ranges());
    CHECK(parsed.suprasegmentals.ranges() == d.suprasegmentals.ranges());
    CHECK(parsed.vowels.ranges() == d.vowels.ranges());
  }
  SUBCASE("tie bars can be split off") {
    std::string text(default_rules_text());
    text += "\n[options]\njoin_tie_bars = false\n";
    const auto rules = parse_rules(text);
    CHECK_FALSE(rules.join_tie_bars);
    CHECK(segment_strings("t͡ʃ", rules) == std::vector<std::string>{"t͡", "ʃ"});
  }
  SUBCASE("overlapping modifier and suprasegmental sets are rejected") {
    CHECK_THROWS_AS(parse_rules("[length]\nː\n[suprasegmental]\nː\n"), DataError);
  }
  SUBCASE("bad entries are rejected") {
    CHECK_THROWS_AS(parse_rules("[vowel]\nU+ZZZZ\n"), DataError);
    CHECK_THROWS_AS(parse_rules("[nonsense]\na\n"), DataError);
  }
}

TEST_CASE("code point sets merge ranges") {
  CodePointSet s;
  s.insert(10, 20);
  s.insert(21, 30);
  s.insert(5);
  CHECK(s.ranges().size() == 2);
  CHECK(s.contains(25));
  CHECK_FALSE(s.contains(6));
  CodePointSet t{U'a', U'b'};
  CHECK_FALSE(s.intersects(t));
  t.insert(15);
  CHECK(s.intersects(t));
}
