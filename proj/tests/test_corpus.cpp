#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "common.hpp"
#include "sizesym/corpus.hpp"
#include "sizesym/error.hpp"

using namespace sizesym;
using sizesym::testing::TempDir;
using sizesym::testing::write_text;

namespace {

std::string balanced_rows(const std::string& language, const std::string& family) {
  std::string out;
  for (int i = 0; i < 15; ++i) {
    out += language + "\t" + family + "\ts" + std::to_string(i) + "\tti\tsmall\n";
    out += language + "\t" + family + "\tl" + std::to_string(i) + "\tpa\tlarge\n";
  }
  return out;
}

}  // namespace

TEST_CASE("lexicon round trip") {
  TempDir dir("lexicon");
  const std::string header = "language\tfamily\tlemma\tipa\tsize\n";
  write_text(dir.file("a.tsv"), header + balanced_rows("aaa", "F1") + balanced_rows("bbb", "F2"));
  const auto lex = load_lexicon(dir.file("a.tsv"));
  CHECK(lex.size() == 60);
  CHECK(lex.languages() == std::vector<std::string>{"aaa", "bbb"});
  CHECK(lex.family_of("bbb") == "F2");
  CHECK(lex.warnings().empty());
  CHECK(lex.counts().at("aaa") == LabelCounts{15, 15});

  save_lexicon(lex, dir.file("b.tsv"));
  CHECK(load_lexicon(dir.file("b.tsv")).entries() == lex.entries());
}

TEST_CASE("lexicon columns may come in any order; CSV works") {
  TempDir dir("lexicon-csv");
  write_text(dir.file("a.csv"), "size,ipa,lemma,family,language\nsmall,ti,tiny,F,x\nlarge,pa,big,F,x\n");
  const auto lex = load_lexicon(dir.file("a.csv"), LexiconFormat::csv);
  REQUIRE(lex.size() == 2);
  CHECK(lex.entries()[0].lemma == "tiny");
  CHECK(lex.entries()[1].size == SizeLabel::large);
  CHECK_FALSE(lex.warnings().empty());
}

TEST_CASE("lexicon errors are row addressed") {
  TempDir dir("lexicon-bad");
  const std::string header = "language\tfamily\tlemma\tipa\tsize\n";
  auto row_of = [&](const std::string& body) -> std::size_t {
    write_text(dir.file("bad.tsv"), header + body);
    try {
      load_lexicon(dir.file("bad.tsv"));
    } catch (const RowError& e) {
      CHECK(e.path() == dir.file("bad.tsv"));
      return e.row();
    }
    FAIL("expected RowError");
    return 0;
  };
  CHECK(row_of("x\tF\ta\tti\tsmall\nx\tF\tb\tpa\thuge\n") == 3);
  CHECK(row_of("x\tF\ta\tti\tsmall\nx\tF\tb\tpa\n") == 3);
  CHECK(row_of("x\tF\ta\tːa\tsmall\n") == 2);
  CHECK(row_of("x\tF\ta\tti\tsmall\n\nx\tG\tb\tpa\tlarge\n") == 4);
  CHECK(row_of("\tF\ta\tti\tsmall\n") == 2);

  write_text(dir.file("nohead.tsv"), "language\tfamily\tipa\tsize\n");
  CHECK_THROWS_AS(load_lexicon(dir.file("nohead.tsv")), RowError);
  CHECK_THROWS_AS(load_lexicon(dir.file("missing.tsv")), DataError);
}

TEST_CASE("trainability needs two of each label") {
  Lexicon lex({{"a", "x", "F", "ti", SizeLabel::small},
               {"b", "x", "F", "ti", SizeLabel::small},
               {"c", "x", "F", "pa", SizeLabel::large}});
  CHECK_THROWS_AS(lex.require_trainable("x"), DataError);
  CHECK_THROWS_AS(lex.family_of("y"), DataError);
  CHECK_THROWS_AS(Lexicon({{"a", "x", "F", "ti", SizeLabel::small}, {"b", "x", "G", "ti", SizeLabel::small}}),
                  DataError);
}

TEST_CASE("pretraining corpus skips bad lines") {
  TempDir dir("pretrain");
  write_text(dir.file("p.tsv"), "en\tkat\npata\n\nen\tːx\nde\thʊnt\n");
  const auto corpus = load_pretrain_corpus(dir.file("p.tsv"));
  CHECK(corpus.items.size() == 3);
  CHECK(corpus.skipped == 1);
  REQUIRE(corpus.warnings.size() == 1);
  CHECK(corpus.warnings[0].find(":4:") != std::string::npos);
  CHECK(corpus.per_language.at("en") == 1);
  CHECK(corpus.per_language.at("") == 1);

  write_text(dir.file("empty.tsv"), "ːx\n");
  CHECK_THROWS_AS(load_pretrain_corpus(dir.file("empty.tsv")), DataError);
}

TEST_CASE("checkpoint round trip is exact") {
  TempDir dir("ckpt");
  Checkpoint c;
  c.config = {{"hidden", "128"}, {"note", "a b c"}};
  c.seed = 0xDEADBEEFCAFEULL;
  c.epoch = 2;
  c.params.push_back({"w", 2, 3, {1.0, -0.0, 1e-300, 3.141592653589793, -2.5e17, 0.1}});
  c.params.push_back({"b", 1, 1, {42.0}});
  save_checkpoint(c, dir.file("c.ckpt"));
  const auto back = load_checkpoint(dir.file("c.ckpt"));
  CHECK(back == c);
  CHECK(std::signbit(back.param("w").values[1]));
  CHECK_THROWS_AS(back.param("zzz"), DataError);

  SUBCASE("config echo mismatch lists keys") {
    try {
      load_checkpoint(dir.file("c.ckpt"), {{"hidden", "64"}});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("hidden") != std::string::npos);
    }
  }
  SUBCASE("truncation is detected") {
    auto bytes = read_file(dir.file("c.ckpt"));
    write_text(dir.file("t.ckpt"), bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(load_checkpoint(dir.file("t.ckpt")), DataError);
    write_text(dir.file("x.ckpt"), bytes + "zz");
    CHECK_THROWS_AS(load_checkpoint(dir.file("x.ckpt")), DataError);
    write_text(dir.file("m.ckpt"), "not a checkpoint\n");
    CHECK_THROWS_AS(load_checkpoint(dir.file("m.ckpt")), DataError);
  }
}

TEST_CASE("size labels parse") {
  CHECK(parse_size_label("small") == SizeLabel::small);
  CHECK(parse_size_label("large") == SizeLabel::large);
  CHECK_THROWS_AS(parse_size_label("medium"), DataError);
}
