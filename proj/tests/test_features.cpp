#include <doctest.h>

#include <algorithm>
#include <map>

#include "sizesym/error.hpp"
#include "sizesym/features.hpp"

using namespace sizesym;

namespace {

WordEntry word(const std::string& ipa, SizeLabel size = SizeLabel::small) { return {"w", "x", "F", ipa, size}; }

}  // namespace

TEST_CASE("vocabulary is sorted and indexable") {
  const auto vocab = build_vocabulary({word("pata"), word("t͡ʃiː"), word("ŋa")});
  CHECK(vocab.segments() == std::vector<std::string>{"a", "iː", "p", "t", "t͡ʃ", "ŋ"});
  CHECK(vocab.index_of("t") == 3);
  CHECK_FALSE(vocab.index_of("k").has_value());
  CHECK_THROWS_AS(build_vocabulary({}), DataError);
}

TEST_CASE("featurize counts segments and reports unknowns") {
  const auto vocab = build_vocabulary({word("pata"), word("ki")});
  FeaturizeStats stats;
  const auto v = featurize(word("papaxa"), vocab, {}, &stats);
  CHECK(v(*vocab.index_of("p")) == 2);
  CHECK(v(*vocab.index_of("a")) == 3);
  CHECK(v.sum() == 5);
  CHECK(stats.out_of_vocabulary == 1);
}

TEST_CASE("bag-of-segments ignores order") {
  const auto vocab = build_vocabulary({word("pata")});
  CHECK(featurize(word("pata"), vocab) == featurize(word("tapa"), vocab));
  CHECK(featurize(word("ˈpata"), vocab) == featurize(word("paˈta"), vocab));
}

TEST_CASE("membership keys drop length only") {
  CHECK(membership_key(tokenize("iː")[0]) == "i");
  CHECK(membership_key(tokenize("nʲ")[0]) == "nʲ");
  CHECK(membership_key(tokenize("ã")[0]) == to_nfd("ã"));
}

TEST_CASE("ablation filters") {
  const auto t = tokenize("pamiːŋka");
  auto kept = [&](AblationKind kind) {
    const auto f = make_filter(kind);
    std::string out;
    for (const auto& tok : t) {
      if (f.retains(tok)) out += tok.text;
    }
    return out;
  };
  CHECK(kept(AblationKind::none) == "pamiːŋka");
  CHECK(kept(AblationKind::scrambled_labels) == "pamiːŋka");
  CHECK(kept(AblationKind::no_vowels) == "pmŋk");
  CHECK(kept(AblationKind::plosives_only) == "pk");
  CHECK(kept(AblationKind::nasals_only) == "mŋ");
  CHECK(kept(AblationKind::high_frequency_only) == "pamiːŋka");
  CHECK(make_filter(AblationKind::high_frequency_only).retains(tokenize("t͡ʃ")[0]));
  CHECK_FALSE(make_filter(AblationKind::high_frequency_only).retains(tokenize("ɓ")[0]));
  CHECK(default_segment_sets().high_frequency.size() == 23);

  const auto vocab = build_vocabulary({word("pamiːŋka")});
  const auto f = make_filter(AblationKind::nasals_only);
  FeaturizeStats stats;
  CHECK(featurize(word("pamiːŋka"), vocab, f, &stats).sum() == 2);
  CHECK(stats.filtered == 5);
  CHECK(filter_vocabulary(vocab, f).segments() == std::vector<std::string>{"m", "ŋ"});
  CHECK(retained_columns(vocab, f).sum() == 2);
}

TEST_CASE("ablation kinds round trip through names") {
  for (auto k : kAllAblations) CHECK(parse_ablation_kind(to_string(k)) == k);
  CHECK_THROWS(parse_ablation_kind("bogus"));
}

TEST_CASE("label scrambling permutes labels only") {
  std::vector<WordEntry> entries;
  for (int i = 0; i < 40; ++i) {
    entries.push_back({"l" + std::to_string(i), "x", "F", "pa", i < 13 ? SizeLabel::small : SizeLabel::large});
  }
  const auto a = scramble_labels(entries, 7);
  const auto b = scramble_labels(entries, 7);
  const auto c = scramble_labels(entries, 8);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(label_vector(a).sum() == label_vector(entries).sum());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].lemma == entries[i].lemma);
}

TEST_CASE("feature matrix rows match featurize") {
  const std::vector<WordEntry> entries{word("pata"), word("kiki", SizeLabel::large)};
  const auto vocab = build_vocabulary(entries);
  const auto X = feature_matrix(entries, vocab);
  REQUIRE(X.rows() == 2);
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(X.row(i).transpose() == featurize(entries[static_cast<std::size_t>(i)], vocab).cast<double>());
  }
  CHECK(label_vector(entries) == Eigen::Vector2i(0, 1));
}
