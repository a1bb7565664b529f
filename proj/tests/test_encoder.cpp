#include <doctest.h>

#include <random>

#include "common.hpp"
#include "sizesym/error.hpp"
#include "sizesym/nn/encoder.hpp"

using namespace sizesym;
using namespace sizesym::nn;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig c;
  c.layers = 1;
  c.hidden = 16;
  c.heads = 2;
  c.ffn = 32;
  c.max_length = 8;
  return c;
}

std::vector<std::vector<std::string>> tiny_corpus(std::size_t n, std::uint64_t seed) {
  // Alternating consonant-vowel words: the masked segment's class is predictable.
  const std::vector<std::string> cons{"p", "t", "k", "m"};
  const std::vector<std::string> vows{"a", "i", "u"};
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> words;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> w;
    const std::size_t len = 2 + rng() % 5;
    for (std::size_t j = 0; j < len; ++j) w.push_back(j % 2 == 0 ? cons[rng() % 4] : vows[rng() % 3]);
    words.push_back(w);
  }
  return words;
}

}  // namespace

TEST_CASE("token vocabulary") {
  const TokenVocabulary v({"t", "a", "ŋ"});
  CHECK(v.size() == 6);
  CHECK(v.segment_count() == 3);
  CHECK(v.id_of("a") == 3);
  CHECK(v.id_of("zz") == TokenVocabulary::kUnk);
  CHECK(v.token(TokenVocabulary::kMask) == "[MASK]");
  CHECK(v.encode({"ŋ", "a"}) == std::vector<int>{5, 3});
  CHECK(TokenVocabulary::from_text(v.to_text()) == v);
  CHECK_THROWS_AS(v.token(6), DataError);
  CHECK_THROWS_AS(TokenVocabulary::from_text("[PAD]\t0\n[MASK]\t1\n[UNK]\t2\nb\t3\na\t4\n"), DataError);
  CHECK_THROWS_AS(TokenVocabulary::from_text("[PAD]\t0\n[UNK]\t1\n"), DataError);
  CHECK_THROWS_AS(build_token_vocabulary({{"a", "b", "c"}}, 5), ConfigError);
  CHECK(build_token_vocabulary({{"a", "b"}, {"b", "c"}}, 6).segment_count() == 3);

  testing::TempDir dir("vocab");
  save_vocabulary(v, dir.file("v.tsv"));
  CHECK(load_vocabulary(dir.file("v.tsv")) == v);
}

TEST_CASE("batches pad to the longest sequence") {
  const auto b = make_batch({{3, 4}, {5, 6, 7}}, 8);
  CHECK(b.batch == 2);
  CHECK(b.length == 3);
  CHECK(b.ids == std::vector<int>{3, 4, 0, 5, 6, 7});
  CHECK(b.mask == std::vector<std::uint8_t>{1, 1, 0, 1, 1, 1});
  CHECK_THROWS_AS(make_batch({}, 8), DataError);
  CHECK_THROWS_AS(make_batch({{}}, 8), DataError);
  CHECK_THROWS_AS(make_batch({{3, 3, 3}}, 2), DataError);
}

TEST_CASE("encoder config validation and round trip") {
  auto c = tiny_config();
  CHECK(EncoderConfig::from_map(c.to_map()).to_map() == c.to_map());
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(EncoderConfig::from_map({{"hidden", "abc"}}), ConfigError);
}

TEST_CASE("checkpoint reload reproduces the forward pass") {
  const auto words = tiny_corpus(40, 1);
  auto vocab = build_token_vocabulary(words, 115);
  TransformerEncoder enc(tiny_config(), vocab, 7);
  enc.freeze();
  testing::TempDir dir("enc");
  save_checkpoint(enc.to_checkpoint(7, 3), dir.file("enc.ckpt"));
  const auto loaded = TransformerEncoder::from_checkpoint(load_checkpoint(dir.file("enc.ckpt")));
  CHECK(loaded.frozen());
  CHECK(loaded.vocabulary() == vocab);
  const Matrix a = enc.encode(words);
  const Matrix b = loaded.encode(words);
  CHECK(a == b);
  CHECK(a.rows() == 40);
  CHECK(a.cols() == 16);
}

TEST_CASE("eval mode is deterministic and independent of batch order") {
  const auto words = tiny_corpus(20, 2);
  TransformerEncoder enc(tiny_config(), build_token_vocabulary(words, 115), 8);
  CHECK_THROWS_AS(enc.encode(words), Error);
  enc.freeze();
  const Matrix a = enc.encode(words, 64);
  const Matrix b = enc.encode(words, 3);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
  auto reversed = words;
  std::reverse(reversed.begin(), reversed.end());
  const Matrix r = enc.encode(reversed);
  for (Eigen::Index i = 0; i < 20; ++i) CHECK((a.row(i) - r.row(19 - i)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((enc.encode_word("pat") - enc.encode({{"p", "a", "t"}})).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("padding does not leak into real positions") {
  const auto words = tiny_corpus(10, 3);
  TransformerEncoder enc(tiny_config(), build_token_vocabulary(words, 115), 9);
  std::mt19937_64 rng(0);
  const auto v = enc.vocabulary();
  Graph g1;
  const Matrix alone = enc.forward(g1, make_batch({v.encode({"p", "a"})}, 8), false, rng).value();
  Graph g2;
  const Matrix padded =
      enc.forward(g2, make_batch({v.encode({"p", "a"}), v.encode({"t", "i", "k", "u", "m"})}, 8), false, rng).value();
  CHECK((alone - padded.topRows(2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("freezing stops every update") {
  const auto words = tiny_corpus(10, 4);
  TransformerEncoder enc(tiny_config(), build_token_vocabulary(words, 115), 10);
  enc.freeze();
  for (auto* p : enc.parameters()) CHECK(p->frozen);
  CHECK_THROWS_AS(Adam(enc.parameters()), Error);
  PretrainConfig pc;
  CHECK_THROWS_AS(mlm_pretrain(enc, words, pc), Error);
}

TEST_CASE("masking policy") {
  const TokenVocabulary v({"a", "b", "c"});
  std::vector<std::vector<int>> seqs(200, std::vector<int>{3, 4, 5, 3, 4});
  const auto batch = make_batch(seqs, 8);
  std::mt19937_64 rng(11);
  const auto m = apply_masking(batch, {}, v, rng);
  CHECK(m.rows.size() == m.targets.size());
  const double rate = static_cast<double>(m.rows.size()) / 1000.0;
  CHECK(rate == doctest::Approx(0.15).epsilon(0.2));
  std::size_t masked = 0;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    CHECK(m.targets[i] == batch.ids[static_cast<std::size_t>(m.rows[i])]);
    if (m.input.ids[static_cast<std::size_t>(m.rows[i])] == TokenVocabulary::kMask) ++masked;
  }
  CHECK(static_cast<double>(masked) / static_cast<double>(m.rows.size()) == doctest::Approx(0.8).epsilon(0.1));
  MaskingPolicy bad;
  bad.keep = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("masked-LM training lowers the held-out loss") {
  const auto words = tiny_corpus(600, 5);
  TransformerEncoder enc(tiny_config(), build_token_vocabulary(words, 115), 12);
  PretrainConfig pc;
  pc.epochs = 3;
  pc.batch_size = 32;
  pc.adam.learning_rate = 3e-3;
  pc.eval_words = 60;
  const auto report = mlm_pretrain(enc, words, pc);
  CHECK(enc.frozen());
  CHECK(report.eval_words == 60);
  CHECK(report.train_words == 540);
  CHECK(report.epoch_train_loss.size() == 3);
  CHECK(report.final.loss < 0.8 * report.initial.loss);
  CHECK(report.final.accuracy > report.chance_accuracy);
}

TEST_CASE("Adam") {
  Parameter p("p", Matrix::Constant(1, 2, 3.0));
  Adam opt({&p}, {0.1});
  // Minimise ||p||^2.
  for (int i = 0; i < 300; ++i) {
    opt.zero_grad();
    p.grad = 2.0 * p.value;
    opt.step();
  }
  CHECK(opt.steps() == 300);
  CHECK(p.value.cwiseAbs().maxCoeff() < 0.05);
  // The first bias-corrected step moves each coordinate by the learning rate.
  Parameter q("q", Matrix::Constant(1, 1, 1.0));
  Adam one({&q}, {0.01});
  one.zero_grad();
  q.grad(0, 0) = 123.0;
  one.step();
  CHECK(q.value(0, 0) == doctest::Approx(0.99).epsilon(1e-9));
  AdamConfig bad;
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
