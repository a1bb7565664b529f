#include "sizesym/nn/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sizesym/error.hpp"
#include "sizesym/random.hpp"

namespace sizesym::nn {

namespace {

constexpr const char* kSpecialNames[] = {"[PAD]", "[MASK]", "[UNK]"};

int parse_int(const std::map<std::string, std::string>& values, const std::string& key, int fallback) {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("encoder config: '" + key + "' is not an integer: " + it->second);
  }
}

double parse_double(const std::map<std::string, std::string>& values, const std::string& key, double fallback) {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("encoder config: '" + key + "' is not a number: " + it->second);
  }
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

TokenVocabulary::TokenVocabulary(const std::set<std::string>& segments) : tokens_(segments.begin(), segments.end()) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw DataError("vocabulary: empty segment");
    ids_.emplace(tokens_[i], static_cast<int>(i) + kSpecials);
  }
}

int TokenVocabulary::id_of(const std::string& segment) const {
  auto it = ids_.find(segment);
  return it == ids_.end() ? kUnk : it->second;
}

std::string TokenVocabulary::token(int id) const {
  if (id >= 0 && id < kSpecials) return kSpecialNames[id];
  if (id < 0 || id >= size()) throw DataError("vocabulary id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id - kSpecials)];
}

std::vector<int> TokenVocabulary::encode(const std::vector<std::string>& segments) const {
  std::vector<int> ids;
  ids.reserve(segments.size());
  for (const auto& s : segments) ids.push_back(id_of(s));
  return ids;
}

std::string TokenVocabulary::to_text() const {
  std::string out;
  for (int id = 0; id < size(); ++id) out += token(id) + "\t" + std::to_string(id) + "\n";
  return out;
}

TokenVocabulary TokenVocabulary::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> tokens;
  int expected = 0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw RowError("vocabulary", lineno, "expected segment<TAB>id");
    const std::string seg = line.substr(0, tab);
    int id = -1;
    try {
      id = std::stoi(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw RowError("vocabulary", lineno, "bad id");
    }
    if (id != expected) throw RowError("vocabulary", lineno, "ids must be consecutive from 0");
    if (id < kSpecials) {
      if (seg != kSpecialNames[id]) throw RowError("vocabulary", lineno, "reserved id " + std::to_string(id) + " must be " + kSpecialNames[id]);
    } else {
      tokens.push_back(seg);
    }
    ++expected;
  }
  if (expected < kSpecials) throw DataError("vocabulary: missing reserved ids");
  std::set<std::string> unique(tokens.begin(), tokens.end());
  if (unique.size() != tokens.size() || !std::is_sorted(tokens.begin(), tokens.end())) {
    throw DataError("vocabulary: segments must be unique and sorted");
  }
  return TokenVocabulary(unique);
}

TokenVocabulary build_token_vocabulary(const std::vector<std::vector<std::string>>& words, int max_size) {
  std::set<std::string> segments;
  for (const auto& w : words) segments.insert(w.begin(), w.end());
  TokenVocabulary vocab(segments);
  if (vocab.size() > max_size) {
    throw ConfigError("vocabulary overflow: " + std::to_string(vocab.size()) + " ids exceed the configured maximum of " +
                      std::to_string(max_size));
  }
  return vocab;
}

void save_vocabulary(const TokenVocabulary& vocab, const std::string& path) { write_file_atomic(path, vocab.to_text()); }

TokenVocabulary load_vocabulary(const std::string& path) { return TokenVocabulary::from_text(read_file(path)); }

void EncoderConfig::validate() const {
  if (layers < 1 || hidden < 1 || heads < 1 || ffn < 1 || max_length < 1) throw ConfigError("encoder: sizes must be positive");
  if (hidden % heads != 0) throw ConfigError("encoder: hidden size must be divisible by the number of heads");
  if (vocab_size <= TokenVocabulary::kSpecials) throw ConfigError("encoder: vocab_size too small");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("encoder: dropout must lie in [0, 1)");
  if (!(init_std > 0.0) || !(ln_eps > 0.0)) throw ConfigError("encoder: init_std and ln_eps must be positive");
}

std::map<std::string, std::string> EncoderConfig::to_map() const {
  return {{"layers", std::to_string(layers)},       {"hidden", std::to_string(hidden)},
          {"heads", std::to_string(heads)},         {"ffn", std::to_string(ffn)},
          {"vocab_size", std::to_string(vocab_size)}, {"max_length", std::to_string(max_length)},
          {"dropout", format_double(dropout)},      {"init_std", format_double(init_std)},
          {"ln_eps", format_double(ln_eps)}};
}

EncoderConfig EncoderConfig::from_map(const std::map<std::string, std::string>& values) {
  EncoderConfig c;
  c.layers = parse_int(values, "layers", c.layers);
  c.hidden = parse_int(values, "hidden", c.hidden);
  c.heads = parse_int(values, "heads", c.heads);
  c.ffn = parse_int(values, "ffn", c.ffn);
  c.vocab_size = parse_int(values, "vocab_size", c.vocab_size);
  c.max_length = parse_int(values, "max_length", c.max_length);
  c.dropout = parse_double(values, "dropout", c.dropout);
  c.init_std = parse_double(values, "init_std", c.init_std);
  c.ln_eps = parse_double(values, "ln_eps", c.ln_eps);
  c.validate();
  return c;
}

SequenceBatch make_batch(const std::vector<std::vector<int>>& sequences, int max_length) {
  if (sequences.empty()) throw DataError("empty batch");
  SequenceBatch b;
  b.batch = static_cast<int>(sequences.size());
  for (const auto& s : sequences) {
    if (s.empty()) throw DataError("empty token sequence");
    if (static_cast<int>(s.size()) > max_length) {
      throw DataError("sequence of length " + std::to_string(s.size()) + " exceeds max_length " + std::to_string(max_length));
    }
    b.length = std::max(b.length, static_cast<int>(s.size()));
  }
  b.ids.assign(static_cast<std::size_t>(b.batch) * b.length, TokenVocabulary::kPad);
  b.mask.assign(b.ids.size(), 0);
  for (int i = 0; i < b.batch; ++i) {
    const auto& s = sequences[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < s.size(); ++j) {
      b.ids[static_cast<std::size_t>(i) * b.length + j] = s[j];
      b.mask[static_cast<std::size_t>(i) * b.length + j] = 1;
    }
  }
  return b;
}

Parameter* TransformerEncoder::add_parameter(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                             std::mt19937_64& rng, double init) {
  Matrix value(rows, cols);
  if (std::isnan(init)) {
    for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = normal(rng, config_.init_std);
  } else {
    value.setConstant(init);
  }
  params_.push_back(std::make_unique<Parameter>(name, std::move(value)));
  return params_.back().get();
}

TransformerEncoder::TransformerEncoder(EncoderConfig config, TokenVocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  if (vocab_.size() > config_.vocab_size) {
    throw ConfigError("vocabulary overflow: " + std::to_string(vocab_.size()) + " ids exceed vocab_size " +
                      std::to_string(config_.vocab_size));
  }
  std::mt19937_64 rng(derive_seed(seed, "encoder-init"));
  const double randn = std::nan("");
  const int h = config_.hidden;
  const int v = vocab_.size();
  token_embedding_ = add_parameter("embeddings.token", v, h, rng, randn);
  position_embedding_ = add_parameter("embeddings.position", config_.max_length, h, rng, randn);
  embed_gain_ = add_parameter("embeddings.norm.gain", 1, h, rng, 1.0);
  embed_shift_ = add_parameter("embeddings.norm.shift", 1, h, rng, 0.0);
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    Layer layer{};
    layer.wq = add_parameter(p + "attention.query.weight", h, h, rng, randn);
    layer.bq = add_parameter(p + "attention.query.bias", 1, h, rng, 0.0);
    layer.wk = add_parameter(p + "attention.key.weight", h, h, rng, randn);
    layer.bk = add_parameter(p + "attention.key.bias", 1, h, rng, 0.0);
    layer.wv = add_parameter(p + "attention.value.weight", h, h, rng, randn);
    layer.bv = add_parameter(p + "attention.value.bias", 1, h, rng, 0.0);
    layer.wo = add_parameter(p + "attention.output.weight", h, h, rng, randn);
    layer.bo = add_parameter(p + "attention.output.bias", 1, h, rng, 0.0);
    layer.norm1_gain = add_parameter(p + "attention.norm.gain", 1, h, rng, 1.0);
    layer.norm1_shift = add_parameter(p + "attention.norm.shift", 1, h, rng, 0.0);
    layer.w1 = add_parameter(p + "ffn.in.weight", h, config_.ffn, rng, randn);
    layer.b1 = add_parameter(p + "ffn.in.bias", 1, config_.ffn, rng, 0.0);
    layer.w2 = add_parameter(p + "ffn.out.weight", config_.ffn, h, rng, randn);
    layer.b2 = add_parameter(p + "ffn.out.bias", 1, h, rng, 0.0);
    layer.norm2_gain = add_parameter(p + "ffn.norm.gain", 1, h, rng, 1.0);
    layer.norm2_shift = add_parameter(p + "ffn.norm.shift", 1, h, rng, 0.0);
    layers_.push_back(layer);
  }
  mlm_weight_ = add_parameter("mlm.weight", h, v, rng, randn);
  mlm_bias_ = add_parameter("mlm.bias", 1, v, rng, 0.0);
}

std::vector<Parameter*> TransformerEncoder::parameters() const {
  std::vector<Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

Parameter& TransformerEncoder::parameter(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw Error("encoder has no parameter '" + name + "'");
}

std::size_t TransformerEncoder::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->size());
  return n;
}

void TransformerEncoder::freeze() {
  frozen_ = true;
  for (auto& p : params_) {
    p->frozen = true;
    p->grad.resize(0, 0);
  }
}

Var TransformerEncoder::forward(Graph& g, const SequenceBatch& batch, bool train, std::mt19937_64& rng,
                                std::vector<Matrix>* attention_out) const {
  if (batch.batch <= 0 || batch.length <= 0 || batch.ids.size() != static_cast<std::size_t>(batch.batch) * batch.length ||
      batch.mask.size() != batch.ids.size()) {
    throw DataError("malformed sequence batch");
  }
  if (batch.length > config_.max_length) throw DataError("sequence length exceeds max_length");
  for (int id : batch.ids) {
    if (id < 0 || id >= vocab_.size()) throw DataError("token id " + std::to_string(id) + " out of range");
  }
  std::vector<int> positions(batch.ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i % static_cast<std::size_t>(batch.length));
  const double p = config_.dropout;
  const double eps = config_.ln_eps;

  Var x = add(embedding(g.parameter(*token_embedding_), batch.ids), embedding(g.parameter(*position_embedding_), positions));
  x = dropout(layer_norm(x, g.parameter(*embed_gain_), g.parameter(*embed_shift_), eps), p, train, rng);
  if (attention_out) attention_out->clear();
  for (const auto& L : layers_) {
    Var q = add_bias(matmul(x, g.parameter(*L.wq)), g.parameter(*L.bq));
    Var k = add_bias(matmul(x, g.parameter(*L.wk)), g.parameter(*L.bk));
    Var v = add_bias(matmul(x, g.parameter(*L.wv)), g.parameter(*L.bv));
    std::vector<Matrix> probs;
    Var a = attention(q, k, v, batch.batch, batch.length, config_.heads, batch.mask, attention_out ? &probs : nullptr);
    if (attention_out) attention_out->insert(attention_out->end(), probs.begin(), probs.end());
    Var o = dropout(add_bias(matmul(a, g.parameter(*L.wo)), g.parameter(*L.bo)), p, train, rng);
    x = layer_norm(add(x, o), g.parameter(*L.norm1_gain), g.parameter(*L.norm1_shift), eps);
    Var f = gelu(add_bias(matmul(x, g.parameter(*L.w1)), g.parameter(*L.b1)));
    f = dropout(add_bias(matmul(f, g.parameter(*L.w2)), g.parameter(*L.b2)), p, train, rng);
    x = layer_norm(add(x, f), g.parameter(*L.norm2_gain), g.parameter(*L.norm2_shift), eps);
  }
  return x;
}

Var TransformerEncoder::mlm_logits(Graph& g, Var hidden_rows) const {
  return add_bias(matmul(hidden_rows, g.parameter(*mlm_weight_)), g.parameter(*mlm_bias_));
}

Matrix TransformerEncoder::encode(const std::vector<std::vector<std::string>>& words, int chunk) const {
  if (!frozen_) throw Error("encode requires a frozen encoder");
  if (chunk < 1) throw ConfigError("encode: chunk must be positive");
  Matrix out(static_cast<Eigen::Index>(words.size()), config_.hidden);
  std::mt19937_64 unused(0);
  for (std::size_t start = 0; start < words.size(); start += static_cast<std::size_t>(chunk)) {
    const std::size_t end = std::min(words.size(), start + static_cast<std::size_t>(chunk));
    std::vector<std::vector<int>> ids;
    for (std::size_t i = start; i < end; ++i) {
      if (words[i].empty()) throw DataError("cannot encode an empty tokenization");
      ids.push_back(vocab_.encode(words[i]));
    }
    const auto batch = make_batch(ids, config_.max_length);
    Graph g;
    Var h = forward(g, batch, false, unused);
    Var pooled = mean_pool(h, batch.batch, batch.length, batch.mask);
    out.middleRows(static_cast<Eigen::Index>(start), pooled.rows()) = pooled.value();
  }
  return out;
}

Eigen::RowVectorXd TransformerEncoder::encode_word(std::string_view ipa, const TokenizerRules& rules) const {
  auto segments = segment_strings(ipa, rules);
  if (segments.empty()) throw DataError("cannot encode an empty tokenization: '" + std::string(ipa) + "'");
  return encode({segments}).row(0);
}

Checkpoint TransformerEncoder::to_checkpoint(std::uint64_t seed, int epoch) const {
  Checkpoint c;
  c.config = config_.to_map();
  std::string tokens;
  for (int id = TokenVocabulary::kSpecials; id < vocab_.size(); ++id) {
    if (!tokens.empty()) tokens += ' ';
    tokens += vocab_.token(id);
  }
  c.config["vocabulary"] = tokens;
  c.config["frozen"] = frozen_ ? "1" : "0";
  c.seed = seed;
  c.epoch = epoch;
  for (const auto& p : params_) {
    NamedArray a;
    a.name = p->name;
    a.rows = static_cast<std::size_t>(p->value.rows());
    a.cols = static_cast<std::size_t>(p->value.cols());
    a.values.assign(p->value.data(), p->value.data() + p->value.size());
    c.params.push_back(std::move(a));
  }
  return c;
}

TransformerEncoder TransformerEncoder::from_checkpoint(const Checkpoint& checkpoint) {
  auto values = checkpoint.config;
  auto vocab_it = values.find("vocabulary");
  if (vocab_it == values.end()) throw ConfigError("checkpoint lacks a vocabulary entry");
  std::set<std::string> segments;
  std::istringstream in(vocab_it->second);
  for (std::string s; in >> s;) segments.insert(s);
  const bool frozen = values.contains("frozen") && values.at("frozen") == "1";
  values.erase("vocabulary");
  values.erase("frozen");
  TransformerEncoder enc(EncoderConfig::from_map(values), TokenVocabulary(segments), checkpoint.seed);
  if (checkpoint.params.size() != enc.params_.size()) throw DataError("checkpoint parameter count does not match the encoder");
  for (const auto& a : checkpoint.params) {
    Parameter& p = enc.parameter(a.name);
    if (static_cast<Eigen::Index>(a.rows) != p.value.rows() || static_cast<Eigen::Index>(a.cols) != p.value.cols()) {
      throw DataError("checkpoint parameter '" + a.name + "' has the wrong shape");
    }
    std::copy(a.values.begin(), a.values.end(), p.value.data());
  }
  if (frozen) enc.freeze();
  return enc;
}

void MaskingPolicy::validate() const {
  if (!(mask_probability > 0.0 && mask_probability <= 1.0)) {
    throw ConfigError("masking probability must lie in (0, 1]; zero leaves no supervised positions");
  }
  if (replace_with_mask < 0 || replace_with_random < 0 || keep < 0 ||
      std::abs(replace_with_mask + replace_with_random + keep - 1.0) > 1e-12) {
    throw ConfigError("masking replacement fractions must be non-negative and sum to 1");
  }
}

MaskedBatch apply_masking(const SequenceBatch& batch, const MaskingPolicy& policy, const TokenVocabulary& vocab,
                          std::mt19937_64& rng) {
  policy.validate();
  MaskedBatch m;
  m.input = batch;
  for (std::size_t i = 0; i < batch.ids.size(); ++i) {
    if (!batch.mask[i]) continue;
    if (uniform01(rng) >= policy.mask_probability) continue;
    m.rows.push_back(static_cast<int>(i));
    m.targets.push_back(batch.ids[i]);
    const double r = uniform01(rng);
    if (r < policy.replace_with_mask) {
      m.input.ids[i] = TokenVocabulary::kMask;
    } else if (r < policy.replace_with_mask + policy.replace_with_random && vocab.segment_count() > 0) {
      m.input.ids[i] = TokenVocabulary::kSpecials + static_cast<int>(rng() % static_cast<std::uint64_t>(vocab.segment_count()));
    }
  }
  return m;
}

MlmMetrics evaluate_mlm(const TransformerEncoder& encoder, const std::vector<MaskedBatch>& batches) {
  MlmMetrics m;
  double loss = 0.0;
  std::size_t correct = 0;
  std::mt19937_64 unused(0);
  for (const auto& b : batches) {
    if (b.rows.empty()) continue;
    Graph g;
    Var h = encoder.forward(g, b.input, false, unused);
    Var logits = encoder.mlm_logits(g, select_rows(h, b.rows));
    Var ce = cross_entropy(logits, b.targets);
    loss += ce.value()(0, 0) * static_cast<double>(b.rows.size());
    const Matrix& z = logits.value();
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
      Eigen::Index arg = 0;
      z.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
      correct += arg == b.targets[i] ? 1 : 0;
    }
    m.positions += b.rows.size();
  }
  if (m.positions == 0) throw DataError("masked-LM evaluation has no supervised positions");
  m.loss = loss / static_cast<double>(m.positions);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.positions);
  return m;
}

PretrainReport mlm_pretrain(TransformerEncoder& encoder, const std::vector<std::vector<std::string>>& words,
                            const PretrainConfig& config) {
  config.masking.validate();
  config.adam.validate();
  if (config.epochs < 1 || config.batch_size < 1) throw ConfigError("pretraining needs epochs >= 1 and batch_size >= 1");
  if (encoder.frozen()) throw Error("cannot pretrain a frozen encoder");
  PretrainReport report;
  std::vector<std::vector<int>> sequences;
  for (const auto& w : words) {
    if (w.empty()) continue;
    if (static_cast<int>(w.size()) > encoder.config().max_length) {
      ++report.skipped;
      continue;
    }
    sequences.push_back(encoder.vocabulary().encode(w));
  }
  if (sequences.empty()) throw DataError("pretraining corpus is empty");

  std::mt19937_64 split_rng(derive_seed(config.seed, "mlm-split"));
  std::vector<std::size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_eval = std::min(config.eval_words, sequences.size() / 10);
  std::vector<std::vector<int>> eval_seqs;
  std::vector<std::vector<int>> train_seqs;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_eval ? eval_seqs : train_seqs).push_back(sequences[order[i]]);
  if (eval_seqs.empty()) eval_seqs = train_seqs;
  report.train_words = train_seqs.size();
  report.eval_words = eval_seqs.size();
  report.chance_accuracy = 1.0 / std::max(1, encoder.vocabulary().segment_count());

  std::mt19937_64 eval_rng(derive_seed(config.seed, "mlm-eval"));
  std::vector<MaskedBatch> eval_batches;
  for (std::size_t s = 0; s < eval_seqs.size(); s += static_cast<std::size_t>(config.batch_size)) {
    const std::size_t e = std::min(eval_seqs.size(), s + static_cast<std::size_t>(config.batch_size));
    std::vector<std::vector<int>> chunk(eval_seqs.begin() + static_cast<std::ptrdiff_t>(s),
                                        eval_seqs.begin() + static_cast<std::ptrdiff_t>(e));
    eval_batches.push_back(apply_masking(make_batch(chunk, encoder.config().max_length), config.masking,
                                         encoder.vocabulary(), eval_rng));
  }
  report.initial = evaluate_mlm(encoder, eval_batches);

  Adam adam(encoder.parameters(), config.adam);
  std::mt19937_64 rng(derive_seed(config.seed, "mlm-train"));
  std::vector<std::size_t> idx(train_seqs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    double loss_sum = 0.0;
    std::size_t loss_positions = 0;
    for (std::size_t s = 0; s < idx.size(); s += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t e = std::min(idx.size(), s + static_cast<std::size_t>(config.batch_size));
      std::vector<std::vector<int>> chunk;
      for (std::size_t i = s; i < e; ++i) chunk.push_back(train_seqs[idx[i]]);
      const auto masked = apply_masking(make_batch(chunk, encoder.config().max_length), config.masking,
                                        encoder.vocabulary(), rng);
      if (masked.rows.empty()) continue;
      Graph g;
      Var h = encoder.forward(g, masked.input, true, rng);
      Var loss = cross_entropy(encoder.mlm_logits(g, select_rows(h, masked.rows)), masked.targets);
      adam.zero_grad();
      g.backward(loss);
      adam.step();
      loss_sum += loss.value()(0, 0) * static_cast<double>(masked.rows.size());
      loss_positions += masked.rows.size();
      ++report.steps;
    }
    report.epoch_train_loss.push_back(loss_positions ? loss_sum / static_cast<double>(loss_positions) : 0.0);
  }
  report.final = evaluate_mlm(encoder, eval_batches);
  encoder.freeze();
  return report;
}

}  // namespace sizesym::nn
