#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sizesym/corpus.hpp"
#include "sizesym/ipa.hpp"
#include "sizesym/nn/adam.hpp"
#include "sizesym/nn/graph.hpp"

namespace sizesym::nn {

/// Segment <-> id map with three reserved ids.
class TokenVocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kMask = 1;
  static constexpr int kUnk = 2;
  static constexpr int kSpecials = 3;

  TokenVocabulary() = default;
  explicit TokenVocabulary(const std::set<std::string>& segments);

  int size() const { return static_cast<int>(tokens_.size()) + kSpecials; }
  int segment_count() const { return static_cast<int>(tokens_.size()); }
  /// kUnk for unseen segments.
  int id_of(const std::string& segment) const;
  std::string token(int id) const;
  std::vector<int> encode(const std::vector<std::string>& segments) const;

  /// `segment<TAB>id` lines, ids ascending; specials are written as [PAD] [MASK] [UNK].
  std::string to_text() const;
  static TokenVocabulary from_text(const std::string& text);

  friend bool operator==(const TokenVocabulary& a, const TokenVocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
};

/// Throws ConfigError if the vocabulary would exceed `max_size` ids.
TokenVocabulary build_token_vocabulary(const std::vector<std::vector<std::string>>& words, int max_size);
void save_vocabulary(const TokenVocabulary& vocab, const std::string& path);
TokenVocabulary load_vocabulary(const std::string& path);

struct EncoderConfig {
  int layers = 2;
  int hidden = 128;
  int heads = 4;
  int ffn = 256;
  int vocab_size = 115;  ///< upper bound; the embedding table is sized by the data vocabulary
  int max_length = 32;
  double dropout = 0.1;
  double init_std = 0.02;
  double ln_eps = 1e-12;

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static EncoderConfig from_map(const std::map<std::string, std::string>& values);
};

/// Right-padded id matrix stored row-major as batch*length entries.
struct SequenceBatch {
  int batch = 0;
  int length = 0;
  std::vector<int> ids;
  std::vector<std::uint8_t> mask;  ///< 1 for real positions
};

/// Pads to the longest sequence. Throws DataError on empty or overlong input.
SequenceBatch make_batch(const std::vector<std::vector<int>>& sequences, int max_length);

/// Post-LN transformer encoder with learned positions and a linear MLM head.
class TransformerEncoder {
 public:
  TransformerEncoder(EncoderConfig config, TokenVocabulary vocab, std::uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  const TokenVocabulary& vocabulary() const { return vocab_; }

  std::vector<Parameter*> parameters() const;
  Parameter& parameter(const std::string& name) const;
  std::size_t parameter_count() const;

  /// Hidden states, (batch*length) x hidden. Dropout is active only when train is set.
  Var forward(Graph& graph, const SequenceBatch& batch, bool train, std::mt19937_64& rng,
              std::vector<Matrix>* attention = nullptr) const;
  Var mlm_logits(Graph& graph, Var hidden_rows) const;

  bool frozen() const { return frozen_; }
  void freeze();

  /// Mean-pooled eval-mode vectors, one row per word. Requires a frozen encoder.
  Matrix encode(const std::vector<std::vector<std::string>>& words, int chunk = 64) const;
  Eigen::RowVectorXd encode_word(std::string_view ipa, const TokenizerRules& rules = default_rules()) const;

  Checkpoint to_checkpoint(std::uint64_t seed, int epoch) const;
  static TransformerEncoder from_checkpoint(const Checkpoint& checkpoint);

 private:
  struct Layer {
    Parameter *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    Parameter *norm1_gain, *norm1_shift;
    Parameter *w1, *b1, *w2, *b2;
    Parameter *norm2_gain, *norm2_shift;
  };

  Parameter* add_parameter(const std::string& name, Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                           double init);

  EncoderConfig config_;
  TokenVocabulary vocab_;
  std::vector<std::unique_ptr<Parameter>> params_;
  Parameter* token_embedding_ = nullptr;
  Parameter* position_embedding_ = nullptr;
  Parameter* embed_gain_ = nullptr;
  Parameter* embed_shift_ = nullptr;
  std::vector<Layer> layers_;
  Parameter* mlm_weight_ = nullptr;
  Parameter* mlm_bias_ = nullptr;
  bool frozen_ = false;
};

struct MaskingPolicy {
  double mask_probability = 0.15;
  double replace_with_mask = 0.8;
  double replace_with_random = 0.1;
  double keep = 0.1;

  void validate() const;
};

struct MaskedBatch {
  SequenceBatch input;
  std::vector<int> rows;     ///< flat positions carrying a prediction target
  std::vector<int> targets;  ///< original ids at those positions
};

MaskedBatch apply_masking(const SequenceBatch& batch, const MaskingPolicy& policy, const TokenVocabulary& vocab,
                          std::mt19937_64& rng);

struct MlmMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t positions = 0;
};

/// Eval-mode masked-token cross-entropy and top-1 accuracy.
MlmMetrics evaluate_mlm(const TransformerEncoder& encoder, const std::vector<MaskedBatch>& batches);

struct PretrainConfig {
  int epochs = 2;
  int batch_size = 64;
  AdamConfig adam;
  MaskingPolicy masking;
  std::uint64_t seed = 0;
  std::size_t eval_words = 1000;  ///< held-out words, capped at a tenth of the corpus
};

struct PretrainReport {
  MlmMetrics initial;
  MlmMetrics final;
  std::vector<double> epoch_train_loss;
  double chance_accuracy = 0.0;
  std::size_t train_words = 0;
  std::size_t eval_words = 0;
  std::size_t skipped = 0;  ///< words longer than max_length
  std::size_t steps = 0;
};

/// Masked-LM training, then freezes the encoder.
PretrainReport mlm_pretrain(TransformerEncoder& encoder, const std::vector<std::vector<std::string>>& words,
                            const PretrainConfig& config);

}  // namespace sizesym::nn
