#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mars/corpus_io.hpp"
#include "mars/lm_adapter.hpp"

namespace mars {

/// Deterministic 64-bit FNV-1a string hash, shared by the hash backends.
std::uint64_t fnv1a(std::string_view s);

/// Gaussian vector with entries N(0, 1/dim), fully determined by the seed.
/// Hand-rolled Box-Muller so results are identical across platforms.
Vector hash_gaussian_vector(std::uint64_t seed, int dim);

/// Word-level autoregressive LM over a fixed vocabulary. Embeddings are
/// seeded hash vectors, the hidden state is a decayed average of recent
/// embeddings, and the output head is the tied embedding matrix (linear).
/// Deterministic, self-contained, usable offline.
class HashLm final : public AutoregressiveLm {
 public:
  explicit HashLm(std::vector<std::string> vocabulary, int dim = 32,
                  std::uint64_t seed = 0x6d617273u);
  static HashLm from_corpus(const std::vector<EvalRecord>& records, int dim = 32,
                            std::uint64_t seed = 0x6d617273u);

  int vocab_size() const override { return static_cast<int>(vocab_.size()); }
  int hidden_dim() const override { return dim_; }
  int max_sequence_length() const override { return 1024; }
  LmState initial_state() const override;
  LmState advance(const LmState& state, TokenId token) const override;
  Vector logits_from_hidden(const Vector& hidden) const override;
  Vector project_gradient(const Vector& grad_logits) const override;
  Vector token_embedding(TokenId token) const override;
  std::vector<TokenId> tokenize(const std::string& text) const override;
  std::string token_text(TokenId token) const override;
  std::vector<TokenId> separator() const override { return {sep_}; }
  std::unique_ptr<AutoregressiveLm> clone() const override;

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> index_;
  std::vector<Vector> embed_;
  int dim_;
  TokenId unk_ = 0, sep_ = 0;
  double decay_ = 0.85;
  double scale_ = 4.0;
};

/// Test LM with explicit per-prefix next-token distributions. The hidden
/// vector IS the current distribution, so the output head is log().
class ScriptedLm final : public AutoregressiveLm {
 public:
  ScriptedLm(std::vector<std::string> vocabulary, Vector default_probs = {});

  /// Distribution to emit after consuming exactly `prefix`.
  void script(const std::vector<TokenId>& prefix, Vector probs);
  void script_words(const std::vector<std::string>& prefix_words,
                    const std::vector<std::pair<std::string, double>>& probs);
  TokenId id(const std::string& token) const;

  int vocab_size() const override { return static_cast<int>(vocab_.size()); }
  int hidden_dim() const override { return static_cast<int>(vocab_.size()); }
  int max_sequence_length() const override { return 1024; }
  LmState initial_state() const override;
  LmState advance(const LmState& state, TokenId token) const override;
  Vector logits_from_hidden(const Vector& hidden) const override;
  Vector project_gradient(const Vector& grad_logits) const override;
  Vector token_embedding(TokenId token) const override;
  std::vector<TokenId> tokenize(const std::string& text) const override;
  std::string token_text(TokenId token) const override;
  std::vector<TokenId> separator() const override;
  std::unique_ptr<AutoregressiveLm> clone() const override;

 private:
  Vector probs_for(const std::vector<TokenId>& prefix) const;

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> index_;
  std::map<std::vector<TokenId>, Vector> script_;
  Vector default_probs_;
};

/// Tiny analytic LM for gradient checks: logits = W h (exactly linear head),
/// state update h' = tanh(A h + emb(t)). All parameters seeded.
class LinearToyLm final : public AutoregressiveLm {
 public:
  LinearToyLm(int vocab, int dim, std::uint64_t seed);

  int vocab_size() const override { return vocab_n_; }
  int hidden_dim() const override { return dim_; }
  int max_sequence_length() const override { return 256; }
  LmState initial_state() const override;
  LmState advance(const LmState& state, TokenId token) const override;
  Vector logits_from_hidden(const Vector& hidden) const override;
  Vector project_gradient(const Vector& grad_logits) const override;
  Vector token_embedding(TokenId token) const override;
  std::vector<TokenId> tokenize(const std::string& text) const override;
  std::string token_text(TokenId token) const override;
  std::vector<TokenId> separator() const override { return {0}; }
  std::unique_ptr<AutoregressiveLm> clone() const override;

  /// A reproducible hidden vector, for randomized gradient trials.
  Vector random_hidden(std::uint64_t seed) const;

 private:
  int vocab_n_, dim_;
  std::vector<Vector> head_;   // vocab x dim
  std::vector<Vector> trans_;  // dim x dim
  std::vector<Vector> embed_;  // vocab x dim
};

/// Masked LM that predicts each slot as the vocabulary token whose hash
/// embedding best matches the mean of nearby visible tokens. Deterministic.
class HashMlm final : public MaskedLm {
 public:
  explicit HashMlm(std::vector<std::string> vocabulary, int dim = 32,
                   std::uint64_t seed = 0x6d6c6du);
  static HashMlm from_corpus(const std::vector<EvalRecord>& records, int dim = 32);

  int max_sequence_length() const override { return 512; }
  std::vector<std::string> predict_masks(const std::vector<std::string>& slots,
                                         const std::string& context) const override;

 private:
  std::vector<std::string> vocab_;
  std::vector<Vector> embed_;
  int dim_;
};

/// Test MLM emitting a fixed token for every slot.
class MockMlm final : public MaskedLm {
 public:
  explicit MockMlm(std::string fill_token = "cat", int budget = 512)
      : fill_(std::move(fill_token)), budget_(budget) {}
  int max_sequence_length() const override { return budget_; }
  std::vector<std::string> predict_masks(const std::vector<std::string>& slots,
                                         const std::string& context) const override;

 private:
  std::string fill_;
  int budget_;
};

/// Order-sensitive sentence encoder: mean of hashed unigram vectors plus a
/// down-weighted mean of hashed bigram vectors. Deterministic, offline.
class HashNgramEncoder final : public SentenceEncoder {
 public:
  explicit HashNgramEncoder(int dim = 64, double bigram_weight = 0.5);
  int dim() const override { return dim_; }
  SentenceVector encode(const std::string& text) const override;
  std::unique_ptr<SentenceEncoder> clone() const override;

 private:
  int dim_;
  double bigram_weight_;
};

/// Mean of static per-word vectors loaded from a text file
/// ("token v1 .. vD" per line). Out-of-vocabulary words fall back to a
/// deterministic hash vector. Order-free by construction.
class StaticWordVectorEncoder final : public SentenceEncoder {
 public:
  StaticWordVectorEncoder(std::unordered_map<std::string, Vector> table, int dim);
  static StaticWordVectorEncoder load(const std::string& path);

  int dim() const override { return dim_; }
  SentenceVector encode(const std::string& text) const override;
  std::unique_ptr<SentenceEncoder> clone() const override;

 private:
  std::unordered_map<std::string, Vector> table_;
  int dim_;
};

/// Scripted text -> vector encoder for tests; unscripted texts fall back to
/// a deterministic hash vector.
class MockEncoder final : public SentenceEncoder {
 public:
  explicit MockEncoder(int dim) : dim_(dim) {}
  void set(const std::string& text, Vector v);
  int dim() const override { return dim_; }
  SentenceVector encode(const std::string& text) const override;
  std::unique_ptr<SentenceEncoder> clone() const override;

 private:
  int dim_;
  std::map<std::string, Vector> table_;
};

/// "hash" -> HashNgramEncoder; "static" -> StaticWordVectorEncoder from
/// static_vectors_path (resolved against MARS_MODEL_DIR when relative).
/// Unknown backends throw ConfigError.
std::unique_ptr<SentenceEncoder> make_encoder(const std::string& backend,
                                              const std::string& static_vectors_path = "");

/// "hash" -> HashLm built from the given records. Unknown backends throw
/// ConfigError.
std::unique_ptr<AutoregressiveLm> make_lm(const std::string& backend,
                                          const std::vector<EvalRecord>& records);

}  // namespace mars
