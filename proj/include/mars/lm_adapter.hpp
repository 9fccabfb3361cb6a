#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mars/error.hpp"
#include "mars/masking.hpp"

namespace mars {

using TokenId = std::int32_t;
using Vector = std::vector<double>;

/// Immutable decoding state: the prefix consumed so far and the hidden vector
/// at its last position. `advance` returns a new value, never mutates.
struct LmState {
  std::vector<TokenId> prefix;
  Vector hidden;
  std::shared_ptr<const void> cache;  // adapter-private, opaque
};

struct TokenDistribution {
  Vector logits;
  Vector probs;  // softmax(logits / temperature)
};

struct SentenceVector {
  Vector values;
};

/// Autoregressive LM capability: next-token logits, hidden states, token
/// embeddings. Adapters are single-threaded; parallel pipelines clone one
/// instance per worker.
class AutoregressiveLm {
 public:
  virtual ~AutoregressiveLm() = default;

  virtual int vocab_size() const = 0;
  virtual int hidden_dim() const = 0;
  virtual int max_sequence_length() const = 0;

  virtual LmState initial_state() const = 0;
  virtual LmState advance(const LmState& state, TokenId token) const = 0;

  virtual Vector logits_from_hidden(const Vector& hidden) const = 0;
  /// Pullback of a logit-space gradient through the output head, i.e.
  /// d(dot(grad_logits, logits(h)))/dh. Exact for linear heads.
  virtual Vector project_gradient(const Vector& grad_logits) const = 0;

  virtual Vector token_embedding(TokenId token) const = 0;

  virtual std::vector<TokenId> tokenize(const std::string& text) const = 0;
  virtual std::string token_text(TokenId token) const = 0;
  /// Tokens separating the context from the reference template in the prefix.
  virtual std::vector<TokenId> separator() const = 0;

  virtual std::unique_ptr<AutoregressiveLm> clone() const = 0;
};

/// Masked LM capability: fixed-slot infilling (one prediction per mask).
class MaskedLm {
 public:
  static constexpr const char* kMaskToken = "[MASK]";

  virtual ~MaskedLm() = default;
  virtual int max_sequence_length() const = 0;
  /// One argmax token per kMaskToken slot, in slot order.
  virtual std::vector<std::string> predict_masks(const std::vector<std::string>& slots,
                                                 const std::string& context) const = 0;
};

/// Sentence encoder capability: mean-pooled sentence vectors.
class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual int dim() const = 0;
  virtual SentenceVector encode(const std::string& text) const = 0;
  virtual std::unique_ptr<SentenceEncoder> clone() const = 0;
};

/// Numerically stable softmax.
Vector softmax(const Vector& logits);

/// Validates the token id, then advances. States are immutable values.
LmState ar_advance(const AutoregressiveLm& lm, const LmState& state, TokenId token);

/// Folds ar_advance over a token list starting from the initial state.
LmState encode_prefix(const AutoregressiveLm& lm, std::span<const TokenId> tokens);

/// softmax(logits / xi); requires xi > 0.
TokenDistribution ar_distribution(const AutoregressiveLm& lm, const LmState& state, double xi);

/// exp(-(1/(n-1)) * sum_{t=2..n} log p(x_t | x_<t)); requires n >= 2.
double perplexity(const AutoregressiveLm& lm, std::span<const TokenId> tokens);

/// Expands each blank to original_length mask slots and fills them with the
/// adapter's argmax predictions. Output length equals the template slot count.
std::vector<std::string> mlm_fill(const MaskedLm& mlm, const Template& tpl,
                                  const std::string& context);

std::string detokenize(const AutoregressiveLm& lm, std::span<const TokenId> tokens);

}  // namespace mars
