#include "mars/lm_adapter.hpp"

#include <algorithm>
#include <cmath>

namespace mars {

Vector softmax(const Vector& logits) {
  if (logits.empty()) return {};
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_logit);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

LmState ar_advance(const AutoregressiveLm& lm, const LmState& state, TokenId token) {
  if (token < 0 || token >= lm.vocab_size())
    throw ValidationError("token id " + std::to_string(token) + " outside vocabulary of size " +
                          std::to_string(lm.vocab_size()));
  return lm.advance(state, token);
}

LmState encode_prefix(const AutoregressiveLm& lm, std::span<const TokenId> tokens) {
  LmState state = lm.initial_state();
  for (TokenId t : tokens) state = ar_advance(lm, state, t);
  return state;
}

TokenDistribution ar_distribution(const AutoregressiveLm& lm, const LmState& state, double xi) {
  if (!(xi > 0.0)) throw ValidationError("temperature must be positive");
  TokenDistribution dist;
  dist.logits = lm.logits_from_hidden(state.hidden);
  Vector scaled(dist.logits.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = dist.logits[i] / xi;
  dist.probs = softmax(scaled);
  return dist;
}

double perplexity(const AutoregressiveLm& lm, std::span<const TokenId> tokens) {
  if (tokens.size() < 2)
    throw ValidationError("perplexity needs at least two tokens");
  LmState state = ar_advance(lm, lm.initial_state(), tokens[0]);
  double sum = 0.0;
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const auto dist = ar_distribution(lm, state, 1.0);
    if (tokens[t] < 0 || tokens[t] >= lm.vocab_size())
      throw ValidationError("token id " + std::to_string(tokens[t]) + " outside vocabulary");
    sum += std::log(std::max(dist.probs[static_cast<std::size_t>(tokens[t])], 1e-300));
    state = lm.advance(state, tokens[t]);
  }
  return std::exp(-sum / static_cast<double>(tokens.size() - 1));
}

std::vector<std::string> mlm_fill(const MaskedLm& mlm, const Template& tpl,
                                  const std::string& context) {
  auto slots = template_slots(tpl, MaskedLm::kMaskToken);
  const auto context_tokens = word_tokenize(context);
  if (slots.size() + context_tokens.size() > static_cast<std::size_t>(mlm.max_sequence_length()))
    throw ValidationError("template plus context exceeds the masked-LM budget of " +
                          std::to_string(mlm.max_sequence_length()) + " tokens");
  const auto filled = mlm.predict_masks(slots, context);
  std::size_t next = 0;
  std::vector<std::string> out;
  out.reserve(slots.size());
  for (const auto& slot : slots) {
    if (slot == MaskedLm::kMaskToken) {
      if (next >= filled.size())
        throw ValidationError("masked-LM adapter returned too few predictions");
      out.push_back(filled[next++]);
    } else {
      out.push_back(slot);
    }
  }
  return out;
}

std::string detokenize(const AutoregressiveLm& lm, std::span<const TokenId> tokens) {
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (TokenId t : tokens) words.push_back(lm.token_text(t));
  return join_tokens(words);
}

}  // namespace mars
