#pragma once

#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mars/corpus_io.hpp"

namespace mars {

/// A reference token with everything the masking knapsack needs.
struct AnnotatedToken {
  std::string token;
  PosTag pos = PosTag::Other;
  double idf = 0.0;
  double priority = 0.0;  // alpha(pos) / idf
  int cost = 1;           // 10 when context-carrying, 1 otherwise
  bool context_carrying = false;
};

using AlphaWeights = std::map<PosTag, double>;

/// ADJ 4, ADV 3, NOUN 2, OTHER 1.
AlphaWeights default_alpha();

struct MaskingDecision {
  std::vector<bool> masked;  // one flag per token
  double total_priority = 0.0;
  int total_cost = 0;
};

struct TextBlock {
  std::vector<std::string> tokens;
};
struct BlankBlock {
  int original_length = 0;
};
using Block = std::variant<TextBlock, BlankBlock>;

/// The reference with low-importance spans replaced by variable-length blanks.
/// Maximal runs collapse, so adjacent blocks always alternate in kind.
struct Template {
  std::vector<Block> blocks;
  double ratio = 0.0;
};

/// One maximum-length common-subsequence alignment between a and b, as
/// (index in a, index in b) pairs. Token comparison is case-insensitive.
/// Deterministic: of all maximum alignments, returns the lexicographically
/// smallest pair sequence (earliest indices in both lists).
std::vector<std::pair<int, int>> lcs_match(std::span<const std::string> a,
                                           std::span<const std::string> b);

/// Length-only variant (case-insensitive), used by ROUGE-L.
int lcs_length(std::span<const std::string> a, std::span<const std::string> b);

std::vector<AnnotatedToken> annotate_tokens(const Tokenization& reference_tokens,
                                            const Tokenization& context_tokens,
                                            const IdfTable& idf, const AlphaWeights& alpha,
                                            const PosTagger& tagger);

/// 0/1 knapsack over mask priorities/costs with budget floor(lambda * N).
/// Backtracking prefers the skip branch, so ties resolve to not masking the
/// later token.
MaskingDecision solve_masking(const std::vector<AnnotatedToken>& annotated, double lambda);

Template make_template(const Tokenization& reference_tokens, const MaskingDecision& decision,
                       double lambda);

/// One template per ratio; ratio 0 is the pure-text template.
std::vector<Template> templates_for_ratios(const Tokenization& reference_tokens,
                                           const Tokenization& context_tokens,
                                           const IdfTable& idf, const AlphaWeights& alpha,
                                           const PosTagger& tagger,
                                           const std::vector<double>& ratios);

/// {"ratio": r, "blocks": [{"t": [...]} | {"b": n}, ...]}
std::string template_to_json(const Template& tpl);
Template template_from_json(const std::string& json_text);

/// Flattened token slots of a template: text tokens in order, with each blank
/// expanded to `original_length` copies of `mask_token`.
std::vector<std::string> template_slots(const Template& tpl, const std::string& mask_token);

}  // namespace mars
