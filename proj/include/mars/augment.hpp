#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mars/corpus_io.hpp"
#include "mars/lm_adapter.hpp"
#include "mars/masking.hpp"

namespace mars {

/// Reinforced self-planning hyperparameters. Defaults follow the published
/// setting: eta 0.02, xi 1.3, k 3.
struct SelfPlanConfig {
  double eta = 0.02;
  double xi = 1.3;
  int iterations = 3;    // k; 0 degenerates to vanilla sampling
  int future_window = 5;  // cap on future tokens used for the reward
  double gamma = 1.0;     // recorded for completeness; the per-step update has no discount
  bool greedy = false;    // argmax instead of sampling when emitting tokens
};

struct InfillCandidate {
  std::vector<TokenId> tokens;
  double ppl_with_next_block = 0.0;
};

struct AugmentationEntry {
  double ratio = 0.0;
  std::string text;
};

/// The human reference (ratio 0) plus one augmented reference per ratio,
/// sorted by ratio ascending.
struct AugmentationSet {
  std::vector<AugmentationEntry> entries;
};

struct SelfPlanStats {
  long perturbation_steps = 0;  // gradient steps actually applied
  long fallbacks = 0;           // steps aborted on a non-finite gradient
};

/// Running prefix with cumulative next-token log-probability. The first
/// token of a sequence is never scored, matching perplexity().
struct DecodeCursor {
  LmState state;
  double logprob_sum = 0.0;
  int token_count = 0;
};

DecodeCursor make_cursor(const AutoregressiveLm& lm);
DecodeCursor advance_cursor(const AutoregressiveLm& lm, const DecodeCursor& cursor,
                            TokenId token);
/// Perplexity of the sequence a cursor has consumed so far.
double cursor_perplexity(const DecodeCursor& cursor);

/// Sum over future tokens of log p(w | h) at temperature xi.
double self_planning_reward(const AutoregressiveLm& lm, const Vector& hidden,
                            std::span<const TokenId> future, double xi);

struct SelfPlanObjective {
  double value = 0.0;
  Vector grad;  // with respect to the hidden vector
};

/// The per-step objective eps * log pi(a*|h_d) * r(h_d) and its full
/// product-rule gradient in hidden space. `pi_theta_astar` is the
/// unperturbed policy's probability of a*, the denominator of eps.
SelfPlanObjective self_planning_objective(const AutoregressiveLm& lm, const Vector& hidden_d,
                                          std::span<const TokenId> future, TokenId astar,
                                          double pi_theta_astar, double xi);

/// k normalized gradient updates on a copy of the hidden vector; returns the
/// temperature-xi distribution of the perturbed state. Empty future or k = 0
/// returns the unperturbed distribution. The update direction descends the
/// objective, which drives both the current argmax and the future tokens
/// toward higher probability (both log factors are negative, so ascending
/// the raw product would do the opposite).
Vector self_planning_perturbed_probs(const AutoregressiveLm& lm, const LmState& state,
                                     std::span<const TokenId> future, const SelfPlanConfig& cfg,
                                     SelfPlanStats* stats = nullptr);

/// One guided decoding step: perturb, then draw a seeded sample (or the
/// argmax under cfg.greedy).
TokenId self_planning_step(const AutoregressiveLm& lm, const LmState& state,
                           std::span<const TokenId> future, const SelfPlanConfig& cfg,
                           std::mt19937_64& rng, SelfPlanStats* stats = nullptr);

struct InfillResult {
  std::vector<TokenId> tokens;
  std::vector<InfillCandidate> trace;  // every candidate the judge considered
};

/// Generate-Judge-Revise for one blank: grows a candidate one token at a
/// time up to sigma + blank_len tokens, records PPL(prefix + candidate +
/// next block) after each token, and returns the PPL minimum (ties: the
/// shorter candidate).
InfillResult infill_blank(const AutoregressiveLm& lm, const DecodeCursor& prefix,
                          int blank_len, std::span<const TokenId> next_text_block, int sigma,
                          const SelfPlanConfig& cfg, std::mt19937_64& rng,
                          SelfPlanStats* stats = nullptr);

/// Fills every blank of the template left to right, prefixing the LM with
/// context + separator. Returns the reference portion only.
std::string augment_reference(const AutoregressiveLm& lm, const std::string& context,
                              const Template& tpl, const SelfPlanConfig& cfg, int sigma,
                              std::uint64_t seed, SelfPlanStats* stats = nullptr);

/// One entry per ratio; entry 0 is the untouched (preprocessed) reference.
/// Ratios must start at 0 and ascend. Deterministic for a fixed seed.
AugmentationSet build_augmentation_set(const AutoregressiveLm& lm, const EvalRecord& record,
                                       const std::vector<double>& ratios, const IdfTable& idf,
                                       const AlphaWeights& alpha, const PosTagger& tagger,
                                       const SelfPlanConfig& cfg, int sigma,
                                       std::uint64_t seed);

/// Fixed-length baseline: each blank is filled with exactly original_length
/// tokens by the masked-LM adapter, so every entry has the reference's token
/// count.
AugmentationSet naive_augment(const MaskedLm& mlm, const EvalRecord& record,
                              const std::vector<double>& ratios, const IdfTable& idf,
                              const AlphaWeights& alpha, const PosTagger& tagger);

/// Batch augmentation across records. OpenMP-parallel with one LM clone per
/// worker; `augment_records_serial` is the reference implementation and
/// produces identical output.
std::vector<AugmentationSet> augment_records(const AutoregressiveLm& lm,
                                             const std::vector<EvalRecord>& records,
                                             const std::vector<double>& ratios,
                                             const IdfTable& idf, const AlphaWeights& alpha,
                                             const PosTagger& tagger, const SelfPlanConfig& cfg,
                                             int sigma, std::uint64_t seed);
std::vector<AugmentationSet> augment_records_serial(
    const AutoregressiveLm& lm, const std::vector<EvalRecord>& records,
    const std::vector<double>& ratios, const IdfTable& idf, const AlphaWeights& alpha,
    const PosTagger& tagger, const SelfPlanConfig& cfg, int sigma, std::uint64_t seed);

/// Stable per-record, per-ratio seed derivation (splitmix-style), so batch
/// results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t base, const std::string& record_id, int index);

/// JSONL persistence: {"id": ..., "augmentations": [{"ratio": r, "text": t}, ...]}
void save_augmentations(const std::vector<EvalRecord>& records,
                        const std::vector<AugmentationSet>& sets, const std::string& path);
std::map<std::string, AugmentationSet> load_augmentations(const std::string& path);

}  // namespace mars
