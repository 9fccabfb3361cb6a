#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mars/augment.hpp"
#include "mars/corpus_io.hpp"
#include "mars/scoring.hpp"

namespace mars {

enum class AttackKind { reorder, retrieve };

struct AttackSpec {
  AttackKind kind = AttackKind::reorder;
  double reorder_ratio = 0.5;  // must lie in (0, 1]
  std::uint64_t seed = 0;
};

/// Clipped unigram precision times brevity penalty; case-insensitive.
double bleu1(std::span<const std::string> candidate, std::span<const std::string> reference);

/// LCS F-measure: P = LCS/|cand|, R = LCS/|ref|, F = 2PR/(P+R).
double rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference);

/// Shuffles ceil(ratio * N) token positions (chosen uniformly without
/// replacement) among themselves. Token multiset is preserved. Single-token
/// candidates come back unchanged with a warning on stderr.
std::string attack_reorder(const std::string& candidate, double ratio, std::uint64_t seed);

/// Uniformly samples one sentence of the context.
std::string attack_retrieve(const std::string& context, std::uint64_t seed);

/// Sample Pearson correlation; requires equal lengths >= 3 and both series
/// non-constant.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// One-sided sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
double sign_test_p(int wins, int losses);

struct CorrelationCell {
  std::string metric;
  std::string system;
  int n = 0;
  std::optional<double> r;  // absent when n < 3 or a series is constant
};

struct CorrelationTable {
  std::vector<CorrelationCell> cells;
};

/// Pearson r per (metric, system) between metric values and mean human
/// ratings. Metrics are "mars" plus whatever baselines the reports carry.
CorrelationTable correlate(const std::vector<EvalRecord>& records,
                           const std::vector<ScoreReport>& reports);

struct SweepRow {
  double lambda_max = 0.0;
  int n = 0;                        // rated candidates pooled across systems
  std::optional<double> r;          // pooled Pearson r
  std::optional<double> sigma_bar;  // mean per-candidate similarity std; absent for one ref
};

struct SweepConfig {
  const AutoregressiveLm* lm = nullptr;
  const SentenceEncoder* encoder = nullptr;
  const IdfTable* idf = nullptr;
  AlphaWeights alpha;
  const PosTagger* tagger = nullptr;
  SelfPlanConfig selfplan;
  int sigma = 3;
  double q = 0.75;
  std::uint64_t seed = 13;
};

/// Runs the full pipeline once per lambda_max with ratios {0, 0.2, ...,
/// lambda_max} and reports the pooled correlation and similarity spread.
std::vector<SweepRow> sweep_lambda_max(const std::vector<EvalRecord>& records,
                                       const std::vector<double>& lambda_grid,
                                       const SweepConfig& cfg);

std::string correlation_to_csv(const CorrelationTable& table);
std::string correlation_to_jsonl(const CorrelationTable& table);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::string sweep_to_jsonl(const std::vector<SweepRow>& rows);

}  // namespace mars
