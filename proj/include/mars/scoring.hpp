#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mars/augment.hpp"
#include "mars/corpus_io.hpp"
#include "mars/lm_adapter.hpp"

namespace mars {

/// Normalized geometric progression a * q^i with sum 1, largest weight first.
struct WeightVector {
  std::vector<double> weights;
  double q = 1.0;
  double scale = 0.0;  // the start value a
};

/// a = (1-q)/(1-q^n) for q < 1, a = 1/n for q = 1. Requires q in (0, 1].
WeightVector geometric_weights(int n, double q);

/// Clamped to [-1, 1]; zero vectors are rejected.
double cosine(const SentenceVector& u, const SentenceVector& v);

struct MarsBreakdown {
  double score = 0.0;
  std::vector<double> similarities;  // candidate vs each augmentation entry
  WeightVector weights;
};

MarsBreakdown mars_score_detailed(const std::string& candidate, const AugmentationSet& augset,
                                  double q, const SentenceEncoder& encoder);
double mars_score(const std::string& candidate, const AugmentationSet& augset, double q,
                  const SentenceEncoder& encoder);

struct BaselineOptions {
  bool bleu1 = false;
  bool rouge_l = false;
  bool ppl = false;
  const AutoregressiveLm* lm = nullptr;  // required when ppl is on
};

struct CandidateScore {
  std::string system_id;
  double mars = 0.0;
  std::vector<double> similarities;
  std::vector<double> weights;
  std::map<std::string, double> baselines;
};

struct ScoreReport {
  std::string record_id;
  double q = 0.0;
  std::vector<CandidateScore> candidates;
};

/// Scores every candidate of every record against its augmentation set.
/// OpenMP-parallel across records with per-worker encoder clones;
/// `score_records_serial` is the reference implementation with identical
/// output.
std::vector<ScoreReport> score_records(const std::vector<EvalRecord>& records,
                                       const std::map<std::string, AugmentationSet>& augsets,
                                       double q, const SentenceEncoder& encoder,
                                       const BaselineOptions& baselines = {});
std::vector<ScoreReport> score_records_serial(
    const std::vector<EvalRecord>& records,
    const std::map<std::string, AugmentationSet>& augsets, double q,
    const SentenceEncoder& encoder, const BaselineOptions& baselines = {});

void save_reports(const std::vector<ScoreReport>& reports, const std::string& path);
std::vector<ScoreReport> load_reports(const std::string& path);

}  // namespace mars
