#include "mars/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mars/bench.hpp"

namespace mars {

WeightVector geometric_weights(int n, double q) {
  if (n < 1) throw ValidationError("weight count must be positive");
  if (!(q > 0.0) || q > 1.0)
    throw ValidationError("common ratio q must lie in (0, 1], got " + std::to_string(q));
  WeightVector wv;
  wv.q = q;
  wv.scale = q == 1.0 ? 1.0 / static_cast<double>(n)
                      : (1.0 - q) / (1.0 - std::pow(q, static_cast<double>(n)));
  wv.weights.resize(static_cast<std::size_t>(n));
  double w = wv.scale;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    wv.weights[static_cast<std::size_t>(i)] = w;
    sum += w;
    w *= q;
  }
  for (double& x : wv.weights) x /= sum;  // pin the sum to 1 exactly as floats allow
  return wv;
}

double cosine(const SentenceVector& u, const SentenceVector& v) {
  if (u.values.size() != v.values.size())
    throw ValidationError("cosine of vectors with different dimensions");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    dot += u.values[i] * v.values[i];
    nu += u.values[i] * u.values[i];
    nv += v.values[i] * v.values[i];
  }
  if (nu <= 0.0 || nv <= 0.0) throw ValidationError("cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

MarsBreakdown mars_score_detailed(const std::string& candidate, const AugmentationSet& augset,
                                  double q, const SentenceEncoder& encoder) {
  if (augset.entries.empty()) throw ValidationError("augmentation set is empty");
  MarsBreakdown out;
  out.weights = geometric_weights(static_cast<int>(augset.entries.size()), q);
  const SentenceVector cand = encoder.encode(candidate);
  out.similarities.reserve(augset.entries.size());
  for (const auto& entry : augset.entries)
    out.similarities.push_back(cosine(cand, encoder.encode(entry.text)));
  if (out.similarities.size() == 1) {
    out.score = out.similarities.front();  // single reference degenerates to plain cosine
  } else {
    out.score = 0.0;
    for (std::size_t i = 0; i < out.similarities.size(); ++i)
      out.score += out.weights.weights[i] * out.similarities[i];
  }
  return out;
}

double mars_score(const std::string& candidate, const AugmentationSet& augset, double q,
                  const SentenceEncoder& encoder) {
  return mars_score_detailed(candidate, augset, q, encoder).score;
}

namespace {

CandidateScore score_one(const EvalRecord& record, const Candidate& candidate,
                         const AugmentationSet& augset, double q,
                         const SentenceEncoder& encoder, const BaselineOptions& baselines) {
  CandidateScore cs;
  cs.system_id = candidate.system_id;
  const std::string cand_text = preprocess_text(candidate.text);
  const auto detail = mars_score_detailed(cand_text, augset, q, encoder);
  cs.mars = detail.score;
  cs.similarities = detail.similarities;
  cs.weights = detail.weights.weights;

  if (baselines.bleu1 || baselines.rouge_l) {
    const auto cand_tokens = word_tokenize(cand_text).tokens;
    const auto ref_tokens = word_tokenize(preprocess_text(record.human_reference)).tokens;
    if (baselines.bleu1 && !cand_tokens.empty())
      cs.baselines["bleu1"] = bleu1(cand_tokens, ref_tokens);
    if (baselines.rouge_l && !cand_tokens.empty() && !ref_tokens.empty())
      cs.baselines["rougeL"] = rouge_l(cand_tokens, ref_tokens);
  }
  if (baselines.ppl) {
    if (!baselines.lm) throw ValidationError("perplexity baseline requires an LM adapter");
    const auto ids = baselines.lm->tokenize(cand_text);
    if (ids.size() >= 2) cs.baselines["ppl"] = perplexity(*baselines.lm, ids);
  }
  return cs;
}

template <typename Fn>
std::vector<ScoreReport> score_batch(const std::vector<EvalRecord>& records, Fn&& per_record,
                                     bool parallel) {
  std::vector<ScoreReport> out(records.size());
  const int n = static_cast<int>(records.size());
  if (!parallel) {
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = per_record(i, nullptr);
    return out;
  }
  // Exceptions cannot unwind out of an OpenMP region; stash the first one.
  std::exception_ptr error;
#pragma omp parallel
  {
    std::unique_ptr<SentenceEncoder> local;
#pragma omp for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = per_record(i, &local);
      } catch (...) {
#pragma omp critical(mars_score_batch_error)
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

ScoreReport report_for(const EvalRecord& record,
                       const std::map<std::string, AugmentationSet>& augsets, double q,
                       const SentenceEncoder& encoder, const BaselineOptions& baselines) {
  auto it = augsets.find(record.id);
  if (it == augsets.end())
    throw ValidationError("no augmentation set for record id: " + record.id);
  ScoreReport report;
  report.record_id = record.id;
  report.q = q;
  for (const auto& cand : record.candidates)
    report.candidates.push_back(score_one(record, cand, it->second, q, encoder, baselines));
  return report;
}

}  // namespace

std::vector<ScoreReport> score_records(const std::vector<EvalRecord>& records,
                                       const std::map<std::string, AugmentationSet>& augsets,
                                       double q, const SentenceEncoder& encoder,
                                       const BaselineOptions& baselines) {
  return score_batch(
      records,
      [&](int i, std::unique_ptr<SentenceEncoder>* local) {
        const SentenceEncoder* worker = &encoder;
        if (local) {
          if (!*local) *local = encoder.clone();
          worker = local->get();
        }
        return report_for(records[static_cast<std::size_t>(i)], augsets, q, *worker, baselines);
      },
      /*parallel=*/true);
}

std::vector<ScoreReport> score_records_serial(
    const std::vector<EvalRecord>& records,
    const std::map<std::string, AugmentationSet>& augsets, double q,
    const SentenceEncoder& encoder, const BaselineOptions& baselines) {
  return score_batch(
      records,
      [&](int i, std::unique_ptr<SentenceEncoder>*) {
        return report_for(records[static_cast<std::size_t>(i)], augsets, q, encoder, baselines);
      },
      /*parallel=*/false);
}

void save_reports(const std::vector<ScoreReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  for (const auto& report : reports) {
    nlohmann::ordered_json j;
    j["id"] = report.record_id;
    j["q"] = report.q;
    j["candidates"] = nlohmann::ordered_json::array();
    for (const auto& c : report.candidates) {
      nlohmann::ordered_json cj;
      cj["system"] = c.system_id;
      cj["mars"] = c.mars;
      cj["similarities"] = c.similarities;
      cj["weights"] = c.weights;
      cj["baselines"] = nlohmann::ordered_json::object();
      for (const auto& [name, value] : c.baselines) cj["baselines"][name] = value;
      j["candidates"].push_back(std::move(cj));
    }
    out << j.dump() << '\n';
  }
}

std::vector<ScoreReport> load_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scores file: " + path);
  std::vector<ScoreReport> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed score report at line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    ScoreReport report;
    report.record_id = j.at("id").get<std::string>();
    report.q = j.at("q").get<double>();
    for (const auto& cj : j.at("candidates")) {
      CandidateScore c;
      c.system_id = cj.at("system").get<std::string>();
      c.mars = cj.at("mars").get<double>();
      c.similarities = cj.at("similarities").get<std::vector<double>>();
      c.weights = cj.at("weights").get<std::vector<double>>();
      for (const auto& [name, value] : cj.at("baselines").items())
        c.baselines[name] = value.get<double>();
      report.candidates.push_back(std::move(c));
    }
    out.push_back(std::move(report));
  }
  return out;
}

}  // namespace mars
