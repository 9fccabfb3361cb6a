#include "mars/bench.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "mars/masking.hpp"

namespace mars {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Fisher-Yates with platform-independent index draws.
template <typename T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

double bleu1(std::span<const std::string> candidate, std::span<const std::string> reference) {
  if (candidate.empty()) throw ValidationError("BLEU-1 needs a non-empty candidate");
  std::unordered_map<std::string, int> ref_counts;
  for (const auto& tok : reference) ++ref_counts[lower(tok)];
  std::unordered_map<std::string, int> cand_counts;
  for (const auto& tok : candidate) ++cand_counts[lower(tok)];
  int matched = 0;
  for (const auto& [tok, count] : cand_counts) {
    auto it = ref_counts.find(tok);
    if (it != ref_counts.end()) matched += std::min(count, it->second);
  }
  const double precision = static_cast<double>(matched) / static_cast<double>(candidate.size());
  const double bp = std::exp(std::min(
      0.0, 1.0 - static_cast<double>(reference.size()) / static_cast<double>(candidate.size())));
  return precision * bp;
}

double rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference) {
  if (candidate.empty() || reference.empty())
    throw ValidationError("ROUGE-L needs non-empty candidate and reference");
  const int lcs = lcs_length(candidate, reference);
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(candidate.size());
  const double r = static_cast<double>(lcs) / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

std::string attack_reorder(const std::string& candidate, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0) || ratio > 1.0)
    throw ValidationError("reorder ratio must lie in (0, 1]");
  auto tokens = word_tokenize(candidate).tokens;
  const std::size_t n = tokens.size();
  if (n < 2) {
    std::cerr << "mars: reorder attack left a single-token candidate unchanged\n";
    return candidate;
  }
  std::size_t m = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(n) - 1e-9));
  m = std::clamp<std::size_t>(m, 1, n);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  shuffle_vec(idx, rng);
  std::vector<std::size_t> chosen(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(chosen.begin(), chosen.end());

  std::vector<std::string> picked;
  picked.reserve(m);
  for (std::size_t p : chosen) picked.push_back(tokens[p]);
  shuffle_vec(picked, rng);
  for (std::size_t k = 0; k < m; ++k) tokens[chosen[k]] = picked[k];
  return join_tokens(tokens);
}

std::string attack_retrieve(const std::string& context, std::uint64_t seed) {
  const auto sentences = split_sentences(context);
  if (sentences.empty()) throw ValidationError("retrieve attack needs a non-empty context");
  std::mt19937_64 rng(seed);
  const std::size_t pick = std::min(
      static_cast<std::size_t>(uniform01(rng) * static_cast<double>(sentences.size())),
      sentences.size() - 1);
  return sentences[pick];
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("Pearson needs equal-length series");
  const std::size_t n = xs.size();
  if (n < 3) throw ValidationError("Pearson needs at least 3 samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  if (vx == 0.0 || vy == 0.0) throw ValidationError("Pearson is undefined for a constant series");
  return cov / std::sqrt(vx * vy);
}

double sign_test_p(int wins, int losses) {
  const int n = wins + losses;
  if (n == 0) return 1.0;
  // P(X >= wins) for X ~ Binomial(n, 1/2), via log-space binomials.
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                            std::lgamma(n - k + 1.0) - n * std::log(2.0);
    p += std::exp(log_term);
  }
  return std::min(p, 1.0);
}

CorrelationTable correlate(const std::vector<EvalRecord>& records,
                           const std::vector<ScoreReport>& reports) {
  std::map<std::string, const ScoreReport*> by_id;
  for (const auto& r : reports) by_id[r.record_id] = &r;

  // (metric, system) -> paired series
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::vector<double>>>
      series;
  for (const auto& rec : records) {
    auto it = by_id.find(rec.id);
    if (it == by_id.end()) continue;
    for (const auto& cand : rec.candidates) {
      if (!cand.has_rating()) continue;
      const double rating = cand.mean_rating();
      for (const auto& cs : it->second->candidates) {
        if (cs.system_id != cand.system_id) continue;
        auto& pair = series[{"mars", cs.system_id}];
        pair.first.push_back(cs.mars);
        pair.second.push_back(rating);
        for (const auto& [metric, value] : cs.baselines) {
          auto& bp = series[{metric, cs.system_id}];
          bp.first.push_back(value);
          bp.second.push_back(rating);
        }
      }
    }
  }

  CorrelationTable table;
  for (const auto& [key, xy] : series) {
    CorrelationCell cell;
    cell.metric = key.first;
    cell.system = key.second;
    cell.n = static_cast<int>(xy.first.size());
    try {
      cell.r = pearson(xy.first, xy.second);
    } catch (const ValidationError&) {
      cell.r.reset();  // too few samples or a constant series: absent, not zero
    }
    table.cells.push_back(std::move(cell));
  }
  return table;
}

std::vector<SweepRow> sweep_lambda_max(const std::vector<EvalRecord>& records,
                                       const std::vector<double>& lambda_grid,
                                       const SweepConfig& cfg) {
  if (lambda_grid.empty()) throw ValidationError("sweep grid is empty");
  if (!cfg.lm || !cfg.encoder || !cfg.idf || !cfg.tagger)
    throw ValidationError("sweep configuration is incomplete");

  std::vector<SweepRow> rows;
  for (double lambda_max : lambda_grid) {
    std::vector<double> ratios;
    for (double v = 0.0; v <= lambda_max + 1e-9; v += 0.2) ratios.push_back(std::min(v, 1.0));

    const auto sets = augment_records(*cfg.lm, records, ratios, *cfg.idf, cfg.alpha,
                                      *cfg.tagger, cfg.selfplan, cfg.sigma, cfg.seed);
    std::map<std::string, AugmentationSet> augsets;
    for (std::size_t i = 0; i < records.size(); ++i) augsets[records[i].id] = sets[i];
    const auto reports = score_records(records, augsets, cfg.q, *cfg.encoder);

    SweepRow row;
    row.lambda_max = lambda_max;

    std::vector<double> xs, ys;
    double sigma_sum = 0.0;
    int sigma_n = 0;
    std::map<std::string, const ScoreReport*> by_id;
    for (const auto& r : reports) by_id[r.record_id] = &r;
    for (const auto& rec : records) {
      const auto* report = by_id.at(rec.id);
      for (const auto& cs : report->candidates) {
        if (cs.similarities.size() > 1) {
          double mean = 0.0;
          for (double s : cs.similarities) mean += s;
          mean /= static_cast<double>(cs.similarities.size());
          double var = 0.0;
          for (double s : cs.similarities) var += (s - mean) * (s - mean);
          sigma_sum += std::sqrt(var / static_cast<double>(cs.similarities.size()));
          ++sigma_n;
        }
        for (const auto& cand : rec.candidates) {
          if (cand.system_id == cs.system_id && cand.has_rating()) {
            xs.push_back(cs.mars);
            ys.push_back(cand.mean_rating());
          }
        }
      }
    }
    row.n = static_cast<int>(xs.size());
    try {
      row.r = pearson(xs, ys);
    } catch (const ValidationError&) {
      row.r.reset();
    }
    if (sigma_n > 0) row.sigma_bar = sigma_sum / sigma_n;
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string opt_to_string(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream ss;
  ss << *v;
  return ss.str();
}

}  // namespace

std::string correlation_to_csv(const CorrelationTable& table) {
  std::ostringstream ss;
  ss << "metric,system,n,r\n";
  for (const auto& c : table.cells)
    ss << c.metric << ',' << c.system << ',' << c.n << ',' << opt_to_string(c.r) << '\n';
  return ss.str();
}

std::string correlation_to_jsonl(const CorrelationTable& table) {
  std::ostringstream ss;
  for (const auto& c : table.cells) {
    nlohmann::ordered_json j;
    j["metric"] = c.metric;
    j["system"] = c.system;
    j["n"] = c.n;
    if (c.r)
      j["r"] = *c.r;
    else
      j["r"] = nullptr;
    ss << j.dump() << '\n';
  }
  return ss.str();
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream ss;
  ss << "lambda_max,n,r,sigma_bar\n";
  for (const auto& row : rows)
    ss << row.lambda_max << ',' << row.n << ',' << opt_to_string(row.r) << ','
       << opt_to_string(row.sigma_bar) << '\n';
  return ss.str();
}

std::string sweep_to_jsonl(const std::vector<SweepRow>& rows) {
  std::ostringstream ss;
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    j["lambda_max"] = row.lambda_max;
    j["n"] = row.n;
    if (row.r)
      j["r"] = *row.r;
    else
      j["r"] = nullptr;
    if (row.sigma_bar)
      j["sigma_bar"] = *row.sigma_bar;
    else
      j["sigma_bar"] = nullptr;
    ss << j.dump() << '\n';
  }
  return ss.str();
}

}  // namespace mars
