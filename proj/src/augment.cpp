#include "mars/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

#include <json.hpp>

#include "mars/lm_backends.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mars {

namespace {

double uniform01(std::mt19937_64& rng) {
  // 53-bit mantissa draw; identical on every platform, unlike the std
  // distributions.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t sample_index(const Vector& probs, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;  // floating-point dust lands on the last bucket
}

std::size_t argmax_index(const Vector& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double l2_norm(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool all_finite(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector tempered_probs(const AutoregressiveLm& lm, const Vector& hidden, double xi) {
  Vector logits = lm.logits_from_hidden(hidden);
  for (double& z : logits) z /= xi;
  return softmax(logits);
}

}  // namespace

DecodeCursor make_cursor(const AutoregressiveLm& lm) {
  return DecodeCursor{lm.initial_state(), 0.0, 0};
}

DecodeCursor advance_cursor(const AutoregressiveLm& lm, const DecodeCursor& cursor,
                            TokenId token) {
  DecodeCursor next;
  if (cursor.token_count >= 1) {
    const auto dist = ar_distribution(lm, cursor.state, 1.0);
    next.logprob_sum = cursor.logprob_sum +
                       std::log(std::max(dist.probs[static_cast<std::size_t>(token)], 1e-300));
  }
  next.state = ar_advance(lm, cursor.state, token);
  next.token_count = cursor.token_count + 1;
  return next;
}

double cursor_perplexity(const DecodeCursor& cursor) {
  if (cursor.token_count < 2) throw ValidationError("perplexity needs at least two tokens");
  return std::exp(-cursor.logprob_sum / static_cast<double>(cursor.token_count - 1));
}

double self_planning_reward(const AutoregressiveLm& lm, const Vector& hidden,
                            std::span<const TokenId> future, double xi) {
  if (future.empty()) return 0.0;
  const Vector p = tempered_probs(lm, hidden, xi);
  double r = 0.0;
  for (TokenId w : future) r += std::log(std::max(p[static_cast<std::size_t>(w)], 1e-300));
  return r;
}

SelfPlanObjective self_planning_objective(const AutoregressiveLm& lm, const Vector& hidden_d,
                                          std::span<const TokenId> future, TokenId astar,
                                          double pi_theta_astar, double xi) {
  const std::size_t a = static_cast<std::size_t>(astar);
  const Vector p = tempered_probs(lm, hidden_d, xi);
  const std::size_t n = p.size();

  const double log_pi = std::log(std::max(p[a], 1e-300));
  double reward = 0.0;
  for (TokenId w : future) reward += std::log(std::max(p[static_cast<std::size_t>(w)], 1e-300));
  const double eps = p[a] / pi_theta_astar;

  // d log p[a] / d logits = (e_a - p) / xi, and analogously for the reward
  // and the importance weight; combine with the product rule before pulling
  // the logit-space gradient back through the output head.
  Vector dz(n, 0.0);
  const double c_eps = log_pi * reward * (p[a] / pi_theta_astar);  // multiplies dlogp[a]
  const double c_log = eps * reward;                               // multiplies dlogp[a]
  for (std::size_t i = 0; i < n; ++i) {
    double g = (c_eps + c_log) * (((i == a) ? 1.0 : 0.0) - p[i]);
    dz[i] = g / xi;
  }
  const double c_r = eps * log_pi;  // multiplies dreward
  for (TokenId w : future) {
    const std::size_t wi = static_cast<std::size_t>(w);
    for (std::size_t i = 0; i < n; ++i)
      dz[i] += c_r * (((i == wi) ? 1.0 : 0.0) - p[i]) / xi;
  }

  SelfPlanObjective obj;
  obj.value = eps * log_pi * reward;
  obj.grad = lm.project_gradient(dz);
  return obj;
}

Vector self_planning_perturbed_probs(const AutoregressiveLm& lm, const LmState& state,
                                     std::span<const TokenId> future, const SelfPlanConfig& cfg,
                                     SelfPlanStats* stats) {
  const Vector base_probs = tempered_probs(lm, state.hidden, cfg.xi);
  if (cfg.iterations <= 0 || future.empty()) return base_probs;

  bool perturbed = false;
  Vector hidden_d = state.hidden;
  for (int it = 0; it < cfg.iterations; ++it) {
    const Vector p_d = perturbed ? tempered_probs(lm, hidden_d, cfg.xi) : base_probs;
    const TokenId astar = static_cast<TokenId>(argmax_index(p_d));
    const auto obj = self_planning_objective(lm, hidden_d, future, astar,
                                             base_probs[static_cast<std::size_t>(astar)],
                                             cfg.xi);
    const double norm = l2_norm(obj.grad);
    if (!std::isfinite(norm) || norm == 0.0 || !all_finite(obj.grad)) {
      if (norm != 0.0)
        std::cerr << "mars: non-finite self-planning gradient, falling back to vanilla "
                     "sampling\n";
      if (stats) ++stats->fallbacks;
      return base_probs;
    }
    // Both log factors of the objective are negative, so descending their
    // product raises the probability of the argmax and the future tokens.
    for (std::size_t i = 0; i < hidden_d.size(); ++i)
      hidden_d[i] -= cfg.eta * obj.grad[i] / norm;
    perturbed = true;
    if (stats) ++stats->perturbation_steps;
  }
  return tempered_probs(lm, hidden_d, cfg.xi);
}

TokenId self_planning_step(const AutoregressiveLm& lm, const LmState& state,
                           std::span<const TokenId> future, const SelfPlanConfig& cfg,
                           std::mt19937_64& rng, SelfPlanStats* stats) {
  const Vector probs = self_planning_perturbed_probs(lm, state, future, cfg, stats);
  if (cfg.greedy) return static_cast<TokenId>(argmax_index(probs));
  return static_cast<TokenId>(sample_index(probs, rng));
}

InfillResult infill_blank(const AutoregressiveLm& lm, const DecodeCursor& prefix,
                          int blank_len, std::span<const TokenId> next_text_block, int sigma,
                          const SelfPlanConfig& cfg, std::mt19937_64& rng,
                          SelfPlanStats* stats) {
  if (blank_len < 1) throw ValidationError("blank length must be at least 1");
  if (sigma < 0) throw ValidationError("sigma must be non-negative");

  const std::size_t window =
      std::min(next_text_block.size(), static_cast<std::size_t>(cfg.future_window));
  const auto future = next_text_block.subspan(0, window);

  InfillResult result;
  DecodeCursor cursor = prefix;
  const int limit = sigma + blank_len;
  for (int i = 0; i < limit; ++i) {
    const TokenId tok = self_planning_step(lm, cursor.state, future, cfg, rng, stats);
    cursor = advance_cursor(lm, cursor, tok);

    InfillCandidate cand;
    cand.tokens.reserve(static_cast<std::size_t>(i) + 1);
    if (!result.trace.empty()) cand.tokens = result.trace.back().tokens;
    cand.tokens.push_back(tok);

    DecodeCursor tail = cursor;
    for (TokenId t : next_text_block) tail = advance_cursor(lm, tail, t);
    cand.ppl_with_next_block = cursor_perplexity(tail);
    result.trace.push_back(std::move(cand));
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.trace.size(); ++i)
    if (result.trace[i].ppl_with_next_block < result.trace[best].ppl_with_next_block) best = i;
  result.tokens = result.trace[best].tokens;
  return result;
}

namespace {

int estimate_lm_tokens(const AutoregressiveLm& lm, const std::string& context,
                       const Template& tpl, int sigma) {
  int total = static_cast<int>(lm.tokenize(context).size()) +
              static_cast<int>(lm.separator().size());
  for (const auto& block : tpl.blocks) {
    if (const auto* text = std::get_if<TextBlock>(&block)) {
      for (const auto& tok : text->tokens) total += static_cast<int>(lm.tokenize(tok).size());
    } else {
      total += std::get<BlankBlock>(block).original_length + sigma;
    }
  }
  return total;
}

std::string augment_with_context(const AutoregressiveLm& lm, const std::string& context,
                                 const Template& tpl, const SelfPlanConfig& cfg, int sigma,
                                 std::uint64_t seed, SelfPlanStats* stats) {
  std::mt19937_64 rng(seed);

  DecodeCursor cursor = make_cursor(lm);
  for (TokenId t : lm.tokenize(context)) cursor = advance_cursor(lm, cursor, t);
  for (TokenId t : lm.separator()) cursor = advance_cursor(lm, cursor, t);

  std::vector<std::string> out_tokens;
  for (std::size_t bi = 0; bi < tpl.blocks.size(); ++bi) {
    if (const auto* text = std::get_if<TextBlock>(&tpl.blocks[bi])) {
      for (const auto& tok : text->tokens) {
        for (TokenId t : lm.tokenize(tok)) cursor = advance_cursor(lm, cursor, t);
        out_tokens.push_back(tok);
      }
      continue;
    }
    const auto& blank = std::get<BlankBlock>(tpl.blocks[bi]);
    std::vector<TokenId> next_block;
    if (bi + 1 < tpl.blocks.size()) {
      // Blocks alternate, so the next one is a text block when present.
      for (const auto& tok : std::get<TextBlock>(tpl.blocks[bi + 1]).tokens)
        for (TokenId t : lm.tokenize(tok)) next_block.push_back(t);
    }
    const auto filled =
        infill_blank(lm, cursor, blank.original_length, next_block, sigma, cfg, rng, stats);
    for (TokenId t : filled.tokens) {
      cursor = advance_cursor(lm, cursor, t);
      out_tokens.push_back(lm.token_text(t));
    }
  }
  return join_tokens(out_tokens);
}

}  // namespace

std::string augment_reference(const AutoregressiveLm& lm, const std::string& context,
                              const Template& tpl, const SelfPlanConfig& cfg, int sigma,
                              std::uint64_t seed, SelfPlanStats* stats) {
  std::string ctx = context;
  if (estimate_lm_tokens(lm, ctx, tpl, sigma) > lm.max_sequence_length()) {
    // Re-truncate the context once and retry; the reference side is fixed.
    const int non_context = estimate_lm_tokens(lm, "", tpl, sigma);
    const int room = lm.max_sequence_length() - non_context;
    if (room < 1)
      throw ValidationError("template alone exceeds the LM budget of " +
                            std::to_string(lm.max_sequence_length()) + " tokens");
    const auto ctx_tokens = word_tokenize(ctx);
    std::vector<std::string> kept(
        ctx_tokens.tokens.begin(),
        ctx_tokens.tokens.begin() +
            std::min<std::ptrdiff_t>(room, static_cast<std::ptrdiff_t>(ctx_tokens.size())));
    ctx = join_tokens(kept);
    if (estimate_lm_tokens(lm, ctx, tpl, sigma) > lm.max_sequence_length())
      throw ValidationError("context plus template exceeds the LM budget even after truncation");
  }
  return augment_with_context(lm, ctx, tpl, cfg, sigma, seed, stats);
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& record_id, int index) {
  std::uint64_t x = base ^ fnv1a(record_id) ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(index + 1));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

namespace {

void check_ratios(const std::vector<double>& ratios) {
  if (ratios.empty() || ratios.front() != 0.0)
    throw ValidationError("ratios must start with 0 (the human reference)");
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (ratios[i] < 0.0 || ratios[i] > 1.0)
      throw ValidationError("masking ratio must lie in [0, 1]");
    if (i > 0 && ratios[i] < ratios[i - 1])
      throw ValidationError("masking ratios must be sorted ascending");
  }
}

}  // namespace

AugmentationSet build_augmentation_set(const AutoregressiveLm& lm, const EvalRecord& record,
                                       const std::vector<double>& ratios, const IdfTable& idf,
                                       const AlphaWeights& alpha, const PosTagger& tagger,
                                       const SelfPlanConfig& cfg, int sigma,
                                       std::uint64_t seed) {
  check_ratios(ratios);
  const std::string ref_text = preprocess_text(record.human_reference);
  std::string ctx_text = preprocess_text(record.context);
  if (ref_text.empty() || ctx_text.empty())
    throw ValidationError("record '" + record.id + "' has an empty context or reference");

  const auto ref_tokens = word_tokenize(ref_text);
  auto ctx_tokens = word_tokenize(ctx_text);
  // Oversized contexts lose their tail up front so LCS matching and the LM
  // prefix see the same text; the reference side is never cut.
  const int budget = lm.max_sequence_length();
  if (static_cast<int>(ctx_tokens.size() + ref_tokens.size()) > budget - 1) {
    ctx_tokens = truncate_to_budget(ctx_tokens, ref_tokens, budget);
    ctx_text = join_tokens(ctx_tokens.tokens);
  }
  const auto templates =
      templates_for_ratios(ref_tokens, ctx_tokens, idf, alpha, tagger, ratios);

  AugmentationSet set;
  set.entries.push_back({0.0, ref_text});
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    const std::string text = augment_reference(lm, ctx_text, templates[i], cfg, sigma,
                                               derive_seed(seed, record.id, static_cast<int>(i)));
    set.entries.push_back({ratios[i], text});
  }
  return set;
}

AugmentationSet naive_augment(const MaskedLm& mlm, const EvalRecord& record,
                              const std::vector<double>& ratios, const IdfTable& idf,
                              const AlphaWeights& alpha, const PosTagger& tagger) {
  check_ratios(ratios);
  const std::string ref_text = preprocess_text(record.human_reference);
  std::string ctx_text = preprocess_text(record.context);
  if (ref_text.empty() || ctx_text.empty())
    throw ValidationError("record '" + record.id + "' has an empty context or reference");

  const auto ref_tokens = word_tokenize(ref_text);
  auto ctx_tokens = word_tokenize(ctx_text);
  const int budget = mlm.max_sequence_length();
  if (static_cast<int>(ctx_tokens.size() + ref_tokens.size()) > budget - 1) {
    ctx_tokens = truncate_to_budget(ctx_tokens, ref_tokens, budget);
    ctx_text = join_tokens(ctx_tokens.tokens);
  }
  const auto templates =
      templates_for_ratios(ref_tokens, ctx_tokens, idf, alpha, tagger, ratios);

  AugmentationSet set;
  set.entries.push_back({0.0, ref_text});
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    const auto tokens = mlm_fill(mlm, templates[i], ctx_text);
    set.entries.push_back({ratios[i], join_tokens(tokens)});
  }
  return set;
}

namespace {

template <typename PerRecord>
std::vector<AugmentationSet> augment_batch(const std::vector<EvalRecord>& records,
                                           PerRecord&& per_record, bool parallel) {
  std::vector<AugmentationSet> out(records.size());
  const int n = static_cast<int>(records.size());
  if (!parallel) {
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = per_record(i, nullptr);
    return out;
  }
  // Exceptions cannot unwind out of an OpenMP region; stash the first one.
  std::exception_ptr error;
#pragma omp parallel
  {
    // One adapter clone per worker; adapters are single-threaded by contract.
    std::unique_ptr<AutoregressiveLm> local;
#pragma omp for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = per_record(i, &local);
      } catch (...) {
#pragma omp critical(mars_augment_batch_error)
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace

std::vector<AugmentationSet> augment_records(const AutoregressiveLm& lm,
                                             const std::vector<EvalRecord>& records,
                                             const std::vector<double>& ratios,
                                             const IdfTable& idf, const AlphaWeights& alpha,
                                             const PosTagger& tagger, const SelfPlanConfig& cfg,
                                             int sigma, std::uint64_t seed) {
  return augment_batch(
      records,
      [&](int i, std::unique_ptr<AutoregressiveLm>* local) {
        const AutoregressiveLm* worker = &lm;
        if (local) {
          if (!*local) *local = lm.clone();
          worker = local->get();
        }
        return build_augmentation_set(*worker, records[static_cast<std::size_t>(i)], ratios, idf,
                                      alpha, tagger, cfg, sigma, seed);
      },
      /*parallel=*/true);
}

std::vector<AugmentationSet> augment_records_serial(
    const AutoregressiveLm& lm, const std::vector<EvalRecord>& records,
    const std::vector<double>& ratios, const IdfTable& idf, const AlphaWeights& alpha,
    const PosTagger& tagger, const SelfPlanConfig& cfg, int sigma, std::uint64_t seed) {
  return augment_batch(
      records,
      [&](int i, std::unique_ptr<AutoregressiveLm>*) {
        return build_augmentation_set(lm, records[static_cast<std::size_t>(i)], ratios, idf,
                                      alpha, tagger, cfg, sigma, seed);
      },
      /*parallel=*/false);
}

void save_augmentations(const std::vector<EvalRecord>& records,
                        const std::vector<AugmentationSet>& sets, const std::string& path) {
  if (records.size() != sets.size())
    throw ValidationError("record and augmentation counts differ");
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    nlohmann::ordered_json j;
    j["id"] = records[i].id;
    j["augmentations"] = nlohmann::ordered_json::array();
    for (const auto& e : sets[i].entries)
      j["augmentations"].push_back({{"ratio", e.ratio}, {"text", e.text}});
    out << j.dump() << '\n';
  }
}

std::map<std::string, AugmentationSet> load_augmentations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open augmentations file: " + path);
  std::map<std::string, AugmentationSet> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed augmentation at line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    AugmentationSet set;
    for (const auto& ej : j.at("augmentations"))
      set.entries.push_back({ej.at("ratio").get<double>(), ej.at("text").get<std::string>()});
    out[j.at("id").get<std::string>()] = std::move(set);
  }
  return out;
}

}  // namespace mars
