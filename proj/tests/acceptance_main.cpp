// Acceptance suite: one check per release criterion, one line of output each.
// Exits non-zero when any criterion fails; skipped criteria (missing external
// model assets or datasets) do not fail the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "mars/augment.hpp"
#include "mars/bench.hpp"
#include "mars/config.hpp"
#include "mars/corpus_io.hpp"
#include "mars/lm_backends.hpp"
#include "mars/masking.hpp"
#include "mars/scoring.hpp"

#ifndef MARS_FIXTURE_DIR
#define MARS_FIXTURE_DIR "data/fixtures"
#endif

using namespace mars;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int index, const std::string& name, const std::string& status,
            const std::string& detail) {
  std::ostringstream left;
  left << '[' << std::setw(2) << index << "] " << name << ' ';
  std::string line = left.str();
  while (line.size() < 44) line.push_back('.');
  std::cout << line << ' ' << status;
  if (!detail.empty()) std::cout << "  (" << detail << ')';
  std::cout << '\n';
  if (status == "FAIL") ++failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// --------------------------------------------------------------------------
// Independent helpers (acceptance-side implementations, not library calls)

double brute_force_knapsack(const std::vector<double>& values, const std::vector<int>& costs,
                            int budget) {
  double best = 0.0;
  const std::size_t n = values.size();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double value = 0.0;
    int cost = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        value += values[i];
        cost += costs[i];
      }
    if (cost <= budget && value > best) best = value;
  }
  return best;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t sample_cdf(const std::vector<double>& probs, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;
}

Vector reference_tempered(const AutoregressiveLm& lm, const Vector& h, double xi) {
  Vector z = lm.logits_from_hidden(h);
  for (double& v : z) v /= xi;
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

bool is_subsequence(const std::vector<std::string>& needle,
                    const std::vector<std::string>& haystack) {
  auto fold = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  std::size_t pos = 0;
  for (const auto& raw : needle) {
    const std::string want = fold(raw);
    bool found = false;
    while (pos < haystack.size()) {
      if (fold(haystack[pos++]) == want) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

// Deterministic pseudo-random per-prefix distributions: a scripted-PPL mock
// with an arbitrary perplexity landscape.
class HashedScriptLm final : public AutoregressiveLm {
 public:
  HashedScriptLm(int vocab, std::uint64_t seed) : vocab_(vocab), seed_(seed) {}
  int vocab_size() const override { return vocab_; }
  int hidden_dim() const override { return vocab_; }
  int max_sequence_length() const override { return 512; }
  LmState initial_state() const override { return {{}, probs_for({}), nullptr}; }
  LmState advance(const LmState& s, TokenId t) const override {
    LmState n;
    n.prefix = s.prefix;
    n.prefix.push_back(t);
    n.hidden = probs_for(n.prefix);
    return n;
  }
  Vector logits_from_hidden(const Vector& h) const override {
    Vector z(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) z[i] = std::log(std::max(h[i], 1e-300));
    return z;
  }
  Vector project_gradient(const Vector& g) const override { return Vector(g.size(), 0.0); }
  Vector token_embedding(TokenId t) const override {
    Vector e(static_cast<std::size_t>(vocab_), 0.0);
    e[static_cast<std::size_t>(t)] = 1.0;
    return e;
  }
  std::vector<TokenId> tokenize(const std::string&) const override { return {}; }
  std::string token_text(TokenId t) const override { return "v" + std::to_string(t); }
  std::vector<TokenId> separator() const override { return {}; }
  std::unique_ptr<AutoregressiveLm> clone() const override {
    return std::make_unique<HashedScriptLm>(*this);
  }

 private:
  Vector probs_for(const std::vector<TokenId>& prefix) const {
    std::uint64_t h = seed_;
    for (TokenId t : prefix) h = (h ^ static_cast<std::uint64_t>(t + 17)) * 0x100000001b3ull;
    std::mt19937_64 rng(h);
    Vector p(static_cast<std::size_t>(vocab_));
    double sum = 0.0;
    for (double& x : p) {
      x = 0.05 + uniform01(rng);
      sum += x;
    }
    for (double& x : p) x /= sum;
    return p;
  }

  int vocab_;
  std::uint64_t seed_;
};

std::vector<AnnotatedToken> random_annotated(std::mt19937_64& rng, int n) {
  std::vector<AnnotatedToken> out;
  for (int i = 0; i < n; ++i) {
    AnnotatedToken t;
    t.token = "w" + std::to_string(i);
    t.priority = 0.25 * static_cast<double>(1 + rng() % 32);
    t.context_carrying = rng() % 4 == 0;
    t.cost = t.context_carrying ? 10 : 1;
    out.push_back(t);
  }
  return out;
}

// --------------------------------------------------------------------------
// Criteria

void criterion_1_knapsack_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 16);
    const auto annotated = random_annotated(rng, n);
    std::vector<double> values;
    std::vector<int> costs;
    for (const auto& t : annotated) {
      values.push_back(t.priority);
      costs.push_back(t.cost);
    }
    const double lambda = static_cast<double>(rng() % 11) / 10.0;
    const int budget = static_cast<int>(std::floor(lambda * n + 1e-9));
    const auto decision = solve_masking(annotated, lambda);
    const double expect = brute_force_knapsack(values, costs, budget);
    if (decision.total_priority != expect) {
      report(1, "knapsack-oracle", "FAIL",
             "mismatch at trial " + std::to_string(trial) + ": got " +
                 std::to_string(decision.total_priority) + " want " + std::to_string(expect));
      return;
    }
    ++checked;
  }
  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << checked << " instances, " << std::fixed << std::setprecision(2) << elapsed << " s";
  report(1, "knapsack-oracle", elapsed < 5.0 ? "PASS" : "FAIL", detail.str());
}

void criterion_2_budget_and_fidelity() {
  std::mt19937_64 rng(202);
  int budget_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 20);
    const auto annotated = random_annotated(rng, n);
    const double lambda = static_cast<double>(rng() % 11) / 10.0;
    const auto decision = solve_masking(annotated, lambda);
    if (decision.total_cost > static_cast<int>(std::floor(lambda * n + 1e-9)))
      ++budget_violations;
  }

  const std::vector<std::string> vocab = {"north", "wind",  "carried", "leaves", "over",
                                          "the",   "quiet", "harbor",  "before", "dawn",
                                          "boats", "slept", "water",   "moved",  "slowly"};
  std::vector<std::string> lm_vocab = {"\n", "<unk>"};
  lm_vocab.insert(lm_vocab.end(), vocab.begin(), vocab.end());
  const HashLm lm(lm_vocab);
  RuleBasedTagger tagger;
  IdfTable idf(8, {{"the", 8}, {"over", 6}, {"wind", 3}}, 0.05);
  SelfPlanConfig cfg;

  int fidelity_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 9);
    Tokenization ref, ctx;
    for (int i = 0; i < n; ++i) {
      ref.tokens.push_back(vocab[rng() % vocab.size()]);
      ref.offsets.push_back(static_cast<std::size_t>(i));
    }
    const int cn = 4 + static_cast<int>(rng() % 12);
    for (int i = 0; i < cn; ++i) {
      ctx.tokens.push_back(vocab[rng() % vocab.size()]);
      ctx.offsets.push_back(static_cast<std::size_t>(i));
    }
    const double lambda = 0.2 * static_cast<double>(1 + rng() % 4);
    const auto annotated = annotate_tokens(ref, ctx, idf, default_alpha(), tagger);
    const auto tpl = make_template(ref, solve_masking(annotated, lambda), lambda);

    const std::string context_text = join_tokens(ctx.tokens);
    const auto text = augment_reference(lm, context_text, tpl, cfg, 2, rng());

    std::vector<std::string> kept;
    for (const auto& b : tpl.blocks)
      if (const auto* tb = std::get_if<TextBlock>(&b))
        kept.insert(kept.end(), tb->tokens.begin(), tb->tokens.end());
    if (!is_subsequence(kept, word_tokenize(text).tokens)) ++fidelity_violations;
  }

  std::ostringstream detail;
  detail << "budget violations " << budget_violations << "/1000, fidelity violations "
         << fidelity_violations << "/1000";
  report(2, "budget-and-template-fidelity",
         budget_violations == 0 && fidelity_violations == 0 ? "PASS" : "FAIL", detail.str());
}

void criterion_3_selfplan_gradient() {
  const LinearToyLm lm(3, 4, 99);
  const double xi = 1.3;
  std::mt19937_64 rng(303);

  double worst_rel = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vector h = lm.random_hidden(rng());
    const Vector p = reference_tempered(lm, h, xi);
    const TokenId astar = static_cast<TokenId>(std::max_element(p.begin(), p.end()) - p.begin());
    const std::vector<TokenId> future = {static_cast<TokenId>(rng() % 3)};
    const double pi_theta = p[static_cast<std::size_t>(astar)];

    auto objective = [&](const Vector& x) {
      const Vector px = reference_tempered(lm, x, xi);
      const double log_pi = std::log(px[static_cast<std::size_t>(astar)]);
      double reward = 0.0;
      for (TokenId w : future) reward += std::log(px[static_cast<std::size_t>(w)]);
      return (px[static_cast<std::size_t>(astar)] / pi_theta) * log_pi * reward;
    };

    const auto analytic = self_planning_objective(lm, h, future, astar, pi_theta, xi);
    Vector fd(h.size());
    const double step = 1e-5;
    Vector x = h;
    for (std::size_t i = 0; i < h.size(); ++i) {
      x[i] = h[i] + step;
      const double hi = objective(x);
      x[i] = h[i] - step;
      const double lo = objective(x);
      x[i] = h[i];
      fd[i] = (hi - lo) / (2.0 * step);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      num += (analytic.grad[i] - fd[i]) * (analytic.grad[i] - fd[i]);
      den += fd[i] * fd[i];
    }
    worst_rel = std::max(worst_rel, std::sqrt(num / den));
  }

  SelfPlanConfig cfg;  // eta 0.02, xi 1.3, k 3
  int improved = 0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    LmState state = lm.initial_state();
    state.hidden = lm.random_hidden(rng());
    const TokenId w = static_cast<TokenId>(rng() % 3);
    const std::vector<TokenId> future = {w};
    const Vector before = reference_tempered(lm, state.hidden, cfg.xi);
    const Vector after = self_planning_perturbed_probs(lm, state, future, cfg);
    if (after[static_cast<std::size_t>(w)] > before[static_cast<std::size_t>(w)]) ++improved;
  }

  std::ostringstream detail;
  detail << "max grad rel err " << std::scientific << std::setprecision(2) << worst_rel
         << ", improved " << improved << "/" << trials;
  report(3, "self-planning-gradient",
         worst_rel < 1e-4 && improved >= static_cast<int>(0.95 * trials) ? "PASS" : "FAIL",
         detail.str());
}

void criterion_4_k0_degeneracy() {
  // Reimplements the decode loop with direct temperature sampling and checks
  // the k=0 pipeline reproduces it byte for byte.
  const std::vector<std::string> lm_vocab = {"\n",    "<unk>", "river", "light", "crossed",
                                             "stone", "old",   "path",  "under", "evening"};
  const HashLm lm(lm_vocab);
  SelfPlanConfig cfg;
  cfg.iterations = 0;

  Template tpl;
  tpl.ratio = 0.4;
  tpl.blocks.push_back(TextBlock{{"river", "light"}});
  tpl.blocks.push_back(BlankBlock{2});
  tpl.blocks.push_back(TextBlock{{"stone", "path"}});
  tpl.blocks.push_back(BlankBlock{1});
  const std::string context = "old evening under stone";
  const int sigma = 2;

  int mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const std::string got = augment_reference(lm, context, tpl, cfg, sigma, seed);

    // Oracle decoder: vanilla sampling + perplexity judging, written out.
    std::mt19937_64 rng(seed);
    LmState state = lm.initial_state();
    double logprob = 0.0;
    int count = 0;
    auto push = [&](TokenId t) {
      if (count >= 1) {
        const auto dist = ar_distribution(lm, state, 1.0);
        logprob += std::log(std::max(dist.probs[static_cast<std::size_t>(t)], 1e-300));
      }
      state = lm.advance(state, t);
      ++count;
    };
    for (TokenId t : lm.tokenize(context)) push(t);
    for (TokenId t : lm.separator()) push(t);

    std::vector<std::string> out_tokens;
    for (std::size_t bi = 0; bi < tpl.blocks.size(); ++bi) {
      if (const auto* tb = std::get_if<TextBlock>(&tpl.blocks[bi])) {
        for (const auto& tok : tb->tokens) {
          for (TokenId t : lm.tokenize(tok)) push(t);
          out_tokens.push_back(tok);
        }
        continue;
      }
      const int blank = std::get<BlankBlock>(tpl.blocks[bi]).original_length;
      std::vector<TokenId> next_block;
      if (bi + 1 < tpl.blocks.size())
        for (const auto& tok : std::get<TextBlock>(tpl.blocks[bi + 1]).tokens)
          for (TokenId t : lm.tokenize(tok)) next_block.push_back(t);

      LmState branch = state;
      double branch_lp = logprob;
      int branch_count = count;
      std::vector<TokenId> generated;
      std::vector<std::pair<double, std::vector<TokenId>>> candidates;
      for (int i = 0; i < sigma + blank; ++i) {
        const auto dist = ar_distribution(lm, branch, cfg.xi);
        const TokenId tok = static_cast<TokenId>(sample_cdf(dist.probs, rng));
        const auto scoring = ar_distribution(lm, branch, 1.0);
        branch_lp += std::log(std::max(scoring.probs[static_cast<std::size_t>(tok)], 1e-300));
        branch = lm.advance(branch, tok);
        ++branch_count;
        generated.push_back(tok);

        LmState tail = branch;
        double tail_lp = branch_lp;
        int tail_count = branch_count;
        for (TokenId t : next_block) {
          const auto d = ar_distribution(lm, tail, 1.0);
          tail_lp += std::log(std::max(d.probs[static_cast<std::size_t>(t)], 1e-300));
          tail = lm.advance(tail, t);
          ++tail_count;
        }
        candidates.emplace_back(std::exp(-tail_lp / (tail_count - 1)), generated);
      }
      std::size_t best = 0;
      for (std::size_t i = 1; i < candidates.size(); ++i)
        if (candidates[i].first < candidates[best].first) best = i;
      for (TokenId t : candidates[best].second) {
        push(t);
        out_tokens.push_back(lm.token_text(t));
      }
    }
    if (got != join_tokens(out_tokens)) ++mismatches;
  }
  report(4, "k0-vanilla-degeneracy", mismatches == 0 ? "PASS" : "FAIL",
         "50 seeded runs, " + std::to_string(mismatches) + " mismatches");
}

void criterion_5_generate_judge_revise() {
  std::mt19937_64 trial_rng(505);
  int violations = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const HashedScriptLm lm(5 + static_cast<int>(trial_rng() % 4), trial_rng());
    DecodeCursor prefix = make_cursor(lm);
    const int prefix_len = 2 + static_cast<int>(trial_rng() % 4);
    for (int i = 0; i < prefix_len; ++i)
      prefix = advance_cursor(
          lm, prefix,
          static_cast<TokenId>(trial_rng() % static_cast<std::uint64_t>(lm.vocab_size())));
    const int blank_len = 1 + static_cast<int>(trial_rng() % 4);
    const int sigma = static_cast<int>(trial_rng() % 4);
    std::vector<TokenId> next_block;
    const int nb = static_cast<int>(trial_rng() % 4);
    for (int i = 0; i < nb; ++i)
      next_block.push_back(
          static_cast<TokenId>(trial_rng() % static_cast<std::uint64_t>(lm.vocab_size())));

    SelfPlanConfig cfg;
    std::mt19937_64 rng(trial_rng());
    const auto result = infill_blank(lm, prefix, blank_len, next_block, sigma, cfg, rng);

    const std::size_t limit = static_cast<std::size_t>(sigma + blank_len);
    if (result.tokens.empty() || result.tokens.size() > limit) ++violations;
    if (result.trace.size() != limit) ++violations;
    // Replay the recorded queue: the returned infill must be the global
    // minimum, with ties resolved toward the shorter candidate.
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.trace.size(); ++i)
      if (result.trace[i].ppl_with_next_block < result.trace[best].ppl_with_next_block)
        best = i;
    if (result.tokens != result.trace[best].tokens) ++violations;
    for (const auto& cand : result.trace)
      if (cand.ppl_with_next_block < result.trace[best].ppl_with_next_block) ++violations;
  }
  report(5, "generate-judge-revise", violations == 0 ? "PASS" : "FAIL",
         "500 trials, " + std::to_string(violations) + " violations");
}

void criterion_6_weight_arithmetic() {
  bool ok = true;
  std::ostringstream why;
  for (int n = 1; n <= 64 && ok; ++n) {
    for (int qi = 1; qi <= 10 && ok; ++qi) {
      const auto wv = geometric_weights(n, qi / 10.0);
      double sum = 0.0;
      for (double w : wv.weights) sum += w;
      if (std::abs(sum - 1.0) > 1e-9) {
        ok = false;
        why << "sum off at n=" << n << " q=" << qi / 10.0;
      }
    }
  }

  // Hand-derived mixture: sims 1, 0.5, 0.25 at q = 0.5 -> 4/7 + 1/7 + 1/28 = 0.75.
  MockEncoder enc(2);
  enc.set("cand", {1.0, 0.0});
  enc.set("r0", {1.0, 0.0});
  enc.set("r1", {0.5, std::sqrt(3.0) / 2.0});
  enc.set("r2", {0.25, std::sqrt(15.0) / 4.0});
  AugmentationSet set;
  set.entries = {{0.0, "r0"}, {0.2, "r1"}, {0.4, "r2"}};
  const double mixed = mars_score("cand", set, 0.5, enc);
  if (std::abs(mixed - 0.75) > 1e-12) {
    ok = false;
    why << " mixture " << std::setprecision(17) << mixed;
  }

  // Single-ratio degeneracy: identical to the raw cosine, bit for bit.
  MockEncoder enc2(3);
  enc2.set("cand", {0.2, 0.5, 0.8});
  enc2.set("ref", {0.9, 0.1, 0.4});
  AugmentationSet single;
  single.entries = {{0.0, "ref"}};
  const double lhs = mars_score("cand", single, 0.75, enc2);
  const double rhs = cosine(enc2.encode("cand"), enc2.encode("ref"));
  if (lhs != rhs) {
    ok = false;
    why << " degeneracy " << lhs << " vs " << rhs;
  }
  report(6, "weight-arithmetic", ok ? "PASS" : "FAIL", why.str());
}

void criterion_7_adversarial_direction() {
  const auto start = Clock::now();
  const std::string path = std::string(MARS_FIXTURE_DIR) + "/robustness_50.jsonl";
  std::vector<EvalRecord> records;
  try {
    records = load_records(path);
  } catch (const std::exception& e) {
    report(7, "adversarial-direction", "FAIL", std::string("fixture missing: ") + e.what());
    return;
  }

  std::vector<std::vector<std::string>> docs;
  for (const auto& rec : records)
    docs.push_back(
        word_tokenize(preprocess_text(rec.context + " " + rec.human_reference)).tokens);
  const auto idf = build_idf_table(docs, 0.05);
  const auto lm = HashLm::from_corpus(records);
  RuleBasedTagger tagger;
  SelfPlanConfig cfg;
  const std::vector<double> ratios = {0.0, 0.2, 0.4, 0.6, 0.8};

  const auto sets =
      augment_records(lm, records, ratios, idf, default_alpha(), tagger, cfg, 3, 13);
  std::map<std::string, AugmentationSet> augsets;
  for (std::size_t i = 0; i < records.size(); ++i) augsets[records[i].id] = sets[i];

  const HashNgramEncoder encoder(64);
  int reorder_wins = 0, reorder_losses = 0;
  int retrieve_wins = 0, retrieve_losses = 0;
  double mean_orig = 0.0, mean_reorder = 0.0, mean_retrieve = 0.0;
  int n_pairs = 0;
  int bleu_delta_violations = 0;

  std::uint64_t attack_seed = 7000;
  for (const auto& rec : records) {
    const auto& augset = augsets.at(rec.id);
    const std::string ctx = preprocess_text(rec.context);
    for (const auto& cand : rec.candidates) {
      const std::string original = preprocess_text(cand.text);
      const std::string reordered = attack_reorder(original, 0.5, attack_seed++);
      const std::string retrieved = attack_retrieve(ctx, attack_seed++);

      const double s_orig = mars_score(original, augset, 0.75, encoder);
      const double s_reorder = mars_score(reordered, augset, 0.75, encoder);
      const double s_retrieve = mars_score(retrieved, augset, 0.75, encoder);
      mean_orig += s_orig;
      mean_reorder += s_reorder;
      mean_retrieve += s_retrieve;
      ++n_pairs;
      if (s_reorder < s_orig)
        ++reorder_wins;
      else if (s_reorder > s_orig)
        ++reorder_losses;
      if (s_retrieve < s_orig)
        ++retrieve_wins;
      else if (s_retrieve > s_orig)
        ++retrieve_losses;

      const auto ref_tokens = word_tokenize(preprocess_text(rec.human_reference)).tokens;
      const double b_orig = bleu1(word_tokenize(original).tokens, ref_tokens);
      const double b_reorder = bleu1(word_tokenize(reordered).tokens, ref_tokens);
      if (b_orig != b_reorder) ++bleu_delta_violations;
    }
  }
  mean_orig /= n_pairs;
  mean_reorder /= n_pairs;
  mean_retrieve /= n_pairs;
  const double p_reorder = sign_test_p(reorder_wins, reorder_losses);
  const double p_retrieve = sign_test_p(retrieve_wins, retrieve_losses);

  const bool ok = mean_reorder < mean_orig && mean_retrieve < mean_orig && p_reorder < 0.05 &&
                  p_retrieve < 0.05 && bleu_delta_violations == 0;
  std::ostringstream detail;
  detail << std::fixed << std::setprecision(3) << "mars " << mean_orig << " -> reorder "
         << mean_reorder << " (p=" << std::scientific << std::setprecision(1) << p_reorder
         << std::fixed << std::setprecision(3) << "), retrieve " << mean_retrieve
         << " (p=" << std::scientific << std::setprecision(1) << p_retrieve
         << "), bleu1 reorder deltas all 0: " << (bleu_delta_violations == 0 ? "yes" : "NO")
         << ", " << std::fixed << std::setprecision(1) << seconds_since(start) << " s";
  report(7, "adversarial-direction", ok ? "PASS" : "FAIL", detail.str());
}

void criterion_8_pearson() {
  // Hand computation for xs = [1,2,3,4], ys = [1,3,2,5]: cov 5.5, var_x 5,
  // var_y 8.75, r = 5.5 / sqrt(43.75) = 0.8315218406202999.
  const std::vector<double> xs = {1, 2, 3, 4}, ys = {1, 3, 2, 5};
  const double r = pearson(xs, ys);
  const double expect = 0.8315218406202999;
  bool ok = std::abs(r - expect) < 1e-4;

  std::vector<double> affine;
  for (double y : ys) affine.push_back(2.0 * y + 1.0);
  const double r2 = pearson(xs, affine);
  ok = ok && std::abs(r2 - r) < 1e-12;

  std::ostringstream detail;
  detail << std::setprecision(10) << "r=" << r << ", affine |dr|=" << std::scientific
         << std::setprecision(1) << std::abs(r2 - r);
  report(8, "pearson-correctness", ok ? "PASS" : "FAIL", detail.str());
}

void criterion_9_dataset_sweep() {
  const char* mocha = std::getenv("MARS_MOCHA_PATH");
  if (!mocha) {
    report(9, "lambda-sweep-reproduction", "SKIP",
           "MOCHA subset not present (set MARS_MOCHA_PATH) and no GPT-2-large adapter "
           "available");
    return;
  }
  try {
    const auto records = load_records(mocha);
    std::vector<std::vector<std::string>> docs;
    for (const auto& rec : records)
      docs.push_back(
          word_tokenize(preprocess_text(rec.context + " " + rec.human_reference)).tokens);
    const auto idf = build_idf_table(docs, 0.05);
    const auto lm = HashLm::from_corpus(records);
    const HashNgramEncoder encoder(64);
    RuleBasedTagger tagger;
    SweepConfig cfg;
    cfg.lm = &lm;
    cfg.encoder = &encoder;
    cfg.idf = &idf;
    cfg.alpha = default_alpha();
    cfg.tagger = &tagger;
    const auto rows = sweep_lambda_max(records, {0.2, 0.8}, cfg);
    const bool ordered = rows[0].r && rows[1].r && *rows[0].r > *rows[1].r;
    report(9, "lambda-sweep-reproduction", ordered ? "PASS" : "FAIL",
           "bundled backend, not GPT-2-large");
  } catch (const std::exception& e) {
    report(9, "lambda-sweep-reproduction", "FAIL", e.what());
  }
}

void criterion_10_throughput() {
  const std::string path = std::string(MARS_FIXTURE_DIR) + "/robustness_50.jsonl";
  std::vector<EvalRecord> records;
  try {
    records = load_records(path);
  } catch (const std::exception& e) {
    report(10, "augmentation-throughput", "FAIL", std::string("fixture missing: ") + e.what());
    return;
  }
  std::vector<std::vector<std::string>> docs;
  for (const auto& rec : records)
    docs.push_back(
        word_tokenize(preprocess_text(rec.context + " " + rec.human_reference)).tokens);
  const auto idf = build_idf_table(docs, 0.05);
  const auto lm = HashLm::from_corpus(records);
  RuleBasedTagger tagger;
  SelfPlanConfig cfg;
  const std::vector<double> ratios = {0.0, 0.2, 0.4, 0.6, 0.8};

  const auto start = Clock::now();
  const auto sets =
      augment_records_serial(lm, records, ratios, idf, default_alpha(), tagger, cfg, 3, 13);
  const double per_ref = seconds_since(start) / static_cast<double>(records.size());

  // The stated 2.0 s/ref bound targets GPT-2-large on a GPU; without those
  // assets the measurement is informational only.
  std::ostringstream detail;
  detail << "bundled hash-lm backend: " << std::fixed << std::setprecision(1)
         << per_ref * 1000.0 << " ms/ref over " << sets.size()
         << " refs (bound 2.0 s); GPT-2-large assets unavailable";
  report(10, "augmentation-throughput", "SKIP", detail.str());
}

}  // namespace

int main() {
  std::cout << "MARS acceptance suite\n";
  criterion_1_knapsack_oracle();
  criterion_2_budget_and_fidelity();
  criterion_3_selfplan_gradient();
  criterion_4_k0_degeneracy();
  criterion_5_generate_judge_revise();
  criterion_6_weight_arithmetic();
  criterion_7_adversarial_direction();
  criterion_8_pearson();
  criterion_9_dataset_sweep();
  criterion_10_throughput();
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all runnable criteria passed\n";
  return 0;
}
