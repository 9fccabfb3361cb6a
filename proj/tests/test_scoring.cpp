#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "mars/lm_backends.hpp"
#include "mars/scoring.hpp"

using namespace mars;

TEST_CASE("geometric_weights closed forms") {
  SUBCASE("q = 1 is uniform") {
    const auto wv = geometric_weights(5, 1.0);
    for (double w : wv.weights) CHECK(w == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("n = 3, q = 0.5 gives 4/7, 2/7, 1/7") {
    const auto wv = geometric_weights(3, 0.5);
    CHECK(wv.weights[0] == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
    CHECK(wv.weights[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
    CHECK(wv.weights[2] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  }
  SUBCASE("single reference takes all the weight") {
    for (double q : {0.1, 0.5, 1.0}) CHECK(geometric_weights(1, q).weights == std::vector<double>{1.0});
  }
  SUBCASE("invalid q rejected") {
    CHECK_THROWS_AS(geometric_weights(3, 0.0), ValidationError);
    CHECK_THROWS_AS(geometric_weights(3, 1.5), ValidationError);
    CHECK_THROWS_AS(geometric_weights(0, 0.5), ValidationError);
  }
}

TEST_CASE("geometric weights normalize and put the human reference first") {
  for (int n = 1; n <= 64; ++n) {
    for (int qi = 1; qi <= 10; ++qi) {
      const double q = qi / 10.0;
      const auto wv = geometric_weights(n, q);
      double sum = 0.0;
      for (double w : wv.weights) sum += w;
      CHECK(std::abs(sum - 1.0) <= 1e-9);
      for (std::size_t i = 1; i < wv.weights.size(); ++i)
        CHECK(wv.weights[i] <= wv.weights[0]);
      if (q < 1.0 && n > 1) CHECK(wv.weights[0] > wv.weights[1]);
    }
  }
}

TEST_CASE("cosine") {
  const SentenceVector a{{1.0, 0.0}}, b{{0.0, 1.0}}, c{{1.0, 1.0}};
  CHECK(cosine(a, a) == doctest::Approx(1.0));
  CHECK(cosine(a, b) == doctest::Approx(0.0));
  CHECK(cosine(c, a) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(cosine(a, SentenceVector{{0.0, 0.0}}), ValidationError);
  CHECK_THROWS_AS(cosine(a, SentenceVector{{1.0, 0.0, 0.0}}), ValidationError);
}

namespace {

// Encoder scripted so candidate similarities come out exactly 1, 0.5, 0.25.
MockEncoder fixed_similarity_encoder() {
  MockEncoder enc(2);
  enc.set("cand", {1.0, 0.0});
  enc.set("ref0", {1.0, 0.0});
  enc.set("ref1", {0.5, std::sqrt(3.0) / 2.0});
  enc.set("ref2", {0.25, std::sqrt(15.0) / 4.0});
  return enc;
}

AugmentationSet three_ref_set() {
  AugmentationSet set;
  set.entries.push_back({0.0, "ref0"});
  set.entries.push_back({0.2, "ref1"});
  set.entries.push_back({0.4, "ref2"});
  return set;
}

}  // namespace

TEST_CASE("mars_score") {
  SUBCASE("self similarity with only the human reference is exactly 1") {
    MockEncoder enc(2);
    enc.set("the reference", {0.6, 0.8});
    AugmentationSet set;
    set.entries.push_back({0.0, "the reference"});
    CHECK(mars_score("the reference", set, 0.75, enc) == 1.0);
  }
  SUBCASE("hand-weighted mixture: sims 1, 0.5, 0.25 at q = 0.5 give 0.75") {
    const auto enc = fixed_similarity_encoder();
    const double got = mars_score("cand", three_ref_set(), 0.5, enc);
    CHECK(std::abs(got - 0.75) < 1e-12);
  }
  SUBCASE("orthogonal candidate scores 0") {
    MockEncoder enc(2);
    enc.set("cand", {1.0, 0.0});
    enc.set("r0", {0.0, 1.0});
    enc.set("r1", {0.0, 2.0});
    AugmentationSet set;
    set.entries.push_back({0.0, "r0"});
    set.entries.push_back({0.2, "r1"});
    CHECK(mars_score("cand", set, 0.75, enc) == doctest::Approx(0.0));
  }
  SUBCASE("single-reference set degenerates to plain cosine exactly") {
    MockEncoder enc(2);
    enc.set("cand", {0.3, 0.7});
    enc.set("ref", {0.9, 0.1});
    AugmentationSet set;
    set.entries.push_back({0.0, "ref"});
    const double direct = cosine(enc.encode("cand"), enc.encode("ref"));
    CHECK(mars_score("cand", set, 0.75, enc) == direct);
  }
  SUBCASE("empty augmentation set rejected") {
    MockEncoder enc(2);
    CHECK_THROWS_AS(mars_score("cand", AugmentationSet{}, 0.75, enc), ValidationError);
  }
}

TEST_CASE("mars stays within bounds on random augmentation sets") {
  HashNgramEncoder enc(32);
  std::mt19937_64 rng(6);
  const std::vector<std::string> vocab = {"sun", "moon", "walked", "river", "slowly", "bright"};
  for (int trial = 0; trial < 50; ++trial) {
    AugmentationSet set;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 4); ++i) {
      std::string text;
      for (int k = 0; k < 3 + static_cast<int>(rng() % 5); ++k)
        text += vocab[rng() % vocab.size()] + " ";
      set.entries.push_back({0.2 * i, text});
    }
    std::string cand = vocab[rng() % vocab.size()] + " " + vocab[rng() % vocab.size()];
    const double score = mars_score(cand, set, 0.75, enc);
    CHECK(score >= -1.0);
    CHECK(score <= 1.0);
  }
}

TEST_CASE("weighted-sum symmetry over non-human references") {
  // Swapping two non-human references while swapping their weights leaves
  // the score unchanged.
  MockEncoder enc(2);
  enc.set("cand", {1.0, 0.0});
  enc.set("r0", {1.0, 0.0});
  enc.set("rA", {0.5, std::sqrt(3.0) / 2.0});
  enc.set("rB", {0.25, std::sqrt(15.0) / 4.0});
  AugmentationSet ab, ba;
  ab.entries = {{0.0, "r0"}, {0.2, "rA"}, {0.4, "rB"}};
  ba.entries = {{0.0, "r0"}, {0.2, "rB"}, {0.4, "rA"}};
  const auto da = mars_score_detailed("cand", ab, 0.5, enc);
  const auto db = mars_score_detailed("cand", ba, 0.5, enc);
  // Same multiset of (weight, similarity) products, permuted.
  const double manual_a = da.weights.weights[1] * da.similarities[2] +
                          da.weights.weights[2] * da.similarities[1];
  const double manual_b = db.weights.weights[1] * db.similarities[1] +
                          db.weights.weights[2] * db.similarities[2];
  CHECK(manual_a == doctest::Approx(manual_b).epsilon(1e-12));
}

TEST_CASE("score_records") {
  MockEncoder enc(2);
  enc.set("cand one", {1.0, 0.0});
  enc.set("ref one", {1.0, 0.0});

  EvalRecord rec;
  rec.id = "r1";
  rec.context = "ctx";
  rec.human_reference = "ref one";
  rec.candidates.push_back({"sysA", "cand one", {4.0}});
  std::map<std::string, AugmentationSet> augsets;
  augsets["r1"].entries.push_back({0.0, "ref one"});

  SUBCASE("empty input yields empty output") {
    CHECK(score_records({}, {}, 0.75, enc).empty());
  }
  SUBCASE("single record matches mars_score and keeps baselines off") {
    const auto reports = score_records({rec}, augsets, 0.75, enc);
    REQUIRE(reports.size() == 1);
    REQUIRE(reports[0].candidates.size() == 1);
    CHECK(reports[0].candidates[0].mars ==
          mars_score("cand one", augsets["r1"], 0.75, enc));
    CHECK(reports[0].candidates[0].baselines.empty());
    CHECK(reports[0].q == doctest::Approx(0.75));
  }
  SUBCASE("baseline flags populate the map") {
    BaselineOptions opts;
    opts.bleu1 = true;
    opts.rouge_l = true;
    const auto reports = score_records({rec}, augsets, 0.75, enc, opts);
    CHECK(reports[0].candidates[0].baselines.count("bleu1") == 1);
    CHECK(reports[0].candidates[0].baselines.count("rougeL") == 1);
  }
  SUBCASE("missing augmentation set is a validation error") {
    EvalRecord other = rec;
    other.id = "r2";
    CHECK_THROWS_AS(score_records({other}, augsets, 0.75, enc), ValidationError);
  }
}

TEST_CASE("score reports JSONL round trip") {
  ScoreReport report;
  report.record_id = "r9";
  report.q = 0.75;
  CandidateScore cs;
  cs.system_id = "sysZ";
  cs.mars = 0.625;
  cs.similarities = {1.0, 0.25};
  cs.weights = {0.8, 0.2};
  cs.baselines["bleu1"] = 0.5;
  report.candidates.push_back(cs);

  const auto path =
      (std::filesystem::temp_directory_path() / "mars_scores_roundtrip.jsonl").string();
  save_reports({report}, path);
  const auto loaded = load_reports(path);
  std::remove(path.c_str());
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].record_id == "r9");
  CHECK(loaded[0].candidates[0].baselines.at("bleu1") == doctest::Approx(0.5));
  CHECK(loaded[0].candidates[0].similarities == cs.similarities);
}
