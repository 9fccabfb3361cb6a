// Benchmark comparing the OpenMP kernels against their serial reference
// implementations on a synthetic corpus, verifying identical output.

#include <chrono>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mars/augment.hpp"
#include "mars/corpus_io.hpp"
#include "mars/lm_backends.hpp"
#include "mars/scoring.hpp"

using namespace mars;
using Clock = std::chrono::steady_clock;

namespace {

std::vector<EvalRecord> synthetic_records(int n, std::uint64_t seed) {
  const std::vector<std::string> nouns = {"harbor", "engine", "letter", "market", "bridge",
                                          "signal", "garden", "window", "valley", "record"};
  const std::vector<std::string> verbs = {"carried", "opened",  "watched", "crossed",
                                          "painted", "cleaned", "counted"};
  const std::vector<std::string> mods = {"quiet", "old", "bright", "narrow", "heavy", "small"};
  std::mt19937_64 rng(seed);
  std::vector<EvalRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    EvalRecord rec;
    rec.id = "bench" + std::to_string(i);
    std::string ctx;
    for (int s = 0; s < 3; ++s)
      ctx += "the " + mods[rng() % mods.size()] + " " + nouns[rng() % nouns.size()] + " " +
             verbs[rng() % verbs.size()] + " the " + nouns[rng() % nouns.size()] + ". ";
    rec.context = ctx;
    rec.human_reference = "they " + verbs[rng() % verbs.size()] + " the " +
                          mods[rng() % mods.size()] + " " + nouns[rng() % nouns.size()] +
                          " near the " + nouns[rng() % nouns.size()] + ".";
    for (int c = 0; c < 2; ++c)
      rec.candidates.push_back({"sys" + std::to_string(c),
                                "they " + verbs[rng() % verbs.size()] + " the " +
                                    nouns[rng() % nouns.size()] + " quickly",
                                {static_cast<double>(1 + rng() % 5)}});
    records.push_back(std::move(rec));
  }
  return records;
}

template <typename F>
double time_ms(F&& fn) {
  const auto start = Clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void print_row(const std::string& kernel, double serial_ms, double parallel_ms, bool equal) {
  std::cout << std::left << std::setw(22) << kernel << std::right << std::fixed
            << std::setprecision(1) << std::setw(12) << serial_ms << std::setw(12)
            << parallel_ms << std::setw(10) << std::setprecision(2)
            << serial_ms / parallel_ms << std::setw(10) << (equal ? "yes" : "NO") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel comparison"};
  int n_records = 400;
  int n_docs = 20000;
  std::uint64_t seed = 42;
  app.add_option("--records", n_records, "records for augment/score kernels")->capture_default_str();
  app.add_option("--docs", n_docs, "documents for the IDF kernel")->capture_default_str();
  app.add_option("--seed", seed, "corpus seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  std::cout << "OpenMP threads: " << omp_get_max_threads() << "\n";
#else
  std::cout << "built without OpenMP; parallel kernels run serially\n";
#endif

  const auto records = synthetic_records(n_records, seed);
  const auto idf_corpus = synthetic_records(n_docs, seed + 1);
  std::vector<std::vector<std::string>> docs;
  docs.reserve(idf_corpus.size());
  for (const auto& rec : idf_corpus)
    docs.push_back(word_tokenize(preprocess_text(rec.context + " " + rec.human_reference)).tokens);

  std::cout << n_docs << " IDF documents, " << n_records << " records\n\n";
  std::cout << std::left << std::setw(22) << "kernel" << std::right << std::setw(12)
            << "serial ms" << std::setw(12) << "openmp ms" << std::setw(10) << "speedup"
            << std::setw(10) << "equal" << "\n";

  {
    IdfTable serial_table(1, {}, 1.0), parallel_table(1, {}, 1.0);
    const double t_serial = time_ms([&] { serial_table = build_idf_table_serial(docs, 0.05); });
    const double t_parallel = time_ms([&] { parallel_table = build_idf_table(docs, 0.05); });
    const bool equal = serial_table.doc_frequency() == parallel_table.doc_frequency() &&
                       serial_table.doc_count() == parallel_table.doc_count();
    print_row("build-idf", t_serial, t_parallel, equal);
  }

  const auto idf = build_idf_table(docs, 0.05);
  const auto lm = HashLm::from_corpus(records);
  RuleBasedTagger tagger;
  SelfPlanConfig cfg;
  const std::vector<double> ratios = {0.0, 0.2, 0.4};

  std::vector<AugmentationSet> sets_serial, sets_parallel;
  {
    const double t_serial = time_ms([&] {
      sets_serial = augment_records_serial(lm, records, ratios, idf, default_alpha(), tagger,
                                           cfg, 3, seed);
    });
    const double t_parallel = time_ms([&] {
      sets_parallel =
          augment_records(lm, records, ratios, idf, default_alpha(), tagger, cfg, 3, seed);
    });
    bool equal = sets_serial.size() == sets_parallel.size();
    for (std::size_t i = 0; equal && i < sets_serial.size(); ++i) {
      equal = sets_serial[i].entries.size() == sets_parallel[i].entries.size();
      for (std::size_t k = 0; equal && k < sets_serial[i].entries.size(); ++k)
        equal = sets_serial[i].entries[k].text == sets_parallel[i].entries[k].text;
    }
    print_row("augment-records", t_serial, t_parallel, equal);
  }

  {
    std::map<std::string, AugmentationSet> augsets;
    for (std::size_t i = 0; i < records.size(); ++i) augsets[records[i].id] = sets_serial[i];
    HashNgramEncoder encoder(64);
    BaselineOptions baselines;
    baselines.bleu1 = true;
    baselines.rouge_l = true;
    baselines.ppl = true;
    baselines.lm = &lm;

    std::vector<ScoreReport> rep_serial, rep_parallel;
    const double t_serial = time_ms(
        [&] { rep_serial = score_records_serial(records, augsets, 0.75, encoder, baselines); });
    const double t_parallel =
        time_ms([&] { rep_parallel = score_records(records, augsets, 0.75, encoder, baselines); });
    bool equal = rep_serial.size() == rep_parallel.size();
    for (std::size_t i = 0; equal && i < rep_serial.size(); ++i) {
      equal = rep_serial[i].candidates.size() == rep_parallel[i].candidates.size();
      for (std::size_t c = 0; equal && c < rep_serial[i].candidates.size(); ++c)
        equal = rep_serial[i].candidates[c].mars == rep_parallel[i].candidates[c].mars &&
                rep_serial[i].candidates[c].baselines == rep_parallel[i].candidates[c].baselines;
    }
    print_row("score-records", t_serial, t_parallel, equal);
  }

  return 0;
}
