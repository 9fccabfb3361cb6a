// Command-line front end for the MARS evaluation pipeline.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mars/augment.hpp"
#include "mars/bench.hpp"
#include "mars/config.hpp"
#include "mars/corpus_io.hpp"
#include "mars/lm_backends.hpp"
#include "mars/scoring.hpp"

using namespace mars;

namespace {

std::vector<double> parse_ratio_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

std::vector<std::vector<std::string>> idf_documents(const std::vector<EvalRecord>& records) {
  std::vector<std::vector<std::string>> docs;
  for (const auto& rec : records) {
    auto tokens = word_tokenize(preprocess_text(rec.context + " " + rec.human_reference)).tokens;
    for (auto& t : tokens)
      std::transform(t.begin(), t.end(), t.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    docs.push_back(std::move(tokens));
  }
  return docs;
}

void write_text(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw ParseError("cannot open output file: " + out_path);
  out << content;
}

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig effective_config(const CommonArgs& common) {
  RunConfig cfg;
  if (!common.config_path.empty()) cfg = load_config(common.config_path);
  if (common.seed_set) cfg.seed = common.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MARS: context-aware reference-augmented NLG evaluation"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--config", common.config_path, "JSON config file mirroring all defaults");
  auto* seed_opt = app.add_option("--seed", common.seed, "global RNG seed");

  // build-idf ---------------------------------------------------------------
  auto* cmd_idf = app.add_subcommand("build-idf", "build the corpus IDF table");
  cmd_idf->fallthrough();
  std::string idf_input, idf_out;
  double idf_floor = 0.05;
  cmd_idf->add_option("--input", idf_input, "records JSONL")->required();
  cmd_idf->add_option("--out", idf_out, "output idf.json")->required();
  cmd_idf->add_option("--floor", idf_floor, "IDF floor")->capture_default_str();

  // augment -----------------------------------------------------------------
  auto* cmd_aug = app.add_subcommand("augment", "build augmented reference sets");
  cmd_aug->fallthrough();
  std::string aug_input, aug_idf, aug_out, aug_ratios = "0,0.2,0.4,0.6,0.8";
  int aug_sigma = -1, aug_k = -1;
  double aug_eta = -1.0, aug_xi = -1.0;
  bool aug_naive = false, aug_greedy = false, aug_serial = false;
  cmd_aug->add_option("--input", aug_input, "records JSONL")->required();
  cmd_aug->add_option("--idf", aug_idf, "idf.json (defaults to building from the input)");
  cmd_aug->add_option("--out", aug_out, "output augmentations JSONL")->required();
  cmd_aug->add_option("--ratios", aug_ratios, "comma-separated masking ratios")->capture_default_str();
  cmd_aug->add_option("--sigma", aug_sigma, "max extra tokens per blank");
  cmd_aug->add_option("--eta", aug_eta, "self-planning learning rate");
  cmd_aug->add_option("--xi", aug_xi, "sampling temperature");
  cmd_aug->add_option("--k", aug_k, "self-planning iterations");
  cmd_aug->add_flag("--naive", aug_naive, "fixed-length masked-LM baseline");
  cmd_aug->add_flag("--greedy", aug_greedy, "argmax decoding instead of sampling");
  cmd_aug->add_flag("--serial", aug_serial, "use the serial reference kernel");

  // score -------------------------------------------------------------------
  auto* cmd_score = app.add_subcommand("score", "score candidates against augmented references");
  cmd_score->fallthrough();
  std::string score_input, score_aug, score_out, score_encoder, score_baselines,
      score_vectors;
  double score_q = -1.0;
  bool score_serial = false;
  cmd_score->add_option("--input", score_input, "records JSONL")->required();
  cmd_score->add_option("--aug", score_aug, "augmentations JSONL")->required();
  cmd_score->add_option("--out", score_out, "output scores JSONL")->required();
  cmd_score->add_option("--q", score_q, "geometric weighting ratio");
  cmd_score->add_option("--encoder", score_encoder, "sentence encoder backend (hash|static)");
  cmd_score->add_option("--static-vectors", score_vectors, "word vectors file for --encoder static");
  cmd_score->add_option("--baselines", score_baselines,
                        "comma list from {bleu1,rougeL,ppl}; empty for none");
  cmd_score->add_flag("--serial", score_serial, "use the serial reference kernel");

  // attack ------------------------------------------------------------------
  auto* cmd_attack = app.add_subcommand("attack", "generate adversarial candidates");
  cmd_attack->fallthrough();
  std::string atk_input, atk_out, atk_kind = "reorder";
  double atk_ratio = 0.5;
  cmd_attack->add_option("--input", atk_input, "records JSONL")->required();
  cmd_attack->add_option("--out", atk_out, "output records JSONL with attacked candidates")
      ->required();
  cmd_attack->add_option("--kind", atk_kind, "reorder|retrieve")->capture_default_str();
  cmd_attack->add_option("--ratio", atk_ratio, "fraction of tokens to reorder")->capture_default_str();

  // correlate ---------------------------------------------------------------
  auto* cmd_corr = app.add_subcommand("correlate", "Pearson r against human ratings");
  cmd_corr->fallthrough();
  std::string corr_input, corr_scores, corr_out, corr_group = "system",
              corr_format = "csv";
  cmd_corr->add_option("--input", corr_input, "records JSONL with ratings")->required();
  cmd_corr->add_option("--scores", corr_scores, "scores JSONL")->required();
  cmd_corr->add_option("--group-by", corr_group, "grouping key (system)")->capture_default_str();
  cmd_corr->add_option("--out", corr_out, "output path; stdout when omitted");
  cmd_corr->add_option("--format", corr_format, "csv|jsonl")->capture_default_str();

  // sweep -------------------------------------------------------------------
  auto* cmd_sweep = app.add_subcommand("sweep", "max-ratio sweep over the full pipeline");
  cmd_sweep->fallthrough();
  std::string sweep_input, sweep_idf, sweep_out, sweep_grid = "0,0.2,0.4,0.6,0.8",
              sweep_format = "csv";
  cmd_sweep->add_option("--input", sweep_input, "records JSONL with ratings")->required();
  cmd_sweep->add_option("--idf", sweep_idf, "idf.json (defaults to building from the input)");
  cmd_sweep->add_option("--grid", sweep_grid, "comma-separated lambda_max grid")->capture_default_str();
  cmd_sweep->add_option("--out", sweep_out, "output path; stdout when omitted");
  cmd_sweep->add_option("--format", sweep_format, "csv|jsonl")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    common.seed_set = seed_opt->count() > 0;
    RunConfig cfg = effective_config(common);

    if (cmd_idf->parsed()) {
      const auto records = load_records(idf_input);
      const auto table = build_idf_table(idf_documents(records), idf_floor);
      table.save(idf_out);
      std::cerr << "wrote IDF for " << table.doc_count() << " documents to " << idf_out << "\n";
      return 0;
    }

    if (cmd_aug->parsed()) {
      if (aug_sigma >= 0) cfg.sigma = aug_sigma;
      if (aug_eta >= 0) cfg.selfplan.eta = aug_eta;
      if (aug_xi >= 0) cfg.selfplan.xi = aug_xi;
      if (aug_k >= 0) cfg.selfplan.iterations = aug_k;
      cfg.selfplan.greedy = cfg.selfplan.greedy || aug_greedy;
      cfg.ratios = parse_ratio_list(aug_ratios);

      const auto records = load_records(aug_input);
      const auto idf = aug_idf.empty() ? build_idf_table(idf_documents(records), cfg.idf_floor)
                                       : IdfTable::load(aug_idf);
      const auto tagger = make_pos_tagger(cfg.pos_tagger);

      std::vector<AugmentationSet> sets;
      if (aug_naive) {
        const auto mlm = HashMlm::from_corpus(records);
        sets.reserve(records.size());
        for (const auto& rec : records)
          sets.push_back(naive_augment(mlm, rec, cfg.ratios, idf, cfg.alpha, *tagger));
      } else {
        const auto lm = make_lm(cfg.lm_backend, records);
        sets = aug_serial
                   ? augment_records_serial(*lm, records, cfg.ratios, idf, cfg.alpha, *tagger,
                                            cfg.selfplan, cfg.sigma, cfg.seed)
                   : augment_records(*lm, records, cfg.ratios, idf, cfg.alpha, *tagger,
                                     cfg.selfplan, cfg.sigma, cfg.seed);
      }
      save_augmentations(records, sets, aug_out);
      std::cerr << "augmented " << records.size() << " records -> " << aug_out << "\n";
      return 0;
    }

    if (cmd_score->parsed()) {
      if (score_q > 0) cfg.q = score_q;
      if (!score_encoder.empty()) cfg.encoder_backend = score_encoder;
      if (!score_vectors.empty()) cfg.static_vectors_path = score_vectors;

      const auto records = load_records(score_input);
      const auto augsets = load_augmentations(score_aug);
      const auto encoder = make_encoder(cfg.encoder_backend, cfg.static_vectors_path);

      BaselineOptions baselines;
      std::unique_ptr<AutoregressiveLm> lm;
      std::stringstream ss(score_baselines);
      std::string name;
      while (std::getline(ss, name, ',')) {
        if (name == "bleu1") {
          baselines.bleu1 = true;
        } else if (name == "rougeL") {
          baselines.rouge_l = true;
        } else if (name == "ppl") {
          baselines.ppl = true;
          lm = make_lm(cfg.lm_backend, records);
          baselines.lm = lm.get();
        } else if (!name.empty()) {
          throw ConfigError("unknown baseline: " + name);
        }
      }

      const auto reports = score_serial
                               ? score_records_serial(records, augsets, cfg.q, *encoder, baselines)
                               : score_records(records, augsets, cfg.q, *encoder, baselines);
      save_reports(reports, score_out);
      std::cerr << "scored " << reports.size() << " records -> " << score_out << "\n";
      return 0;
    }

    if (cmd_attack->parsed()) {
      auto records = load_records(atk_input);
      AttackSpec spec;
      spec.reorder_ratio = atk_ratio;
      spec.seed = cfg.seed;
      if (atk_kind == "reorder")
        spec.kind = AttackKind::reorder;
      else if (atk_kind == "retrieve")
        spec.kind = AttackKind::retrieve;
      else
        throw ConfigError("unknown attack kind: " + atk_kind);

      std::uint64_t counter = 0;
      for (auto& rec : records) {
        const std::string ctx = preprocess_text(rec.context);
        for (auto& cand : rec.candidates) {
          const std::uint64_t seed = derive_seed(spec.seed, rec.id, static_cast<int>(counter++));
          cand.text = spec.kind == AttackKind::reorder
                          ? attack_reorder(preprocess_text(cand.text), spec.reorder_ratio, seed)
                          : attack_retrieve(ctx, seed);
        }
      }
      save_records(records, atk_out);
      std::cerr << "attacked candidates (" << atk_kind << ") -> " << atk_out << "\n";
      return 0;
    }

    if (cmd_corr->parsed()) {
      if (corr_group != "system") throw ConfigError("unsupported group-by key: " + corr_group);
      const auto records = load_records(corr_input);
      const auto reports = load_reports(corr_scores);
      const auto table = correlate(records, reports);
      write_text(corr_out, corr_format == "jsonl" ? correlation_to_jsonl(table)
                                                  : correlation_to_csv(table));
      return 0;
    }

    if (cmd_sweep->parsed()) {
      const auto records = load_records(sweep_input);
      const auto idf = sweep_idf.empty() ? build_idf_table(idf_documents(records), cfg.idf_floor)
                                         : IdfTable::load(sweep_idf);
      const auto lm = make_lm(cfg.lm_backend, records);
      const auto encoder = make_encoder(cfg.encoder_backend, cfg.static_vectors_path);
      const auto tagger = make_pos_tagger(cfg.pos_tagger);

      SweepConfig sweep_cfg;
      sweep_cfg.lm = lm.get();
      sweep_cfg.encoder = encoder.get();
      sweep_cfg.idf = &idf;
      sweep_cfg.alpha = cfg.alpha;
      sweep_cfg.tagger = tagger.get();
      sweep_cfg.selfplan = cfg.selfplan;
      sweep_cfg.sigma = cfg.sigma;
      sweep_cfg.q = cfg.q;
      sweep_cfg.seed = cfg.seed;

      const auto rows = sweep_lambda_max(records, parse_ratio_list(sweep_grid), sweep_cfg);
      write_text(sweep_out,
                 sweep_format == "jsonl" ? sweep_to_jsonl(rows) : sweep_to_csv(rows));
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
