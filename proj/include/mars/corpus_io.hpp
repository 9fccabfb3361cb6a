#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mars/error.hpp"

namespace mars {

/// One candidate output of an NLG system, with optional human ratings.
struct Candidate {
  std::string system_id;
  std::string text;
  std::vector<double> ratings;  // empty means no human rating

  bool has_rating() const { return !ratings.empty(); }
  double mean_rating() const;
};

/// One benchmark item: generation context, human reference, candidates.
struct EvalRecord {
  std::string id;
  std::string context;
  std::string human_reference;
  std::vector<Candidate> candidates;
};

/// Word-level tokenization with byte offsets into the source string.
/// Re-inserting the inter-token gaps reconstructs the source exactly.
struct Tokenization {
  std::vector<std::string> tokens;
  std::vector<std::size_t> offsets;  // byte offset of each token start

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

enum class PosTag { Adj, Adv, Noun, Other };

const char* to_string(PosTag tag);

/// Corpus document-frequency statistics with smoothed, floored IDF lookup.
/// Immutable after construction.
class IdfTable {
 public:
  IdfTable(std::int64_t doc_count, std::map<std::string, std::int64_t> doc_frequency,
           double floor);

  /// max(floor, -log((1 + df) / (1 + M))); unseen tokens use df = 0.
  double idf(const std::string& token) const;
  std::int64_t df(const std::string& token) const;
  std::int64_t doc_count() const { return doc_count_; }
  double floor() const { return floor_; }
  const std::map<std::string, std::int64_t>& doc_frequency() const { return df_; }

  void save(const std::string& path) const;
  static IdfTable load(const std::string& path);

 private:
  std::int64_t doc_count_;
  std::map<std::string, std::int64_t> df_;
  double floor_;
};

enum class RecordFormat { jsonl };

std::vector<EvalRecord> load_records(const std::string& path,
                                     RecordFormat format = RecordFormat::jsonl);
void save_records(const std::vector<EvalRecord>& records, const std::string& path,
                  RecordFormat format = RecordFormat::jsonl);

/// Strips hashtags and URLs, collapses whitespace. Idempotent, total.
std::string preprocess_text(const std::string& raw);

/// Splits into word and punctuation tokens; whitespace separates, never emitted.
Tokenization word_tokenize(const std::string& text);

/// Joins tokens with spaces, omitting the space before closing punctuation.
std::string join_tokens(std::span<const std::string> tokens);

/// Punctuation-based sentence splitter ('.', '!', '?' + whitespace).
std::vector<std::string> split_sentences(const std::string& text);

/// Document-frequency scan over tokenized documents. OpenMP-parallel across
/// documents; `build_idf_table_serial` is the reference implementation.
IdfTable build_idf_table(const std::vector<std::vector<std::string>>& documents, double floor);
IdfTable build_idf_table_serial(const std::vector<std::vector<std::string>>& documents,
                                double floor);

/// Cuts the context's tail so context + reference fits in `budget` tokens.
/// The reference is never cut; requires budget >= |reference| + 1.
Tokenization truncate_to_budget(const Tokenization& context_tokens,
                                const Tokenization& reference_tokens, int budget);

/// Coarse 4-way part-of-speech tagging.
class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual std::vector<PosTag> tag(const std::vector<std::string>& tokens) const = 0;
};

/// Deterministic lexicon+suffix tagger; no external model needed.
class RuleBasedTagger final : public PosTagger {
 public:
  std::vector<PosTag> tag(const std::vector<std::string>& tokens) const override;
};

/// Known backends: "rule". Anything else throws ConfigError.
std::unique_ptr<PosTagger> make_pos_tagger(const std::string& backend);

}  // namespace mars
