#include "mars/corpus_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mars {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '\''; }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

double Candidate::mean_rating() const {
  if (ratings.empty()) throw ValidationError("candidate has no human rating");
  return std::accumulate(ratings.begin(), ratings.end(), 0.0) /
         static_cast<double>(ratings.size());
}

const char* to_string(PosTag tag) {
  switch (tag) {
    case PosTag::Adj: return "ADJ";
    case PosTag::Adv: return "ADV";
    case PosTag::Noun: return "NOUN";
    case PosTag::Other: return "OTHER";
  }
  return "OTHER";
}

// ---------------------------------------------------------------------------
// Records

namespace {

Candidate candidate_from_json(const nlohmann::json& j, const std::string& record_id) {
  Candidate c;
  if (!j.contains("system") || !j.contains("text"))
    throw ParseError("candidate in record '" + record_id + "' is missing system/text");
  c.system_id = j.at("system").get<std::string>();
  c.text = j.at("text").get<std::string>();
  if (j.contains("rating") && !j.at("rating").is_null()) {
    const auto& r = j.at("rating");
    if (r.is_array())
      c.ratings = r.get<std::vector<double>>();
    else
      c.ratings.push_back(r.get<double>());
  }
  return c;
}

nlohmann::ordered_json candidate_to_json(const Candidate& c) {
  nlohmann::ordered_json j;
  j["system"] = c.system_id;
  j["text"] = c.text;
  if (c.ratings.size() == 1)
    j["rating"] = c.ratings.front();
  else if (c.ratings.size() > 1)
    j["rating"] = c.ratings;
  return j;
}

}  // namespace

std::vector<EvalRecord> load_records(const std::string& path, RecordFormat) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open records file: " + path);
  std::vector<EvalRecord> records;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed record at line " + std::to_string(line_no) + ": " + e.what());
    }
    EvalRecord rec;
    try {
      rec.id = j.at("id").get<std::string>();
      rec.context = j.at("context").get<std::string>();
      rec.human_reference = j.at("reference").get<std::string>();
      for (const auto& cj : j.value("candidates", nlohmann::json::array()))
        rec.candidates.push_back(candidate_from_json(cj, rec.id));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed record at line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen_ids.insert(rec.id).second)
      throw ValidationError("duplicate record id: " + rec.id);
    if (preprocess_text(rec.context).empty() || preprocess_text(rec.human_reference).empty())
      throw ValidationError("record '" + rec.id +
                            "' has an empty context or reference after preprocessing");
    records.push_back(std::move(rec));
  }
  return records;
}

void save_records(const std::vector<EvalRecord>& records, const std::string& path,
                  RecordFormat) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  for (const auto& rec : records) {
    nlohmann::ordered_json j;
    j["id"] = rec.id;
    j["context"] = rec.context;
    j["reference"] = rec.human_reference;
    j["candidates"] = nlohmann::ordered_json::array();
    for (const auto& c : rec.candidates) j["candidates"].push_back(candidate_to_json(c));
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Text

std::string preprocess_text(const std::string& raw) {
  static const std::regex url_re(R"([A-Za-z][A-Za-z0-9+.\-]*://\S+|www\.\S+)");
  static const std::regex hashtag_re(R"(#\w+)");
  static const std::regex space_re(R"(\s+)");
  std::string s = std::regex_replace(raw, url_re, " ");
  s = std::regex_replace(s, hashtag_re, " ");
  s = std::regex_replace(s, space_re, " ");
  auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(' ');
  return s.substr(b, e - b + 1);
}

Tokenization word_tokenize(const std::string& text) {
  Tokenization out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (is_word_char(c)) {
      while (i < n && is_word_char(static_cast<unsigned char>(text[i]))) ++i;
    } else {
      ++i;  // each punctuation character is its own token
    }
    out.tokens.push_back(text.substr(start, i - start));
    out.offsets.push_back(start);
  }
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  static const std::string no_space_before = ".,!?;:)]}%'";
  static const std::string no_space_after = "([{";
  std::string out;
  for (const auto& tok : tokens) {
    if (!out.empty()) {
      bool skip = tok.size() == 1 && no_space_before.find(tok[0]) != std::string::npos;
      char last = out.back();
      if (no_space_after.find(last) != std::string::npos) skip = true;
      if (!skip) out.push_back(' ');
    }
    out += tok;
  }
  return out;
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  const std::size_t n = text.size();
  auto flush = [&](std::size_t end) {
    while (start < end && std::isspace(static_cast<unsigned char>(text[start]))) ++start;
    std::size_t e = end;
    while (e > start && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    if (e > start) out.push_back(text.substr(start, e - start));
    start = end;
  };
  for (std::size_t i = 0; i < n; ++i) {
    char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i;
      while (j + 1 < n && (text[j + 1] == '.' || text[j + 1] == '!' || text[j + 1] == '?')) ++j;
      if (j + 1 >= n || std::isspace(static_cast<unsigned char>(text[j + 1]))) {
        flush(j + 1);
        i = j;
      }
    }
  }
  flush(n);
  return out;
}

// ---------------------------------------------------------------------------
// IDF

IdfTable::IdfTable(std::int64_t doc_count, std::map<std::string, std::int64_t> doc_frequency,
                   double floor)
    : doc_count_(doc_count), df_(std::move(doc_frequency)), floor_(floor) {
  if (doc_count_ <= 0) throw ValidationError("IdfTable needs a positive document count");
  if (floor_ <= 0.0) throw ValidationError("IdfTable floor must be positive");
  for (const auto& [tok, f] : df_)
    if (f < 0 || f > doc_count_)
      throw ValidationError("document frequency of '" + tok + "' outside [0, M]");
}

std::int64_t IdfTable::df(const std::string& token) const {
  auto it = df_.find(token);
  return it == df_.end() ? 0 : it->second;
}

double IdfTable::idf(const std::string& token) const {
  const double ratio = static_cast<double>(1 + df(token)) / static_cast<double>(1 + doc_count_);
  return std::max(floor_, -std::log(ratio));
}

void IdfTable::save(const std::string& path) const {
  nlohmann::ordered_json j;
  j["doc_count"] = doc_count_;
  j["floor"] = floor_;
  j["df"] = nlohmann::ordered_json::object();
  for (const auto& [tok, f] : df_) j["df"][tok] = f;
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open output file: " + path);
  out << j.dump() << '\n';
}

IdfTable IdfTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open IDF file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed IDF file: ") + e.what());
  }
  std::map<std::string, std::int64_t> df;
  for (const auto& [tok, f] : j.at("df").items()) df[tok] = f.get<std::int64_t>();
  return IdfTable(j.at("doc_count").get<std::int64_t>(), std::move(df),
                  j.at("floor").get<double>());
}

namespace {

void count_document(const std::vector<std::string>& doc,
                    std::unordered_map<std::string, std::int64_t>& df) {
  std::unordered_set<std::string> seen;
  for (const auto& tok : doc)
    if (seen.insert(tok).second) ++df[tok];
}

IdfTable finish_table(std::unordered_map<std::string, std::int64_t>&& counts,
                      std::size_t doc_count, double floor) {
  std::map<std::string, std::int64_t> ordered(counts.begin(), counts.end());
  return IdfTable(static_cast<std::int64_t>(doc_count), std::move(ordered), floor);
}

}  // namespace

IdfTable build_idf_table_serial(const std::vector<std::vector<std::string>>& documents,
                                double floor) {
  if (documents.empty()) throw ValidationError("IDF needs at least one document");
  std::unordered_map<std::string, std::int64_t> df;
  for (const auto& doc : documents) count_document(doc, df);
  return finish_table(std::move(df), documents.size(), floor);
}

IdfTable build_idf_table(const std::vector<std::vector<std::string>>& documents, double floor) {
  if (documents.empty()) throw ValidationError("IDF needs at least one document");
  const int n = static_cast<int>(documents.size());
  std::vector<std::unordered_map<std::string, std::int64_t>> partial;
#pragma omp parallel
  {
#pragma omp single
    {
      int threads = 1;
#ifdef _OPENMP
      threads = omp_get_num_threads();
#endif
      partial.resize(static_cast<std::size_t>(threads));
    }
    int tid = 0;
#ifdef _OPENMP
    tid = omp_get_thread_num();
#endif
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) count_document(documents[static_cast<std::size_t>(i)], partial[static_cast<std::size_t>(tid)]);
  }
  std::unordered_map<std::string, std::int64_t> df;
  for (auto& part : partial)
    for (auto& [tok, f] : part) df[tok] += f;
  return finish_table(std::move(df), documents.size(), floor);
}

// ---------------------------------------------------------------------------
// Truncation

Tokenization truncate_to_budget(const Tokenization& context_tokens,
                                const Tokenization& reference_tokens, int budget) {
  const auto ref_len = static_cast<int>(reference_tokens.size());
  if (budget < ref_len + 1)
    throw ValidationError("token budget " + std::to_string(budget) +
                          " leaves no room for context next to a " + std::to_string(ref_len) +
                          "-token reference");
  const auto keep = std::min(context_tokens.size(), static_cast<std::size_t>(budget - ref_len));
  Tokenization out;
  out.tokens.assign(context_tokens.tokens.begin(),
                    context_tokens.tokens.begin() + static_cast<std::ptrdiff_t>(keep));
  out.offsets.assign(context_tokens.offsets.begin(),
                     context_tokens.offsets.begin() + static_cast<std::ptrdiff_t>(keep));
  return out;
}

// ---------------------------------------------------------------------------
// POS tagging

namespace {

const std::unordered_set<std::string>& function_words() {
  static const std::unordered_set<std::string> words = {
      "the", "a", "an", "this", "that", "these", "those", "some", "any", "each", "every",
      "no", "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them",
      "my", "your", "his", "its", "our", "their", "mine", "yours", "hers", "ours", "theirs",
      "who", "whom", "whose", "which", "what", "where", "when", "why", "how",
      "in", "on", "at", "by", "for", "with", "about", "against", "between", "into",
      "through", "during", "before", "after", "above", "below", "to", "from", "up", "down",
      "of", "off", "over", "under", "and", "but", "or", "nor", "if", "because", "as",
      "until", "while", "since", "although", "though", "unless", "than", "whether",
      "be", "is", "am", "are", "was", "were", "been", "being", "have", "has", "had",
      "having", "do", "does", "did", "doing", "will", "would", "shall", "should", "can",
      "could", "may", "might", "must", "not", "n't", "there", "also",
      "go", "went", "gone", "goes", "going", "get", "got", "gotten", "gets", "getting",
      "say", "said", "says", "make", "made", "makes", "take", "took", "taken", "takes",
      "come", "came", "comes", "see", "saw", "seen", "sees", "know", "knew", "known",
      "knows", "want", "wanted", "wants", "give", "gave", "given", "gives", "call",
      "called", "calls", "put", "puts", "let", "lets", "keep", "kept", "keeps",
      "it's", "don't", "didn't", "doesn't", "isn't", "wasn't", "won't", "can't",
      "couldn't", "wouldn't", "shouldn't", "i'm", "i'll", "he's", "she's", "they're",
      "we're", "you're"};
  return words;
}

const std::unordered_set<std::string>& adverb_words() {
  static const std::unordered_set<std::string> words = {
      "very", "quite", "too", "so", "now", "then", "here", "just", "never", "always",
      "often", "soon", "again", "almost", "already", "still", "yet", "maybe", "perhaps",
      "rather", "instead", "once", "twice", "away", "back", "together", "well", "even",
      "ever", "far", "fast", "hard", "late", "early", "today", "tomorrow", "yesterday",
      "everywhere", "somewhere", "nowhere", "anymore", "later", "ago", "enough"};
  return words;
}

const std::unordered_set<std::string>& adjective_words() {
  static const std::unordered_set<std::string> words = {
      "good", "bad", "big", "small", "new", "old", "great", "little", "high", "low",
      "long", "short", "own", "other", "last", "next", "young", "important", "few",
      "public", "same", "able", "happy", "sad", "hot", "cold", "nice", "wrong", "right",
      "sure", "best", "worst", "better", "worse", "large", "free", "full", "empty",
      "easy", "quick", "slow", "loud", "quiet", "warm", "cool", "dark", "light",
      "clean", "dirty", "strong", "weak", "rich", "poor", "tired", "hungry",
      "busy", "ready", "fine", "huge", "tiny", "whole", "main", "real", "true",
      "false", "several", "many", "much", "more", "most", "less", "least", "first",
      "second", "third", "final", "favorite", "angry", "afraid", "proud", "glad",
      "upset", "excited", "nervous", "scared", "broken", "smoking"};
  return words;
}

bool has_suffix(const std::string& w, const char* suffix) {
  const std::size_t sn = std::char_traits<char>::length(suffix);
  return w.size() > sn + 2 && w.compare(w.size() - sn, sn, suffix) == 0;
}

PosTag tag_one(const std::string& token) {
  if (token.empty()) return PosTag::Other;
  const unsigned char first = static_cast<unsigned char>(token[0]);
  if (!std::isalpha(first)) return PosTag::Other;  // punctuation, numbers
  const std::string w = lower(token);
  if (function_words().count(w)) return PosTag::Other;
  if (adverb_words().count(w)) return PosTag::Adv;
  if (has_suffix(w, "ly")) return PosTag::Adv;
  if (adjective_words().count(w)) return PosTag::Adj;
  if (has_suffix(w, "ful") || has_suffix(w, "ous") || has_suffix(w, "ive") ||
      has_suffix(w, "able") || has_suffix(w, "ible") || has_suffix(w, "less") ||
      has_suffix(w, "ish"))
    return PosTag::Adj;
  return PosTag::Noun;
}

}  // namespace

std::vector<PosTag> RuleBasedTagger::tag(const std::vector<std::string>& tokens) const {
  std::vector<PosTag> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) out.push_back(tag_one(tok));
  return out;
}

std::unique_ptr<PosTagger> make_pos_tagger(const std::string& backend) {
  if (backend == "rule") return std::make_unique<RuleBasedTagger>();
  throw ConfigError("unknown POS tagger backend: " + backend);
}

}  // namespace mars
