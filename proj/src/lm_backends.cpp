#include "mars/lm_backends.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace mars {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

// splitmix64; also used for seed derivation elsewhere.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double u01(std::uint64_t& s) {
  s = mix64(s);
  return static_cast<double>(s >> 11) * 0x1.0p-53;
}

}  // namespace

Vector hash_gaussian_vector(std::uint64_t seed, int dim) {
  // Box-Muller on hand-rolled uniforms keeps results platform-independent.
  Vector v(static_cast<std::size_t>(dim));
  std::uint64_t s = seed;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int i = 0; i < dim; i += 2) {
    double u1 = u01(s), u2 = u01(s);
    u1 = std::max(u1, 1e-12);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    v[static_cast<std::size_t>(i)] = radius * std::cos(2.0 * M_PI * u2) * scale;
    if (i + 1 < dim) v[static_cast<std::size_t>(i) + 1] = radius * std::sin(2.0 * M_PI * u2) * scale;
  }
  return v;
}

// ---------------------------------------------------------------------------
// HashLm

HashLm::HashLm(std::vector<std::string> vocabulary, int dim, std::uint64_t seed)
    : vocab_(std::move(vocabulary)), dim_(dim) {
  if (vocab_.empty()) throw ConfigError("HashLm needs a non-empty vocabulary");
  embed_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    index_.emplace(vocab_[i], static_cast<TokenId>(i));
    embed_.push_back(hash_gaussian_vector(fnv1a(vocab_[i]) ^ seed, dim_));
  }
  auto sep = index_.find("\n");
  auto unk = index_.find("<unk>");
  if (sep == index_.end() || unk == index_.end())
    throw ConfigError("HashLm vocabulary must contain \"\\n\" and \"<unk>\"");
  sep_ = sep->second;
  unk_ = unk->second;
}

HashLm HashLm::from_corpus(const std::vector<EvalRecord>& records, int dim,
                           std::uint64_t seed) {
  std::set<std::string> words;
  auto add = [&](const std::string& text) {
    for (const auto& tok : word_tokenize(preprocess_text(text)).tokens) words.insert(tok);
  };
  for (const auto& rec : records) {
    add(rec.context);
    add(rec.human_reference);
    for (const auto& c : rec.candidates) add(c.text);
  }
  std::vector<std::string> vocab = {"\n", "<unk>"};
  vocab.insert(vocab.end(), words.begin(), words.end());
  return HashLm(std::move(vocab), dim, seed);
}

LmState HashLm::initial_state() const {
  LmState s;
  s.hidden.assign(static_cast<std::size_t>(dim_), 0.0);
  return s;
}

LmState HashLm::advance(const LmState& state, TokenId token) const {
  LmState next;
  next.prefix = state.prefix;
  next.prefix.push_back(token);
  next.hidden.resize(static_cast<std::size_t>(dim_));
  const Vector& e = embed_[static_cast<std::size_t>(token)];
  for (int i = 0; i < dim_; ++i)
    next.hidden[static_cast<std::size_t>(i)] =
        decay_ * state.hidden[static_cast<std::size_t>(i)] + (1.0 - decay_) * e[static_cast<std::size_t>(i)];
  return next;
}

Vector HashLm::logits_from_hidden(const Vector& hidden) const {
  Vector logits(vocab_.size(), 0.0);
  for (std::size_t v = 0; v < vocab_.size(); ++v) {
    double dot = 0.0;
    const Vector& e = embed_[v];
    for (int i = 0; i < dim_; ++i) dot += e[static_cast<std::size_t>(i)] * hidden[static_cast<std::size_t>(i)];
    logits[v] = scale_ * dot;
  }
  return logits;
}

Vector HashLm::project_gradient(const Vector& grad_logits) const {
  Vector g(static_cast<std::size_t>(dim_), 0.0);
  for (std::size_t v = 0; v < vocab_.size(); ++v) {
    const double w = scale_ * grad_logits[v];
    if (w == 0.0) continue;
    const Vector& e = embed_[v];
    for (int i = 0; i < dim_; ++i) g[static_cast<std::size_t>(i)] += w * e[static_cast<std::size_t>(i)];
  }
  return g;
}

Vector HashLm::token_embedding(TokenId token) const {
  if (token < 0 || token >= vocab_size())
    throw ValidationError("token id " + std::to_string(token) + " outside vocabulary");
  return embed_[static_cast<std::size_t>(token)];
}

std::vector<TokenId> HashLm::tokenize(const std::string& text) const {
  std::vector<TokenId> out;
  if (text == "\n") return {sep_};
  for (const auto& tok : word_tokenize(text).tokens) {
    auto it = index_.find(tok);
    out.push_back(it == index_.end() ? unk_ : it->second);
  }
  return out;
}

std::string HashLm::token_text(TokenId token) const {
  if (token < 0 || token >= vocab_size())
    throw ValidationError("token id " + std::to_string(token) + " outside vocabulary");
  return vocab_[static_cast<std::size_t>(token)];
}

std::unique_ptr<AutoregressiveLm> HashLm::clone() const {
  return std::make_unique<HashLm>(*this);
}

// ---------------------------------------------------------------------------
// ScriptedLm

ScriptedLm::ScriptedLm(std::vector<std::string> vocabulary, Vector default_probs)
    : vocab_(std::move(vocabulary)), default_probs_(std::move(default_probs)) {
  if (vocab_.empty()) throw ConfigError("ScriptedLm needs a non-empty vocabulary");
  for (std::size_t i = 0; i < vocab_.size(); ++i)
    index_.emplace(vocab_[i], static_cast<TokenId>(i));
  if (default_probs_.empty())
    default_probs_.assign(vocab_.size(), 1.0 / static_cast<double>(vocab_.size()));
  if (default_probs_.size() != vocab_.size())
    throw ConfigError("default distribution size must match the vocabulary");
}

void ScriptedLm::script(const std::vector<TokenId>& prefix, Vector probs) {
  if (probs.size() != vocab_.size())
    throw ConfigError("scripted distribution size must match the vocabulary");
  script_[prefix] = std::move(probs);
}

void ScriptedLm::script_words(const std::vector<std::string>& prefix_words,
                              const std::vector<std::pair<std::string, double>>& probs) {
  std::vector<TokenId> prefix;
  for (const auto& w : prefix_words) prefix.push_back(id(w));
  Vector p(vocab_.size(), 0.0);
  double assigned = 0.0;
  for (const auto& [w, pr] : probs) {
    p[static_cast<std::size_t>(id(w))] = pr;
    assigned += pr;
  }
  // Spread leftover mass uniformly over unassigned tokens.
  if (assigned < 1.0) {
    int zero_count = static_cast<int>(std::count(p.begin(), p.end(), 0.0));
    if (zero_count > 0) {
      const double fill = (1.0 - assigned) / zero_count;
      for (double& x : p)
        if (x == 0.0) x = fill;
    }
  }
  script(prefix, std::move(p));
}

TokenId ScriptedLm::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw ValidationError("unknown token: " + token);
  return it->second;
}

Vector ScriptedLm::probs_for(const std::vector<TokenId>& prefix) const {
  auto it = script_.find(prefix);
  return it == script_.end() ? default_probs_ : it->second;
}

LmState ScriptedLm::initial_state() const {
  LmState s;
  s.hidden = probs_for({});
  return s;
}

LmState ScriptedLm::advance(const LmState& state, TokenId token) const {
  LmState next;
  next.prefix = state.prefix;
  next.prefix.push_back(token);
  next.hidden = probs_for(next.prefix);
  return next;
}

Vector ScriptedLm::logits_from_hidden(const Vector& hidden) const {
  Vector logits(hidden.size());
  for (std::size_t i = 0; i < hidden.size(); ++i)
    logits[i] = std::log(std::max(hidden[i], 1e-300));
  return logits;
}

Vector ScriptedLm::project_gradient(const Vector& grad_logits) const {
  // Scripted distributions are constants: there is nothing to steer. The
  // zero gradient makes guided decoding fall back to vanilla sampling.
  return Vector(grad_logits.size(), 0.0);
}

Vector ScriptedLm::token_embedding(TokenId token) const {
  if (token < 0 || token >= vocab_size())
    throw ValidationError("token id " + std::to_string(token) + " outside vocabulary");
  Vector e(vocab_.size(), 0.0);
  e[static_cast<std::size_t>(token)] = 1.0;
  return e;
}

std::vector<TokenId> ScriptedLm::tokenize(const std::string& text) const {
  std::vector<TokenId> out;
  if (text == "\n") return separator();
  for (const auto& tok : word_tokenize(text).tokens) out.push_back(id(tok));
  return out;
}

std::string ScriptedLm::token_text(TokenId token) const {
  if (token < 0 || token >= vocab_size())
    throw ValidationError("token id " + std::to_string(token) + " outside vocabulary");
  return vocab_[static_cast<std::size_t>(token)];
}

std::vector<TokenId> ScriptedLm::separator() const {
  auto it = index_.find("\n");
  return it == index_.end() ? std::vector<TokenId>{} : std::vector<TokenId>{it->second};
}

std::unique_ptr<AutoregressiveLm> ScriptedLm::clone() const {
  return std::make_unique<ScriptedLm>(*this);
}

// ---------------------------------------------------------------------------
// LinearToyLm

LinearToyLm::LinearToyLm(int vocab, int dim, std::uint64_t seed)
    : vocab_n_(vocab), dim_(dim) {
  for (int v = 0; v < vocab; ++v)
    head_.push_back(hash_gaussian_vector(mix64(seed ^ (0x1000u + static_cast<std::uint64_t>(v))), dim));
  for (int i = 0; i < dim; ++i) {
    auto row = hash_gaussian_vector(mix64(seed ^ (0x2000u + static_cast<std::uint64_t>(i))), dim);
    for (double& x : row) x *= 0.5;
    trans_.push_back(std::move(row));
  }
  for (int v = 0; v < vocab; ++v)
    embed_.push_back(hash_gaussian_vector(mix64(seed ^ (0x3000u + static_cast<std::uint64_t>(v))), dim));
}

LmState LinearToyLm::initial_state() const {
  LmState s;
  s.hidden = hash_gaussian_vector(0x746f79u, dim_);
  return s;
}

LmState LinearToyLm::advance(const LmState& state, TokenId token) const {
  LmState next;
  next.prefix = state.prefix;
  next.prefix.push_back(token);
  next.hidden.resize(static_cast<std::size_t>(dim_));
  const Vector& e = embed_[static_cast<std::size_t>(token)];
  for (int i = 0; i < dim_; ++i) {
    double acc = e[static_cast<std::size_t>(i)];
    for (int j = 0; j < dim_; ++j)
      acc += trans_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * state.hidden[static_cast<std::size_t>(j)];
    next.hidden[static_cast<std::size_t>(i)] = std::tanh(acc);
  }
  return next;
}

Vector LinearToyLm::logits_from_hidden(const Vector& hidden) const {
  Vector logits(static_cast<std::size_t>(vocab_n_), 0.0);
  for (int v = 0; v < vocab_n_; ++v) {
    double dot = 0.0;
    for (int i = 0; i < dim_; ++i)
      dot += head_[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)] * hidden[static_cast<std::size_t>(i)];
    logits[static_cast<std::size_t>(v)] = dot;
  }
  return logits;
}

Vector LinearToyLm::project_gradient(const Vector& grad_logits) const {
  Vector g(static_cast<std::size_t>(dim_), 0.0);
  for (int v = 0; v < vocab_n_; ++v) {
    const double w = grad_logits[static_cast<std::size_t>(v)];
    if (w == 0.0) continue;
    for (int i = 0; i < dim_; ++i)
      g[static_cast<std::size_t>(i)] += w * head_[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)];
  }
  return g;
}

Vector LinearToyLm::token_embedding(TokenId token) const {
  if (token < 0 || token >= vocab_n_)
    throw ValidationError("token id " + std::to_string(token) + " outside vocabulary");
  return embed_[static_cast<std::size_t>(token)];
}

std::vector<TokenId> LinearToyLm::tokenize(const std::string&) const {
  throw ConfigError("LinearToyLm has no text vocabulary");
}

std::string LinearToyLm::token_text(TokenId token) const {
  return "tok" + std::to_string(token);
}

std::unique_ptr<AutoregressiveLm> LinearToyLm::clone() const {
  return std::make_unique<LinearToyLm>(*this);
}

Vector LinearToyLm::random_hidden(std::uint64_t seed) const {
  return hash_gaussian_vector(mix64(seed ^ 0xabcdef), dim_);
}

// ---------------------------------------------------------------------------
// HashMlm

HashMlm::HashMlm(std::vector<std::string> vocabulary, int dim, std::uint64_t seed)
    : vocab_(std::move(vocabulary)), dim_(dim) {
  if (vocab_.empty()) throw ConfigError("HashMlm needs a non-empty vocabulary");
  embed_.reserve(vocab_.size());
  for (const auto& tok : vocab_) embed_.push_back(hash_gaussian_vector(fnv1a(tok) ^ seed, dim_));
}

HashMlm HashMlm::from_corpus(const std::vector<EvalRecord>& records, int dim) {
  std::set<std::string> words;
  for (const auto& rec : records) {
    for (const auto& tok : word_tokenize(preprocess_text(rec.context)).tokens) words.insert(tok);
    for (const auto& tok : word_tokenize(preprocess_text(rec.human_reference)).tokens)
      words.insert(tok);
  }
  if (words.empty()) words.insert("the");
  return HashMlm(std::vector<std::string>(words.begin(), words.end()), dim);
}

std::vector<std::string> HashMlm::predict_masks(const std::vector<std::string>& slots,
                                                const std::string&) const {
  std::vector<std::string> out;
  for (std::size_t pos = 0; pos < slots.size(); ++pos) {
    if (slots[pos] != kMaskToken) continue;
    // Target: mean embedding of up to two visible neighbours on each side.
    Vector target(static_cast<std::size_t>(dim_), 0.0);
    int found = 0;
    for (int d = 1; d <= 2 && found < 4; ++d) {
      for (int dir : {-1, 1}) {
        const std::ptrdiff_t q = static_cast<std::ptrdiff_t>(pos) + dir * d;
        if (q < 0 || q >= static_cast<std::ptrdiff_t>(slots.size())) continue;
        const auto& neighbour = slots[static_cast<std::size_t>(q)];
        if (neighbour == kMaskToken) continue;
        const Vector e = hash_gaussian_vector(fnv1a(neighbour) ^ 0x6d6c6du, dim_);
        for (int i = 0; i < dim_; ++i) target[static_cast<std::size_t>(i)] += e[static_cast<std::size_t>(i)];
        ++found;
      }
    }
    std::size_t best = 0;
    double best_dot = -1e300;
    for (std::size_t v = 0; v < vocab_.size(); ++v) {
      double dot = 0.0;
      for (int i = 0; i < dim_; ++i) dot += embed_[v][static_cast<std::size_t>(i)] * target[static_cast<std::size_t>(i)];
      if (dot > best_dot) {
        best_dot = dot;
        best = v;
      }
    }
    out.push_back(vocab_[best]);
  }
  return out;
}

std::vector<std::string> MockMlm::predict_masks(const std::vector<std::string>& slots,
                                                const std::string&) const {
  std::vector<std::string> out;
  for (const auto& s : slots)
    if (s == kMaskToken) out.push_back(fill_);
  return out;
}

// ---------------------------------------------------------------------------
// Encoders

HashNgramEncoder::HashNgramEncoder(int dim, double bigram_weight)
    : dim_(dim), bigram_weight_(bigram_weight) {}

SentenceVector HashNgramEncoder::encode(const std::string& text) const {
  const auto tokens = word_tokenize(text).tokens;
  if (tokens.empty()) throw ValidationError("cannot encode empty text");
  Vector acc(static_cast<std::size_t>(dim_), 0.0);
  for (const auto& tok : tokens) {
    const Vector u = hash_gaussian_vector(fnv1a(tok) ^ 0x756e69u, dim_);
    for (int i = 0; i < dim_; ++i) acc[static_cast<std::size_t>(i)] += u[static_cast<std::size_t>(i)];
  }
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const Vector b =
        hash_gaussian_vector(fnv1a(tokens[t - 1] + "\x1f" + tokens[t]) ^ 0x626967u, dim_);
    for (int i = 0; i < dim_; ++i)
      acc[static_cast<std::size_t>(i)] += bigram_weight_ * b[static_cast<std::size_t>(i)];
  }
  const double denom =
      static_cast<double>(tokens.size()) + bigram_weight_ * static_cast<double>(tokens.size() - 1);
  for (double& x : acc) x /= denom;
  return {std::move(acc)};
}

std::unique_ptr<SentenceEncoder> HashNgramEncoder::clone() const {
  return std::make_unique<HashNgramEncoder>(*this);
}

StaticWordVectorEncoder::StaticWordVectorEncoder(std::unordered_map<std::string, Vector> table,
                                                 int dim)
    : table_(std::move(table)), dim_(dim) {
  for (const auto& [tok, v] : table_)
    if (static_cast<int>(v.size()) != dim_)
      throw ConfigError("vector for '" + tok + "' has the wrong dimension");
}

StaticWordVectorEncoder StaticWordVectorEncoder::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open static vectors file: " + path);
  std::unordered_map<std::string, Vector> table;
  int dim = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    Vector v;
    double x;
    while (ss >> x) v.push_back(x);
    if (v.empty()) throw ParseError("static vectors line without values: " + line);
    if (dim < 0) dim = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != dim)
      throw ParseError("inconsistent vector dimensions in " + path);
    table[tok] = std::move(v);
  }
  if (table.empty()) throw ParseError("static vectors file is empty: " + path);
  return StaticWordVectorEncoder(std::move(table), dim);
}

SentenceVector StaticWordVectorEncoder::encode(const std::string& text) const {
  const auto tokens = word_tokenize(text).tokens;
  if (tokens.empty()) throw ValidationError("cannot encode empty text");
  Vector acc(static_cast<std::size_t>(dim_), 0.0);
  for (const auto& tok : tokens) {
    auto it = table_.find(tok);
    // Out-of-vocabulary words map to a stable hash vector so the mean stays
    // defined for any input.
    const Vector v = it != table_.end() ? it->second
                                        : hash_gaussian_vector(fnv1a(tok) ^ 0x6f6f76u, dim_);
    for (int i = 0; i < dim_; ++i) acc[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)];
  }
  for (double& x : acc) x /= static_cast<double>(tokens.size());
  return {std::move(acc)};
}

std::unique_ptr<SentenceEncoder> StaticWordVectorEncoder::clone() const {
  return std::make_unique<StaticWordVectorEncoder>(*this);
}

void MockEncoder::set(const std::string& text, Vector v) {
  if (static_cast<int>(v.size()) != dim_) throw ConfigError("mock vector has wrong dimension");
  table_[text] = std::move(v);
}

SentenceVector MockEncoder::encode(const std::string& text) const {
  if (text.empty()) throw ValidationError("cannot encode empty text");
  auto it = table_.find(text);
  if (it != table_.end()) return {it->second};
  return {hash_gaussian_vector(fnv1a(text), dim_)};
}

std::unique_ptr<SentenceEncoder> MockEncoder::clone() const {
  return std::make_unique<MockEncoder>(*this);
}

// ---------------------------------------------------------------------------
// Factories

namespace {

std::string resolve_model_path(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  if (const char* dir = std::getenv("MARS_MODEL_DIR"))
    return std::string(dir) + "/" + path;
  return path;
}

}  // namespace

std::unique_ptr<SentenceEncoder> make_encoder(const std::string& backend,
                                              const std::string& static_vectors_path) {
  if (backend == "hash") return std::make_unique<HashNgramEncoder>();
  if (backend == "static") {
    if (static_vectors_path.empty())
      throw ConfigError("encoder.static_vectors_path is required for the static backend");
    return std::make_unique<StaticWordVectorEncoder>(
        StaticWordVectorEncoder::load(resolve_model_path(static_vectors_path)));
  }
  throw ConfigError("unknown encoder backend: " + backend);
}

std::unique_ptr<AutoregressiveLm> make_lm(const std::string& backend,
                                          const std::vector<EvalRecord>& records) {
  if (backend == "hash") return std::make_unique<HashLm>(HashLm::from_corpus(records));
  throw ConfigError("unknown LM backend: " + backend);
}

}  // namespace mars
