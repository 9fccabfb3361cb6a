#include "mars/masking.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

namespace mars {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> lower_all(std::span<const std::string> v) {
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(lower(s));
  return out;
}

// Suffix LCS table: S[i][j] = LCS length of a[i:], b[j:].
std::vector<std::vector<int>> suffix_lcs(const std::vector<std::string>& a,
                                         const std::vector<std::string>& b) {
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  std::vector<std::vector<int>> s(static_cast<std::size_t>(n) + 1,
                                  std::vector<int>(static_cast<std::size_t>(m) + 1, 0));
  for (int i = n - 1; i >= 0; --i)
    for (int j = m - 1; j >= 0; --j)
      s[i][j] = a[i] == b[j] ? s[i + 1][j + 1] + 1 : std::max(s[i + 1][j], s[i][j + 1]);
  return s;
}

}  // namespace

AlphaWeights default_alpha() {
  return {{PosTag::Adj, 4.0}, {PosTag::Adv, 3.0}, {PosTag::Noun, 2.0}, {PosTag::Other, 1.0}};
}

std::vector<std::pair<int, int>> lcs_match(std::span<const std::string> a,
                                           std::span<const std::string> b) {
  const auto la = lower_all(a), lb = lower_all(b);
  const auto s = suffix_lcs(la, lb);
  const int n = static_cast<int>(la.size()), m = static_cast<int>(lb.size());

  // Greedy walk emitting the lexicographically smallest pair sequence among
  // all maximum alignments: at each step take the smallest (i, j) >= cursor
  // whose match still admits an optimal completion.
  std::vector<std::pair<int, int>> out;
  int i = 0, j = 0;
  while (i < n && j < m && s[i][j] > 0) {
    const int need = s[i][j];
    bool found = false;
    for (int ii = i; ii < n && !found; ++ii) {
      if (s[ii][j] != need) break;  // rows below can no longer reach the optimum
      for (int jj = j; jj < m; ++jj) {
        if (s[ii][jj] < need) break;
        if (la[ii] == lb[jj] && 1 + s[ii + 1][jj + 1] == need) {
          out.emplace_back(ii, jj);
          i = ii + 1;
          j = jj + 1;
          found = true;
          break;
        }
      }
    }
    if (!found) break;  // unreachable for a consistent table
  }
  return out;
}

int lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  const auto la = lower_all(a), lb = lower_all(b);
  const std::size_t m = lb.size();
  std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 0; i < la.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j)
      cur[j + 1] = la[i] == lb[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
    std::swap(prev, cur);
  }
  return prev[m];
}

std::vector<AnnotatedToken> annotate_tokens(const Tokenization& reference_tokens,
                                            const Tokenization& context_tokens,
                                            const IdfTable& idf, const AlphaWeights& alpha,
                                            const PosTagger& tagger) {
  for (PosTag t : {PosTag::Adj, PosTag::Adv, PosTag::Noun, PosTag::Other}) {
    auto it = alpha.find(t);
    if (it == alpha.end())
      throw ValidationError(std::string("alpha weight missing for tag ") + to_string(t));
    if (!(it->second > 0.0))
      throw ValidationError(std::string("alpha weight for ") + to_string(t) +
                            " must be positive");
  }

  const auto tags = tagger.tag(reference_tokens.tokens);
  std::vector<bool> carrying(reference_tokens.size(), false);
  for (const auto& [ri, ci] : lcs_match(reference_tokens.tokens, context_tokens.tokens))
    carrying[static_cast<std::size_t>(ri)] = true;

  std::vector<AnnotatedToken> out;
  out.reserve(reference_tokens.size());
  for (std::size_t i = 0; i < reference_tokens.size(); ++i) {
    AnnotatedToken t;
    t.token = reference_tokens.tokens[i];
    t.pos = tags[i];
    t.idf = idf.idf(lower(t.token));
    t.priority = alpha.at(t.pos) / t.idf;
    t.context_carrying = carrying[i];
    t.cost = t.context_carrying ? 10 : 1;
    out.push_back(std::move(t));
  }
  return out;
}

MaskingDecision solve_masking(const std::vector<AnnotatedToken>& annotated, double lambda) {
  if (annotated.empty()) throw ValidationError("cannot mask an empty token list");
  if (lambda < 0.0 || lambda > 1.0)
    throw ValidationError("masking ratio must lie in [0, 1], got " + std::to_string(lambda));

  const int n = static_cast<int>(annotated.size());
  // The tiny nudge keeps exactly-integer lambda*N from flooring one short
  // when the product lands just below the integer in floating point.
  const int w_max = static_cast<int>(std::floor(lambda * n + 1e-9));

  MaskingDecision decision;
  decision.masked.assign(static_cast<std::size_t>(n), false);
  if (w_max <= 0) return decision;

  const std::size_t width = static_cast<std::size_t>(w_max) + 1;
  std::vector<double> table(static_cast<std::size_t>(n + 1) * width, 0.0);
  auto at = [&](int i, int j) -> double& {
    return table[static_cast<std::size_t>(i) * width + static_cast<std::size_t>(j)];
  };

  for (int i = 1; i <= n; ++i) {
    const double v = annotated[static_cast<std::size_t>(i - 1)].priority;
    const int w = annotated[static_cast<std::size_t>(i - 1)].cost;
    for (int j = 1; j <= w_max; ++j) {
      at(i, j) = j < w ? at(i - 1, j) : std::max(at(i - 1, j), at(i - 1, j - w) + v);
    }
  }

  // Backtrack, preferring the skip branch so ties resolve to not masking.
  int j = w_max;
  for (int i = n; i >= 1; --i) {
    if (at(i, j) == at(i - 1, j)) continue;
    decision.masked[static_cast<std::size_t>(i - 1)] = true;
    j -= annotated[static_cast<std::size_t>(i - 1)].cost;
  }
  for (int i = 0; i < n; ++i) {
    if (!decision.masked[static_cast<std::size_t>(i)]) continue;
    decision.total_priority += annotated[static_cast<std::size_t>(i)].priority;
    decision.total_cost += annotated[static_cast<std::size_t>(i)].cost;
  }
  return decision;
}

Template make_template(const Tokenization& reference_tokens, const MaskingDecision& decision,
                       double lambda) {
  if (decision.masked.size() != reference_tokens.size())
    throw ValidationError("masking decision length does not match the token count");
  Template tpl;
  tpl.ratio = lambda;
  std::size_t i = 0;
  while (i < reference_tokens.size()) {
    const bool masked = decision.masked[i];
    std::size_t j = i;
    while (j < reference_tokens.size() && decision.masked[j] == masked) ++j;
    if (masked) {
      tpl.blocks.push_back(BlankBlock{static_cast<int>(j - i)});
    } else {
      TextBlock tb;
      tb.tokens.assign(reference_tokens.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                       reference_tokens.tokens.begin() + static_cast<std::ptrdiff_t>(j));
      tpl.blocks.push_back(std::move(tb));
    }
    i = j;
  }
  return tpl;
}

std::vector<Template> templates_for_ratios(const Tokenization& reference_tokens,
                                           const Tokenization& context_tokens,
                                           const IdfTable& idf, const AlphaWeights& alpha,
                                           const PosTagger& tagger,
                                           const std::vector<double>& ratios) {
  if (ratios.empty()) throw ValidationError("ratio list is empty");
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (ratios[i] < 0.0 || ratios[i] > 1.0)
      throw ValidationError("masking ratio must lie in [0, 1], got " + std::to_string(ratios[i]));
    if (i > 0 && ratios[i] < ratios[i - 1])
      throw ValidationError("masking ratios must be sorted ascending");
  }
  const auto annotated = annotate_tokens(reference_tokens, context_tokens, idf, alpha, tagger);
  std::vector<Template> out;
  out.reserve(ratios.size());
  for (double r : ratios) {
    if (r == 0.0) {
      MaskingDecision none;
      none.masked.assign(reference_tokens.size(), false);
      out.push_back(make_template(reference_tokens, none, 0.0));
    } else {
      out.push_back(make_template(reference_tokens, solve_masking(annotated, r), r));
    }
  }
  return out;
}

std::string template_to_json(const Template& tpl) {
  nlohmann::ordered_json j;
  j["ratio"] = tpl.ratio;
  j["blocks"] = nlohmann::ordered_json::array();
  for (const auto& block : tpl.blocks) {
    if (const auto* text = std::get_if<TextBlock>(&block)) {
      j["blocks"].push_back({{"t", text->tokens}});
    } else {
      j["blocks"].push_back({{"b", std::get<BlankBlock>(block).original_length}});
    }
  }
  return j.dump();
}

Template template_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed template: ") + e.what());
  }
  Template tpl;
  tpl.ratio = j.at("ratio").get<double>();
  for (const auto& bj : j.at("blocks")) {
    if (bj.contains("t"))
      tpl.blocks.push_back(TextBlock{bj.at("t").get<std::vector<std::string>>()});
    else
      tpl.blocks.push_back(BlankBlock{bj.at("b").get<int>()});
  }
  return tpl;
}

std::vector<std::string> template_slots(const Template& tpl, const std::string& mask_token) {
  std::vector<std::string> out;
  for (const auto& block : tpl.blocks) {
    if (const auto* text = std::get_if<TextBlock>(&block)) {
      out.insert(out.end(), text->tokens.begin(), text->tokens.end());
    } else {
      out.insert(out.end(), static_cast<std::size_t>(std::get<BlankBlock>(block).original_length),
                 mask_token);
    }
  }
  return out;
}

}  // namespace mars
