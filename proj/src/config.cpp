#include "mars/config.hpp"

#include <fstream>

#include <json.hpp>

namespace mars {

namespace {

PosTag tag_from_name(const std::string& name) {
  if (name == "ADJ") return PosTag::Adj;
  if (name == "ADV") return PosTag::Adv;
  if (name == "NOUN") return PosTag::Noun;
  if (name == "OTHER") return PosTag::Other;
  throw ConfigError("unknown POS tag in alpha map: " + name);
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config file: ") + e.what());
  }

  RunConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.budget = j.value("budget", cfg.budget);
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.q = j.value("q", cfg.q);
  if (j.contains("ratios")) cfg.ratios = j.at("ratios").get<std::vector<double>>();
  if (j.contains("idf")) cfg.idf_floor = j.at("idf").value("floor", cfg.idf_floor);
  if (j.contains("alpha"))
    for (const auto& [name, value] : j.at("alpha").items())
      cfg.alpha[tag_from_name(name)] = value.get<double>();
  if (j.contains("selfplan")) {
    const auto& sp = j.at("selfplan");
    cfg.selfplan.eta = sp.value("eta", cfg.selfplan.eta);
    cfg.selfplan.xi = sp.value("xi", cfg.selfplan.xi);
    cfg.selfplan.iterations = sp.value("k", cfg.selfplan.iterations);
    cfg.selfplan.future_window = sp.value("future_window", cfg.selfplan.future_window);
    cfg.selfplan.gamma = sp.value("gamma", cfg.selfplan.gamma);
    cfg.selfplan.greedy = sp.value("greedy", cfg.selfplan.greedy);
  }
  if (j.contains("lm")) cfg.lm_backend = j.at("lm").value("backend", cfg.lm_backend);
  if (j.contains("encoder")) {
    const auto& enc = j.at("encoder");
    cfg.encoder_backend = enc.value("backend", cfg.encoder_backend);
    cfg.static_vectors_path = enc.value("static_vectors_path", cfg.static_vectors_path);
  }
  cfg.pos_tagger = j.value("pos_tagger", cfg.pos_tagger);
  return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["budget"] = cfg.budget;
  j["sigma"] = cfg.sigma;
  j["q"] = cfg.q;
  j["ratios"] = cfg.ratios;
  j["idf"] = {{"floor", cfg.idf_floor}};
  j["alpha"] = nlohmann::ordered_json::object();
  for (const auto& [tag, w] : cfg.alpha) j["alpha"][to_string(tag)] = w;
  j["selfplan"] = {{"eta", cfg.selfplan.eta},
                   {"xi", cfg.selfplan.xi},
                   {"k", cfg.selfplan.iterations},
                   {"future_window", cfg.selfplan.future_window},
                   {"gamma", cfg.selfplan.gamma},
                   {"greedy", cfg.selfplan.greedy}};
  j["lm"] = {{"backend", cfg.lm_backend}};
  j["encoder"] = {{"backend", cfg.encoder_backend},
                  {"static_vectors_path", cfg.static_vectors_path}};
  j["pos_tagger"] = cfg.pos_tagger;
  return j.dump(2);
}

}  // namespace mars
