#include "phylograd/model_config.hpp"

#include <json.hpp>

#include "phylograd/error.hpp"

namespace phylograd {

using nlohmann::json;

Alphabet parse_alphabet(std::string_view name) {
  if (name == "nuc" || name == "nucleotide") return Alphabet::nucleotide;
  if (name == "codon") return Alphabet::codon;
  throw ValidationError("unknown alphabet '" + std::string(name) + "' (expected nuc or codon)");
}

ModelConfig parse_model_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.byte, std::string("model config: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("model config must be a JSON object");

  ModelConfig cfg;
  try {
    cfg.model = doc.value("model", cfg.model);
    if (cfg.model != "gtr" && cfg.model != "codon-m0") {
      throw ValidationError("unknown model '" + cfg.model + "' (expected gtr or codon-m0)");
    }
    if (doc.contains("frequencies")) cfg.frequencies = doc.at("frequencies").get<std::vector<double>>();
    if (doc.contains("exchangeabilities")) {
      cfg.exchangeabilities = doc.at("exchangeabilities").get<std::vector<double>>();
    }
    cfg.kappa = doc.value("kappa", cfg.kappa);
    cfg.omega = doc.value("omega", cfg.omega);
    cfg.genetic_code = doc.value("geneticCode", cfg.genetic_code);
    if (doc.contains("gamma") && !doc.at("gamma").is_null()) {
      const json& g = doc.at("gamma");
      cfg.gamma = GammaConfig{g.value("alpha", 1.0), g.value("categories", 4)};
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model config: ") + e.what());
  }
  return cfg;
}

std::string to_json(const ModelConfig& config) {
  json doc = {{"model", config.model},
              {"frequencies", config.frequencies},
              {"exchangeabilities", config.exchangeabilities},
              {"kappa", config.kappa},
              {"omega", config.omega},
              {"geneticCode", config.genetic_code}};
  if (config.gamma) {
    doc["gamma"] = {{"alpha", config.gamma->alpha}, {"categories", config.gamma->categories}};
  }
  return doc.dump();
}

ModelInstance build_model(const ModelConfig& config) {
  RateCategories cats = config.gamma ? discrete_gamma(config.gamma->alpha, config.gamma->categories)
                                     : single_rate();
  if (config.model == "gtr") {
    std::vector<double> ex = config.exchangeabilities;
    if (ex.empty()) ex.assign(6, 1.0);
    std::vector<double> freqs = config.frequencies;
    if (freqs.empty()) freqs.assign(4, 0.25);
    return make_model(build_gtr(ex, freqs), std::move(cats));
  }
  if (config.model == "codon-m0") {
    CodonModelParams params;
    params.kappa = config.kappa;
    params.omega = config.omega;
    params.code = &GeneticCode::by_name(config.genetic_code);
    params.codon_frequencies = config.frequencies;
    if (params.codon_frequencies.empty()) {
      const int n = params.code->sense_count();
      params.codon_frequencies.assign(static_cast<std::size_t>(n), 1.0 / n);
    }
    return make_model(build_codon_m0(params), std::move(cats));
  }
  throw ValidationError("unknown model '" + config.model + "'");
}

}  // namespace phylograd
