#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phylograd/model.hpp"

namespace phylograd {

enum class Alphabet { nucleotide, codon };

Alphabet parse_alphabet(std::string_view name);  // "nuc" | "codon"

struct GammaConfig {
  double alpha = 1.0;
  int categories = 4;
};

// {"model": "gtr"|"codon-m0", "frequencies": [...], "exchangeabilities": [...],
//  "kappa": x, "omega": x, "geneticCode": "universal"|"vertebrate-mito",
//  "gamma": {"alpha": x, "categories": R}}
// Missing frequencies default to uniform, missing exchangeabilities to 1.
struct ModelConfig {
  std::string model = "gtr";
  std::vector<double> frequencies;
  std::vector<double> exchangeabilities;
  double kappa = 1.0;
  double omega = 1.0;
  std::string genetic_code = "universal";
  std::optional<GammaConfig> gamma;

  Alphabet alphabet() const { return model == "codon-m0" ? Alphabet::codon : Alphabet::nucleotide; }
};

ModelConfig parse_model_config(std::string_view json_text);
std::string to_json(const ModelConfig& config);

ModelInstance build_model(const ModelConfig& config);

}  // namespace phylograd
