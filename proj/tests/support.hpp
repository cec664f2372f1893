#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "phylograd/alignment.hpp"
#include "phylograd/engine.hpp"
#include "phylograd/model.hpp"
#include "phylograd/model_config.hpp"
#include "phylograd/simulate.hpp"
#include "phylograd/tree.hpp"

namespace phylograd::testing {

inline std::string data_path(const std::string& name) {
  return std::string(PHYLOGRAD_TEST_DATA_DIR) + "/" + name;
}

// Dense matrix stored one row per line; '#' lines are comments.
inline Eigen::MatrixXd read_matrix(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

inline ModelInstance jc_model(int rates = 1, double alpha = 1.0) {
  const std::vector<double> ex(6, 1.0), pi(4, 0.25);
  return make_model(build_gtr(ex, pi), rates > 1 ? discrete_gamma(alpha, rates) : single_rate());
}

inline ModelInstance random_gtr(Rng& rng, int rates) {
  std::uniform_real_distribution<double> alpha(0.3, 2.0);
  ModelConfig cfg = random_gtr_config(rng);
  if (rates > 1) cfg.gamma = GammaConfig{alpha(rng), rates};
  return build_model(cfg);
}

inline ModelInstance random_codon(Rng& rng, int rates) {
  std::uniform_real_distribution<double> kappa(1.0, 4.0), omega(0.1, 1.0), freq(0.5, 1.5),
      alpha(0.3, 2.0);
  CodonModelParams params;
  params.kappa = kappa(rng);
  params.omega = omega(rng);
  const int n = params.code->sense_count();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    params.codon_frequencies.push_back(freq(rng));
    total += params.codon_frequencies.back();
  }
  for (double& f : params.codon_frequencies) f /= total;
  return make_model(build_codon_m0(params),
                    rates > 1 ? discrete_gamma(alpha(rng), rates) : single_rate());
}

struct Instance {
  Phylogeny tree;
  ModelInstance model;
  PatternizedAlignment data;
};

// Random tree, model and simulated, compressed alignment.
inline Instance random_instance(std::uint64_t seed, int tips, int states, int rates, int columns,
                                double min_length = 0.02, double max_length = 0.4) {
  Rng rng(seed);
  Phylogeny tree = random_tree(tips, rng, min_length, max_length);
  ModelInstance model = states == 4 ? random_gtr(rng, rates) : random_codon(rng, rates);
  const RawAlignment raw = simulate_alignment(tree, model, columns, rng);
  return {std::move(tree), std::move(model), compress_patterns(raw)};
}

inline PatternizedAlignment nucleotide_data(const Phylogeny& tree, const std::string& fasta) {
  return compress_patterns(align_to_tree(parse_fasta(fasta, Alphabet::nucleotide), tree));
}

// max |a - b| / max |b|
inline double rel_inf(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

inline double rel(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

inline Backend& serial_backend() {
  static Backend backend{};
  return backend;
}

inline BackendConfig parallel_config(int workers) {
  BackendConfig cfg;
  cfg.kind = BackendKind::parallel;
  cfg.workers = workers;
  return cfg;
}

}  // namespace phylograd::testing
