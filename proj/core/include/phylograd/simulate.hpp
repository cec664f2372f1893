#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "phylograd/alignment.hpp"
#include "phylograd/genetic_code.hpp"
#include "phylograd/model.hpp"
#include "phylograd/model_config.hpp"
#include "phylograd/tree.hpp"

namespace phylograd {

using Rng = std::mt19937_64;

// Random joining order; lengths uniform on [min_length, max_length].
Phylogeny random_tree(int tips, Rng& rng, double min_length = 0.02, double max_length = 0.4);

// Perfectly balanced when tips is a power of two, otherwise as balanced as
// repeated pairing of neighbours allows. All branches get `length`.
Phylogeny balanced_tree(int tips, double length);

// ((((t1,t2),t3),t4),...): the deepest possible tree.
Phylogeny caterpillar_tree(int tips, double length);

// Per column: draw a rate category, a root state from the stationary
// distribution, then states down the tree. Rows are ordered like the tips.
RawAlignment simulate_alignment(const Phylogeny& tree, const ModelInstance& model, int columns,
                                Rng& rng);

std::string to_fasta(const RawAlignment& alignment, Alphabet alphabet,
                     const GeneticCode& code = GeneticCode::universal());

// Random GTR parameters with frequencies bounded away from zero.
ModelConfig random_gtr_config(Rng& rng, std::optional<GammaConfig> gamma = std::nullopt);

}  // namespace phylograd
