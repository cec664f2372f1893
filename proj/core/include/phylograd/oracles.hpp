#pragma once

#include <vector>

#include "phylograd/alignment.hpp"
#include "phylograd/model.hpp"
#include "phylograd/tree.hpp"

// Reference computations that share no code with the tiled engine: dense
// Eigen pruning without padding, staging or threading. Slow by design.
namespace phylograd::oracle {

struct OracleGradient {
  std::vector<double> per_branch;
  std::vector<double> per_column;  // branch-major
  double log_likelihood = 0.0;
};

// Felsenstein pruning with per-node scaling; per-pattern log-likelihoods.
std::vector<double> pattern_log_likelihoods(const Phylogeny& tree, const ModelInstance& model,
                                            const PatternizedAlignment& data);
double log_likelihood(const Phylogeny& tree, const ModelInstance& model,
                      const PatternizedAlignment& data);

// Explicit sum over every assignment of internal states. Exponential in the
// number of internal nodes; meant for trees with a handful of tips.
double brute_force_log_likelihood(const Phylogeny& tree, const ModelInstance& model,
                                  const PatternizedAlignment& data);

// One pruning pass per branch with P_i replaced by dP_i/dt: O(N^2) work.
OracleGradient quadratic_gradient(const Phylogeny& tree, const ModelInstance& model,
                                  const PatternizedAlignment& data);

// Central differences in effective branch length. Branches shorter than h
// use the second-order forward formula so the length stays non-negative.
std::vector<double> finite_difference_gradient(const Phylogeny& tree, const ModelInstance& model,
                                               const PatternizedAlignment& data, double h = 1e-5);

}  // namespace phylograd::oracle
