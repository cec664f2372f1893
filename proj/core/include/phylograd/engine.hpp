#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phylograd/alignment.hpp"
#include "phylograd/backend.hpp"
#include "phylograd/model.hpp"
#include "phylograd/tree.hpp"

namespace phylograd {

struct EngineOptions {
  // Per-node, per-pattern rescaling by the largest partial entry.
  bool rescaling = true;
  // Embed S > 4 models in the next multiple of 16 states.
  bool pad_states = true;
  // Keep the (2N-2) x C column contributions in the report.
  bool retain_columns = false;
};

// Post-order (p) and pre-order (q) partial likelihoods plus log-scale
// accumulators. Each (node, rate) slab is patterns x padded_states with the
// state index fastest; padded lanes stay zero. Post-order slabs exist only
// for internal nodes since tips are expanded from their codes on the fly.
// Scale accumulators are cumulative: the true partial is the stored one
// times exp(scale).
class PartialBuffers {
 public:
  PartialBuffers() = default;
  PartialBuffers(int tips, int padded_states, int rates, int patterns);

  int tips() const { return tips_; }
  int padded_states() const { return padded_; }
  int rates() const { return rates_; }
  int patterns() const { return patterns_; }
  std::size_t slab_size() const { return static_cast<std::size_t>(patterns_) * padded_; }

  std::span<double> post(int node, int rate);
  std::span<const double> post(int node, int rate) const;
  std::span<double> pre(int node, int rate);
  std::span<const double> pre(int node, int rate) const;
  std::span<double> post_scale(int node);
  std::span<const double> post_scale(int node) const;
  std::span<double> pre_scale(int node);
  std::span<const double> pre_scale(int node) const;

 private:
  int tips_ = 0;
  int padded_ = 0;
  int rates_ = 0;
  int patterns_ = 0;
  std::vector<double> post_;
  std::vector<double> pre_;
  std::vector<double> post_scale_;
  std::vector<double> pre_scale_;
};

struct GradientReport {
  // d/dt_i log P(Y) for branch i = 0..2N-3 (the branch above node i), where
  // t_i = length * rate scalar is the branch's effective length.
  std::vector<double> per_branch;
  // Branch-major (branch * patterns + pattern); empty unless retained.
  std::vector<double> per_column;
  int patterns = 0;
  double log_likelihood = 0.0;
  std::vector<KernelTiming> timings;

  double column(int branch, int pattern) const {
    return per_column[static_cast<std::size_t>(branch) * patterns + pattern];
  }
};

// Linear-time likelihood and branch gradient on a fixed tree.
//
// Steps must run in dependency order: update_transition_matrices, then the
// post-order traversal, then the pre-order traversal, then gradient_columns
// and reduce_columns. Running a step early throws SequencingError.
class LikelihoodEngine {
 public:
  LikelihoodEngine(Phylogeny tree, ModelInstance model, PatternizedAlignment data, Backend& backend,
                   EngineOptions options = {});

  const Phylogeny& tree() const { return tree_; }
  const ModelInstance& model() const { return model_; }
  const PatternizedAlignment& data() const { return data_; }
  const EngineOptions& options() const { return options_; }
  Backend& backend() { return backend_; }

  int states() const { return states_; }
  int padded_states() const { return padded_; }
  int rates() const { return rates_; }
  int patterns() const { return patterns_; }
  int column_block_size() const { return cbs_; }

  // Replaces branch lengths and rate scalars (lengths seen by the model are
  // their product) and marks every derived quantity stale.
  void set_tree_lengths(std::span<const double> lengths);
  void set_rate_scalars(std::span<const double> scalars);

  void update_transition_matrices();
  void postorder_node(int node);
  void postorder_traverse();
  // Sum of weight * log-likelihood over patterns; -infinity if some pattern
  // is impossible (see diagnostic()).
  double log_likelihood();
  std::vector<double> pattern_log_likelihoods() const;
  void preorder_node(int node);
  void preorder_traverse();
  // log of sum_r [p_irc' q_irc] P(gamma_r), scale-adjusted.
  double node_log_likelihood(int node, int pattern) const;
  double node_likelihood(int node, int pattern) const;
  void gradient_columns();
  std::span<const double> columns() const { return columns_; }
  std::vector<double> reduce_columns();

  // Matrices, transposes, both traversals, gradient and reduction.
  GradientReport full_gradient();

  const PartialBuffers& buffers() const { return buffers_; }
  const TransitionMatrixSet& matrices() const { return matrices_; }
  const TransitionMatrixSet& transposed_matrices() const { return transposed_; }
  const std::optional<std::string>& diagnostic() const { return diagnostic_; }
  const LaunchCounters& last_launch() const { return last_launch_; }
  const ExecutionPlan& last_plan() const { return last_plan_; }

 private:
  enum class Stage { stale, matrices, postorder, preorder, gradient };

  void require(Stage stage, const char* step) const;
  void initialize_root_preorder();
  void rescale(Kernel kernel, int node, std::span<const double> parent_scale_a,
               std::span<const double> parent_scale_b, bool preorder);
  std::size_t stage_tile(int node, bool post, int rate, int c0, int nc, std::span<double> tile,
                         LaunchCounters& counters) const;

  Phylogeny tree_;
  ModelInstance model_;
  PatternizedAlignment data_;
  Backend& backend_;
  EngineOptions options_;

  int states_ = 0;
  int padded_ = 0;
  int rates_ = 0;
  int patterns_ = 0;
  int cbs_ = 1;
  int column_blocks_ = 0;

  std::vector<std::vector<double>> tip_masks_;
  std::vector<double> root_frequencies_;
  std::vector<double> category_weights_;
  // (gamma_r Q)' per category, padded column-major.
  std::vector<double> rate_generators_t_;

  TransitionMatrixSet matrices_;
  TransitionMatrixSet transposed_;
  PartialBuffers buffers_;
  std::vector<double> columns_;
  std::vector<double> column_log_likelihood_;

  Stage stage_ = Stage::stale;
  std::vector<char> post_ready_;
  std::vector<char> pre_ready_;
  std::optional<std::string> diagnostic_;
  LaunchCounters last_launch_;
  ExecutionPlan last_plan_;
};

GradientReport full_gradient(const Phylogeny& tree, const ModelInstance& model,
                             const PatternizedAlignment& data, Backend& backend,
                             EngineOptions options = {});

double log_likelihood(const Phylogeny& tree, const ModelInstance& model,
                      const PatternizedAlignment& data, Backend& backend,
                      EngineOptions options = {});

// Host-side reduction over a branch set (e.g. a strict-clock rate shared by
// several branches): the sum of their per-branch derivatives.
double aggregate_branches(std::span<const double> per_branch, std::span<const int> branches);

}  // namespace phylograd
