#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace phylograd {

// Rooted bifurcating tree with N tips.
//
// Node indices are zero-based: tips 0..N-1, internal nodes N..2N-3 and the
// root 2N-2 (one-based labels are index + 1). Every non-root node owns the
// branch above it, so branch i is the edge from parent(i) to i. Internal
// nodes are numbered in post-order, which makes increasing index order a
// valid post-order schedule and decreasing order a valid pre-order one.
class Phylogeny {
 public:
  Phylogeny() = default;

  // children[k] holds the two children of internal node N + k. The last
  // entry is the root. Throws ValidationError if the shape is not a tree
  // obeying the numbering rules.
  Phylogeny(std::vector<std::string> tip_names, std::vector<std::array<int, 2>> children,
            std::vector<double> branch_lengths);

  int tip_count() const { return tip_count_; }
  int node_count() const { return 2 * tip_count_ - 1; }
  int branch_count() const { return 2 * tip_count_ - 2; }
  int root() const { return 2 * tip_count_ - 2; }
  bool is_tip(int node) const { return node < tip_count_; }

  int parent(int node) const { return parent_[node]; }
  const std::array<int, 2>& children(int node) const { return children_[node - tip_count_]; }
  int sibling(int node) const;

  const std::vector<std::string>& tip_names() const { return tip_names_; }
  int tip_index(std::string_view name) const;  // -1 when absent

  std::span<const double> branch_lengths() const { return lengths_; }
  void set_branch_lengths(std::span<const double> lengths);
  void set_branch_length(int branch, double length);

  // Optional per-branch multipliers; the likelihood sees length * scalar.
  std::span<const double> rate_scalars() const { return scalars_; }
  void set_rate_scalars(std::span<const double> scalars);
  std::vector<double> effective_lengths() const;

  // Nodes ordered children-before-parent (internal nodes only).
  std::vector<int> postorder_internals() const;
  // Non-root nodes ordered parent-before-child.
  std::vector<int> preorder_nodes() const;

 private:
  int tip_count_ = 0;
  std::vector<std::string> tip_names_;
  std::vector<std::array<int, 2>> children_;
  std::vector<int> parent_;
  std::vector<double> lengths_;
  std::vector<double> scalars_;
};

// Tips are numbered in order of first appearance, internal nodes in
// post-order. Every non-root edge needs a length; the root's is ignored.
Phylogeny parse_newick(std::string_view text);

std::string to_newick(const Phylogeny& tree);

}  // namespace phylograd
