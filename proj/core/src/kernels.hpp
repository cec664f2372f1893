#pragma once

#include <span>

#include "phylograd/backend.hpp"

namespace phylograd::detail {

// Per-block accumulators of the gradient kernel: phi (numerator), omega
// (denominator) and delta (rate-matrix product) tiles, plus the staged
// category weights for the current chunk of rate categories. Views into the
// block's scratch; nothing survives the block.
struct KernelWorkspace {
  std::span<double> phi;
  std::span<double> omega;
  std::span<double> delta;
  std::span<double> category_weights_cache;
};

// Entries a matrix-vector stage needs: the full matrix for padded <= 4,
// otherwise one PBS-wide column chunk.
std::size_t matvec_chunk_size(int padded, int pbs);

// out[c][s] = sum_t M(s, t) * in[c][t] for nc columns, M padded column-major.
// Columns of M are staged `pbs` at a time into `chunk` (S x PBS entries per
// inner iteration). For padded <= 4 the whole matrix is staged at once, and
// `transpose_on_read` stages M' instead of M.
void staged_matvec(std::span<const double> matrix, bool transpose_on_read,
                   std::span<const double> in, std::span<double> out, int nc, int padded, int pbs,
                   int lanes, std::span<double> chunk, LaunchCounters& counters);

// Pairwise sum over a state vector with a fixed halving shape.
double state_tree_sum(std::span<const double> values, std::span<double> work);

}  // namespace phylograd::detail
