#include "kernels.hpp"

#include <algorithm>
#include <cstring>

namespace phylograd::detail {

std::size_t matvec_chunk_size(int padded, int pbs) {
  if (padded <= 4) return static_cast<std::size_t>(padded) * padded;
  return static_cast<std::size_t>(padded) * std::min(pbs, padded);
}

void staged_matvec(std::span<const double> matrix, bool transpose_on_read,
                   std::span<const double> in, std::span<double> out, int nc, int padded, int pbs,
                   int lanes, std::span<double> chunk, LaunchCounters& counters) {
  const auto n = static_cast<std::size_t>(padded);
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n * nc), 0.0);

  if (padded <= 4) {
    // Small state spaces: the whole matrix fits, transposed while reading.
    if (transpose_on_read) {
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t s = 0; s < n; ++s) chunk[t * n + s] = matrix[s * n + t];
      }
    } else {
      std::memcpy(chunk.data(), matrix.data(), n * n * sizeof(double));
    }
    ++counters.matrix_stage_events;
    counters.staged_matrix_entries += n * n;
    for (int c0 = 0; c0 < nc; c0 += lanes) {
      const int c1 = std::min(nc, c0 + lanes);
      for (std::size_t t = 0; t < n; ++t) {
        const double* col = chunk.data() + t * n;
        for (int c = c0; c < c1; ++c) {
          const double x = in[static_cast<std::size_t>(c) * n + t];
          double* o = out.data() + static_cast<std::size_t>(c) * n;
          for (std::size_t s = 0; s < n; ++s) o[s] += col[s] * x;
        }
      }
    }
    return;
  }

  const int width = std::min(pbs, padded);
  for (int t0 = 0; t0 < padded; t0 += width) {
    const int w = std::min(width, padded - t0);
    std::memcpy(chunk.data(), matrix.data() + static_cast<std::size_t>(t0) * n,
                static_cast<std::size_t>(w) * n * sizeof(double));
    ++counters.matrix_stage_events;
    counters.staged_matrix_entries += static_cast<std::uint64_t>(w) * n;
    for (int c = 0; c < nc; ++c) {
      const double* x = in.data() + static_cast<std::size_t>(c) * n + t0;
      double* o = out.data() + static_cast<std::size_t>(c) * n;
      for (int tt = 0; tt < w; ++tt) {
        const double xv = x[tt];
        if (xv == 0.0) continue;
        const double* col = chunk.data() + static_cast<std::size_t>(tt) * n;
        for (std::size_t s = 0; s < n; ++s) o[s] += col[s] * xv;
      }
    }
  }
}

double state_tree_sum(std::span<const double> values, std::span<double> work) {
  std::size_t n = values.size();
  std::copy(values.begin(), values.end(), work.begin());
  while (n > 1) {
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i + half < n; ++i) work[i] += work[i + half];
    n = half;
  }
  return values.empty() ? 0.0 : work[0];
}

}  // namespace phylograd::detail
