#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phylograd/model.hpp"

namespace phylograd {

class ThreadPool;

enum class Kernel : int {
  postOrderPartials = 0,
  preOrderPartials,
  gradient,
  matrixTranspose,
  nodeSiteReduction,
  // Host-side work outside the five tiled kernels (transition matrices,
  // root integration).
  other,
};
inline constexpr int kKernelCount = 6;

std::string_view kernel_name(Kernel kernel);

enum class BackendKind { serial, parallel };

BackendKind parse_backend_kind(std::string_view name);  // "serial" | "parallel"

struct BackendConfig {
  BackendKind kind = BackendKind::serial;
  int workers = 1;
  int cbs_nucleotide = 16;
  int cbs_large_state = 8;
  int pbs = 8;
  int mbs = 16;
  // Lane width of the inner column loop on the S <= 4 path.
  int columns_per_thread_nucleotide = 4;
  std::size_t staging_budget_bytes = 48 * 1024;
};

inline constexpr int kMaxBlockThreads = 512;
inline constexpr int kReductionBlockSize = 128;

// One kernel launch: a 2-D grid of blocks, each block a (states x columns)
// lattice of logical threads sharing `staging_doubles` of scratch.
struct ExecutionPlan {
  Kernel kernel = Kernel::other;
  // grid[0]: rate category (pre/post-order), branch (gradient, reduction) or
  // matrix (transpose); grid[1]: column block or tile.
  std::array<int, 2> grid{1, 1};
  // (states per block, columns per block).
  std::array<int, 2> block_shape{1, 1};
  int cbs = 1;
  int pbs = 1;
  int mbs = 1;
  std::size_t staging_doubles = 0;
  std::size_t staging_budget_bytes = 0;

  std::size_t block_count() const {
    return static_cast<std::size_t>(grid[0]) * static_cast<std::size_t>(grid[1]);
  }
  std::size_t thread_count() const {
    return block_count() * static_cast<std::size_t>(block_shape[0]) *
           static_cast<std::size_t>(block_shape[1]);
  }
};

// What a block staged into scratch; summed over a launch.
struct LaunchCounters {
  std::uint64_t blocks = 0;
  std::uint64_t matrix_stage_events = 0;
  std::uint64_t staged_matrix_entries = 0;
  std::uint64_t staged_partial_entries = 0;
  std::size_t peak_scratch_doubles = 0;

  void merge(const LaunchCounters& other);
};

// Per-worker bump allocator standing in for a block's shared memory.
class Scratch {
 public:
  explicit Scratch(std::size_t capacity_doubles) : storage_(capacity_doubles) {}

  std::span<double> take(std::size_t n);
  void reset() { used_ = 0; }
  std::size_t used() const { return used_; }
  std::size_t capacity() const { return storage_.size(); }

 private:
  std::vector<double> storage_;
  std::size_t used_ = 0;
};

struct BlockContext {
  int outer = 0;         // grid[0] coordinate
  int column_block = 0;  // grid[1] coordinate
  int worker = 0;
  Scratch& scratch;
  LaunchCounters& counters;
};

using BlockFunction = std::function<void(BlockContext&)>;

struct KernelTiming {
  std::string name;
  std::uint64_t calls = 0;
  std::uint64_t total_ns = 0;
};

// Monotonic nanosecond totals and call counts per kernel.
class KernelProfile {
 public:
  KernelProfile() = default;
  KernelProfile(const KernelProfile& other);
  KernelProfile& operator=(const KernelProfile& other);

  void record(Kernel kernel, std::uint64_t ns) {
    std::lock_guard lock(mutex_);
    auto& e = entries_[static_cast<int>(kernel)];
    ++e.calls;
    e.total_ns += ns;
  }
  std::uint64_t calls(Kernel kernel) const;
  std::uint64_t total_ns(Kernel kernel) const;
  void reset();
  // Kernels with at least one call, in Kernel enum order.
  std::vector<KernelTiming> snapshot() const;
  KernelProfile since(const KernelProfile& earlier) const;

 private:
  struct Entry {
    std::uint64_t calls = 0;
    std::uint64_t total_ns = 0;
  };
  std::array<Entry, kKernelCount> entries_{};
  mutable std::mutex mutex_;
};

class ScopedKernelTimer {
 public:
  ScopedKernelTimer(KernelProfile& profile, Kernel kernel)
      : profile_(profile), kernel_(kernel), start_(std::chrono::steady_clock::now()) {}
  ~ScopedKernelTimer() {
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start_)
                        .count();
    profile_.record(kernel_, static_cast<std::uint64_t>(ns));
  }
  ScopedKernelTimer(const ScopedKernelTimer&) = delete;
  ScopedKernelTimer& operator=(const ScopedKernelTimer&) = delete;

 private:
  KernelProfile& profile_;
  Kernel kernel_;
  std::chrono::steady_clock::time_point start_;
};

// Executes plans block by block, serially or on a worker pool. Blocks write
// disjoint outputs and reduce in a fixed order, so results do not depend on
// the worker count.
class Backend {
 public:
  explicit Backend(BackendConfig config = {});
  ~Backend();
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  const BackendConfig& config() const { return config_; }
  int worker_count() const;

  // Largest configured CBS with padded_states * CBS <= kMaxBlockThreads.
  int column_block_size(int padded_states) const;

  // Validates block ceiling and staging budget; throws ConfigurationError.
  ExecutionPlan make_plan(Kernel kernel, std::array<int, 2> grid, std::array<int, 2> block_shape,
                          int cbs, std::size_t staging_doubles) const;

  // Runs every block of the plan exactly once. Returns the merged counters.
  // Launches from different threads are serialized.
  LaunchCounters run_plan(const ExecutionPlan& plan, const BlockFunction& body);

  KernelProfile& profile() { return profile_; }
  const KernelProfile& profile() const { return profile_; }

  // Batch transpose of every (branch, rate) matrix in MBS x MBS tiles.
  void transpose_all(const TransitionMatrixSet& matrices, TransitionMatrixSet& transposed);

 private:
  BackendConfig config_;
  std::unique_ptr<ThreadPool> pool_;
  std::vector<Scratch> scratch_;
  std::vector<LaunchCounters> counters_;
  KernelProfile profile_;
  std::mutex launch_mutex_;
};

// Sum of exactly kReductionBlockSize values by a fixed pairwise tree.
double block_tree_sum(std::span<double> block);

// Fixed-shape sum: zero-padded blocks of `block_size` reduced by pairwise
// trees, then the block sums reduced the same way until one value remains.
double reduce_deterministic(std::span<const double> values, int block_size = kReductionBlockSize);

}  // namespace phylograd
