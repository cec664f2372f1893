#include "phylograd/backend.hpp"

#include <algorithm>
#include <cassert>

#include "phylograd/error.hpp"
#include "phylograd/thread_pool.hpp"

namespace phylograd {

std::string_view kernel_name(Kernel kernel) {
  switch (kernel) {
    case Kernel::postOrderPartials: return "postOrderPartials";
    case Kernel::preOrderPartials: return "preOrderPartials";
    case Kernel::gradient: return "gradient";
    case Kernel::matrixTranspose: return "matrixTranspose";
    case Kernel::nodeSiteReduction: return "nodeSiteReduction";
    case Kernel::other: return "otherKernels";
  }
  return "unknown";
}

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "serial") return BackendKind::serial;
  if (name == "parallel") return BackendKind::parallel;
  throw ValidationError("unknown backend '" + std::string(name) + "' (expected serial or parallel)");
}

void LaunchCounters::merge(const LaunchCounters& other) {
  blocks += other.blocks;
  matrix_stage_events += other.matrix_stage_events;
  staged_matrix_entries += other.staged_matrix_entries;
  staged_partial_entries += other.staged_partial_entries;
  peak_scratch_doubles = std::max(peak_scratch_doubles, other.peak_scratch_doubles);
}

std::span<double> Scratch::take(std::size_t n) {
  // Plans are validated against the budget up front, so this cannot trip
  // for a well-formed kernel.
  assert(used_ + n <= storage_.size());
  std::span<double> out(storage_.data() + used_, n);
  used_ += n;
  return out;
}

KernelProfile::KernelProfile(const KernelProfile& other) {
  std::lock_guard lock(other.mutex_);
  entries_ = other.entries_;
}

KernelProfile& KernelProfile::operator=(const KernelProfile& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  entries_ = other.entries_;
  return *this;
}

std::uint64_t KernelProfile::calls(Kernel kernel) const {
  std::lock_guard lock(mutex_);
  return entries_[static_cast<int>(kernel)].calls;
}

std::uint64_t KernelProfile::total_ns(Kernel kernel) const {
  std::lock_guard lock(mutex_);
  return entries_[static_cast<int>(kernel)].total_ns;
}

void KernelProfile::reset() {
  std::lock_guard lock(mutex_);
  entries_ = {};
}

std::vector<KernelTiming> KernelProfile::snapshot() const {
  std::lock_guard lock(mutex_);
  std::vector<KernelTiming> out;
  for (int k = 0; k < kKernelCount; ++k) {
    if (entries_[k].calls == 0) continue;
    out.push_back({std::string(kernel_name(static_cast<Kernel>(k))), entries_[k].calls,
                   entries_[k].total_ns});
  }
  return out;
}

KernelProfile KernelProfile::since(const KernelProfile& earlier) const {
  KernelProfile out;
  if (this == &earlier) return out;
  std::scoped_lock lock(mutex_, earlier.mutex_);
  for (int k = 0; k < kKernelCount; ++k) {
    out.entries_[k].calls = entries_[k].calls - earlier.entries_[k].calls;
    out.entries_[k].total_ns = entries_[k].total_ns - earlier.entries_[k].total_ns;
  }
  return out;
}

Backend::Backend(BackendConfig config) : config_(config) {
  if (config_.workers < 1) throw ValidationError("worker count must be >= 1");
  if (config_.cbs_nucleotide < 1 || config_.cbs_large_state < 1 || config_.pbs < 1 ||
      config_.mbs < 1 || config_.columns_per_thread_nucleotide < 1) {
    throw ConfigurationError("block-size constants must be positive");
  }
  const int workers = config_.kind == BackendKind::serial ? 1 : config_.workers;
  pool_ = std::make_unique<ThreadPool>(workers);
  const std::size_t capacity = config_.staging_budget_bytes / sizeof(double);
  for (int w = 0; w < workers; ++w) scratch_.emplace_back(capacity);
  counters_.resize(static_cast<std::size_t>(workers));
}

Backend::~Backend() = default;

int Backend::worker_count() const { return pool_->size(); }

int Backend::column_block_size(int padded_states) const {
  int cbs = padded_states <= 4 ? config_.cbs_nucleotide : config_.cbs_large_state;
  while (cbs > 1 && padded_states * cbs > kMaxBlockThreads) cbs /= 2;
  return cbs;
}

ExecutionPlan Backend::make_plan(Kernel kernel, std::array<int, 2> grid,
                                 std::array<int, 2> block_shape, int cbs,
                                 std::size_t staging_doubles) const {
  if (block_shape[0] * block_shape[1] > kMaxBlockThreads && kernel != Kernel::matrixTranspose) {
    throw ConfigurationError(std::string(kernel_name(kernel)) + ": block of " +
                             std::to_string(block_shape[0]) + " x " +
                             std::to_string(block_shape[1]) + " threads exceeds " +
                             std::to_string(kMaxBlockThreads));
  }
  const std::size_t bytes = staging_doubles * sizeof(double);
  if (bytes > config_.staging_budget_bytes) {
    throw ConfigurationError(std::string(kernel_name(kernel)) + ": block needs " +
                             std::to_string(bytes) + " bytes of staging, budget is " +
                             std::to_string(config_.staging_budget_bytes));
  }
  ExecutionPlan plan;
  plan.kernel = kernel;
  plan.grid = grid;
  plan.block_shape = block_shape;
  plan.cbs = cbs;
  plan.pbs = config_.pbs;
  plan.mbs = config_.mbs;
  plan.staging_doubles = staging_doubles;
  plan.staging_budget_bytes = config_.staging_budget_bytes;
  return plan;
}

LaunchCounters Backend::run_plan(const ExecutionPlan& plan, const BlockFunction& body) {
  std::lock_guard lock(launch_mutex_);
  for (auto& c : counters_) c = LaunchCounters{};
  const std::size_t column_blocks = static_cast<std::size_t>(plan.grid[1]);
  pool_->run(plan.block_count(), [&](std::size_t index, int worker) {
    Scratch& scratch = scratch_[static_cast<std::size_t>(worker)];
    LaunchCounters& counters = counters_[static_cast<std::size_t>(worker)];
    scratch.reset();
    BlockContext ctx{static_cast<int>(index / column_blocks), static_cast<int>(index % column_blocks),
                     worker, scratch, counters};
    body(ctx);
    ++counters.blocks;
    counters.peak_scratch_doubles = std::max(counters.peak_scratch_doubles, scratch.used());
  });
  LaunchCounters total;
  for (const auto& c : counters_) total.merge(c);
  return total;
}

void Backend::transpose_all(const TransitionMatrixSet& matrices, TransitionMatrixSet& transposed) {
  ScopedKernelTimer timer(profile_, Kernel::matrixTranspose);
  const int n = matrices.padded_states();
  const int mbs = config_.mbs;
  const int tiles = (n + mbs - 1) / mbs;
  const int count = matrices.branch_count() * matrices.rate_count();
  const ExecutionPlan plan =
      make_plan(Kernel::matrixTranspose, {count, tiles * tiles}, {mbs, mbs}, 1,
                static_cast<std::size_t>(mbs) * mbs);
  const std::span<const double> src = matrices.data();
  const std::span<double> dst = transposed.data();
  const std::size_t msize = matrices.matrix_size();
  run_plan(plan, [&](BlockContext& ctx) {
    const std::size_t base = static_cast<std::size_t>(ctx.outer) * msize;
    const int row0 = (ctx.column_block / tiles) * mbs;
    const int col0 = (ctx.column_block % tiles) * mbs;
    const int rows = std::min(mbs, n - row0);
    const int cols = std::min(mbs, n - col0);
    std::span<double> tile = ctx.scratch.take(static_cast<std::size_t>(mbs) * mbs);
    // A[s][t] <- M(s, t) for the tile, then M'(t, s) <- A[s][t].
    for (int t = 0; t < cols; ++t) {
      for (int s = 0; s < rows; ++s) {
        tile[static_cast<std::size_t>(s) * mbs + t] =
            src[base + static_cast<std::size_t>(col0 + t) * n + (row0 + s)];
      }
    }
    ctx.counters.staged_matrix_entries += static_cast<std::uint64_t>(rows) * cols;
    for (int s = 0; s < rows; ++s) {
      for (int t = 0; t < cols; ++t) {
        dst[base + static_cast<std::size_t>(row0 + s) * n + (col0 + t)] =
            tile[static_cast<std::size_t>(s) * mbs + t];
      }
    }
  });
}

double block_tree_sum(std::span<double> block) {
  for (std::size_t stride = block.size() / 2; stride > 0; stride /= 2) {
    for (std::size_t i = 0; i < stride; ++i) block[i] += block[i + stride];
  }
  return block.empty() ? 0.0 : block[0];
}

double reduce_deterministic(std::span<const double> values, int block_size) {
  if (block_size < 1 || (block_size & (block_size - 1)) != 0) {
    throw ConfigurationError("reduction block size must be a power of two");
  }
  if (values.empty()) return 0.0;
  const auto bs = static_cast<std::size_t>(block_size);
  std::vector<double> level(values.begin(), values.end());
  std::vector<double> block(bs);
  do {
    const std::size_t blocks = (level.size() + bs - 1) / bs;
    std::vector<double> next(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
      std::fill(block.begin(), block.end(), 0.0);
      const std::size_t lo = b * bs;
      const std::size_t hi = std::min(level.size(), lo + bs);
      std::copy(level.begin() + static_cast<std::ptrdiff_t>(lo),
                level.begin() + static_cast<std::ptrdiff_t>(hi), block.begin());
      next[b] = block_tree_sum(block);
    }
    level = std::move(next);
  } while (level.size() > 1);
  return level[0];
}

}  // namespace phylograd
