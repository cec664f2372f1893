#include "phylograd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kernels.hpp"
#include "phylograd/error.hpp"

namespace phylograd {

namespace {

std::size_t slab_index(int node_slot, int rate, int rates, std::size_t slab) {
  return (static_cast<std::size_t>(node_slot) * rates + rate) * slab;
}

}  // namespace

PartialBuffers::PartialBuffers(int tips, int padded_states, int rates, int patterns)
    : tips_(tips), padded_(padded_states), rates_(rates), patterns_(patterns) {
  const int nodes = 2 * tips - 1;
  const int internals = tips - 1;
  post_.assign(static_cast<std::size_t>(internals) * rates * slab_size(), 0.0);
  pre_.assign(static_cast<std::size_t>(nodes) * rates * slab_size(), 0.0);
  post_scale_.assign(static_cast<std::size_t>(nodes) * patterns, 0.0);
  pre_scale_.assign(static_cast<std::size_t>(nodes) * patterns, 0.0);
}

std::span<double> PartialBuffers::post(int node, int rate) {
  return std::span<double>(post_).subspan(slab_index(node - tips_, rate, rates_, slab_size()),
                                          slab_size());
}

std::span<const double> PartialBuffers::post(int node, int rate) const {
  return std::span<const double>(post_).subspan(
      slab_index(node - tips_, rate, rates_, slab_size()), slab_size());
}

std::span<double> PartialBuffers::pre(int node, int rate) {
  return std::span<double>(pre_).subspan(slab_index(node, rate, rates_, slab_size()), slab_size());
}

std::span<const double> PartialBuffers::pre(int node, int rate) const {
  return std::span<const double>(pre_).subspan(slab_index(node, rate, rates_, slab_size()),
                                               slab_size());
}

std::span<double> PartialBuffers::post_scale(int node) {
  return std::span<double>(post_scale_)
      .subspan(static_cast<std::size_t>(node) * patterns_, static_cast<std::size_t>(patterns_));
}

std::span<const double> PartialBuffers::post_scale(int node) const {
  return std::span<const double>(post_scale_)
      .subspan(static_cast<std::size_t>(node) * patterns_, static_cast<std::size_t>(patterns_));
}

std::span<double> PartialBuffers::pre_scale(int node) {
  return std::span<double>(pre_scale_)
      .subspan(static_cast<std::size_t>(node) * patterns_, static_cast<std::size_t>(patterns_));
}

std::span<const double> PartialBuffers::pre_scale(int node) const {
  return std::span<const double>(pre_scale_)
      .subspan(static_cast<std::size_t>(node) * patterns_, static_cast<std::size_t>(patterns_));
}

LikelihoodEngine::LikelihoodEngine(Phylogeny tree, ModelInstance model, PatternizedAlignment data,
                                   Backend& backend, EngineOptions options)
    : tree_(std::move(tree)),
      model_(std::move(model)),
      data_(std::move(data)),
      backend_(backend),
      options_(options) {
  states_ = model_.states();
  if (data_.states != states_) {
    throw ValidationError("alignment has " + std::to_string(data_.states) +
                          " states but the model has " + std::to_string(states_));
  }
  if (data_.tips != tree_.tip_count()) {
    throw ValidationError("alignment has " + std::to_string(data_.tips) +
                          " sequences but the tree has " + std::to_string(tree_.tip_count()) +
                          " tips");
  }
  if (model_.categories.count() < 1) throw ValidationError("at least one rate category required");
  padded_ = options_.pad_states ? padded_state_count(states_) : states_;
  rates_ = model_.categories.count();
  patterns_ = data_.patterns;
  cbs_ = backend_.column_block_size(padded_);
  column_blocks_ = (patterns_ + cbs_ - 1) / cbs_;

  for (const auto& mask : data_.masks) {
    std::vector<double> m(static_cast<std::size_t>(padded_), 0.0);
    for (int s = 0; s < states_; ++s) m[static_cast<std::size_t>(s)] = mask[s] ? 1.0 : 0.0;
    tip_masks_.push_back(std::move(m));
  }
  root_frequencies_.assign(static_cast<std::size_t>(padded_), 0.0);
  for (int s = 0; s < states_; ++s) root_frequencies_[s] = model_.matrix.stationary(s);
  category_weights_ = model_.categories.weights;

  const std::size_t msize = static_cast<std::size_t>(padded_) * padded_;
  rate_generators_t_.assign(msize * rates_, 0.0);
  for (int r = 0; r < rates_; ++r) {
    const Eigen::MatrixXd m = model_.categories.rates[r] * model_.matrix.generator.transpose();
    store_padded(m, padded_, std::span<double>(rate_generators_t_).subspan(msize * r, msize));
  }

  const int branches = tree_.branch_count();
  matrices_ = TransitionMatrixSet(states_, padded_, branches, rates_);
  transposed_ = TransitionMatrixSet(states_, padded_, branches, rates_);
  buffers_ = PartialBuffers(tree_.tip_count(), padded_, rates_, patterns_);
  columns_.assign(static_cast<std::size_t>(branches) * patterns_, 0.0);
  column_log_likelihood_.assign(static_cast<std::size_t>(patterns_), 0.0);
  post_ready_.assign(static_cast<std::size_t>(tree_.node_count()), 0);
  pre_ready_.assign(static_cast<std::size_t>(tree_.node_count()), 0);
}

void LikelihoodEngine::set_tree_lengths(std::span<const double> lengths) {
  tree_.set_branch_lengths(lengths);
  stage_ = Stage::stale;
}

void LikelihoodEngine::set_rate_scalars(std::span<const double> scalars) {
  tree_.set_rate_scalars(scalars);
  stage_ = Stage::stale;
}

void LikelihoodEngine::require(Stage stage, const char* step) const {
  if (stage_ >= stage) return;
  static constexpr const char* names[] = {"nothing", "transition matrices", "post-order traversal",
                                          "pre-order traversal", "gradient columns"};
  throw SequencingError(std::string(step) + " requires " + names[static_cast<int>(stage)] +
                        " to be up to date");
}

void LikelihoodEngine::update_transition_matrices() {
  {
    ScopedKernelTimer timer(backend_.profile(), Kernel::other);
    const std::vector<double> lengths = tree_.effective_lengths();
    for (int b = 0; b < tree_.branch_count(); ++b) {
      for (int r = 0; r < rates_; ++r) {
        const Eigen::MatrixXd p =
            transition_matrix(model_.eigen, model_.categories.rates[r], lengths[b]);
        store_padded(p, padded_, matrices_.matrix(b, r));
      }
    }
  }
  // The small-state path transposes while staging instead.
  if (padded_ > 4) backend_.transpose_all(matrices_, transposed_);
  std::fill(post_ready_.begin(), post_ready_.end(), 0);
  std::fill(pre_ready_.begin(), pre_ready_.end(), 0);
  for (int t = 0; t < tree_.tip_count(); ++t) post_ready_[t] = 1;
  diagnostic_.reset();
  stage_ = Stage::matrices;
}

std::size_t LikelihoodEngine::stage_tile(int node, bool post, int rate, int c0, int nc,
                                         std::span<double> tile, LaunchCounters& counters) const {
  const auto n = static_cast<std::size_t>(padded_);
  const std::size_t count = n * nc;
  if (post && tree_.is_tip(node)) {
    std::fill(tile.begin(), tile.begin() + static_cast<std::ptrdiff_t>(count), 0.0);
    for (int c = 0; c < nc; ++c) {
      const TipCode code = data_.code(node, c0 + c);
      double* dst = tile.data() + static_cast<std::size_t>(c) * n;
      if (code >= 0) {
        dst[code] = 1.0;
      } else {
        const auto& mask = tip_masks_[static_cast<std::size_t>(-(code + 1))];
        std::copy(mask.begin(), mask.end(), dst);
      }
    }
  } else {
    const std::span<const double> slab = post ? buffers_.post(node, rate) : buffers_.pre(node, rate);
    std::copy_n(slab.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(c0) * n), count,
                tile.begin());
  }
  counters.staged_partial_entries += count;
  return count;
}

void LikelihoodEngine::rescale(Kernel kernel, int node, std::span<const double> parent_scale_a,
                               std::span<const double> parent_scale_b, bool preorder) {
  const auto n = static_cast<std::size_t>(padded_);
  std::span<double> scale = preorder ? buffers_.pre_scale(node) : buffers_.post_scale(node);
  const ExecutionPlan plan = backend_.make_plan(kernel, {1, column_blocks_}, {padded_, cbs_}, cbs_, 0);
  backend_.run_plan(plan, [&](BlockContext& ctx) {
    const int c0 = ctx.column_block * cbs_;
    const int nc = std::min(cbs_, patterns_ - c0);
    for (int c = c0; c < c0 + nc; ++c) {
      double m = 0.0;
      if (options_.rescaling) {
        for (int r = 0; r < rates_; ++r) {
          const std::span<const double> slab =
              preorder ? buffers_.pre(node, r) : buffers_.post(node, r);
          for (std::size_t s = 0; s < n; ++s) m = std::max(m, slab[static_cast<std::size_t>(c) * n + s]);
        }
      }
      double log_m = 0.0;
      if (m > 0.0 && m != 1.0) {
        for (int r = 0; r < rates_; ++r) {
          std::span<double> slab = preorder ? buffers_.pre(node, r) : buffers_.post(node, r);
          for (std::size_t s = 0; s < n; ++s) slab[static_cast<std::size_t>(c) * n + s] /= m;
        }
        log_m = std::log(m);
      }
      scale[c] = parent_scale_a[c] + parent_scale_b[c] + log_m;
    }
  });
}

void LikelihoodEngine::postorder_node(int node) {
  require(Stage::matrices, "post-order partials");
  if (tree_.is_tip(node) || node > tree_.root()) {
    throw ValidationError("post-order partials are computed for internal nodes only");
  }
  const int a = tree_.children(node)[0];
  const int b = tree_.children(node)[1];
  if (!post_ready_[a] || !post_ready_[b]) {
    throw SequencingError("post-order schedule violation: node " + std::to_string(node) +
                          " before its child " + std::to_string(post_ready_[a] ? b : a));
  }
  stage_ = Stage::matrices;
  std::fill(pre_ready_.begin(), pre_ready_.end(), 0);

  ScopedKernelTimer timer(backend_.profile(), Kernel::postOrderPartials);
  const auto n = static_cast<std::size_t>(padded_);
  const std::size_t tile = n * cbs_;
  const std::size_t chunk = detail::matvec_chunk_size(padded_, backend_.config().pbs);
  const ExecutionPlan plan = backend_.make_plan(Kernel::postOrderPartials, {rates_, column_blocks_},
                                                {padded_, cbs_}, cbs_, 3 * tile + chunk);
  const int pbs = backend_.config().pbs;
  const int lanes = backend_.config().columns_per_thread_nucleotide;
  last_plan_ = plan;
  last_launch_ = backend_.run_plan(plan, [&](BlockContext& ctx) {
    const int r = ctx.outer;
    const int c0 = ctx.column_block * cbs_;
    const int nc = std::min(cbs_, patterns_ - c0);
    std::span<double> tile_in = ctx.scratch.take(tile);
    std::span<double> acc_a = ctx.scratch.take(tile);
    std::span<double> acc_b = ctx.scratch.take(tile);
    std::span<double> stage = ctx.scratch.take(chunk);
    stage_tile(a, true, r, c0, nc, tile_in, ctx.counters);
    detail::staged_matvec(matrices_.matrix(a, r), false, tile_in, acc_a, nc, padded_, pbs, lanes,
                          stage, ctx.counters);
    stage_tile(b, true, r, c0, nc, tile_in, ctx.counters);
    detail::staged_matvec(matrices_.matrix(b, r), false, tile_in, acc_b, nc, padded_, pbs, lanes,
                          stage, ctx.counters);
    std::span<double> out = buffers_.post(node, r).subspan(static_cast<std::size_t>(c0) * n, n * nc);
    for (std::size_t i = 0; i < n * nc; ++i) out[i] = acc_a[i] * acc_b[i];
  });
  rescale(Kernel::postOrderPartials, node, buffers_.post_scale(a), buffers_.post_scale(b), false);
  post_ready_[node] = 1;
  if (node == tree_.root()) stage_ = Stage::postorder;
}

void LikelihoodEngine::postorder_traverse() {
  require(Stage::matrices, "post-order traversal");
  for (int node : tree_.postorder_internals()) postorder_node(node);
}

std::vector<double> LikelihoodEngine::pattern_log_likelihoods() const {
  require(Stage::postorder, "log-likelihood");
  return column_log_likelihood_;
}

double LikelihoodEngine::log_likelihood() {
  require(Stage::postorder, "log-likelihood");
  ScopedKernelTimer timer(backend_.profile(), Kernel::other);
  const int root = tree_.root();
  const auto n = static_cast<std::size_t>(padded_);
  std::vector<double> terms(static_cast<std::size_t>(patterns_));
  std::vector<double> work(n);
  std::vector<double> products(n);
  int impossible = -1;
  for (int c = 0; c < patterns_; ++c) {
    double site = 0.0;
    for (int r = 0; r < rates_; ++r) {
      const std::span<const double> p = buffers_.post(root, r).subspan(static_cast<std::size_t>(c) * n, n);
      for (std::size_t s = 0; s < n; ++s) products[s] = p[s] * root_frequencies_[s];
      site += category_weights_[r] * detail::state_tree_sum(products, work);
    }
    if (!(site > 0.0)) {
      column_log_likelihood_[c] = -std::numeric_limits<double>::infinity();
      if (impossible < 0) impossible = c;
    } else {
      column_log_likelihood_[c] = std::log(site) + buffers_.post_scale(root)[c];
    }
    terms[c] = data_.weights[c] * column_log_likelihood_[c];
  }
  if (impossible >= 0) {
    std::ostringstream msg;
    msg << "pattern " << impossible << " has zero likelihood under the model";
    diagnostic_ = msg.str();
    return -std::numeric_limits<double>::infinity();
  }
  diagnostic_.reset();
  return reduce_deterministic(terms);
}

void LikelihoodEngine::initialize_root_preorder() {
  const int root = tree_.root();
  const auto n = static_cast<std::size_t>(padded_);
  for (int r = 0; r < rates_; ++r) {
    std::span<double> q = buffers_.pre(root, r);
    for (int c = 0; c < patterns_; ++c) {
      std::copy(root_frequencies_.begin(), root_frequencies_.end(),
                q.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(c) * n));
    }
  }
  std::span<double> scale = buffers_.pre_scale(root);
  std::fill(scale.begin(), scale.end(), 0.0);
  pre_ready_[root] = 1;
}

void LikelihoodEngine::preorder_node(int node) {
  require(Stage::postorder, "pre-order partials");
  if (node < 0 || node >= tree_.root()) {
    throw ValidationError("pre-order partials are computed for non-root nodes only");
  }
  const int parent = tree_.parent(node);
  if (parent == tree_.root() && !pre_ready_[parent]) initialize_root_preorder();
  if (!pre_ready_[parent]) {
    throw SequencingError("pre-order schedule violation: node " + std::to_string(node) +
                          " before its parent " + std::to_string(parent));
  }
  const int sib = tree_.sibling(node);
  if (stage_ > Stage::postorder) stage_ = Stage::postorder;

  ScopedKernelTimer timer(backend_.profile(), Kernel::preOrderPartials);
  const auto n = static_cast<std::size_t>(padded_);
  const std::size_t tile = n * cbs_;
  const std::size_t chunk = detail::matvec_chunk_size(padded_, backend_.config().pbs);
  const ExecutionPlan plan = backend_.make_plan(Kernel::preOrderPartials, {rates_, column_blocks_},
                                                {padded_, cbs_}, cbs_, 3 * tile + chunk);
  const int pbs = backend_.config().pbs;
  const int lanes = backend_.config().columns_per_thread_nucleotide;
  const bool small = padded_ <= 4;
  last_plan_ = plan;
  last_launch_ = backend_.run_plan(plan, [&](BlockContext& ctx) {
    const int r = ctx.outer;
    const int c0 = ctx.column_block * cbs_;
    const int nc = std::min(cbs_, patterns_ - c0);
    std::span<double> tile_p = ctx.scratch.take(tile);
    std::span<double> tile_q = ctx.scratch.take(tile);
    std::span<double> acc = ctx.scratch.take(tile);
    std::span<double> stage = ctx.scratch.take(chunk);
    // v = q_parent o (P_sibling p_sibling)
    stage_tile(sib, true, r, c0, nc, tile_p, ctx.counters);
    detail::staged_matvec(matrices_.matrix(sib, r), false, tile_p, acc, nc, padded_, pbs, lanes,
                          stage, ctx.counters);
    stage_tile(parent, false, r, c0, nc, tile_q, ctx.counters);
    for (std::size_t i = 0; i < n * nc; ++i) tile_q[i] *= acc[i];
    // q_node = P_node' v
    std::span<double> out = buffers_.pre(node, r).subspan(static_cast<std::size_t>(c0) * n, n * nc);
    if (small) {
      detail::staged_matvec(matrices_.matrix(node, r), true, tile_q, out, nc, padded_, pbs, lanes,
                            stage, ctx.counters);
    } else {
      detail::staged_matvec(transposed_.matrix(node, r), false, tile_q, out, nc, padded_, pbs,
                            lanes, stage, ctx.counters);
    }
  });
  rescale(Kernel::preOrderPartials, node, buffers_.pre_scale(parent), buffers_.post_scale(sib),
          true);
  pre_ready_[node] = 1;
  if (std::all_of(pre_ready_.begin(), pre_ready_.end(), [](char c) { return c != 0; })) {
    stage_ = Stage::preorder;
  }
}

void LikelihoodEngine::preorder_traverse() {
  require(Stage::postorder, "pre-order traversal");
  initialize_root_preorder();
  for (int node : tree_.preorder_nodes()) preorder_node(node);
}

double LikelihoodEngine::node_likelihood(int node, int pattern) const {
  if (!post_ready_[node] || !pre_ready_[node]) {
    throw SequencingError("node likelihood needs both partials of node " + std::to_string(node));
  }
  const auto n = static_cast<std::size_t>(padded_);
  std::vector<double> tip(n);
  double total = 0.0;
  for (int r = 0; r < rates_; ++r) {
    std::span<const double> p;
    if (tree_.is_tip(node)) {
      LaunchCounters unused;
      std::vector<double> tile(n);
      stage_tile(node, true, r, pattern, 1, tile, unused);
      tip = tile;
      p = tip;
    } else {
      p = buffers_.post(node, r).subspan(static_cast<std::size_t>(pattern) * n, n);
    }
    const std::span<const double> q = buffers_.pre(node, r).subspan(static_cast<std::size_t>(pattern) * n, n);
    double dot = 0.0;
    for (std::size_t s = 0; s < n; ++s) dot += p[s] * q[s];
    total += category_weights_[r] * dot;
  }
  return total;
}

double LikelihoodEngine::node_log_likelihood(int node, int pattern) const {
  const double scale = tree_.is_tip(node)
                           ? buffers_.pre_scale(node)[pattern]
                           : buffers_.pre_scale(node)[pattern] + buffers_.post_scale(node)[pattern];
  return std::log(node_likelihood(node, pattern)) + scale;
}

void LikelihoodEngine::gradient_columns() {
  require(Stage::preorder, "gradient");
  ScopedKernelTimer timer(backend_.profile(), Kernel::gradient);
  const auto n = static_cast<std::size_t>(padded_);
  const std::size_t tile = n * cbs_;
  const std::size_t chunk = detail::matvec_chunk_size(padded_, backend_.config().pbs);
  const int branches = tree_.branch_count();
  // More categories than block threads: weights are staged in serial chunks.
  const int rate_chunk = std::min(rates_, padded_ * cbs_);
  const ExecutionPlan plan =
      backend_.make_plan(Kernel::gradient, {branches, column_blocks_}, {padded_, cbs_}, cbs_,
                         5 * tile + chunk + static_cast<std::size_t>(rate_chunk) + n);
  const int pbs = backend_.config().pbs;
  const int lanes = backend_.config().columns_per_thread_nucleotide;
  const std::size_t msize = n * n;
  int bad_pattern = -1;
  std::vector<int> bad(static_cast<std::size_t>(branches) * column_blocks_, -1);
  last_plan_ = plan;
  last_launch_ = backend_.run_plan(plan, [&](BlockContext& ctx) {
    const int i = ctx.outer;
    const int c0 = ctx.column_block * cbs_;
    const int nc = std::min(cbs_, patterns_ - c0);
    detail::KernelWorkspace ws{ctx.scratch.take(tile), ctx.scratch.take(tile),
                               ctx.scratch.take(tile),
                               ctx.scratch.take(static_cast<std::size_t>(rate_chunk))};
    std::span<double> tile_p = ctx.scratch.take(tile);
    std::span<double> tile_q = ctx.scratch.take(tile);
    std::span<double> stage = ctx.scratch.take(chunk);
    std::span<double> work = ctx.scratch.take(n);
    std::fill(ws.phi.begin(), ws.phi.end(), 0.0);
    std::fill(ws.omega.begin(), ws.omega.end(), 0.0);
    for (int r = 0; r < rates_; ++r) {
      if (r % rate_chunk == 0) {
        const int count = std::min(rate_chunk, rates_ - r);
        std::copy_n(category_weights_.begin() + r, count, ws.category_weights_cache.begin());
      }
      stage_tile(i, true, r, c0, nc, tile_p, ctx.counters);
      stage_tile(i, false, r, c0, nc, tile_q, ctx.counters);
      const double w = ws.category_weights_cache[r % rate_chunk];
      // delta = (gamma_r Q)' q
      detail::staged_matvec(std::span<const double>(rate_generators_t_).subspan(msize * r, msize),
                            false, tile_q, ws.delta, nc, padded_, pbs, lanes, stage, ctx.counters);
      for (std::size_t k = 0; k < n * nc; ++k) {
        ws.omega[k] += w * tile_p[k] * tile_q[k];
        ws.phi[k] += w * tile_p[k] * ws.delta[k];
      }
    }
    for (int c = 0; c < nc; ++c) {
      const auto off = static_cast<std::size_t>(c) * n;
      const double phi = detail::state_tree_sum(ws.phi.subspan(off, n), work);
      const double omega = detail::state_tree_sum(ws.omega.subspan(off, n), work);
      int& flag = bad[static_cast<std::size_t>(i) * column_blocks_ + ctx.column_block];
      if (!(omega > 0.0) && flag < 0) flag = c0 + c;
      columns_[static_cast<std::size_t>(i) * patterns_ + c0 + c] = phi / omega;
    }
  });
  for (int b : bad) {
    if (b >= 0 && (bad_pattern < 0 || b < bad_pattern)) bad_pattern = b;
  }
  if (bad_pattern >= 0) {
    throw NumericalError(bad_pattern, "pattern " + std::to_string(bad_pattern) +
                                          " has zero likelihood; gradient undefined");
  }
  stage_ = Stage::gradient;
}

std::vector<double> LikelihoodEngine::reduce_columns() {
  require(Stage::gradient, "column reduction");
  ScopedKernelTimer timer(backend_.profile(), Kernel::nodeSiteReduction);
  const int branches = tree_.branch_count();
  const auto bs = static_cast<std::size_t>(kReductionBlockSize);
  std::size_t width = static_cast<std::size_t>(patterns_);
  std::vector<double> level(columns_.size());
  for (int i = 0; i < branches; ++i) {
    for (int c = 0; c < patterns_; ++c) {
      const std::size_t k = static_cast<std::size_t>(i) * patterns_ + c;
      level[k] = data_.weights[c] * columns_[k];
    }
  }
  do {
    const std::size_t blocks = (width + bs - 1) / bs;
    std::vector<double> next(static_cast<std::size_t>(branches) * blocks);
    const ExecutionPlan plan =
        backend_.make_plan(Kernel::nodeSiteReduction, {branches, static_cast<int>(blocks)},
                           {kReductionBlockSize, 1}, 1, bs);
    last_plan_ = plan;
    last_launch_ = backend_.run_plan(plan, [&](BlockContext& ctx) {
      std::span<double> block = ctx.scratch.take(bs);
      std::fill(block.begin(), block.end(), 0.0);
      const std::size_t lo = static_cast<std::size_t>(ctx.column_block) * bs;
      const std::size_t hi = std::min(width, lo + bs);
      const std::size_t row = static_cast<std::size_t>(ctx.outer) * width;
      std::copy(level.begin() + static_cast<std::ptrdiff_t>(row + lo),
                level.begin() + static_cast<std::ptrdiff_t>(row + hi), block.begin());
      ctx.counters.staged_partial_entries += hi - lo;
      next[static_cast<std::size_t>(ctx.outer) * blocks + ctx.column_block] = block_tree_sum(block);
    });
    level = std::move(next);
    width = blocks;
  } while (width > 1);
  return level;
}

GradientReport LikelihoodEngine::full_gradient() {
  const KernelProfile before = backend_.profile();
  update_transition_matrices();
  postorder_traverse();
  GradientReport report;
  report.patterns = patterns_;
  report.log_likelihood = log_likelihood();
  if (diagnostic_) {
    const int pattern = static_cast<int>(std::find_if(column_log_likelihood_.begin(),
                                                      column_log_likelihood_.end(),
                                                      [](double v) { return std::isinf(v); }) -
                                         column_log_likelihood_.begin());
    throw NumericalError(pattern, *diagnostic_);
  }
  preorder_traverse();
  gradient_columns();
  report.per_branch = reduce_columns();
  if (options_.retain_columns) report.per_column = columns_;
  report.timings = backend_.profile().since(before).snapshot();
  return report;
}

GradientReport full_gradient(const Phylogeny& tree, const ModelInstance& model,
                             const PatternizedAlignment& data, Backend& backend,
                             EngineOptions options) {
  LikelihoodEngine engine(tree, model, data, backend, options);
  return engine.full_gradient();
}

double log_likelihood(const Phylogeny& tree, const ModelInstance& model,
                      const PatternizedAlignment& data, Backend& backend, EngineOptions options) {
  LikelihoodEngine engine(tree, model, data, backend, options);
  engine.update_transition_matrices();
  engine.postorder_traverse();
  return engine.log_likelihood();
}

double aggregate_branches(std::span<const double> per_branch, std::span<const int> branches) {
  double total = 0.0;
  for (int b : branches) {
    if (b < 0 || static_cast<std::size_t>(b) >= per_branch.size()) {
      throw ValidationError("branch index " + std::to_string(b) + " out of range");
    }
    total += per_branch[static_cast<std::size_t>(b)];
  }
  return total;
}

}  // namespace phylograd
