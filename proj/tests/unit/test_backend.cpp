#include <doctest.h>

#include <atomic>
#include <random>
#include <thread>

#include "phylograd/backend.hpp"
#include "phylograd/error.hpp"
#include "phylograd/thread_pool.hpp"
#include "support.hpp"

using namespace phylograd;
using namespace phylograd::testing;

namespace {

double kahan_sum(std::span<const double> v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

TransitionMatrixSet random_set(int states, int branches, int rates, std::uint64_t seed) {
  const int padded = padded_state_count(states);
  TransitionMatrixSet set(states, padded, branches, rates);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int b = 0; b < branches; ++b) {
    for (int r = 0; r < rates; ++r) {
      Eigen::MatrixXd m(states, states);
      for (int i = 0; i < states; ++i) {
        for (int j = 0; j < states; ++j) m(i, j) = u(rng);
      }
      store_padded(m, padded, set.matrix(b, r));
    }
  }
  return set;
}

}  // namespace

TEST_SUITE("backend") {

TEST_CASE("transpose kernel") {
  Backend backend;
  const TransitionMatrixSet m = random_set(61, 3, 2, 1);
  TransitionMatrixSet t(61, 64, 3, 2), tt(61, 64, 3, 2);
  backend.transpose_all(m, t);
  for (int b = 0; b < 3; ++b) {
    for (int r = 0; r < 2; ++r) {
      for (int s = 0; s < 64; ++s) {
        for (int u = 0; u < 64; ++u) CHECK_EQ(t.at(b, r, s, u), m.at(b, r, u, s));
      }
    }
  }
  backend.transpose_all(t, tt);
  CHECK(std::equal(tt.data().begin(), tt.data().end(), m.data().begin()));

  TransitionMatrixSet id(20, 32, 1, 1), idt(20, 32, 1, 1);
  store_padded(Eigen::MatrixXd::Identity(20, 20), 32, id.matrix(0, 0));
  backend.transpose_all(id, idt);
  CHECK(std::equal(idt.data().begin(), idt.data().end(), id.data().begin()));
  CHECK(backend.profile().calls(Kernel::matrixTranspose) == 3);
}

TEST_CASE("column block sizes respect the 512-thread ceiling") {
  Backend backend;
  CHECK(backend.column_block_size(4) == 16);
  CHECK(backend.column_block_size(64) == 8);
  CHECK(backend.column_block_size(128) == 4);
  CHECK(backend.column_block_size(512) == 1);
}

TEST_CASE("plans are validated up front") {
  Backend backend;
  const ExecutionPlan ok = backend.make_plan(Kernel::gradient, {10, 3}, {64, 8}, 8, 1000);
  CHECK(ok.block_count() == 30);
  CHECK(ok.thread_count() == 30u * 64 * 8);
  CHECK_THROWS_AS(backend.make_plan(Kernel::gradient, {1, 1}, {64, 16}, 16, 10),
                  ConfigurationError);
  CHECK_THROWS_AS(backend.make_plan(Kernel::preOrderPartials, {1, 1}, {4, 16}, 16, 48 * 1024),
                  ConfigurationError);

  BackendConfig tight;
  tight.staging_budget_bytes = 4096;
  Backend small(tight);
  const Instance inst = random_instance(3, 4, 61, 1, 10);
  CHECK_THROWS_AS(full_gradient(inst.tree, inst.model, inst.data, small), ConfigurationError);

  BackendConfig bad;
  bad.pbs = 0;
  CHECK_THROWS_AS(Backend{bad}, ConfigurationError);
  bad = BackendConfig{};
  bad.workers = 0;
  CHECK_THROWS_AS(Backend{bad}, ValidationError);
  CHECK(parse_backend_kind("parallel") == BackendKind::parallel);
  CHECK_THROWS_AS(parse_backend_kind("gpu"), ValidationError);
}

TEST_CASE("plan shapes and staging law") {
  for (int states : {4, 61}) {
    CAPTURE(states);
    const Instance inst = random_instance(9, 6, states, 3, 70);
    Backend backend;
    LikelihoodEngine engine(inst.tree, inst.model, inst.data, backend);
    const int padded = engine.padded_states();
    const int cbs = engine.column_block_size();
    const int blocks = (inst.data.patterns + cbs - 1) / cbs;
    engine.update_transition_matrices();
    engine.postorder_traverse();
    engine.preorder_traverse();
    const ExecutionPlan pre = engine.last_plan();
    CHECK(pre.kernel == Kernel::preOrderPartials);
    CHECK(pre.grid[0] == 3);
    CHECK(pre.grid[1] == blocks);
    CHECK(pre.thread_count() == 3u * blocks * padded * cbs);

    engine.gradient_columns();
    const ExecutionPlan grad = engine.last_plan();
    CHECK(grad.grid[0] == inst.tree.branch_count());
    CHECK(grad.grid[1] == blocks);
    CHECK(grad.thread_count() ==
          static_cast<std::size_t>(inst.tree.branch_count()) * blocks * padded * cbs);
    CHECK(grad.staging_doubles * sizeof(double) <= grad.staging_budget_bytes);
    if (states > 4) {
      // Every matrix stage event moves S_pad x PBS entries.
      const LaunchCounters& c = engine.last_launch();
      CHECK(c.matrix_stage_events > 0);
      CHECK(c.staged_matrix_entries == c.matrix_stage_events * padded * 8);
    }
    CHECK(engine.last_launch().blocks == grad.block_count());
  }
}

TEST_CASE("deterministic reduction") {
  const std::vector<double> one{3.25};
  CHECK(reduce_deterministic(one) == 3.25);
  const std::vector<double> ones(128, 1.0);
  CHECK(reduce_deterministic(ones) == 128.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(10000);
  for (double& x : v) x = u(rng);
  const double tree = reduce_deterministic(v);
  CHECK(rel(tree, kahan_sum(v)) < 1e-12);
  CHECK(reduce_deterministic(v) == tree);
  CHECK_THROWS_AS(reduce_deterministic(v, 100), ConfigurationError);
  std::vector<double> block(128, 0.5);
  CHECK(block_tree_sum(block) == 64.0);
}

TEST_CASE("serial and parallel backends agree bit for bit") {
  const Instance inst = random_instance(77, 12, 61, 2, 90);
  Backend parallel(parallel_config(8));
  CHECK(parallel.worker_count() == 8);
  const GradientReport a = full_gradient(inst.tree, inst.model, inst.data, serial_backend());
  const GradientReport b = full_gradient(inst.tree, inst.model, inst.data, parallel);
  CHECK(a.log_likelihood == b.log_likelihood);
  CHECK(a.per_branch == b.per_branch);

  // C = 1: one block per rate or node.
  const Instance single = random_instance(78, 6, 61, 1, 1);
  const GradientReport c = full_gradient(single.tree, single.model, single.data, parallel);
  const GradientReport d = full_gradient(single.tree, single.model, single.data, serial_backend());
  CHECK(c.per_branch == d.per_branch);
}

TEST_CASE("concurrent launches on one backend") {
  Backend shared(parallel_config(3));
  const Instance a = random_instance(1, 8, 4, 2, 200);
  const Instance b = random_instance(2, 8, 61, 1, 30);
  const GradientReport ea = full_gradient(a.tree, a.model, a.data, serial_backend());
  const GradientReport eb = full_gradient(b.tree, b.model, b.data, serial_backend());
  GradientReport ra, rb;
  std::thread t1([&] {
    for (int i = 0; i < 5; ++i) ra = full_gradient(a.tree, a.model, a.data, shared);
  });
  std::thread t2([&] {
    for (int i = 0; i < 5; ++i) rb = full_gradient(b.tree, b.model, b.data, shared);
  });
  t1.join();
  t2.join();
  CHECK(ra.per_branch == ea.per_branch);
  CHECK(rb.per_branch == eb.per_branch);
}

TEST_CASE("thread pool runs every task once and propagates errors") {
  ThreadPool pool(4);
  std::vector<std::atomic<int>> hits(1000);
  pool.run(hits.size(), [&](std::size_t i, int worker) {
    CHECK(worker >= 0);
    hits[i].fetch_add(1);
  });
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(pool.run(10, [](std::size_t i, int) {
    if (i == 7) throw std::runtime_error("boom");
  }), std::runtime_error);
  // Still usable afterwards.
  std::atomic<int> count{0};
  pool.run(50, [&](std::size_t, int) { count.fetch_add(1); });
  CHECK(count.load() == 50);
  pool.run(0, [](std::size_t, int) {});
}

TEST_CASE("kernel profile") {
  KernelProfile p;
  p.record(Kernel::gradient, 100);
  p.record(Kernel::gradient, 50);
  const KernelProfile before = p;
  p.record(Kernel::postOrderPartials, 7);
  const auto snap = p.snapshot();
  REQUIRE(snap.size() == 2);
  CHECK(snap[0].name == "postOrderPartials");
  CHECK(snap[1].calls == 2);
  CHECK(snap[1].total_ns == 150);
  const auto delta = p.since(before).snapshot();
  REQUIRE(delta.size() == 1);
  CHECK(delta[0].name == "postOrderPartials");
  CHECK(kernel_name(Kernel::other) == "otherKernels");
}

}
