#include <doctest.h>

#include <cmath>
#include <limits>

#include "phylograd/error.hpp"
#include "phylograd/oracles.hpp"
#include "support.hpp"

using namespace phylograd;
using namespace phylograd::testing;

namespace {

// Two-taxon JC, both tips showing the same base: L = P_same(b1 + b2) / 4.
double jc_same(double t) { return 0.25 + 0.75 * std::exp(-4.0 * t / 3.0); }
double jc_same_deriv(double t) { return -std::exp(-4.0 * t / 3.0); }

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("two-taxon JC log-likelihood and gradient match the closed form") {
  const Phylogeny tree = parse_newick("(A:0.1,B:0.2);");
  const auto data = nucleotide_data(tree, ">A\nA\n>B\nA\n");
  LikelihoodEngine engine(tree, jc_model(), data, serial_backend());
  const GradientReport g = engine.full_gradient();
  CHECK(g.log_likelihood == doctest::Approx(std::log(0.25 * jc_same(0.3))).epsilon(1e-14));
  const double expected = jc_same_deriv(0.3) / jc_same(0.3);
  CHECK(g.per_branch[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(g.per_branch[1] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("identity matrices at zero length") {
  const Phylogeny tree = parse_newick("(A:0,B:0);");
  CHECK(log_likelihood(tree, jc_model(), nucleotide_data(tree, ">A\nA\n>B\nA\n"),
                       serial_backend()) == doctest::Approx(std::log(0.25)));

  LikelihoodEngine engine(tree, jc_model(), nucleotide_data(tree, ">A\nA\n>B\nC\n"),
                          serial_backend());
  engine.update_transition_matrices();
  engine.postorder_traverse();
  CHECK(engine.log_likelihood() == -std::numeric_limits<double>::infinity());
  REQUIRE(engine.diagnostic());
  CHECK(engine.diagnostic()->find("pattern 0") != std::string::npos);
  CHECK_THROWS_AS(engine.full_gradient(), NumericalError);
}

TEST_CASE("pre-order at the root's children is a single application of the recursion") {
  const Phylogeny tree = parse_newick("(A:0.15,B:0.3);");
  Rng rng(3);
  const ModelInstance model = random_gtr(rng, 2);
  const auto data = nucleotide_data(tree, ">A\nACGT\n>B\nAGGA\n");
  EngineOptions opts;
  opts.rescaling = false;
  LikelihoodEngine engine(tree, model, data, serial_backend(), opts);
  engine.update_transition_matrices();
  engine.postorder_traverse();
  engine.preorder_traverse();
  for (int r = 0; r < 2; ++r) {
    const Eigen::MatrixXd p1 = transition_matrix(model.eigen, model.categories.rates[r], 0.15);
    const Eigen::MatrixXd p2 = transition_matrix(model.eigen, model.categories.rates[r], 0.3);
    for (int c = 0; c < data.patterns; ++c) {
      Eigen::VectorXd tip2 = Eigen::VectorXd::Zero(4);
      for (int s = 0; s < 4; ++s) tip2(s) = data.observed(1, c, s) ? 1.0 : 0.0;
      const Eigen::VectorXd expected =
          p1.transpose() * model.matrix.stationary.cwiseProduct(p2 * tip2);
      const auto q = engine.buffers().pre(0, r).subspan(static_cast<std::size_t>(c) * 4, 4);
      for (int s = 0; s < 4; ++s) CHECK(q[s] == doctest::Approx(expected(s)).epsilon(1e-14));
    }
  }
}

TEST_CASE("zero branch lengths and uniform frequencies give masked pi") {
  const Phylogeny tree = parse_newick("((A:0,B:0):0,C:0);");
  const auto data = nucleotide_data(tree, ">A\nA\n>B\nR\n>C\nN\n");
  EngineOptions opts;
  opts.rescaling = false;
  LikelihoodEngine engine(tree, jc_model(), data, serial_backend(), opts);
  engine.update_transition_matrices();
  engine.postorder_traverse();
  engine.preorder_traverse();
  // C sees pi masked by A and R: only state A survives.
  const auto qc = engine.buffers().pre(2, 0);
  CHECK(qc[0] == doctest::Approx(0.25));
  CHECK(qc[1] == 0.0);
  CHECK(qc[2] == 0.0);
  CHECK(qc[3] == 0.0);
  // A sees pi masked by R (C is N).
  const auto qa = engine.buffers().pre(0, 0);
  CHECK(qa[0] == doctest::Approx(0.25));
  CHECK(qa[1] == 0.0);
  CHECK(qa[2] == doctest::Approx(0.25));
  CHECK(qa[3] == 0.0);
}

TEST_CASE("single-category gradient column equals p'Q'q / p'q") {
  const Instance inst = random_instance(17, 5, 4, 1, 30);
  EngineOptions opts;
  opts.retain_columns = true;
  LikelihoodEngine engine(inst.tree, inst.model, inst.data, serial_backend(), opts);
  const GradientReport g = engine.full_gradient();
  const Eigen::MatrixXd& q = inst.model.matrix.generator;
  for (int node = 0; node < inst.tree.branch_count(); ++node) {
    for (int c = 0; c < inst.data.patterns; ++c) {
      Eigen::VectorXd p(4), pre(4);
      for (int s = 0; s < 4; ++s) {
        p(s) = inst.tree.is_tip(node) ? (inst.data.observed(node, c, s) ? 1.0 : 0.0)
                                      : engine.buffers().post(node, 0)[c * 4 + s];
        pre(s) = engine.buffers().pre(node, 0)[c * 4 + s];
      }
      const double expected = p.dot(q.transpose() * pre) / p.dot(pre);
      CHECK(g.column(node, c) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradient matches the quadratic oracle and finite differences") {
  for (int states : {4, 61}) {
    CAPTURE(states);
    const Instance inst = random_instance(100 + states, 8, states, 4, 40);
    const GradientReport g = full_gradient(inst.tree, inst.model, inst.data, serial_backend());
    const auto quad = oracle::quadratic_gradient(inst.tree, inst.model, inst.data);
    CHECK(rel_inf(g.per_branch, quad.per_branch) < 1e-8);
    CHECK(rel(g.log_likelihood, quad.log_likelihood) < 1e-12);
    const auto fd = oracle::finite_difference_gradient(inst.tree, inst.model, inst.data);
    CHECK(rel_inf(g.per_branch, fd) < 1e-6);
  }
}

TEST_CASE("five-taxon JC gradient matches central differences") {
  Rng rng(55);
  const Phylogeny tree = random_tree(5, rng);
  const RawAlignment raw = simulate_alignment(tree, jc_model(), 300, rng);
  const auto data = compress_patterns(raw);
  const GradientReport g = full_gradient(tree, jc_model(), data, serial_backend());
  const auto fd = oracle::finite_difference_gradient(tree, jc_model(), data, 1e-5);
  CHECK(rel_inf(g.per_branch, fd) < 1e-6);
}

TEST_CASE("zero-length root branch keeps a finite gradient") {
  Instance inst = random_instance(23, 6, 4, 2, 60);
  std::vector<double> lengths(inst.tree.branch_lengths().begin(), inst.tree.branch_lengths().end());
  lengths[inst.tree.children(inst.tree.root())[0]] = 0.0;
  inst.tree.set_branch_lengths(lengths);
  const GradientReport g = full_gradient(inst.tree, inst.model, inst.data, serial_backend());
  for (double v : g.per_branch) CHECK(std::isfinite(v));
  const auto quad = oracle::quadratic_gradient(inst.tree, inst.model, inst.data);
  CHECK(rel_inf(g.per_branch, quad.per_branch) < 1e-8);
  const auto fd = oracle::finite_difference_gradient(inst.tree, inst.model, inst.data);
  CHECK(rel_inf(g.per_branch, fd) < 1e-6);
}

TEST_CASE("branch-set aggregation equals the derivative of a shared scalar") {
  const Instance inst = random_instance(31, 7, 4, 1, 80);
  const GradientReport g = full_gradient(inst.tree, inst.model, inst.data, serial_backend());
  const std::vector<int> set{0, 3, 7, 9};
  const double aggregated = aggregate_branches(g.per_branch, set);
  double sum = 0.0;
  for (int b : set) sum += g.per_branch[b];
  CHECK(aggregated == sum);

  // d/dk log L(t_b * (1 + k)) at k = 0, divided by nothing: each branch
  // contributes t_b * dl/dt_b, so compare against that weighted sum.
  const double h = 1e-6;
  auto shifted = [&](double k) {
    Phylogeny t = inst.tree;
    std::vector<double> s(t.branch_count(), 1.0);
    for (int b : set) s[b] = 1.0 + k;
    t.set_rate_scalars(s);
    return oracle::log_likelihood(t, inst.model, inst.data);
  };
  const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
  double weighted = 0.0;
  for (int b : set) weighted += g.per_branch[b] * inst.tree.branch_lengths()[b];
  CHECK(rel(weighted, fd) < 1e-6);

  // With all listed branches equal, the shared-length derivative is the plain sum.
  Phylogeny clock = inst.tree;
  for (int b : set) clock.set_branch_length(b, 0.2);
  const GradientReport gc = full_gradient(clock, inst.model, inst.data, serial_backend());
  auto shared = [&](double v) {
    Phylogeny t = clock;
    for (int b : set) t.set_branch_length(b, v);
    return oracle::log_likelihood(t, inst.model, inst.data);
  };
  CHECK(rel(aggregate_branches(gc.per_branch, set), (shared(0.2 + h) - shared(0.2 - h)) / (2 * h)) <
        1e-6);
  CHECK_THROWS_AS(aggregate_branches(g.per_branch, std::vector<int>{99}), ValidationError);
}

TEST_CASE("node invariance across every node") {
  const Instance inst = random_instance(41, 9, 4, 4, 50);
  LikelihoodEngine engine(inst.tree, inst.model, inst.data, serial_backend());
  engine.update_transition_matrices();
  engine.postorder_traverse();
  engine.log_likelihood();
  engine.preorder_traverse();
  const auto root_ll = engine.pattern_log_likelihoods();
  for (int node = 0; node < inst.tree.root(); ++node) {
    for (int c = 0; c < inst.data.patterns; ++c) {
      CHECK(std::abs(std::expm1(engine.node_log_likelihood(node, c) - root_ll[c])) < 1e-10);
    }
  }
}

TEST_CASE("brute-force marginalization on six taxa") {
  for (int rates : {1, 2}) {
    const Instance inst = random_instance(50 + rates, 6, 4, rates, 25);
    const double ll = log_likelihood(inst.tree, inst.model, inst.data, serial_backend());
    const double bf = oracle::brute_force_log_likelihood(inst.tree, inst.model, inst.data);
    CHECK(rel(ll, bf) < 1e-10);
  }
}

TEST_CASE("rescaling on or off agrees on small trees") {
  const Instance inst = random_instance(61, 8, 61, 2, 20);
  EngineOptions off;
  off.rescaling = false;
  const GradientReport a = full_gradient(inst.tree, inst.model, inst.data, serial_backend());
  const GradientReport b = full_gradient(inst.tree, inst.model, inst.data, serial_backend(), off);
  CHECK(rel(a.log_likelihood, b.log_likelihood) < 1e-9);
  CHECK(rel_inf(a.per_branch, b.per_branch) < 1e-9);
}

TEST_CASE("rescaling keeps deep codon trees finite") {
  Rng rng(71);
  Phylogeny tree = caterpillar_tree(400, 0.5);
  const ModelInstance model = random_codon(rng, 1);
  const auto data = compress_patterns(simulate_alignment(tree, model, 10, rng));
  EngineOptions off;
  off.rescaling = false;
  const double scaled = log_likelihood(tree, model, data, serial_backend());
  CHECK(std::isfinite(scaled));
  CHECK(rel(scaled, oracle::log_likelihood(tree, model, data)) < 1e-10);
  CHECK(log_likelihood(tree, model, data, serial_backend(), off) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("compressed and raw alignments give the same gradient") {
  Rng rng(81);
  const Phylogeny tree = random_tree(6, rng);
  const ModelInstance model = random_gtr(rng, 2);
  const RawAlignment raw = simulate_alignment(tree, model, 400, rng);
  const auto packed = compress_patterns(raw);
  const auto plain = uncompressed_patterns(raw);
  CHECK(packed.patterns < plain.patterns);
  const GradientReport a = full_gradient(tree, model, packed, serial_backend());
  const GradientReport b = full_gradient(tree, model, plain, serial_backend());
  CHECK(rel(a.log_likelihood, b.log_likelihood) < 1e-10);
  CHECK(rel_inf(a.per_branch, b.per_branch) < 1e-10);
}

TEST_CASE("padded and unpadded codon paths agree") {
  const Instance inst = random_instance(91, 6, 61, 2, 30);
  EngineOptions unpadded;
  unpadded.pad_states = false;
  const GradientReport a = full_gradient(inst.tree, inst.model, inst.data, serial_backend());
  const GradientReport b =
      full_gradient(inst.tree, inst.model, inst.data, serial_backend(), unpadded);
  CHECK(rel(a.log_likelihood, b.log_likelihood) <= 1e-12);
  CHECK(rel_inf(a.per_branch, b.per_branch) <= 1e-12);
}

TEST_CASE("reduction: single column, plain sums and serial agreement") {
  const Instance one = random_instance(5, 4, 4, 1, 1);
  EngineOptions keep;
  keep.retain_columns = true;
  const GradientReport g1 = full_gradient(one.tree, one.model, one.data, serial_backend(), keep);
  REQUIRE(g1.patterns == 1);
  for (int b = 0; b < one.tree.branch_count(); ++b) {
    CHECK(g1.per_branch[b] == one.data.weights[0] * g1.column(b, 0));
  }

  const Instance many = random_instance(6, 6, 4, 2, 900);
  const GradientReport g = full_gradient(many.tree, many.model, many.data, serial_backend(), keep);
  for (int b = 0; b < many.tree.branch_count(); ++b) {
    double serial = 0.0;
    for (int c = 0; c < g.patterns; ++c) serial += many.data.weights[c] * g.column(b, c);
    CHECK(rel(g.per_branch[b], serial) < 1e-12);
  }
}

TEST_CASE("steps out of order raise sequencing errors") {
  const Instance inst = random_instance(7, 5, 4, 1, 10);
  LikelihoodEngine engine(inst.tree, inst.model, inst.data, serial_backend());
  CHECK_THROWS_AS(engine.postorder_traverse(), SequencingError);
  engine.update_transition_matrices();
  CHECK_THROWS_AS(engine.preorder_traverse(), SequencingError);
  CHECK_THROWS_AS(engine.gradient_columns(), SequencingError);
  // The root needs both children first.
  CHECK_THROWS_AS(engine.postorder_node(inst.tree.root()), SequencingError);
  engine.postorder_traverse();
  // A tip before its parent has its pre-order partial.
  const int deep = inst.tree.children(inst.tree.root() - 1)[0];
  if (inst.tree.parent(deep) != inst.tree.root()) {
    CHECK_THROWS_AS(engine.preorder_node(deep), SequencingError);
  }
  CHECK_THROWS_AS(engine.reduce_columns(), SequencingError);
  engine.preorder_traverse();
  engine.gradient_columns();
  CHECK(engine.reduce_columns().size() == static_cast<std::size_t>(inst.tree.branch_count()));
  engine.set_tree_lengths(inst.tree.branch_lengths());
  CHECK_THROWS_AS(engine.postorder_traverse(), SequencingError);
}

TEST_CASE("many rate categories are processed in chunks") {
  // More categories than a nucleotide block has threads (4 x 16).
  Rng rng(9);
  const Phylogeny tree = random_tree(4, rng);
  ModelConfig cfg = random_gtr_config(rng, GammaConfig{0.7, 70});
  const ModelInstance model = build_model(cfg);
  const auto data = compress_patterns(simulate_alignment(tree, model, 20, rng));
  const GradientReport g = full_gradient(tree, model, data, serial_backend());
  const auto quad = oracle::quadratic_gradient(tree, model, data);
  CHECK(rel_inf(g.per_branch, quad.per_branch) < 1e-8);
}

TEST_CASE("mismatched inputs are rejected") {
  const Phylogeny tree = parse_newick("((A:0.1,B:0.1):0.1,C:0.1);");
  const auto data = nucleotide_data(parse_newick("(A:0.1,B:0.1);"), ">A\nA\n>B\nA\n");
  CHECK_THROWS_AS(LikelihoodEngine(tree, jc_model(), data, serial_backend()), ValidationError);
  Rng rng(1);
  const auto data3 = nucleotide_data(tree, ">A\nA\n>B\nA\n>C\nA\n");
  CHECK_THROWS_AS(LikelihoodEngine(tree, random_codon(rng, 1), data3, serial_backend()),
                  ValidationError);
}

TEST_CASE("timings cover every stage of the pipeline") {
  const Instance nuc = random_instance(11, 6, 4, 2, 50);
  const GradientReport g = full_gradient(nuc.tree, nuc.model, nuc.data, serial_backend());
  std::vector<std::string> names;
  for (const auto& t : g.timings) names.push_back(t.name);
  CHECK(std::find(names.begin(), names.end(), "matrixTranspose") == names.end());
  CHECK(std::find(names.begin(), names.end(), "preOrderPartials") != names.end());

  const Instance cod = random_instance(12, 6, 61, 1, 10);
  const GradientReport gc = full_gradient(cod.tree, cod.model, cod.data, serial_backend());
  for (const char* k : {"postOrderPartials", "preOrderPartials", "gradient", "matrixTranspose",
                        "nodeSiteReduction"}) {
    const auto it = std::find_if(gc.timings.begin(), gc.timings.end(),
                                 [&](const KernelTiming& t) { return t.name == k; });
    REQUIRE(it != gc.timings.end());
    CHECK(it->calls > 0);
  }
  const auto post = std::find_if(gc.timings.begin(), gc.timings.end(),
                                 [](const KernelTiming& t) { return t.name == "postOrderPartials"; });
  CHECK(post->calls == static_cast<std::uint64_t>(cod.tree.tip_count() - 1));
}

}
