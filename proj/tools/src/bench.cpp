#include "phylograd_cli/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include <json.hpp>

#include "phylograd/engine.hpp"
#include "phylograd/model_config.hpp"
#include "phylograd/oracles.hpp"
#include "phylograd/simulate.hpp"

namespace phylograd::bench {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t since(Clock::time_point start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

std::uint64_t median(std::vector<std::uint64_t> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

ModelInstance fixture_model(int states, int rates, Rng& rng) {
  const std::optional<GammaConfig> gamma =
      rates > 1 ? std::optional<GammaConfig>(GammaConfig{0.5, rates}) : std::nullopt;
  if (states == 4) return build_model(random_gtr_config(rng, gamma));
  ModelConfig cfg;
  cfg.model = "codon-m0";
  cfg.kappa = 2.0;
  cfg.omega = 0.3;
  cfg.gamma = gamma;
  return build_model(cfg);
}

}  // namespace

Fixture make_fixture(int tips, int columns, int states, int rates, std::uint64_t seed) {
  Rng rng(seed);
  Phylogeny tree = random_tree(tips, rng, 0.02, 0.2);
  ModelInstance model = fixture_model(states, rates, rng);
  const RawAlignment raw = simulate_alignment(tree, model, columns, rng);
  return {std::move(tree), std::move(model), uncompressed_patterns(raw)};
}

Measurement time_full_gradient(const Fixture& fixture, Backend& backend, int iterations) {
  LikelihoodEngine engine(fixture.tree, fixture.model, fixture.data, backend);
  engine.full_gradient();  // warm caches and page in buffers
  const KernelProfile before = backend.profile();
  Measurement m;
  std::vector<std::uint64_t> each;
  for (int i = 0; i < iterations; ++i) {
    const auto start = Clock::now();
    engine.full_gradient();
    each.push_back(since(start));
  }
  m.iterations = iterations;
  m.median_ns = median(each);
  for (auto v : each) m.total_ns += v;
  m.kernels = backend.profile().since(before).snapshot();
  return m;
}

Measurement time_quadratic_oracle(const Fixture& fixture, int iterations) {
  Measurement m;
  std::vector<std::uint64_t> each;
  for (int i = 0; i < iterations; ++i) {
    const auto start = Clock::now();
    oracle::quadratic_gradient(fixture.tree, fixture.model, fixture.data);
    each.push_back(since(start));
  }
  m.iterations = iterations;
  m.median_ns = median(each);
  for (auto v : each) m.total_ns += v;
  return m;
}

double fit_exponent(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::vector<Row> rows_for(const Fixture& fixture, const BackendConfig& config,
                          const Measurement& m, const std::string& total_name) {
  const std::string kind = config.kind == BackendKind::serial ? "serial" : "parallel";
  const int workers = config.kind == BackendKind::serial ? 1 : config.workers;
  Row base{fixture.tree.tip_count(), fixture.data.patterns, fixture.model.states(), kind, workers,
           "", 0, 0};
  std::vector<Row> rows;
  for (const auto& k : m.kernels) {
    Row r = base;
    r.kernel = k.name;
    r.ns_total = k.total_ns;
    r.calls = k.calls;
    rows.push_back(r);
  }
  Row total = base;
  total.kernel = total_name;
  total.ns_total = m.total_ns;
  total.calls = static_cast<std::uint64_t>(m.iterations);
  rows.push_back(total);
  return rows;
}

void write_csv(std::ostream& out, const std::vector<Row>& rows) {
  out << "N,C,S,backend,workers,kernel,nsTotal,calls\n";
  for (const auto& r : rows) {
    out << r.tips << ',' << r.columns << ',' << r.states << ',' << r.backend << ',' << r.workers
        << ',' << r.kernel << ',' << r.ns_total << ',' << r.calls << '\n';
  }
}

std::string timing_json(const std::vector<KernelTiming>& kernels) {
  std::uint64_t total = 0;
  for (const auto& k : kernels) total += k.total_ns;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& k : kernels) {
    list.push_back({{"name", k.name},
                    {"calls", k.calls},
                    {"nsPerCall", k.calls ? static_cast<double>(k.total_ns) / k.calls : 0.0},
                    {"percent", total ? 100.0 * static_cast<double>(k.total_ns) / total : 0.0}});
  }
  return nlohmann::json{{"kernels", list}}.dump(2);
}

}  // namespace phylograd::bench
