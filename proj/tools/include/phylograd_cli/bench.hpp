#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "phylograd/alignment.hpp"
#include "phylograd/backend.hpp"
#include "phylograd/model.hpp"
#include "phylograd/tree.hpp"

namespace phylograd::bench {

// Simulated tree, model and alignment with exactly `columns` patterns of
// weight one (no compression, so C is what the caller asked for).
struct Fixture {
  Phylogeny tree;
  ModelInstance model;
  PatternizedAlignment data;
};

Fixture make_fixture(int tips, int columns, int states, int rates, std::uint64_t seed);

struct Measurement {
  std::uint64_t median_ns = 0;  // per iteration
  std::uint64_t total_ns = 0;
  int iterations = 0;
  std::vector<KernelTiming> kernels;  // summed over iterations
};

Measurement time_full_gradient(const Fixture& fixture, Backend& backend, int iterations);
Measurement time_quadratic_oracle(const Fixture& fixture, int iterations);

// Least-squares slope of log(y) against log(x).
double fit_exponent(std::span<const double> x, std::span<const double> y);

struct Row {
  int tips = 0;
  int columns = 0;
  int states = 0;
  std::string backend;
  int workers = 1;
  std::string kernel;
  std::uint64_t ns_total = 0;
  std::uint64_t calls = 0;
};

// One row per kernel plus a "fullGradient" row holding the whole-call time.
std::vector<Row> rows_for(const Fixture& fixture, const BackendConfig& config,
                          const Measurement& m, const std::string& total_name);

void write_csv(std::ostream& out, const std::vector<Row>& rows);

// {"kernels":[{"name", "calls", "nsPerCall", "percent"}]}
std::string timing_json(const std::vector<KernelTiming>& kernels);

}  // namespace phylograd::bench
