#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "phylograd/engine.hpp"

namespace phylograd {

// What the sampler moves (always on the log scale).
enum class Parameterization { branch_lengths, rate_scalars };

Parameterization parse_parameterization(std::string_view name);  // "lengths" | "scalars"

struct HmcConfig {
  double step_size = 0.05;
  int leapfrog_steps = 10;
  int iterations = 1000;
  // Leading iterations used to tune the step size; kept out of the chain
  // statistics. Zero disables tuning.
  int warmup = 0;
  double target_acceptance = 0.8;
  std::uint64_t seed = 1;
  // One entry per free parameter; empty means unit mass.
  std::vector<double> mass_diagonal;
  Parameterization parameterization = Parameterization::branch_lengths;

  void validate() const;
};

// Log density and gradient in sampler coordinates. Returns the log density
// and fills `grad`; may return a non-finite value.
using LogDensity = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct TrajectoryEnd {
  std::vector<double> position;
  std::vector<double> momentum;
  std::vector<double> gradient;
  double log_density = 0.0;
  bool finite = true;
};

// `steps` leapfrog updates from (x, p) with grad = grad log density at x.
TrajectoryEnd leapfrog(const LogDensity& density, std::span<const double> x,
                       std::span<const double> p, std::span<const double> grad, double log_density,
                       double step_size, int steps, std::span<const double> mass);

// Kinetic energy p' M^-1 p / 2.
double kinetic_energy(std::span<const double> p, std::span<const double> mass);

// Posterior over log branch lengths (exponential(1) prior) or log rate
// scalars (lognormal(0, 1) prior), Jacobian included. Branches whose length
// is exactly zero stay fixed, e.g. the pinned root branch of an unrooted
// analysis.
class PhyloPosterior {
 public:
  PhyloPosterior(LikelihoodEngine& engine, Parameterization parameterization);

  int dimension() const { return static_cast<int>(free_.size()); }
  const std::vector<int>& free_branches() const { return free_; }
  std::vector<double> initial_point() const;
  // Natural-scale values (lengths or scalars) for the free branches.
  std::vector<double> natural(std::span<const double> x) const;

  double operator()(std::span<const double> x, std::span<double> grad);

  std::uint64_t gradient_calls() const { return calls_; }
  std::uint64_t gradient_ns() const { return ns_; }

 private:
  LikelihoodEngine& engine_;
  Parameterization param_;
  std::vector<int> free_;
  std::vector<double> lengths_;
  std::vector<double> scalars_;
  std::uint64_t calls_ = 0;
  std::uint64_t ns_ = 0;
};

struct HmcResult {
  // Post-warmup draws on the natural scale, one row per iteration.
  std::vector<std::vector<double>> chain;
  std::vector<double> log_posterior;
  std::vector<std::uint64_t> iteration_ns;
  std::vector<int> free_branches;
  double acceptance_rate = 0.0;
  int divergences = 0;
  int warmup_divergences = 0;
  double tuned_step_size = 0.0;
  std::vector<double> ess;
  std::vector<double> posterior_mean;
  std::vector<double> posterior_sd;
  std::uint64_t gradient_calls = 0;
  std::uint64_t gradient_ns = 0;
  std::uint64_t total_ns = 0;
};

// A trajectory diverges when the Hamiltonian turns non-finite or grows by
// more than this.
inline constexpr double kDivergenceThreshold = 1000.0;

HmcResult hmc_run(const LogDensity& density, std::vector<double> x0, const HmcConfig& config,
                  std::function<std::vector<double>(std::span<const double>)> to_natural = {});

HmcResult hmc_sample(LikelihoodEngine& engine, const HmcConfig& config);

// Initial-positive-sequence effective sample size.
double effective_sample_size(std::span<const double> draws);

}  // namespace phylograd
