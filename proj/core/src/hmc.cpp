#include "phylograd/hmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "phylograd/error.hpp"

namespace phylograd {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

}  // namespace

Parameterization parse_parameterization(std::string_view name) {
  if (name == "lengths" || name == "branch-lengths") return Parameterization::branch_lengths;
  if (name == "scalars" || name == "rate-scalars") return Parameterization::rate_scalars;
  throw ValidationError("unknown parameterization '" + std::string(name) +
                        "' (expected lengths or scalars)");
}

void HmcConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw ParameterDomainError("step size must be positive");
  }
  if (leapfrog_steps < 1) throw ParameterDomainError("leapfrog steps must be positive");
  if (iterations < 1) throw ParameterDomainError("iterations must be positive");
  if (warmup < 0) throw ParameterDomainError("warmup must be non-negative");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw ParameterDomainError("target acceptance must lie in (0, 1)");
  }
  for (double m : mass_diagonal) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ParameterDomainError("masses must be positive");
  }
}

double kinetic_energy(std::span<const double> p, std::span<const double> mass) {
  double k = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) k += p[i] * p[i] / mass[i];
  return 0.5 * k;
}

TrajectoryEnd leapfrog(const LogDensity& density, std::span<const double> x,
                       std::span<const double> p, std::span<const double> grad, double log_density,
                       double step_size, int steps, std::span<const double> mass) {
  const std::size_t d = x.size();
  TrajectoryEnd end;
  end.position.assign(x.begin(), x.end());
  end.momentum.assign(p.begin(), p.end());
  end.gradient.assign(grad.begin(), grad.end());
  end.log_density = log_density;
  for (int s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < d; ++i) end.momentum[i] += 0.5 * step_size * end.gradient[i];
    for (std::size_t i = 0; i < d; ++i) end.position[i] += step_size * end.momentum[i] / mass[i];
    end.log_density = density(end.position, end.gradient);
    if (!std::isfinite(end.log_density)) {
      end.finite = false;
      return end;
    }
    for (std::size_t i = 0; i < d; ++i) end.momentum[i] += 0.5 * step_size * end.gradient[i];
  }
  return end;
}

PhyloPosterior::PhyloPosterior(LikelihoodEngine& engine, Parameterization parameterization)
    : engine_(engine), param_(parameterization) {
  const auto len = engine_.tree().branch_lengths();
  const auto sc = engine_.tree().rate_scalars();
  lengths_.assign(len.begin(), len.end());
  scalars_.assign(sc.begin(), sc.end());
  for (int b = 0; b < static_cast<int>(lengths_.size()); ++b) {
    if (lengths_[b] > 0.0) free_.push_back(b);
  }
  if (free_.empty()) throw ValidationError("no branch has a positive length to sample");
}

std::vector<double> PhyloPosterior::initial_point() const {
  std::vector<double> x;
  for (int b : free_) {
    x.push_back(std::log(param_ == Parameterization::branch_lengths ? lengths_[b] : scalars_[b]));
  }
  return x;
}

std::vector<double> PhyloPosterior::natural(std::span<const double> x) const {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return std::exp(v); });
  return out;
}

double PhyloPosterior::operator()(std::span<const double> x, std::span<double> grad) {
  const auto start = Clock::now();
  double log_prior = 0.0;
  std::vector<double> prior_grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double v = std::exp(x[k]);
    if (!std::isfinite(v) || v <= 0.0) return -std::numeric_limits<double>::infinity();
    const int b = free_[k];
    if (param_ == Parameterization::branch_lengths) {
      // exponential(1) on b, plus log-Jacobian x
      lengths_[b] = v;
      log_prior += -v + x[k];
      prior_grad[k] = -v + 1.0;
    } else {
      // lognormal(0, 1) on s with Jacobian: standard normal on x
      scalars_[b] = v;
      log_prior += -0.5 * x[k] * x[k];
      prior_grad[k] = -x[k];
    }
  }
  if (param_ == Parameterization::branch_lengths) {
    engine_.set_tree_lengths(lengths_);
  } else {
    engine_.set_rate_scalars(scalars_);
  }
  GradientReport report;
  try {
    report = engine_.full_gradient();
  } catch (const NumericalError&) {
    ++calls_;
    ns_ += elapsed_ns(start);
    return -std::numeric_limits<double>::infinity();
  }
  // dl/dx = dl/dt * t, where t = length * scalar and x = log of either factor.
  const auto effective = engine_.tree().effective_lengths();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const int b = free_[k];
    grad[k] = report.per_branch[b] * effective[b] + prior_grad[k];
  }
  ++calls_;
  ns_ += elapsed_ns(start);
  return report.log_likelihood + log_prior;
}

double effective_sample_size(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n < 4) return static_cast<double>(n);
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = draws[i] - mean;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += centered[i] * centered[i + lag];
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return static_cast<double>(n);
  // Sum consecutive autocorrelation pairs while they stay positive.
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return static_cast<double>(n) / tau;
}

HmcResult hmc_run(const LogDensity& density, std::vector<double> x0, const HmcConfig& config,
                  std::function<std::vector<double>(std::span<const double>)> to_natural) {
  config.validate();
  const std::size_t d = x0.size();
  std::vector<double> mass = config.mass_diagonal;
  if (mass.empty()) mass.assign(d, 1.0);
  if (mass.size() != d) {
    throw ValidationError("mass diagonal has " + std::to_string(mass.size()) + " entries, expected " +
                          std::to_string(d));
  }
  if (!to_natural) to_natural = [](std::span<const double> x) {
    return std::vector<double>(x.begin(), x.end());
  };

  const auto run_start = Clock::now();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<double> x = std::move(x0);
  std::vector<double> grad(d);
  double logp = density(x, grad);
  if (!std::isfinite(logp)) throw NumericalError(0, "initial point has non-finite log density");

  HmcResult out;
  double step = config.step_size;
  double log_step_avg = std::log(step);
  std::uint64_t accepted = 0;
  std::vector<double> p(d);
  const int total = config.warmup + config.iterations;
  for (int it = 0; it < total; ++it) {
    const auto iter_start = Clock::now();
    const bool warming = it < config.warmup;
    for (std::size_t i = 0; i < d; ++i) p[i] = normal(rng) * std::sqrt(mass[i]);
    const double h0 = -logp + kinetic_energy(p, mass);
    const TrajectoryEnd end = leapfrog(density, x, p, grad, logp, step, config.leapfrog_steps, mass);
    double h1 = std::numeric_limits<double>::infinity();
    if (end.finite) h1 = -end.log_density + kinetic_energy(end.momentum, mass);
    const double delta = h1 - h0;
    const bool divergent = !std::isfinite(h1) || delta > kDivergenceThreshold;
    const double accept_prob = divergent ? 0.0 : std::min(1.0, std::exp(-delta));
    const double u = uniform(rng);
    if (!divergent && u < accept_prob) {
      x = end.position;
      grad = end.gradient;
      logp = end.log_density;
      if (!warming) ++accepted;
    }
    if (warming) {
      if (divergent) ++out.warmup_divergences;
      // Robbins-Monro on log step size toward the target acceptance.
      const double gain = 1.0 / std::sqrt(static_cast<double>(it) + 10.0);
      step *= std::exp(gain * (accept_prob - config.target_acceptance));
      log_step_avg = 0.9 * log_step_avg + 0.1 * std::log(step);
      if (it + 1 == config.warmup) step = std::exp(log_step_avg);
      continue;
    }
    if (divergent) ++out.divergences;
    out.chain.push_back(to_natural(x));
    out.log_posterior.push_back(logp);
    out.iteration_ns.push_back(elapsed_ns(iter_start));
  }
  out.tuned_step_size = step;
  out.acceptance_rate = static_cast<double>(accepted) / config.iterations;

  const std::size_t n = out.chain.size();
  const std::size_t dims = n ? out.chain.front().size() : 0;
  out.posterior_mean.assign(dims, 0.0);
  out.posterior_sd.assign(dims, 0.0);
  for (std::size_t j = 0; j < dims; ++j) {
    std::vector<double> column(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = out.chain[i][j];
    const double mean = std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : column) var += (v - mean) * (v - mean);
    out.posterior_mean[j] = mean;
    out.posterior_sd[j] = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    out.ess.push_back(effective_sample_size(column));
  }
  out.total_ns = elapsed_ns(run_start);
  return out;
}

HmcResult hmc_sample(LikelihoodEngine& engine, const HmcConfig& config) {
  PhyloPosterior posterior(engine, config.parameterization);
  LogDensity density = [&posterior](std::span<const double> x, std::span<double> g) {
    return posterior(x, g);
  };
  HmcResult result = hmc_run(density, posterior.initial_point(), config,
                             [&posterior](std::span<const double> x) { return posterior.natural(x); });
  result.free_branches = posterior.free_branches();
  result.gradient_calls = posterior.gradient_calls();
  result.gradient_ns = posterior.gradient_ns();
  return result;
}

}  // namespace phylograd
