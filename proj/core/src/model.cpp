#include "phylograd/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/special_functions/gamma.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "phylograd/error.hpp"

namespace phylograd {
namespace {

Eigen::VectorXd checked_frequencies(std::span<const double> freqs, bool allow_zero) {
  double sum = 0.0;
  for (double f : freqs) {
    if (!std::isfinite(f) || f < 0.0 || (!allow_zero && f == 0.0)) {
      throw ParameterDomainError("state frequencies must be positive and finite");
    }
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("state frequencies sum to " + std::to_string(sum) + ", expected 1");
  }
  Eigen::VectorXd pi(static_cast<Eigen::Index>(freqs.size()));
  for (std::size_t i = 0; i < freqs.size(); ++i) pi[static_cast<Eigen::Index>(i)] = freqs[i] / sum;
  return pi;
}

// Sets diagonals so rows sum to zero, then scales to mean rate one.
void finish_generator(Eigen::MatrixXd& q, const Eigen::VectorXd& pi) {
  const Eigen::Index n = q.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    q(i, i) = 0.0;
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) off += q(i, j);
    }
    q(i, i) = -off;
  }
  double mu = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) mu -= pi[i] * q(i, i);
  if (!(mu > 0.0)) throw ValidationError("generator has zero expected substitution rate");
  q /= mu;
}

bool detailed_balance(const Eigen::MatrixXd& q, const Eigen::VectorXd& pi) {
  const Eigen::Index n = q.rows();
  const double scale = q.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pi[i] <= 0.0) return false;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(pi[i] * q(i, j) - pi[j] * q(j, i)) > 1e-12 * scale) return false;
    }
  }
  return true;
}

bool is_transition(int a, int b) {
  // ACGT indices: A<->G and C<->T.
  return (a == 0 && b == 2) || (a == 2 && b == 0) || (a == 1 && b == 3) || (a == 3 && b == 1);
}

void check_length(double rate, double length) {
  if (!(length >= 0.0) || !std::isfinite(length)) {
    throw ParameterDomainError("branch length must be finite and non-negative, got " +
                               std::to_string(length));
  }
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw ParameterDomainError("category rate must be positive, got " + std::to_string(rate));
  }
}

}  // namespace

RateMatrix build_gtr(std::span<const double> exchangeabilities,
                     std::span<const double> frequencies) {
  if (exchangeabilities.size() != 6) {
    throw ValidationError("GTR needs 6 exchangeabilities, got " +
                          std::to_string(exchangeabilities.size()));
  }
  if (frequencies.size() != 4) {
    throw ValidationError("GTR needs 4 frequencies, got " + std::to_string(frequencies.size()));
  }
  for (double x : exchangeabilities) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw ParameterDomainError("GTR exchangeabilities must be positive");
    }
  }
  RateMatrix m;
  m.state_count = 4;
  m.stationary = checked_frequencies(frequencies, false);
  m.generator = Eigen::MatrixXd::Zero(4, 4);
  int k = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j, ++k) {
      m.generator(i, j) = exchangeabilities[k] * m.stationary[j];
      m.generator(j, i) = exchangeabilities[k] * m.stationary[i];
    }
  }
  finish_generator(m.generator, m.stationary);
  m.reversible = true;
  return m;
}

RateMatrix build_codon_m0(const CodonModelParams& params) {
  if (!(params.kappa > 0.0) || !(params.omega > 0.0)) {
    throw ParameterDomainError("kappa and omega must be positive");
  }
  const GeneticCode& code = *params.code;
  const int n = code.sense_count();

  std::vector<double> freqs;
  if (static_cast<int>(params.codon_frequencies.size()) == n) {
    freqs = params.codon_frequencies;
  } else if (params.codon_frequencies.size() == 64) {
    for (int c = 0; c < 64; ++c) {
      if (code.is_stop(c)) {
        if (params.codon_frequencies[c] != 0.0) {
          throw ValidationError("stop codon " + GeneticCode::codon_string(c) +
                                " has nonzero frequency under the " + code.name() + " code");
        }
      } else {
        freqs.push_back(params.codon_frequencies[c]);
      }
    }
  } else {
    throw ValidationError("expected " + std::to_string(n) + " codon frequencies, got " +
                          std::to_string(params.codon_frequencies.size()));
  }

  RateMatrix m;
  m.state_count = n;
  m.stationary = checked_frequencies(freqs, true);
  m.generator = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int ci = code.codon_of_sense(i);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int cj = code.codon_of_sense(j);
      int diffs = 0;
      int from = 0;
      int to = 0;
      for (int pos = 0; pos < 3; ++pos) {
        const int shift = 2 * (2 - pos);
        const int a = (ci >> shift) & 3;
        const int b = (cj >> shift) & 3;
        if (a != b) {
          ++diffs;
          from = a;
          to = b;
        }
      }
      if (diffs != 1) continue;
      double rate = m.stationary[j];
      if (is_transition(from, to)) rate *= params.kappa;
      if (code.amino_acid(ci) != code.amino_acid(cj)) rate *= params.omega;
      m.generator(i, j) = rate;
    }
  }
  finish_generator(m.generator, m.stationary);
  m.reversible = true;
  return m;
}

RateMatrix build_from_generator(const Eigen::MatrixXd& generator,
                                const Eigen::VectorXd& stationary) {
  if (generator.rows() != generator.cols() || generator.rows() < 2) {
    throw ValidationError("generator must be square with at least 2 states");
  }
  if (stationary.size() != generator.rows()) {
    throw ValidationError("stationary distribution length does not match generator");
  }
  for (Eigen::Index i = 0; i < generator.rows(); ++i) {
    for (Eigen::Index j = 0; j < generator.cols(); ++j) {
      if (i != j && !(generator(i, j) >= 0.0)) {
        throw ParameterDomainError("off-diagonal generator entries must be non-negative");
      }
    }
  }
  RateMatrix m;
  m.state_count = static_cast<int>(generator.rows());
  m.stationary = checked_frequencies(
      std::span<const double>(stationary.data(), static_cast<std::size_t>(stationary.size())), true);
  m.generator = generator;
  finish_generator(m.generator, m.stationary);
  m.reversible = detailed_balance(m.generator, m.stationary);
  return m;
}

EigenSystem decompose(const RateMatrix& matrix) {
  EigenSystem eig;
  eig.generator = matrix.generator;
  const Eigen::Index n = matrix.generator.rows();

  if (matrix.reversible && (matrix.stationary.array() > 0.0).all()) {
    // B = D Q D^{-1} with D = diag(sqrt(pi)) is symmetric under detailed balance.
    const Eigen::VectorXd root = matrix.stationary.array().sqrt();
    Eigen::MatrixXd sym(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        sym(i, j) = root[i] * matrix.generator(i, j) / root[j];
      }
    }
    sym = 0.5 * (sym + sym.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() == Eigen::Success) {
      eig.eigenvalues = solver.eigenvalues();
      eig.right_vectors = root.cwiseInverse().asDiagonal() * solver.eigenvectors();
      eig.inverse_right_vectors = solver.eigenvectors().transpose() * root.asDiagonal();
    }
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix.generator);
    if (solver.info() == Eigen::Success &&
        solver.eigenvalues().imag().cwiseAbs().maxCoeff() == 0.0) {
      const Eigen::MatrixXd right = solver.eigenvectors().real();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(right);
      if (lu.isInvertible()) {
        eig.eigenvalues = solver.eigenvalues().real();
        eig.right_vectors = right;
        eig.inverse_right_vectors = lu.inverse();
      }
    }
  }

  if (eig.eigenvalues.size() == n) {
    const Eigen::MatrixXd rebuilt =
        eig.right_vectors * eig.eigenvalues.asDiagonal() * eig.inverse_right_vectors;
    eig.reconstruction_error = (rebuilt - matrix.generator).cwiseAbs().maxCoeff();
  } else {
    eig.reconstruction_error = INFINITY;
  }
  eig.uses_pade = !(eig.reconstruction_error <= 1e-7);
  return eig;
}

RateCategories single_rate() { return RateCategories{{1.0}, {1.0}}; }

RateCategories discrete_gamma(double alpha, int count) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ParameterDomainError("gamma shape must be positive, got " + std::to_string(alpha));
  }
  if (count < 1) {
    throw ParameterDomainError("rate category count must be >= 1, got " + std::to_string(count));
  }
  if (count == 1) return single_rate();

  namespace bm = boost::math;
  // Category k covers the k-th equal-probability bin of Gamma(alpha, rate alpha);
  // its rate is the conditional mean count * E[X; bin], which uses the
  // incomplete gamma of shape alpha + 1.
  std::vector<double> cuts(static_cast<std::size_t>(count) + 1);
  cuts.front() = 0.0;
  cuts.back() = INFINITY;
  for (int k = 1; k < count; ++k) {
    cuts[k] = bm::gamma_p_inv(alpha, static_cast<double>(k) / count) / alpha;
  }
  RateCategories cats;
  cats.rates.resize(count);
  cats.weights.assign(count, 1.0 / count);
  double prev = 0.0;
  for (int k = 0; k < count; ++k) {
    const double upper = (k + 1 == count) ? 1.0 : bm::gamma_p(alpha + 1.0, alpha * cuts[k + 1]);
    cats.rates[k] = count * (upper - prev);
    prev = upper;
  }
  const double mean = std::accumulate(cats.rates.begin(), cats.rates.end(), 0.0) / count;
  for (double& r : cats.rates) r /= mean;
  return cats;
}

Eigen::MatrixXd transition_matrix(const EigenSystem& eig, double rate, double length) {
  check_length(rate, length);
  const Eigen::Index n = eig.generator.rows();
  if (length == 0.0) return Eigen::MatrixXd::Identity(n, n);
  const double t = rate * length;
  if (eig.uses_pade) return (eig.generator * t).exp();
  const Eigen::VectorXd e = (eig.eigenvalues * t).array().exp();
  return eig.right_vectors * e.asDiagonal() * eig.inverse_right_vectors;
}

Eigen::MatrixXd transition_derivative(const EigenSystem& eig, double rate, double length) {
  check_length(rate, length);
  if (length == 0.0) return rate * eig.generator;
  const double t = rate * length;
  if (eig.uses_pade) return rate * eig.generator * (eig.generator * t).exp();
  const Eigen::VectorXd e =
      rate * eig.eigenvalues.array() * (eig.eigenvalues * t).array().exp();
  return eig.right_vectors * e.asDiagonal() * eig.inverse_right_vectors;
}

int padded_state_count(int states) {
  if (states <= 4) return states;
  return (states + 15) / 16 * 16;
}

TransitionMatrixSet::TransitionMatrixSet(int states, int padded_states, int branches, int rates)
    : states_(states),
      padded_(padded_states),
      branches_(branches),
      rates_(rates),
      data_(static_cast<std::size_t>(branches) * rates * padded_states * padded_states, 0.0) {}

std::span<double> TransitionMatrixSet::matrix(int branch, int rate) {
  return std::span<double>(data_).subspan(
      (static_cast<std::size_t>(branch) * rates_ + rate) * matrix_size(), matrix_size());
}

std::span<const double> TransitionMatrixSet::matrix(int branch, int rate) const {
  return std::span<const double>(data_).subspan(
      (static_cast<std::size_t>(branch) * rates_ + rate) * matrix_size(), matrix_size());
}

void store_padded(const Eigen::MatrixXd& dense, int padded_states, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const auto n = static_cast<int>(dense.rows());
  for (int t = 0; t < n; ++t) {
    for (int s = 0; s < n; ++s) {
      out[static_cast<std::size_t>(t) * padded_states + s] = dense(s, t);
    }
  }
}

ModelInstance make_model(RateMatrix matrix, RateCategories categories) {
  ModelInstance model;
  model.eigen = decompose(matrix);
  model.matrix = std::move(matrix);
  model.categories = std::move(categories);
  return model;
}

}  // namespace phylograd
