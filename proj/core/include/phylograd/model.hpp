#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "phylograd/genetic_code.hpp"

namespace phylograd {

// CTMC generator Q (row s, column t = instantaneous rate s -> t) and the
// root distribution. Constructors normalize to one expected substitution
// per unit time under `stationary`.
struct RateMatrix {
  int state_count = 0;
  Eigen::MatrixXd generator;
  Eigen::VectorXd stationary;
  bool reversible = false;
};

// Q = right_vectors * diag(eigenvalues) * inverse_right_vectors. When the
// decomposition is unreliable `uses_pade` is set and exponentials go through
// scaling-and-squaring on `generator` instead.
struct EigenSystem {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd right_vectors;
  Eigen::MatrixXd inverse_right_vectors;
  Eigen::MatrixXd generator;
  bool uses_pade = false;
  double reconstruction_error = 0.0;
};

struct RateCategories {
  std::vector<double> rates;
  std::vector<double> weights;

  int count() const { return static_cast<int>(rates.size()); }
};

struct CodonModelParams {
  double kappa = 1.0;
  double omega = 1.0;
  // One entry per sense codon of `code` (61 universal, 60 vertebrate-mito),
  // or 64 entries in full codon order with zeros at the stops.
  std::vector<double> codon_frequencies;
  const GeneticCode* code = &GeneticCode::universal();
};

// Exchangeabilities in AC, AG, AT, CG, CT, GT order; frequencies A, C, G, T.
RateMatrix build_gtr(std::span<const double> exchangeabilities,
                     std::span<const double> frequencies);

RateMatrix build_codon_m0(const CodonModelParams& params);

// Generic entry point for user-supplied generators (e.g. large composite
// state spaces). Rows are re-zeroed and the matrix is mean-one normalized.
RateMatrix build_from_generator(const Eigen::MatrixXd& generator,
                                const Eigen::VectorXd& stationary);

EigenSystem decompose(const RateMatrix& matrix);

// Equal-weight discrete gamma with mean-of-bin category rates, mean one.
RateCategories discrete_gamma(double alpha, int count);
RateCategories single_rate();

// exp(rate * length * Q).
Eigen::MatrixXd transition_matrix(const EigenSystem& eig, double rate, double length);
// d/d(length) exp(rate * length * Q) = rate * Q * exp(rate * length * Q).
Eigen::MatrixXd transition_derivative(const EigenSystem& eig, double rate, double length);

// Smallest multiple of 16 >= S for S > 4, otherwise S.
int padded_state_count(int states);

// P^{(r)}(b_i) for every branch and rate category, each padded to
// padded_states x padded_states and flattened column-major: entry (s, t)
// lives at t * padded_states + s. Padded rows and columns are exactly zero.
class TransitionMatrixSet {
 public:
  TransitionMatrixSet() = default;
  TransitionMatrixSet(int states, int padded_states, int branches, int rates);

  int states() const { return states_; }
  int padded_states() const { return padded_; }
  int branch_count() const { return branches_; }
  int rate_count() const { return rates_; }
  std::size_t matrix_size() const { return static_cast<std::size_t>(padded_) * padded_; }

  std::span<double> matrix(int branch, int rate);
  std::span<const double> matrix(int branch, int rate) const;
  double at(int branch, int rate, int from, int to) const {
    return matrix(branch, rate)[static_cast<std::size_t>(to) * padded_ + from];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

 private:
  int states_ = 0;
  int padded_ = 0;
  int branches_ = 0;
  int rates_ = 0;
  std::vector<double> data_;
};

// Fills one padded column-major slab from a dense S x S matrix.
void store_padded(const Eigen::MatrixXd& dense, int padded_states, std::span<double> out);

// Everything the likelihood engine needs about the substitution process.
struct ModelInstance {
  RateMatrix matrix;
  EigenSystem eigen;
  RateCategories categories;

  int states() const { return matrix.state_count; }
};

ModelInstance make_model(RateMatrix matrix, RateCategories categories);

}  // namespace phylograd
