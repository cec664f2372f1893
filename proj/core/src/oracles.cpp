#include "phylograd/oracles.hpp"

#include <cmath>
#include <limits>

#include "phylograd/error.hpp"

namespace phylograd::oracle {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// States x patterns indicator matrix of a tip.
MatrixXd tip_matrix(const PatternizedAlignment& data, int tip, int states) {
  MatrixXd m = MatrixXd::Zero(states, data.patterns);
  for (int c = 0; c < data.patterns; ++c) {
    for (int s = 0; s < states; ++s) m(s, c) = data.observed(tip, c, s) ? 1.0 : 0.0;
  }
  return m;
}

struct Pruned {
  std::vector<MatrixXd> partials;  // per rate: states x patterns at the root
  VectorXd scale;                  // per pattern, shared by all rates
};

// Post-order pass. `replace` (if >= 0) substitutes derivative matrices for
// that branch. Scaling divides by the largest absolute entry.
Pruned prune(const Phylogeny& tree, const ModelInstance& model, const PatternizedAlignment& data,
             int replace) {
  const int states = model.states();
  const int rates = model.categories.count();
  const int nodes = tree.node_count();
  const std::vector<double> lengths = tree.effective_lengths();
  std::vector<std::vector<MatrixXd>> partial(static_cast<std::size_t>(nodes),
                                             std::vector<MatrixXd>(static_cast<std::size_t>(rates)));
  std::vector<VectorXd> scale(static_cast<std::size_t>(nodes), VectorXd::Zero(data.patterns));
  for (int t = 0; t < tree.tip_count(); ++t) {
    const MatrixXd m = tip_matrix(data, t, states);
    for (int r = 0; r < rates; ++r) partial[t][r] = m;
  }
  auto propagate = [&](int child, int r) {
    const double g = model.categories.rates[r];
    const MatrixXd p = child == replace ? transition_derivative(model.eigen, g, lengths[child])
                                        : transition_matrix(model.eigen, g, lengths[child]);
    return MatrixXd(p * partial[child][r]);
  };
  for (int k = tree.tip_count(); k < nodes; ++k) {
    const auto ch = tree.children(k);
    for (int r = 0; r < rates; ++r) {
      partial[k][r] = propagate(ch[0], r).cwiseProduct(propagate(ch[1], r));
    }
    VectorXd s = scale[ch[0]] + scale[ch[1]];
    for (int c = 0; c < data.patterns; ++c) {
      double m = 0.0;
      for (int r = 0; r < rates; ++r) m = std::max(m, partial[k][r].col(c).cwiseAbs().maxCoeff());
      if (m > 0.0) {
        for (int r = 0; r < rates; ++r) partial[k][r].col(c) /= m;
        s(c) += std::log(m);
      }
    }
    scale[k] = s;
  }
  return {partial[tree.root()], scale[tree.root()]};
}

VectorXd root_sums(const Pruned& pr, const ModelInstance& model) {
  VectorXd out = VectorXd::Zero(pr.scale.size());
  for (int r = 0; r < model.categories.count(); ++r) {
    out += model.categories.weights[r] * (pr.partials[r].transpose() * model.matrix.stationary);
  }
  return out;
}

}  // namespace

std::vector<double> pattern_log_likelihoods(const Phylogeny& tree, const ModelInstance& model,
                                            const PatternizedAlignment& data) {
  const Pruned pr = prune(tree, model, data, -1);
  const VectorXd sums = root_sums(pr, model);
  std::vector<double> out(static_cast<std::size_t>(data.patterns));
  for (int c = 0; c < data.patterns; ++c) {
    out[c] = sums(c) > 0.0 ? std::log(sums(c)) + pr.scale(c)
                           : -std::numeric_limits<double>::infinity();
  }
  return out;
}

double log_likelihood(const Phylogeny& tree, const ModelInstance& model,
                      const PatternizedAlignment& data) {
  const std::vector<double> ll = pattern_log_likelihoods(tree, model, data);
  double total = 0.0;
  for (int c = 0; c < data.patterns; ++c) total += data.weights[c] * ll[c];
  return total;
}

double brute_force_log_likelihood(const Phylogeny& tree, const ModelInstance& model,
                                  const PatternizedAlignment& data) {
  const int states = model.states();
  const int tips = tree.tip_count();
  const int internals = tips - 1;
  const std::vector<double> lengths = tree.effective_lengths();
  double assignments = std::pow(static_cast<double>(states), internals);
  if (assignments > 5e6) throw ValidationError("tree too large for brute-force marginalization");
  double total = 0.0;
  for (int c = 0; c < data.patterns; ++c) {
    double site = 0.0;
    for (int r = 0; r < model.categories.count(); ++r) {
      const double g = model.categories.rates[r];
      std::vector<MatrixXd> p;
      for (int b = 0; b < tree.branch_count(); ++b) {
        p.push_back(transition_matrix(model.eigen, g, lengths[b]));
      }
      std::vector<int> assign(static_cast<std::size_t>(internals), 0);
      double sum = 0.0;
      for (long long idx = 0; idx < static_cast<long long>(assignments); ++idx) {
        long long rest = idx;
        for (int k = 0; k < internals; ++k) {
          assign[k] = static_cast<int>(rest % states);
          rest /= states;
        }
        auto state_of = [&](int node) { return assign[node - tips]; };
        double prob = model.matrix.stationary(state_of(tree.root()));
        for (int k = tips; k < tree.node_count(); ++k) {
          for (int child : tree.children(k)) {
            if (tree.is_tip(child)) {
              double tip_sum = 0.0;
              for (int s = 0; s < states; ++s) {
                if (data.observed(child, c, s)) tip_sum += p[child](state_of(k), s);
              }
              prob *= tip_sum;
            } else {
              prob *= p[child](state_of(k), state_of(child));
            }
          }
        }
        sum += prob;
      }
      site += model.categories.weights[r] * sum;
    }
    total += data.weights[c] * std::log(site);
  }
  return total;
}

OracleGradient quadratic_gradient(const Phylogeny& tree, const ModelInstance& model,
                                  const PatternizedAlignment& data) {
  const Pruned base = prune(tree, model, data, -1);
  const VectorXd base_sums = root_sums(base, model);
  OracleGradient out;
  out.per_branch.assign(static_cast<std::size_t>(tree.branch_count()), 0.0);
  out.per_column.assign(static_cast<std::size_t>(tree.branch_count()) * data.patterns, 0.0);
  for (int c = 0; c < data.patterns; ++c) {
    if (!(base_sums(c) > 0.0)) {
      throw NumericalError(static_cast<std::size_t>(c), "pattern " + std::to_string(c) +
                                                            " has zero likelihood");
    }
    out.log_likelihood += data.weights[c] * (std::log(base_sums(c)) + base.scale(c));
  }
  for (int b = 0; b < tree.branch_count(); ++b) {
    const Pruned d = prune(tree, model, data, b);
    const VectorXd d_sums = root_sums(d, model);
    double total = 0.0;
    for (int c = 0; c < data.patterns; ++c) {
      const double v = d_sums(c) / base_sums(c) * std::exp(d.scale(c) - base.scale(c));
      out.per_column[static_cast<std::size_t>(b) * data.patterns + c] = v;
      total += data.weights[c] * v;
    }
    out.per_branch[b] = total;
  }
  return out;
}

std::vector<double> finite_difference_gradient(const Phylogeny& tree, const ModelInstance& model,
                                               const PatternizedAlignment& data, double h) {
  Phylogeny work = tree;
  const std::vector<double> base = tree.effective_lengths();
  const std::vector<double> ones(base.size(), 1.0);
  work.set_rate_scalars(ones);
  work.set_branch_lengths(base);
  std::vector<double> out(base.size());
  auto eval = [&](int b, double t) {
    work.set_branch_length(b, t);
    const double v = log_likelihood(work, model, data);
    work.set_branch_length(b, base[b]);
    return v;
  };
  for (std::size_t b = 0; b < base.size(); ++b) {
    const int bi = static_cast<int>(b);
    if (base[b] >= h) {
      out[b] = (eval(bi, base[b] + h) - eval(bi, base[b] - h)) / (2.0 * h);
    } else {
      const double f0 = eval(bi, base[b]);
      out[b] = (-3.0 * f0 + 4.0 * eval(bi, base[b] + h) - eval(bi, base[b] + 2.0 * h)) / (2.0 * h);
    }
  }
  return out;
}

}  // namespace phylograd::oracle
