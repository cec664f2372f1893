#include "phylograd/simulate.hpp"

#include <algorithm>
#include <sstream>

#include "phylograd/error.hpp"

namespace phylograd {

namespace {

std::vector<std::string> tip_names(int tips) {
  std::vector<std::string> names;
  for (int i = 0; i < tips; ++i) names.push_back("t" + std::to_string(i + 1));
  return names;
}

int draw(const std::vector<double>& cumulative, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, cumulative.back());
  const double x = u(rng);
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                   static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
}

std::vector<double> cumulate(const double* values, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += std::max(0.0, values[i]);
    out[i] = acc;
  }
  return out;
}

}  // namespace

Phylogeny random_tree(int tips, Rng& rng, double min_length, double max_length) {
  if (tips < 2) throw ValidationError("a tree needs at least 2 tips");
  std::vector<int> active(static_cast<std::size_t>(tips));
  for (int i = 0; i < tips; ++i) active[i] = i;
  std::vector<std::array<int, 2>> children;
  int next = tips;
  while (active.size() > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
    const std::size_t a = pick(rng);
    std::swap(active[a], active.back());
    const int x = active.back();
    active.pop_back();
    std::uniform_int_distribution<std::size_t> pick2(0, active.size() - 1);
    const std::size_t b = pick2(rng);
    const int y = active[b];
    children.push_back({x, y});
    active[b] = next++;
  }
  std::uniform_real_distribution<double> len(min_length, max_length);
  std::vector<double> lengths(static_cast<std::size_t>(2 * tips - 2));
  for (double& l : lengths) l = len(rng);
  return Phylogeny(tip_names(tips), std::move(children), std::move(lengths));
}

Phylogeny balanced_tree(int tips, double length) {
  if (tips < 2) throw ValidationError("a tree needs at least 2 tips");
  std::vector<int> level(static_cast<std::size_t>(tips));
  for (int i = 0; i < tips; ++i) level[i] = i;
  std::vector<std::array<int, 2>> children;
  int next = tips;
  while (level.size() > 1) {
    std::vector<int> up;
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      children.push_back({level[i], level[i + 1]});
      up.push_back(next++);
    }
    if (level.size() % 2 == 1) up.push_back(level.back());
    level = std::move(up);
  }
  return Phylogeny(tip_names(tips), std::move(children),
                   std::vector<double>(static_cast<std::size_t>(2 * tips - 2), length));
}

Phylogeny caterpillar_tree(int tips, double length) {
  if (tips < 2) throw ValidationError("a tree needs at least 2 tips");
  std::vector<std::array<int, 2>> children;
  children.push_back({0, 1});
  for (int t = 2; t < tips; ++t) children.push_back({tips + t - 2, t});
  return Phylogeny(tip_names(tips), std::move(children),
                   std::vector<double>(static_cast<std::size_t>(2 * tips - 2), length));
}

RawAlignment simulate_alignment(const Phylogeny& tree, const ModelInstance& model, int columns,
                                Rng& rng) {
  const int states = model.states();
  const int rates = model.categories.count();
  const std::vector<double> lengths = tree.effective_lengths();
  // cdf[branch][rate][from] over destination states
  std::vector<std::vector<std::vector<std::vector<double>>>> cdf(
      static_cast<std::size_t>(tree.branch_count()));
  for (int b = 0; b < tree.branch_count(); ++b) {
    cdf[b].resize(static_cast<std::size_t>(rates));
    for (int r = 0; r < rates; ++r) {
      const Eigen::MatrixXd p =
          transition_matrix(model.eigen, model.categories.rates[r], lengths[b]);
      const Eigen::MatrixXd pr = p.transpose();  // column s holds row s of P
      for (int s = 0; s < states; ++s) cdf[b][r].push_back(cumulate(pr.col(s).data(), states));
    }
  }
  const std::vector<double> root_cdf = cumulate(model.matrix.stationary.data(), states);
  const std::vector<double> rate_cdf =
      cumulate(model.categories.weights.data(), model.categories.count());

  RawAlignment out;
  out.states = states;
  out.names = tree.tip_names();
  out.rows.assign(static_cast<std::size_t>(tree.tip_count()),
                  std::vector<TipCode>(static_cast<std::size_t>(columns)));
  std::vector<int> node_state(static_cast<std::size_t>(tree.node_count()));
  for (int c = 0; c < columns; ++c) {
    const int r = draw(rate_cdf, rng);
    node_state[tree.root()] = draw(root_cdf, rng);
    for (int node : tree.preorder_nodes()) {
      node_state[node] = draw(cdf[node][r][node_state[tree.parent(node)]], rng);
    }
    for (int t = 0; t < tree.tip_count(); ++t) out.rows[t][c] = node_state[t];
  }
  return out;
}

std::string to_fasta(const RawAlignment& alignment, Alphabet alphabet, const GeneticCode& code) {
  static constexpr char kNuc[] = "ACGT";
  std::ostringstream out;
  for (int i = 0; i < alignment.sequence_count(); ++i) {
    out << '>' << alignment.names[i] << '\n';
    for (TipCode c : alignment.rows[i]) {
      if (alphabet == Alphabet::nucleotide) {
        out << (c >= 0 ? kNuc[c] : 'N');
      } else {
        out << (c >= 0 ? GeneticCode::codon_string(code.codon_of_sense(c)) : std::string("NNN"));
      }
    }
    out << '\n';
  }
  return out.str();
}

ModelConfig random_gtr_config(Rng& rng, std::optional<GammaConfig> gamma) {
  std::uniform_real_distribution<double> ex(0.5, 3.0);
  std::uniform_real_distribution<double> fr(0.15, 0.35);
  ModelConfig cfg;
  cfg.model = "gtr";
  for (int i = 0; i < 6; ++i) cfg.exchangeabilities.push_back(ex(rng));
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    cfg.frequencies.push_back(fr(rng));
    total += cfg.frequencies.back();
  }
  for (double& f : cfg.frequencies) f /= total;
  cfg.gamma = gamma;
  return cfg;
}

}  // namespace phylograd
