#include "phylograd/tree.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

#include "phylograd/error.hpp"

namespace phylograd {

Phylogeny::Phylogeny(std::vector<std::string> tip_names, std::vector<std::array<int, 2>> children,
                     std::vector<double> branch_lengths)
    : tip_count_(static_cast<int>(tip_names.size())),
      tip_names_(std::move(tip_names)),
      children_(std::move(children)) {
  if (tip_count_ < 2) throw ValidationError("a tree needs at least 2 tips");
  if (static_cast<int>(children_.size()) != tip_count_ - 1) {
    throw ValidationError("a bifurcating tree with N tips has N-1 internal nodes");
  }
  parent_.assign(static_cast<std::size_t>(node_count()), -1);
  for (int k = 0; k < tip_count_ - 1; ++k) {
    const int node = tip_count_ + k;
    for (int child : children_[k]) {
      if (child < 0 || child >= node) {
        throw ValidationError("node " + std::to_string(node + 1) + " has child " +
                              std::to_string(child + 1) + " violating post-order numbering");
      }
      if (parent_[child] != -1) {
        throw ValidationError("node " + std::to_string(child + 1) + " has two parents");
      }
      parent_[child] = node;
    }
  }
  for (int i = 0; i < root(); ++i) {
    if (parent_[i] == -1) throw ValidationError("node " + std::to_string(i + 1) + " is detached");
  }
  std::set<std::string> seen;
  for (const auto& name : tip_names_) {
    if (!seen.insert(name).second) throw ValidationError("duplicate tip name '" + name + "'");
  }
  scalars_.assign(static_cast<std::size_t>(branch_count()), 1.0);
  set_branch_lengths(branch_lengths);
}

int Phylogeny::sibling(int node) const {
  const auto& kids = children(parent_[node]);
  return kids[0] == node ? kids[1] : kids[0];
}

int Phylogeny::tip_index(std::string_view name) const {
  for (int i = 0; i < tip_count_; ++i) {
    if (tip_names_[i] == name) return i;
  }
  return -1;
}

void Phylogeny::set_branch_lengths(std::span<const double> lengths) {
  if (static_cast<int>(lengths.size()) != branch_count()) {
    throw ValidationError("expected " + std::to_string(branch_count()) + " branch lengths, got " +
                          std::to_string(lengths.size()));
  }
  for (double b : lengths) {
    if (!(b >= 0.0) || !std::isfinite(b)) {
      throw ParameterDomainError("branch lengths must be finite and non-negative");
    }
  }
  lengths_.assign(lengths.begin(), lengths.end());
}

void Phylogeny::set_branch_length(int branch, double length) {
  if (!(length >= 0.0) || !std::isfinite(length)) {
    throw ParameterDomainError("branch lengths must be finite and non-negative");
  }
  lengths_.at(static_cast<std::size_t>(branch)) = length;
}

void Phylogeny::set_rate_scalars(std::span<const double> scalars) {
  if (static_cast<int>(scalars.size()) != branch_count()) {
    throw ValidationError("expected one rate scalar per branch");
  }
  for (double s : scalars) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ParameterDomainError("rate scalars must be positive");
  }
  scalars_.assign(scalars.begin(), scalars.end());
}

std::vector<double> Phylogeny::effective_lengths() const {
  std::vector<double> out(lengths_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lengths_[i] * scalars_[i];
  return out;
}

std::vector<int> Phylogeny::postorder_internals() const {
  std::vector<int> order;
  for (int node = tip_count_; node < node_count(); ++node) order.push_back(node);
  return order;
}

std::vector<int> Phylogeny::preorder_nodes() const {
  std::vector<int> order;
  for (int node = root() - 1; node >= 0; --node) order.push_back(node);
  return order;
}

// ---------------------------------------------------------------------------
// Newick

namespace {

struct RawNode {
  std::string name;
  double length = 0.0;
  bool has_length = false;
  std::size_t offset = 0;
  std::vector<std::unique_ptr<RawNode>> kids;
};

class NewickReader {
 public:
  explicit NewickReader(std::string_view text) : text_(text) {}

  std::unique_ptr<RawNode> read() {
    skip_space();
    auto root = subtree();
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != ';') fail("expected ';' after the root");
    ++pos_;
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters after ';'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::unique_ptr<RawNode> subtree() {
    auto node = std::make_unique<RawNode>();
    node->offset = pos_;
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      const std::size_t open = pos_;
      ++pos_;
      node->kids.push_back(subtree());
      skip_space();
      while (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        node->kids.push_back(subtree());
        skip_space();
      }
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("unbalanced parentheses: missing ')'");
      if (node->kids.size() != 2) {
        throw ParseError(open, "node with " + std::to_string(node->kids.size()) +
                                   " children; only bifurcating trees are supported and "
                                   "polytomies are not resolved into zero-length branches "
                                   "automatically");
      }
      ++pos_;
    }
    skip_space();
    node->name = label();
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      skip_space();
      node->length = number();
      node->has_length = true;
    }
    if (node->kids.empty() && node->name.empty()) fail("tip without a name");
    return node;
  }

  std::string label() {
    if (pos_ < text_.size() && text_[pos_] == '\'') {
      ++pos_;
      std::string out;
      while (true) {
        if (pos_ >= text_.size()) fail("unterminated quoted label");
        if (text_[pos_] == '\'') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '\'') {
            out.push_back('\'');
            pos_ += 2;
            continue;
          }
          ++pos_;
          return out;
        }
        out.push_back(text_[pos_++]);
      }
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' ||
          std::isspace(static_cast<unsigned char>(c))) {
        break;
      }
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  double number() {
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) fail("expected a branch length");
    pos_ += static_cast<std::size_t>(ptr - first);
    if (!(value >= 0.0) || !std::isfinite(value)) fail("branch lengths must be non-negative");
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

struct Numbering {
  std::vector<std::string> names;
  std::vector<std::array<int, 2>> children;
  std::vector<double> tip_lengths;
  std::vector<double> internal_lengths;
};

// Returns the provisional id: tips >= 0 in appearance order, internals as
// -(k+1) in post-order; resolved once the tip count is known.
int assign(const RawNode& node, bool is_root, Numbering& out) {
  if (!is_root && !node.has_length) {
    throw ParseError(node.offset, "missing branch length on a non-root edge");
  }
  if (node.kids.empty()) {
    out.names.push_back(node.name);
    out.tip_lengths.push_back(node.length);
    return static_cast<int>(out.names.size()) - 1;
  }
  const int a = assign(*node.kids[0], false, out);
  const int b = assign(*node.kids[1], false, out);
  out.children.push_back({a, b});
  out.internal_lengths.push_back(node.length);
  return -static_cast<int>(out.children.size());
}

void format_subtree(const Phylogeny& tree, int node, std::ostringstream& os) {
  if (tree.is_tip(node)) {
    const std::string& name = tree.tip_names()[node];
    const bool quote = name.find_first_of("(),:; '\t\n") != std::string::npos;
    if (quote) {
      os << '\'';
      for (char c : name) {
        if (c == '\'') os << '\'';
        os << c;
      }
      os << '\'';
    } else {
      os << name;
    }
  } else {
    const auto& kids = tree.children(node);
    os << '(';
    format_subtree(tree, kids[0], os);
    os << ',';
    format_subtree(tree, kids[1], os);
    os << ')';
  }
  if (node != tree.root()) os << ':' << tree.branch_lengths()[node];
}

}  // namespace

Phylogeny parse_newick(std::string_view text) {
  NewickReader reader(text);
  const auto root = reader.read();
  if (root->kids.empty()) throw ParseError(0, "a tree needs at least 2 tips");

  Numbering num;
  assign(*root, true, num);
  const int n = static_cast<int>(num.names.size());
  auto resolve = [n](int id) { return id >= 0 ? id : n + (-id - 1); };
  for (auto& kids : num.children) {
    kids[0] = resolve(kids[0]);
    kids[1] = resolve(kids[1]);
  }
  std::vector<double> lengths(static_cast<std::size_t>(2 * n - 2));
  for (int i = 0; i < n; ++i) lengths[i] = num.tip_lengths[i];
  for (int k = 0; k + 2 < n; ++k) lengths[n + k] = num.internal_lengths[k];
  return Phylogeny(std::move(num.names), std::move(num.children), std::move(lengths));
}

std::string to_newick(const Phylogeny& tree) {
  std::ostringstream os;
  os << std::setprecision(17);
  format_subtree(tree, tree.root(), os);
  os << ';';
  return os.str();
}

}  // namespace phylograd
