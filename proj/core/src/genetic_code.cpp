#include "phylograd/genetic_code.hpp"

#include "phylograd/error.hpp"

namespace phylograd {
namespace {

constexpr std::string_view kBases = "ACGT";

int base_index(char c) {
  switch (c) {
    case 'A': case 'a': return 0;
    case 'C': case 'c': return 1;
    case 'G': case 'g': return 2;
    case 'T': case 't': case 'U': case 'u': return 3;
    default: return -1;
  }
}

// Amino acids in ACGT lexicographic codon order.
//                                AAA.............................................................TTT
constexpr std::string_view kUniversal =
    "KNKNTTTTRSRSIIMIQHQHPPPPRRRRLLLLEDEDAAAAGGGGVVVV*Y*YSSSS*CWCLFLF";
constexpr std::string_view kVertebrateMito =
    "KNKNTTTT*S*SMIMIQHQHPPPPRRRRLLLLEDEDAAAAGGGGVVVV*Y*YSSSSWCWCLFLF";

std::array<char, 64> to_array(std::string_view table) {
  std::array<char, 64> out{};
  for (std::size_t i = 0; i < 64; ++i) out[i] = table[i];
  return out;
}

}  // namespace

GeneticCode::GeneticCode(std::string name, const std::array<char, 64>& amino)
    : name_(std::move(name)), amino_(amino) {
  for (int c = 0; c < 64; ++c) {
    if (amino_[c] == '*') {
      codon_to_sense_[c] = -1;
    } else {
      codon_to_sense_[c] = static_cast<int>(sense_to_codon_.size());
      sense_to_codon_.push_back(c);
    }
  }
}

const GeneticCode& GeneticCode::universal() {
  static const GeneticCode code("universal", to_array(kUniversal));
  return code;
}

const GeneticCode& GeneticCode::vertebrate_mitochondrial() {
  static const GeneticCode code("vertebrate-mito", to_array(kVertebrateMito));
  return code;
}

const GeneticCode& GeneticCode::by_name(std::string_view name) {
  if (name == "universal") return universal();
  if (name == "vertebrate-mito") return vertebrate_mitochondrial();
  throw ValidationError("unknown genetic code '" + std::string(name) +
                        "' (expected universal or vertebrate-mito)");
}

std::optional<int> GeneticCode::sense_index(int codon64) const {
  const int s = codon_to_sense_[codon64];
  if (s < 0) return std::nullopt;
  return s;
}

std::optional<int> GeneticCode::codon_index(std::string_view triplet) {
  if (triplet.size() != 3) return std::nullopt;
  int idx = 0;
  for (char c : triplet) {
    const int b = base_index(c);
    if (b < 0) return std::nullopt;
    idx = idx * 4 + b;
  }
  return idx;
}

std::string GeneticCode::codon_string(int codon64) {
  std::string s(3, 'A');
  s[0] = kBases[(codon64 >> 4) & 3];
  s[1] = kBases[(codon64 >> 2) & 3];
  s[2] = kBases[codon64 & 3];
  return s;
}

}  // namespace phylograd
