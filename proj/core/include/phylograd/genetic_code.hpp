#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phylograd {

// Translation table over the 64 codons in ACGT lexicographic order
// (AAA, AAC, AAG, AAT, ACA, ...). Sense codons are numbered 0..S-1 in the
// same order with stops skipped.
class GeneticCode {
 public:
  static const GeneticCode& universal();
  static const GeneticCode& vertebrate_mitochondrial();
  // "universal" | "vertebrate-mito"; throws ValidationError otherwise.
  static const GeneticCode& by_name(std::string_view name);

  const std::string& name() const { return name_; }
  int sense_count() const { return static_cast<int>(sense_to_codon_.size()); }

  // '*' for stop codons.
  char amino_acid(int codon64) const { return amino_[codon64]; }
  bool is_stop(int codon64) const { return amino_[codon64] == '*'; }

  // Sense index for a 64-codon index, or nullopt for stops.
  std::optional<int> sense_index(int codon64) const;
  int codon_of_sense(int sense) const { return sense_to_codon_[sense]; }
  char sense_amino_acid(int sense) const { return amino_[sense_to_codon_[sense]]; }

  // "ACG" -> 64-codon index; nullopt when any base is not ACGT/U.
  static std::optional<int> codon_index(std::string_view triplet);
  static std::string codon_string(int codon64);

 private:
  GeneticCode(std::string name, const std::array<char, 64>& amino);

  std::string name_;
  std::array<char, 64> amino_{};
  std::array<int, 64> codon_to_sense_{};
  std::vector<int> sense_to_codon_;
};

}  // namespace phylograd
