#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phylograd/genetic_code.hpp"
#include "phylograd/model_config.hpp"
#include "phylograd/tree.hpp"

namespace phylograd {

// A tip observation: a state index 0..S-1, or -(k+1) referring to masks[k],
// a 0/1 vector over states (all ones for total ambiguity).
using TipCode = std::int32_t;

struct RawAlignment {
  int states = 0;
  std::vector<std::string> names;
  std::vector<std::vector<TipCode>> rows;
  std::vector<std::vector<std::uint8_t>> masks;

  int sequence_count() const { return static_cast<int>(rows.size()); }
  int column_count() const { return rows.empty() ? 0 : static_cast<int>(rows.front().size()); }
};

struct PatternizedAlignment {
  int states = 0;
  int tips = 0;
  int patterns = 0;
  std::vector<int> weights;
  // Tip-major: codes[tip * patterns + pattern].
  std::vector<TipCode> codes;
  std::vector<std::vector<std::uint8_t>> masks;

  TipCode code(int tip, int pattern) const {
    return codes[static_cast<std::size_t>(tip) * patterns + pattern];
  }
  std::span<const TipCode> tip_codes(int tip) const {
    return std::span<const TipCode>(codes).subspan(static_cast<std::size_t>(tip) * patterns,
                                                   static_cast<std::size_t>(patterns));
  }
  bool observed(int tip, int pattern, int state) const;
  long long column_total() const;
};

// Nucleotide mode reads IUPAC codes (gaps, N and ? are fully ambiguous).
// Codon mode reads triplets; stop codons and gaps are fully ambiguous and
// partially ambiguous triplets map to the compatible sense codons.
// Strict mode rejects unknown characters, otherwise they become ambiguous.
RawAlignment parse_fasta(std::string_view text, Alphabet alphabet,
                         const GeneticCode& code = GeneticCode::universal(), bool strict = true);

// Reorders rows to match the tree's tip numbering.
RawAlignment align_to_tree(const RawAlignment& raw, const Phylogeny& tree);

// Unique columns in first-occurrence order with multiplicities.
PatternizedAlignment compress_patterns(const RawAlignment& raw);
// One pattern per column, weight one (reference path for compression tests).
PatternizedAlignment uncompressed_patterns(const RawAlignment& raw);
// Expands patterns back into columns, patterns in order, each repeated by weight.
RawAlignment decompress(const PatternizedAlignment& patterns);

// pattern_index \t weight \t code... (ambiguous codes printed as mask strings).
std::string patterns_to_tsv(const PatternizedAlignment& patterns);

}  // namespace phylograd
