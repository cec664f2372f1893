#include "phylograd/alignment.hpp"

#include <array>
#include <cctype>
#include <map>
#include <sstream>

#include "phylograd/error.hpp"

namespace phylograd {
namespace {

// Bitmask over ACGT (bit 0 = A); 0 for unknown characters.
unsigned iupac_mask(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'A': return 0b0001;
    case 'C': return 0b0010;
    case 'G': return 0b0100;
    case 'T': case 'U': return 0b1000;
    case 'R': return 0b0101;
    case 'Y': return 0b1010;
    case 'S': return 0b0110;
    case 'W': return 0b1001;
    case 'K': return 0b1100;
    case 'M': return 0b0011;
    case 'B': return 0b1110;
    case 'D': return 0b1101;
    case 'H': return 0b1011;
    case 'V': return 0b0111;
    case 'N': case '?': case '-': case '.': case 'X': return 0b1111;
    default: return 0;
  }
}

class MaskTable {
 public:
  explicit MaskTable(int states) : states_(states) {}

  TipCode intern(const std::vector<std::uint8_t>& mask) {
    int ones = 0;
    int last = -1;
    for (int s = 0; s < states_; ++s) {
      if (mask[s]) {
        ++ones;
        last = s;
      }
    }
    if (ones == 1) return last;
    auto [it, inserted] = ids_.emplace(mask, static_cast<int>(masks_.size()));
    if (inserted) masks_.push_back(mask);
    return -(it->second + 1);
  }

  std::vector<std::vector<std::uint8_t>> take() { return std::move(masks_); }

 private:
  int states_;
  std::map<std::vector<std::uint8_t>, int> ids_;
  std::vector<std::vector<std::uint8_t>> masks_;
};

struct FastaRecord {
  std::string name;
  std::string sequence;
  std::size_t offset;
};

std::vector<FastaRecord> read_records(std::string_view text) {
  std::vector<FastaRecord> records;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() == '>') {
      std::string_view name = line.substr(1);
      while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front()))) name.remove_prefix(1);
      const auto cut = name.find_first_of(" \t");
      if (cut != std::string_view::npos) name = name.substr(0, cut);
      if (name.empty()) throw ParseError(pos, "FASTA header without a name");
      records.push_back({std::string(name), {}, pos});
    } else {
      for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (records.empty()) throw ParseError(pos, "sequence data before the first '>' header");
        records.back().sequence.push_back(c);
      }
    }
    pos = eol + 1;
  }
  if (records.empty()) throw ValidationError("FASTA input contains no sequences");
  return records;
}

}  // namespace

bool PatternizedAlignment::observed(int tip, int pattern, int state) const {
  const TipCode c = code(tip, pattern);
  if (c >= 0) return c == state;
  return masks[static_cast<std::size_t>(-c - 1)][state] != 0;
}

long long PatternizedAlignment::column_total() const {
  long long total = 0;
  for (int w : weights) total += w;
  return total;
}

RawAlignment parse_fasta(std::string_view text, Alphabet alphabet, const GeneticCode& code,
                         bool strict) {
  const auto records = read_records(text);
  const std::size_t length = records.front().sequence.size();
  for (const auto& rec : records) {
    if (rec.sequence.size() != length) {
      throw ValidationError("ragged alignment: '" + rec.name + "' has " +
                            std::to_string(rec.sequence.size()) + " characters, expected " +
                            std::to_string(length));
    }
  }

  RawAlignment out;
  out.states = alphabet == Alphabet::nucleotide ? 4 : code.sense_count();
  MaskTable table(out.states);

  if (alphabet == Alphabet::codon && length % 3 != 0) {
    throw ValidationError("codon alignment length " + std::to_string(length) +
                          " is not divisible by 3");
  }

  for (const auto& rec : records) {
    std::vector<TipCode> row;
    if (alphabet == Alphabet::nucleotide) {
      row.reserve(length);
      for (std::size_t i = 0; i < length; ++i) {
        unsigned m = iupac_mask(rec.sequence[i]);
        if (m == 0) {
          if (strict) {
            throw ValidationError("unknown character '" + std::string(1, rec.sequence[i]) +
                                  "' in sequence '" + rec.name + "' at column " +
                                  std::to_string(i + 1));
          }
          m = 0b1111;
        }
        std::vector<std::uint8_t> mask(4);
        for (int s = 0; s < 4; ++s) mask[s] = (m >> s) & 1U;
        row.push_back(table.intern(mask));
      }
    } else {
      row.reserve(length / 3);
      for (std::size_t i = 0; i < length; i += 3) {
        std::array<unsigned, 3> pos{};
        for (int k = 0; k < 3; ++k) {
          pos[k] = iupac_mask(rec.sequence[i + k]);
          if (pos[k] == 0) {
            if (strict) {
              throw ValidationError("unknown character '" + std::string(1, rec.sequence[i + k]) +
                                    "' in sequence '" + rec.name + "' at column " +
                                    std::to_string(i + k + 1));
            }
            pos[k] = 0b1111;
          }
        }
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(out.states), 0);
        int compatible = 0;
        for (int c = 0; c < 64; ++c) {
          if (((pos[0] >> ((c >> 4) & 3)) & 1U) && ((pos[1] >> ((c >> 2) & 3)) & 1U) &&
              ((pos[2] >> (c & 3)) & 1U)) {
            if (auto s = code.sense_index(c)) {
              mask[*s] = 1;
              ++compatible;
            }
          }
        }
        // Stop codons carry no sense state and count as missing data.
        if (compatible == 0) std::fill(mask.begin(), mask.end(), 1);
        row.push_back(table.intern(mask));
      }
    }
    out.names.push_back(rec.name);
    out.rows.push_back(std::move(row));
  }
  out.masks = table.take();
  return out;
}

RawAlignment align_to_tree(const RawAlignment& raw, const Phylogeny& tree) {
  if (raw.sequence_count() != tree.tip_count()) {
    throw ValidationError("alignment has " + std::to_string(raw.sequence_count()) +
                          " sequences but the tree has " + std::to_string(tree.tip_count()) +
                          " tips");
  }
  RawAlignment out;
  out.states = raw.states;
  out.masks = raw.masks;
  out.names = tree.tip_names();
  out.rows.resize(static_cast<std::size_t>(tree.tip_count()));
  std::vector<bool> used(raw.rows.size(), false);
  for (int tip = 0; tip < tree.tip_count(); ++tip) {
    bool found = false;
    for (std::size_t k = 0; k < raw.names.size(); ++k) {
      if (raw.names[k] == tree.tip_names()[tip]) {
        if (used[k]) throw ValidationError("duplicate sequence name '" + raw.names[k] + "'");
        used[k] = true;
        out.rows[tip] = raw.rows[k];
        found = true;
        break;
      }
    }
    if (!found) {
      throw ValidationError("no sequence for tip '" + tree.tip_names()[tip] + "'");
    }
  }
  return out;
}

PatternizedAlignment compress_patterns(const RawAlignment& raw) {
  PatternizedAlignment out;
  out.states = raw.states;
  out.tips = raw.sequence_count();
  out.masks = raw.masks;
  const int columns = raw.column_count();

  std::map<std::vector<TipCode>, int> index;
  std::vector<std::vector<TipCode>> unique;
  std::vector<TipCode> column(static_cast<std::size_t>(out.tips));
  for (int c = 0; c < columns; ++c) {
    for (int t = 0; t < out.tips; ++t) column[t] = raw.rows[t][c];
    auto [it, inserted] = index.emplace(column, static_cast<int>(unique.size()));
    if (inserted) {
      unique.push_back(column);
      out.weights.push_back(1);
    } else {
      ++out.weights[it->second];
    }
  }
  out.patterns = static_cast<int>(unique.size());
  out.codes.resize(static_cast<std::size_t>(out.tips) * out.patterns);
  for (int p = 0; p < out.patterns; ++p) {
    for (int t = 0; t < out.tips; ++t) {
      out.codes[static_cast<std::size_t>(t) * out.patterns + p] = unique[p][t];
    }
  }
  return out;
}

PatternizedAlignment uncompressed_patterns(const RawAlignment& raw) {
  PatternizedAlignment out;
  out.states = raw.states;
  out.tips = raw.sequence_count();
  out.masks = raw.masks;
  out.patterns = raw.column_count();
  out.weights.assign(static_cast<std::size_t>(out.patterns), 1);
  for (const auto& row : raw.rows) out.codes.insert(out.codes.end(), row.begin(), row.end());
  return out;
}

RawAlignment decompress(const PatternizedAlignment& patterns) {
  RawAlignment out;
  out.states = patterns.states;
  out.masks = patterns.masks;
  out.rows.resize(static_cast<std::size_t>(patterns.tips));
  for (int t = 0; t < patterns.tips; ++t) {
    out.names.push_back("tip" + std::to_string(t + 1));
    for (int p = 0; p < patterns.patterns; ++p) {
      for (int w = 0; w < patterns.weights[p]; ++w) out.rows[t].push_back(patterns.code(t, p));
    }
  }
  return out;
}

std::string patterns_to_tsv(const PatternizedAlignment& patterns) {
  std::ostringstream os;
  for (int p = 0; p < patterns.patterns; ++p) {
    os << p << '\t' << patterns.weights[p];
    for (int t = 0; t < patterns.tips; ++t) {
      const TipCode c = patterns.code(t, p);
      os << '\t';
      if (c >= 0) {
        os << c;
      } else {
        os << '{';
        const auto& mask = patterns.masks[static_cast<std::size_t>(-c - 1)];
        for (auto bit : mask) os << (bit ? '1' : '0');
        os << '}';
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace phylograd
