#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mddb/bytes.hpp"
#include "mddb/common.hpp"

namespace mddb::seq {

enum class SeqKind : uint8_t { dna = 0, protein = 1 };

// 20 amino acids, stop, unknown; 5-bit codes are indexes into this string.
inline constexpr std::string_view kProteinAlphabet = "ACDEFGHIKLMNPQRSTVWY*X";

// DNA packed at 2 bits per base, MSB first within each byte (A=00, C=01,
// G=10, T=11). Ambiguity codes keep placeholder 00 in the packed bits and the
// original letter in the exception side table, so decoding is lossless.
struct EncodedDNA {
    std::vector<uint8_t> bits;
    uint64_t length = 0;
    std::vector<std::pair<uint64_t, char>> exceptions;  // position ascending

    bool has_exception_in(uint64_t start, uint64_t len) const;
};

struct EncodedProtein {
    std::vector<uint8_t> bits;  // 5 bits per residue, MSB first
    uint64_t length = 0;
};

// Accepts the IUPAC nucleotide alphabet, case-insensitive. Throws on any
// other character, naming the position.
EncodedDNA encode_dna(std::string_view text);
std::string decode(const EncodedDNA& d);

// 2-bit code of base i; exception positions read as the placeholder 0.
uint8_t dna_code(const EncodedDNA& d, uint64_t i);
// Decoded character of base i, exceptions included.
char dna_char(const EncodedDNA& d, uint64_t i);

EncodedDNA reverse_complement(const EncodedDNA& d);

EncodedProtein encode_protein(std::string_view text);
std::string decode(const EncodedProtein& p);
uint8_t protein_code(const EncodedProtein& p, uint64_t i);

// Standard genetic code, reading frame 1..3; the trailing partial codon is
// dropped and stop codons emit '*'. Throws when the translated span contains
// an ambiguity exception or is shorter than one codon.
EncodedProtein translate(const EncodedDNA& d, int frame);

// Packed-domain slicing; exceptions are filtered and rebased.
EncodedDNA subsequence(const EncodedDNA& d, uint64_t start, uint64_t len);
EncodedProtein subsequence(const EncodedProtein& p, uint64_t start, uint64_t len);

void serialize(ByteWriter& w, const EncodedDNA& d);
void serialize(ByteWriter& w, const EncodedProtein& p);
EncodedDNA deserialize_dna(ByteReader& r);
EncodedProtein deserialize_protein(ByteReader& r);

}  // namespace mddb::seq
