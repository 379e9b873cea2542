#include "mddb/seq.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace mddb::seq {

namespace {

constexpr std::string_view kIupac = "ACGTRYSWKMBDHVN";

constexpr char kBaseLetters[4] = {'A', 'C', 'G', 'T'};

int base_code(char c) {
    switch (c) {
        case 'A': return 0;
        case 'C': return 1;
        case 'G': return 2;
        case 'T': return 3;
        default: return -1;
    }
}

char iupac_complement(char c) {
    switch (c) {
        case 'A': return 'T';
        case 'T': return 'A';
        case 'C': return 'G';
        case 'G': return 'C';
        case 'R': return 'Y';
        case 'Y': return 'R';
        case 'S': return 'S';
        case 'W': return 'W';
        case 'K': return 'M';
        case 'M': return 'K';
        case 'B': return 'V';
        case 'V': return 'B';
        case 'D': return 'H';
        case 'H': return 'D';
        default: return 'N';
    }
}

void set_dna_code(std::vector<uint8_t>& bits, uint64_t i, uint8_t code) {
    bits[i >> 2] |= static_cast<uint8_t>(code << (6 - 2 * (i & 3)));
}

int protein_index(char c) {
    auto pos = kProteinAlphabet.find(c);
    return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

void set_protein_code(std::vector<uint8_t>& bits, uint64_t i, uint8_t code) {
    uint64_t bit = i * 5;
    for (int b = 0; b < 5; ++b) {
        if (code & (1 << (4 - b))) {
            uint64_t at = bit + b;
            bits[at >> 3] |= static_cast<uint8_t>(1 << (7 - (at & 7)));
        }
    }
}

// NCBI standard genetic code, indexed with T=0, C=1, A=2, G=3.
constexpr std::string_view kCodonTable =
    "FFLLSSSSYY**CC*WLLLLPPPPHHQQRRRRIIIMTTTTNNKKSSRRVVVVAAAADDEEGGGG";

// Our packed codes are A=0 C=1 G=2 T=3; remap into the table's TCAG order.
constexpr int kToTcag[4] = {2, 1, 3, 0};

}  // namespace

bool EncodedDNA::has_exception_in(uint64_t start, uint64_t len) const {
    auto it = std::lower_bound(exceptions.begin(), exceptions.end(), start,
                               [](const auto& e, uint64_t pos) { return e.first < pos; });
    return it != exceptions.end() && it->first < start + len;
}

EncodedDNA encode_dna(std::string_view text) {
    EncodedDNA d;
    d.length = text.size();
    d.bits.assign((text.size() + 3) / 4, 0);
    for (uint64_t i = 0; i < text.size(); ++i) {
        char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
        int code = base_code(c);
        if (code >= 0) {
            set_dna_code(d.bits, i, static_cast<uint8_t>(code));
        } else if (kIupac.find(c) != std::string_view::npos) {
            d.exceptions.emplace_back(i, c);
        } else {
            throw Error("invalid nucleotide '" + std::string(1, text[i]) +
                        "' at position " + std::to_string(i));
        }
    }
    return d;
}

uint8_t dna_code(const EncodedDNA& d, uint64_t i) {
    return (d.bits[i >> 2] >> (6 - 2 * (i & 3))) & 3;
}

char dna_char(const EncodedDNA& d, uint64_t i) {
    auto it = std::lower_bound(d.exceptions.begin(), d.exceptions.end(), i,
                               [](const auto& e, uint64_t pos) { return e.first < pos; });
    if (it != d.exceptions.end() && it->first == i) return it->second;
    return kBaseLetters[dna_code(d, i)];
}

std::string decode(const EncodedDNA& d) {
    std::string out(d.length, '\0');
    for (uint64_t i = 0; i < d.length; ++i) out[i] = kBaseLetters[dna_code(d, i)];
    for (const auto& [pos, c] : d.exceptions) out[pos] = c;
    return out;
}

EncodedDNA reverse_complement(const EncodedDNA& d) {
    EncodedDNA out;
    out.length = d.length;
    out.bits.assign(d.bits.size(), 0);
    for (uint64_t i = 0; i < d.length; ++i) {
        uint8_t code = dna_code(d, d.length - 1 - i);
        set_dna_code(out.bits, i, static_cast<uint8_t>(3 - code));
    }
    for (auto it = d.exceptions.rbegin(); it != d.exceptions.rend(); ++it) {
        uint64_t pos = d.length - 1 - it->first;
        out.exceptions.emplace_back(pos, iupac_complement(it->second));
        // Exception slots keep the placeholder code in the packed bits.
        uint64_t byte = pos >> 2;
        out.bits[byte] &= static_cast<uint8_t>(~(3 << (6 - 2 * (pos & 3))));
    }
    return out;
}

EncodedProtein encode_protein(std::string_view text) {
    EncodedProtein p;
    p.length = text.size();
    p.bits.assign((text.size() * 5 + 7) / 8, 0);
    for (uint64_t i = 0; i < text.size(); ++i) {
        char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
        int code = protein_index(c);
        if (code < 0)
            throw Error("invalid amino acid '" + std::string(1, text[i]) +
                        "' at position " + std::to_string(i));
        set_protein_code(p.bits, i, static_cast<uint8_t>(code));
    }
    return p;
}

uint8_t protein_code(const EncodedProtein& p, uint64_t i) {
    uint64_t bit = i * 5;
    uint8_t code = 0;
    for (int b = 0; b < 5; ++b) {
        uint64_t at = bit + b;
        code = static_cast<uint8_t>(code << 1);
        code |= (p.bits[at >> 3] >> (7 - (at & 7))) & 1;
    }
    return code;
}

std::string decode(const EncodedProtein& p) {
    std::string out(p.length, '\0');
    for (uint64_t i = 0; i < p.length; ++i) out[i] = kProteinAlphabet[protein_code(p, i)];
    return out;
}

EncodedProtein translate(const EncodedDNA& d, int frame) {
    if (frame < 1 || frame > 3) throw Error("reading frame must be 1..3");
    uint64_t offset = static_cast<uint64_t>(frame - 1);
    if (d.length < offset || d.length - offset < 3)
        throw Error("sequence too short to translate in frame " + std::to_string(frame));
    uint64_t codons = (d.length - offset) / 3;
    if (d.has_exception_in(offset, codons * 3))
        throw Error("cannot translate across ambiguous bases");
    std::string residues(codons, '\0');
    for (uint64_t c = 0; c < codons; ++c) {
        int idx = kToTcag[dna_code(d, offset + 3 * c)] * 16 +
                  kToTcag[dna_code(d, offset + 3 * c + 1)] * 4 +
                  kToTcag[dna_code(d, offset + 3 * c + 2)];
        residues[c] = kCodonTable[idx];
    }
    return encode_protein(residues);
}

EncodedDNA subsequence(const EncodedDNA& d, uint64_t start, uint64_t len) {
    if (start + len > d.length) throw Error("subsequence out of range");
    EncodedDNA out;
    out.length = len;
    out.bits.assign((len + 3) / 4, 0);
    for (uint64_t i = 0; i < len; ++i) set_dna_code(out.bits, i, dna_code(d, start + i));
    for (const auto& [pos, c] : d.exceptions)
        if (pos >= start && pos < start + len) out.exceptions.emplace_back(pos - start, c);
    return out;
}

EncodedProtein subsequence(const EncodedProtein& p, uint64_t start, uint64_t len) {
    if (start + len > p.length) throw Error("subsequence out of range");
    EncodedProtein out;
    out.length = len;
    out.bits.assign((len * 5 + 7) / 8, 0);
    for (uint64_t i = 0; i < len; ++i)
        set_protein_code(out.bits, i, protein_code(p, start + i));
    return out;
}

void serialize(ByteWriter& w, const EncodedDNA& d) {
    w.u64(d.length);
    w.bytes(d.bits);
    w.u32(static_cast<uint32_t>(d.exceptions.size()));
    for (const auto& [pos, c] : d.exceptions) {
        w.u64(pos);
        w.u8(static_cast<uint8_t>(c));
    }
}

EncodedDNA deserialize_dna(ByteReader& r) {
    EncodedDNA d;
    d.length = r.u64();
    d.bits = r.bytes();
    uint32_t n = r.u32();
    d.exceptions.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        uint64_t pos = r.u64();
        d.exceptions.emplace_back(pos, static_cast<char>(r.u8()));
    }
    return d;
}

void serialize(ByteWriter& w, const EncodedProtein& p) {
    w.u64(p.length);
    w.bytes(p.bits);
}

EncodedProtein deserialize_protein(ByteReader& r) {
    EncodedProtein p;
    p.length = r.u64();
    p.bits = r.bytes();
    return p;
}

}  // namespace mddb::seq
