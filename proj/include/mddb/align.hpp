#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mddb/seq.hpp"

namespace mddb::seq {

// Scoring for local alignment. Gap of length L costs gap_open + L * gap_extend
// (both non-positive).
struct ScoringScheme {
    enum class Kind : uint8_t { dna = 0, matrix = 1 };

    Kind kind = Kind::dna;
    int match = 1;
    int mismatch = -3;
    int gap_open = -5;
    int gap_extend = -2;
    std::array<std::array<int8_t, 22>, 22> matrix{};

    static ScoringScheme dna_scheme(int match = 1, int mismatch = -3,
                                    int gap_open = -5, int gap_extend = -2);
    static ScoringScheme blosum62(int gap_open = -11, int gap_extend = -1);

    int score(uint8_t a, uint8_t b) const {
        if (kind == Kind::dna) {
            if (a > 3 || b > 3) return mismatch;  // ambiguity never matches
            return a == b ? match : mismatch;
        }
        return matrix[a][b];
    }
};

// Flat code view of a sequence used by the aligners: DNA codes 0..3 with 255
// marking ambiguity exceptions, protein codes 0..21.
struct SeqView {
    SeqKind kind = SeqKind::dna;
    std::vector<uint8_t> codes;

    static SeqView of(const EncodedDNA& d);
    static SeqView of(const EncodedProtein& p);
    size_t size() const { return codes.size(); }
};

struct Span {
    uint64_t start = 0;
    uint64_t end = 0;  // half-open

    friend auto operator<=>(const Span&, const Span&) = default;
};

struct AlignResult {
    int score = 0;
    Span query_span;
    Span subject_span;
};

// Smith-Waterman local alignment optimum with affine gaps. Returns the spans
// of one optimal alignment; ties resolve toward the smallest subject start,
// then the smallest query start. Linear memory in the subject length.
AlignResult sw_score(const SeqView& query, const SeqView& subject,
                     const ScoringScheme& scheme);

struct SeqHit {
    Oid oid;
    int score = 0;
    Span query_span;
    Span subject_span;
};

struct BlastParams {
    int word_size = 0;             // 0 picks 11 for DNA, 3 for protein
    int xdrop = 20;                // ungapped extension cutoff
    int band = 32;                 // gapped extension band width
    double gapped_trigger = 0.25;  // ungapped score fraction of threshold
    bool strict_greater = false;   // compare score > threshold instead of >=
};

// Seed-and-extend search over the packed code domain: exact word seeds,
// ungapped X-drop extension, banded gapped extension, and a final exact
// re-score with sw_score. Every emitted hit therefore satisfies the threshold
// exactly; recall against exhaustive Smith-Waterman is not guaranteed. Hits
// are ordered by descending score, then ascending oid.
std::vector<SeqHit> blast_search(
    const std::vector<std::pair<Oid, const SeqView*>>& db, const SeqView& query,
    int threshold, const ScoringScheme& scheme, const BlastParams& params = {});

}  // namespace mddb::seq
