#include "mddb/align.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

namespace mddb::seq {

namespace {

// BLOSUM62 in its conventional row order, plus X and * columns.
constexpr std::string_view kBlosumOrder = "ARNDCQEGHILKMFPSTWYVX*";

constexpr int8_t kBlosum62[22][22] = {
    // A   R   N   D   C   Q   E   G   H   I   L   K   M   F   P   S   T   W   Y   V   X   *
    {4, -1, -2, -2, 0, -1, -1, 0, -2, -1, -1, -1, -1, -2, -1, 1, 0, -3, -2, 0, 0, -4},
    {-1, 5, 0, -2, -3, 1, 0, -2, 0, -3, -2, 2, -1, -3, -2, -1, -1, -3, -2, -3, -1, -4},
    {-2, 0, 6, 1, -3, 0, 0, 0, 1, -3, -3, 0, -2, -3, -2, 1, 0, -4, -2, -3, -1, -4},
    {-2, -2, 1, 6, -3, 0, 2, -1, -1, -3, -4, -1, -3, -3, -1, 0, -1, -4, -3, -3, -1, -4},
    {0, -3, -3, -3, 9, -3, -4, -3, -3, -1, -1, -3, -1, -2, -3, -1, -1, -2, -2, -1, -2, -4},
    {-1, 1, 0, 0, -3, 5, 2, -2, 0, -3, -2, 1, 0, -3, -1, 0, -1, -2, -1, -2, -1, -4},
    {-1, 0, 0, 2, -4, 2, 5, -2, 0, -3, -3, 1, -2, -3, -1, 0, -1, -3, -2, -2, -1, -4},
    {0, -2, 0, -1, -3, -2, -2, 6, -2, -4, -4, -2, -3, -3, -2, 0, -2, -2, -3, -3, -1, -4},
    {-2, 0, 1, -1, -3, 0, 0, -2, 8, -3, -3, -1, -2, -1, -2, -1, -2, -2, 2, -3, -1, -4},
    {-1, -3, -3, -3, -1, -3, -3, -4, -3, 4, 2, -3, 1, 0, -3, -2, -1, -3, -1, 3, -1, -4},
    {-1, -2, -3, -4, -1, -2, -3, -4, -3, 2, 4, -2, 2, 0, -3, -2, -1, -2, -1, 1, -1, -4},
    {-1, 2, 0, -1, -3, 1, 1, -2, -1, -3, -2, 5, -1, -3, -1, 0, -1, -3, -2, -2, -1, -4},
    {-1, -1, -2, -3, -1, 0, -2, -3, -2, 1, 2, -1, 5, 0, -2, -1, -1, -1, -1, 1, -1, -4},
    {-2, -3, -3, -3, -2, -3, -3, -3, -1, 0, 0, -3, 0, 6, -4, -2, -2, 1, 3, -1, -1, -4},
    {-1, -2, -2, -1, -3, -1, -1, -2, -2, -3, -3, -1, -2, -4, 7, -1, -1, -4, -3, -2, -2, -4},
    {1, -1, 1, 0, -1, 0, 0, 0, -1, -2, -2, 0, -1, -2, -1, 4, 1, -3, -2, -2, 0, -4},
    {0, -1, 0, -1, -1, -1, -1, -2, -2, -1, -1, -1, -1, -2, -1, 1, 5, -2, -2, 0, 0, -4},
    {-3, -3, -4, -4, -2, -2, -3, -2, -2, -3, -2, -3, -1, 1, -4, -3, -2, 11, 2, -3, -2, -4},
    {-2, -2, -2, -3, -2, -1, -2, -3, 2, -1, -1, -2, -1, 3, -3, -2, -2, 2, 7, -1, -1, -4},
    {0, -3, -3, -3, -1, -2, -2, -3, -3, 3, 1, -2, 1, -1, -2, -2, 0, -3, -1, 4, -1, -4},
    {0, -1, -1, -1, -2, -1, -1, -1, -1, -1, -1, -1, -1, -1, -2, 0, 0, -2, -1, -1, -1, -4},
    {-4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, -4, 1},
};

void check_scheme(const ScoringScheme& s) {
    if (s.kind == ScoringScheme::Kind::dna) {
        if (s.match <= 0) throw Error("match score must be positive");
        if (s.mismatch > 0) throw Error("mismatch score must be non-positive");
    }
    if (s.gap_open > 0 || s.gap_extend > 0)
        throw Error("gap penalties must be non-positive");
}

}  // namespace

ScoringScheme ScoringScheme::dna_scheme(int match, int mismatch, int gap_open,
                                        int gap_extend) {
    ScoringScheme s;
    s.kind = Kind::dna;
    s.match = match;
    s.mismatch = mismatch;
    s.gap_open = gap_open;
    s.gap_extend = gap_extend;
    check_scheme(s);
    return s;
}

ScoringScheme ScoringScheme::blosum62(int gap_open, int gap_extend) {
    ScoringScheme s;
    s.kind = Kind::matrix;
    s.gap_open = gap_open;
    s.gap_extend = gap_extend;
    // Remap from the conventional order into our packed alphabet order.
    std::array<int, 22> to_code{};
    for (int i = 0; i < 22; ++i)
        to_code[i] = static_cast<int>(kProteinAlphabet.find(kBlosumOrder[i]));
    for (int i = 0; i < 22; ++i)
        for (int j = 0; j < 22; ++j) s.matrix[to_code[i]][to_code[j]] = kBlosum62[i][j];
    check_scheme(s);
    return s;
}

SeqView SeqView::of(const EncodedDNA& d) {
    SeqView v;
    v.kind = SeqKind::dna;
    v.codes.resize(d.length);
    for (uint64_t i = 0; i < d.length; ++i) v.codes[i] = dna_code(d, i);
    for (const auto& [pos, c] : d.exceptions) {
        (void)c;
        v.codes[pos] = 255;
    }
    return v;
}

SeqView SeqView::of(const EncodedProtein& p) {
    SeqView v;
    v.kind = SeqKind::protein;
    v.codes.resize(p.length);
    for (uint64_t i = 0; i < p.length; ++i) v.codes[i] = protein_code(p, i);
    return v;
}

namespace {

void check_alignable(const SeqView& a, const SeqView& b, const ScoringScheme& scheme) {
    if (a.kind != b.kind) throw Error("cannot align sequences of different kinds");
    bool wants_matrix = a.kind == SeqKind::protein;
    if (wants_matrix != (scheme.kind == ScoringScheme::Kind::matrix))
        throw Error("scoring scheme does not fit the sequence alphabet");
}

struct Cell {
    int32_t value = 0;
    uint32_t oi = 0;  // query start of the alignment reaching this cell
    uint32_t oj = 0;  // subject start
};

constexpr int32_t kNegInf = std::numeric_limits<int32_t>::min() / 4;

bool origin_less(uint32_t oi_a, uint32_t oj_a, uint32_t oi_b, uint32_t oj_b) {
    if (oj_a != oj_b) return oj_a < oj_b;
    return oi_a < oi_b;
}

}  // namespace

AlignResult sw_score(const SeqView& query, const SeqView& subject,
                     const ScoringScheme& scheme) {
    check_alignable(query, subject, scheme);
    const size_t n = query.size();
    const size_t m = subject.size();
    if (n == 0 || m == 0) return {};

    const int32_t open_cost = scheme.gap_open + scheme.gap_extend;

    // Rolling rows of the three Gotoh states; origins ride along so spans come
    // out without a full traceback matrix.
    std::vector<Cell> match_prev(m + 1), match_cur(m + 1);
    std::vector<Cell> gapq_prev(m + 1), gapq_cur(m + 1);  // gap in query
    for (auto* row : {&match_prev, &gapq_prev})
        for (auto& c : *row) c.value = kNegInf;

    AlignResult best;
    uint32_t best_ei = 0, best_ej = 0;

    for (size_t i = 1; i <= n; ++i) {
        match_cur[0].value = kNegInf;
        gapq_cur[0].value = kNegInf;
        Cell gaps_run;  // gap in subject, depends only on the current row
        gaps_run.value = kNegInf;
        for (size_t j = 1; j <= m; ++j) {
            // Gap in subject (consumes query): from the left neighbor.
            {
                int32_t from_match = match_cur[j - 1].value + open_cost;
                int32_t extend = gaps_run.value + scheme.gap_extend;
                if (from_match >= extend) {
                    gaps_run = match_cur[j - 1];
                    gaps_run.value = from_match;
                } else {
                    gaps_run.value = extend;
                }
            }
            // Gap in query (consumes subject): from the row above.
            {
                int32_t from_match = match_prev[j].value + open_cost;
                int32_t extend = gapq_prev[j].value + scheme.gap_extend;
                if (from_match >= extend) {
                    gapq_cur[j] = match_prev[j];
                    gapq_cur[j].value = from_match;
                } else {
                    gapq_cur[j] = gapq_prev[j];
                    gapq_cur[j].value = extend;
                }
            }
            // Aligned pair. match_prev already folds all three states of the
            // previous row, so the diagonal step sees max(M, E, F) there.
            {
                int s = scheme.score(query.codes[i - 1], subject.codes[j - 1]);
                Cell diag = match_prev[j - 1];
                Cell cur;
                if (diag.value > 0) {
                    cur = diag;
                    cur.value += s;
                } else {
                    cur.value = s;
                    cur.oi = static_cast<uint32_t>(i - 1);
                    cur.oj = static_cast<uint32_t>(j - 1);
                }
                if (cur.value < 0) {
                    cur.value = 0;
                }
                match_cur[j] = cur;

                if (cur.value > best.score ||
                    (cur.value == best.score && best.score > 0 &&
                     (origin_less(cur.oi, cur.oj, best.query_span.start,
                                  best.subject_span.start)))) {
                    best.score = cur.value;
                    best.query_span.start = cur.oi;
                    best.subject_span.start = cur.oj;
                    best_ei = static_cast<uint32_t>(i);
                    best_ej = static_cast<uint32_t>(j);
                }
            }
            // Fold the gap states into the row the diagonal step reads, so the
            // recurrence sees max(M, Ix, Iy) at (i-1, j-1).
            Cell& folded = match_cur[j];
            if (gaps_run.value > folded.value ||
                (gaps_run.value == folded.value &&
                 origin_less(gaps_run.oi, gaps_run.oj, folded.oi, folded.oj))) {
                folded = gaps_run;
            }
            if (gapq_cur[j].value > folded.value ||
                (gapq_cur[j].value == folded.value &&
                 origin_less(gapq_cur[j].oi, gapq_cur[j].oj, folded.oi, folded.oj))) {
                folded = gapq_cur[j];
            }
        }
        std::swap(match_prev, match_cur);
        std::swap(gapq_prev, gapq_cur);
    }

    if (best.score > 0) {
        best.query_span.end = best_ei;
        best.subject_span.end = best_ej;
    }
    return best;
}

namespace {

// Banded local alignment score around diagonal d0 (j - i), band half-width
// derived from params.band. Score only; used as an exact-rescore gate.
int banded_score(const SeqView& query, const SeqView& subject,
                 const ScoringScheme& scheme, int64_t d0, int band) {
    const int64_t n = static_cast<int64_t>(query.size());
    const int64_t m = static_cast<int64_t>(subject.size());
    const int64_t half = std::max<int64_t>(1, band / 2);
    const int32_t open_cost = scheme.gap_open + scheme.gap_extend;
    const int64_t width = 2 * half + 1;

    std::vector<int32_t> match_prev(width, kNegInf), match_cur(width, kNegInf);
    std::vector<int32_t> gapq_prev(width, kNegInf), gapq_cur(width, kNegInf);
    int32_t best = 0;

    // Band cell k corresponds to j = i + d0 - half + k.
    for (int64_t i = 1; i <= n; ++i) {
        int32_t gaps_run = kNegInf;
        for (int64_t k = 0; k < width; ++k) {
            int64_t j = i + d0 - half + k;
            match_cur[k] = kNegInf;
            gapq_cur[k] = kNegInf;
            if (j < 1 || j > m) continue;
            // left neighbor (i, j-1) is band cell k-1 of this row
            if (k >= 1) {
                int32_t from_match = (match_cur[k - 1] == kNegInf)
                                         ? kNegInf
                                         : match_cur[k - 1] + open_cost;
                int32_t extend = gaps_run == kNegInf ? kNegInf : gaps_run + scheme.gap_extend;
                gaps_run = std::max(from_match, extend);
            } else {
                gaps_run = kNegInf;
            }
            // up neighbor (i-1, j) is band cell k+1 of the previous row
            if (k + 1 < width) {
                int32_t from_match = (match_prev[k + 1] == kNegInf)
                                         ? kNegInf
                                         : match_prev[k + 1] + open_cost;
                int32_t extend =
                    gapq_prev[k + 1] == kNegInf ? kNegInf : gapq_prev[k + 1] + scheme.gap_extend;
                gapq_cur[k] = std::max(from_match, extend);
            }
            // diagonal neighbor (i-1, j-1) is band cell k of the previous row
            int s = scheme.score(query.codes[i - 1], subject.codes[j - 1]);
            int32_t diag = match_prev[k] == kNegInf ? 0 : std::max(match_prev[k], 0);
            int32_t value = diag + s;
            value = std::max(value, 0);
            int32_t folded = std::max({value, gaps_run, gapq_cur[k]});
            match_cur[k] = folded;
            best = std::max(best, value);
        }
        std::swap(match_prev, match_cur);
        std::swap(gapq_prev, gapq_cur);
    }
    return best;
}

}  // namespace

std::vector<SeqHit> blast_search(const std::vector<std::pair<Oid, const SeqView*>>& db,
                                 const SeqView& query, int threshold,
                                 const ScoringScheme& scheme, const BlastParams& params) {
    if (threshold <= 0) throw Error("blast threshold must be positive");
    int word = params.word_size;
    if (word == 0) word = query.kind == SeqKind::dna ? 11 : 3;
    const int code_bits = query.kind == SeqKind::dna ? 2 : 5;

    auto passes = [&](int score) {
        return params.strict_greater ? score > threshold : score >= threshold;
    };

    // Word table over the query; windows touching an ambiguity never seed.
    std::unordered_map<uint64_t, std::vector<uint32_t>> words;
    const size_t n = query.size();
    if (n >= static_cast<size_t>(word)) {
        for (size_t i = 0; i + word <= n; ++i) {
            uint64_t key = 0;
            bool ok = true;
            for (int k = 0; k < word; ++k) {
                uint8_t c = query.codes[i + k];
                if (c == 255) {
                    ok = false;
                    break;
                }
                key = (key << code_bits) | c;
            }
            if (ok) words[key].push_back(static_cast<uint32_t>(i));
        }
    }

    std::vector<SeqHit> hits;
    for (const auto& [oid, subject_ptr] : db) {
        const SeqView& subject = *subject_ptr;
        if (subject.kind != query.kind)
            throw Error("sequence collection mixes alphabets");
        if (words.empty() || subject.size() < static_cast<size_t>(word)) continue;

        const size_t m = subject.size();
        int best_ungapped = 0;
        int64_t best_diag = 0;
        std::unordered_map<int64_t, int64_t> covered;  // diagonal -> extent

        uint64_t key = 0;
        const uint64_t mask =
            (word * code_bits >= 64) ? ~0ull : ((1ull << (word * code_bits)) - 1);
        int run = 0;  // unambiguous run length ending at j
        for (size_t j = 0; j < m; ++j) {
            uint8_t c = subject.codes[j];
            if (c == 255) {
                run = 0;
                key = 0;
                continue;
            }
            key = ((key << code_bits) | c) & mask;
            if (++run < word) continue;
            auto it = words.find(key);
            if (it == words.end()) continue;
            size_t j0 = j + 1 - word;
            for (uint32_t qi : it->second) {
                int64_t diag = static_cast<int64_t>(j0) - qi;
                auto cov = covered.find(diag);
                if (cov != covered.end() && cov->second >= static_cast<int64_t>(j0))
                    continue;

                // Ungapped X-drop extension in both directions.
                int seg = 0;
                for (int k = 0; k < word; ++k)
                    seg += scheme.score(query.codes[qi + k], subject.codes[j0 + k]);
                int delta = 0, best_right = 0;
                size_t ri = qi + word, rj = j0 + word;
                while (ri < n && rj < m) {
                    delta += scheme.score(query.codes[ri], subject.codes[rj]);
                    if (delta > best_right) best_right = delta;
                    if (delta <= best_right - params.xdrop) break;
                    ++ri;
                    ++rj;
                }
                delta = 0;
                int best_left = 0;
                int64_t li = static_cast<int64_t>(qi) - 1,
                        lj = static_cast<int64_t>(j0) - 1;
                while (li >= 0 && lj >= 0) {
                    delta += scheme.score(query.codes[li], subject.codes[lj]);
                    if (delta > best_left) best_left = delta;
                    if (delta <= best_left - params.xdrop) break;
                    --li;
                    --lj;
                }
                int total = seg + best_right + best_left;
                covered[diag] = static_cast<int64_t>(rj) - 1;
                if (total > best_ungapped) {
                    best_ungapped = total;
                    best_diag = diag;
                }
            }
        }

        if (best_ungapped <
            static_cast<int>(params.gapped_trigger * threshold))
            continue;
        int gapped = banded_score(query, subject, scheme, best_diag, params.band);
        if (!passes(std::max(gapped, best_ungapped))) continue;

        AlignResult exact = sw_score(query, subject, scheme);
        if (!passes(exact.score)) continue;
        hits.push_back({oid, exact.score, exact.query_span, exact.subject_span});
    }

    std::sort(hits.begin(), hits.end(), [](const SeqHit& a, const SeqHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.oid < b.oid;
    });
    return hits;
}

}  // namespace mddb::seq
