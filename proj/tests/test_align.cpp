#include <doctest.h>

#include <iostream>
#include <random>

#include "mddb/align.hpp"

using namespace mddb;
using namespace mddb::seq;

namespace {

// Independent full-matrix affine-gap local alignment: classic H/E/F matrices,
// no rolling rows, no origin tracking. Used as the oracle for sw_score.
int oracle_sw(const SeqView& q, const SeqView& s, const ScoringScheme& sch) {
    const size_t n = q.size(), m = s.size();
    constexpr int kNeg = -100000000;
    std::vector<std::vector<int>> H(n + 1, std::vector<int>(m + 1, 0));
    std::vector<std::vector<int>> E(n + 1, std::vector<int>(m + 1, kNeg));
    std::vector<std::vector<int>> F(n + 1, std::vector<int>(m + 1, kNeg));
    int best = 0;
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            E[i][j] = std::max(E[i][j - 1] + sch.gap_extend,
                               H[i][j - 1] + sch.gap_open + sch.gap_extend);
            F[i][j] = std::max(F[i - 1][j] + sch.gap_extend,
                               H[i - 1][j] + sch.gap_open + sch.gap_extend);
            int diag = H[i - 1][j - 1] + sch.score(q.codes[i - 1], s.codes[j - 1]);
            H[i][j] = std::max({0, diag, E[i][j], F[i][j]});
            best = std::max(best, H[i][j]);
        }
    }
    return best;
}

SeqView dna_view(const std::string& text) { return SeqView::of(encode_dna(text)); }

std::string random_dna(std::mt19937_64& rng, size_t len) {
    static const char bases[] = "ACGT";
    std::string s(len, 'A');
    for (auto& c : s) c = bases[std::uniform_int_distribution<int>(0, 3)(rng)];
    return s;
}

}  // namespace

TEST_CASE("perfect match scores match times length") {
    auto scheme = ScoringScheme::dna_scheme(1, -1, -1, -1);
    auto r = sw_score(dna_view("ACGT"), dna_view("ACGT"), scheme);
    CHECK(r.score == 4);
    CHECK(r.query_span == Span{0, 4});
    CHECK(r.subject_span == Span{0, 4});
}

TEST_CASE("empty input scores zero") {
    auto scheme = ScoringScheme::dna_scheme(1, -1, -1, -1);
    CHECK(sw_score(dna_view(""), dna_view("ACGT"), scheme).score == 0);
    CHECK(sw_score(dna_view("ACGT"), dna_view(""), scheme).score == 0);
}

TEST_CASE("classic repeat pair agrees with the oracle") {
    auto scheme = ScoringScheme::dna_scheme(2, -1, -1, -1);
    SeqView a = dna_view("ACACACTA");
    SeqView b = dna_view("AGCACACA");
    int expected = oracle_sw(a, b, scheme);
    CHECK(expected == 10);  // frozen from the oracle
    CHECK(sw_score(a, b, scheme).score == expected);
}

TEST_CASE("random dna pairs match the full-matrix oracle exactly") {
    std::mt19937_64 rng(31);
    auto schemes = {ScoringScheme::dna_scheme(1, -3, -5, -2),
                    ScoringScheme::dna_scheme(2, -1, -1, -1),
                    ScoringScheme::dna_scheme(1, -1, -4, -1)};
    for (int t = 0; t < 200; ++t) {
        size_t la = std::uniform_int_distribution<size_t>(0, 80)(rng);
        size_t lb = std::uniform_int_distribution<size_t>(0, 80)(rng);
        SeqView a = dna_view(random_dna(rng, la));
        SeqView b = dna_view(random_dna(rng, lb));
        for (const auto& scheme : schemes)
            CHECK(sw_score(a, b, scheme).score == oracle_sw(a, b, scheme));
    }
}

TEST_CASE("reported spans reproduce the score") {
    std::mt19937_64 rng(32);
    auto scheme = ScoringScheme::dna_scheme(1, -2, -3, -1);
    for (int t = 0; t < 100; ++t) {
        SeqView a = dna_view(random_dna(rng, 60));
        SeqView b = dna_view(random_dna(rng, 60));
        AlignResult r = sw_score(a, b, scheme);
        if (r.score == 0) continue;
        SeqView qa{SeqKind::dna,
                   {a.codes.begin() + r.query_span.start, a.codes.begin() + r.query_span.end}};
        SeqView sb{SeqKind::dna,
                   {b.codes.begin() + r.subject_span.start,
                    b.codes.begin() + r.subject_span.end}};
        CHECK(sw_score(qa, sb, scheme).score == r.score);
    }
}

TEST_CASE("symmetry for symmetric schemes") {
    std::mt19937_64 rng(33);
    auto scheme = ScoringScheme::dna_scheme(1, -1, -2, -1);
    for (int t = 0; t < 100; ++t) {
        SeqView a = dna_view(random_dna(rng, 40));
        SeqView b = dna_view(random_dna(rng, 50));
        CHECK(sw_score(a, b, scheme).score == sw_score(b, a, scheme).score);
    }
}

TEST_CASE("appending characters never lowers the local optimum") {
    std::mt19937_64 rng(34);
    auto scheme = ScoringScheme::dna_scheme(1, -3, -5, -2);
    std::string a = random_dna(rng, 40);
    std::string b = random_dna(rng, 40);
    int prev = sw_score(dna_view(a), dna_view(b), scheme).score;
    for (int t = 0; t < 40; ++t) {
        if (t % 2 == 0)
            a += random_dna(rng, 1);
        else
            b += random_dna(rng, 1);
        int cur = sw_score(dna_view(a), dna_view(b), scheme).score;
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("alphabet mismatch is rejected") {
    auto scheme = ScoringScheme::dna_scheme();
    SeqView d = dna_view("ACGT");
    SeqView p = SeqView::of(encode_protein("MKV"));
    CHECK_THROWS_AS(sw_score(d, p, scheme), Error);
    CHECK_THROWS_AS(sw_score(p, p, scheme), Error);  // dna scheme on protein
}

TEST_CASE("blosum62 is symmetric and scores known residues") {
    auto scheme = ScoringScheme::blosum62();
    for (int i = 0; i < 22; ++i)
        for (int j = 0; j < 22; ++j) CHECK(scheme.matrix[i][j] == scheme.matrix[j][i]);
    SeqView a = SeqView::of(encode_protein("MKV"));
    CHECK(sw_score(a, a, scheme).score == 14);  // M:5 K:5 V:4
    CHECK(oracle_sw(a, a, scheme) == 14);
}

TEST_CASE("blast finds identical members and respects the threshold bound") {
    std::mt19937_64 rng(35);
    auto scheme = ScoringScheme::dna_scheme(1, -3, -5, -2);
    std::string q = random_dna(rng, 80);
    std::vector<std::string> texts;
    for (int i = 0; i < 20; ++i) texts.push_back(random_dna(rng, 150));
    texts.push_back(q);
    Oid self{9, 20};

    std::vector<SeqView> views;
    views.reserve(texts.size());
    for (const auto& t : texts) views.push_back(dna_view(t));
    std::vector<std::pair<Oid, const SeqView*>> db;
    for (size_t i = 0; i < views.size(); ++i) db.push_back({Oid{9, i}, &views[i]});

    auto hits = blast_search(db, dna_view(q), 80, scheme);
    bool found_self = false;
    for (const auto& h : hits) found_self |= h.oid == self && h.score == 80;
    CHECK(found_self);

    // Score can never exceed match * len(q).
    CHECK(blast_search(db, dna_view(q), 81, scheme).empty());
}

TEST_CASE("blast hits are sound against the exhaustive oracle") {
    std::mt19937_64 rng(36);
    auto scheme = ScoringScheme::dna_scheme(1, -3, -5, -2);
    std::string q = random_dna(rng, 60);

    std::vector<std::string> texts;
    for (int i = 0; i < 120; ++i) texts.push_back(random_dna(rng, 200));
    // Plant mutated copies of the query inside some subjects.
    for (int i = 0; i < 30; ++i) {
        std::string planted = q;
        int muts = std::uniform_int_distribution<int>(0, 6)(rng);
        for (int k = 0; k < muts; ++k)
            planted[std::uniform_int_distribution<size_t>(0, planted.size() - 1)(rng)] =
                "ACGT"[std::uniform_int_distribution<int>(0, 3)(rng)];
        std::string host = random_dna(rng, 80) + planted + random_dna(rng, 60);
        texts.push_back(host);
    }

    std::vector<SeqView> views;
    views.reserve(texts.size());
    for (const auto& t : texts) views.push_back(dna_view(t));
    std::vector<std::pair<Oid, const SeqView*>> db;
    for (size_t i = 0; i < views.size(); ++i) db.push_back({Oid{9, i}, &views[i]});

    const int threshold = 35;
    auto hits = blast_search(db, dna_view(q), threshold, scheme);
    CHECK(!hits.empty());

    size_t oracle_positives = 0;
    std::vector<int> exact(views.size());
    for (size_t i = 0; i < views.size(); ++i) {
        exact[i] = sw_score(dna_view(q), views[i], scheme).score;
        if (exact[i] >= threshold) ++oracle_positives;
    }
    for (const auto& h : hits) {
        CHECK(h.score >= threshold);
        CHECK(h.score == exact[h.oid.slot]);  // re-score equals exhaustive SW
    }
    CHECK(hits.size() <= oracle_positives);
    for (size_t i = 1; i < hits.size(); ++i) {
        bool ordered = hits[i - 1].score > hits[i].score ||
                       (hits[i - 1].score == hits[i].score &&
                        hits[i - 1].oid < hits[i].oid);
        CHECK(ordered);
    }
    MESSAGE("blast recall: ", hits.size(), "/", oracle_positives);
}

TEST_CASE("ambiguity codes never seed") {
    auto scheme = ScoringScheme::dna_scheme(1, -3, -5, -2);
    // Query made of N's shares no seedable word with anything.
    SeqView qn = dna_view(std::string(40, 'N'));
    std::string text = std::string(40, 'A');
    SeqView sv = dna_view(text);
    std::vector<std::pair<Oid, const SeqView*>> db{{Oid{1, 0}, &sv}};
    CHECK(blast_search(db, qn, 5, scheme).empty());
    CHECK_THROWS_AS(blast_search(db, qn, 0, scheme), Error);
}
