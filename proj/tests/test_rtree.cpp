#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "mddb/rtree.hpp"
#include "testutil.hpp"

using namespace mddb;
using namespace mddb::sidx;
using geom::Geometry;
using geom::Point;
using geom::Polygon;
using geom::Polyline;
using geom::Rect;
using testutil::random_polyline;
using testutil::random_rect;
using testutil::uniform;

namespace {

const Rect kWorld{-100, -100, 100, 100};

RTree::Params test_params() {
    RTree::Params p;
    p.world = kWorld;
    return p;
}

Oid oid_of(uint64_t slot) { return Oid{1, slot}; }

std::vector<SpatialEntry> random_entries(std::mt19937_64& rng, size_t n) {
    std::vector<SpatialEntry> entries;
    entries.reserve(n);
    for (size_t i = 0; i < n; ++i)
        entries.push_back({random_rect(rng, {-90, -90, 80, 80}, 10), oid_of(i)});
    return entries;
}

std::vector<Oid> scan_oracle(const std::vector<SpatialEntry>& entries, const Rect& r) {
    std::vector<Oid> out;
    for (const auto& e : entries)
        if (e.key.intersects(r)) out.push_back(e.oid);
    return out;
}

std::vector<Oid> sorted(std::vector<Oid> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_CASE("insert and query all, both variants") {
    for (auto variant : {RTreeVariant::rstar, RTreeVariant::hilbert}) {
        std::mt19937_64 rng(11);
        RTree tree(variant, test_params());
        auto entries = random_entries(rng, 500);
        for (const auto& e : entries) tree.insert(e);
        CHECK(tree.size() == 500);
        CHECK(tree.window_query(kWorld).size() == 500);
        tree.validate_structure();
    }
}

TEST_CASE("duplicate entries are kept as a multiset") {
    RTree tree(RTreeVariant::rstar, test_params());
    SpatialEntry e{{0, 0, 1, 1}, oid_of(7)};
    tree.insert(e);
    tree.insert(e);
    CHECK(tree.window_query({0, 0, 1, 1}).size() == 2);
    CHECK(tree.erase(e));
    CHECK(tree.window_query({0, 0, 1, 1}).size() == 1);
}

TEST_CASE("window queries match the scan oracle") {
    std::mt19937_64 rng(12);
    auto entries = random_entries(rng, 1000);
    RTree rstar(RTreeVariant::rstar, test_params());
    for (const auto& e : entries) rstar.insert(e);
    RTree hilbert(RTreeVariant::hilbert, test_params());
    for (const auto& e : entries) hilbert.insert(e);

    for (int t = 0; t < 100; ++t) {
        Rect q = random_rect(rng, {-110, -110, 90, 90}, 40);
        auto expected = sorted(scan_oracle(entries, q));
        CHECK(sorted(rstar.window_query(q)) == expected);
        CHECK(sorted(hilbert.window_query(q)) == expected);
    }
    CHECK(rstar.window_query({500, 500, 600, 600}).empty());
    CHECK(hilbert.window_query({500, 500, 600, 600}).empty());
}

TEST_CASE("delete basics") {
    RTree tree(RTreeVariant::rstar, test_params());
    SpatialEntry e{{0, 0, 5, 5}, oid_of(1)};
    tree.insert(e);
    CHECK(tree.erase(e));
    CHECK(tree.window_query(kWorld).empty());
    CHECK_FALSE(tree.erase(e));
}

TEST_CASE("randomized mutation trace keeps invariants, both variants") {
    for (auto variant : {RTreeVariant::rstar, RTreeVariant::hilbert}) {
        std::mt19937_64 rng(13);
        RTree tree(variant, test_params());
        std::vector<SpatialEntry> model;
        uint64_t next = 0;
        const int ops = 10000;
        for (int op = 0; op < ops; ++op) {
            bool do_insert = model.empty() || uniform(rng, 0, 1) < 0.6;
            if (do_insert) {
                SpatialEntry e{random_rect(rng, {-90, -90, 80, 80}, 8), oid_of(next++)};
                tree.insert(e);
                model.push_back(e);
            } else {
                size_t pick =
                    std::uniform_int_distribution<size_t>(0, model.size() - 1)(rng);
                CHECK(tree.erase(model[pick]));
                model.erase(model.begin() + pick);
            }
            if (op % 37 == 0) tree.validate_structure();
        }
        tree.validate_structure();
        CHECK(tree.size() == model.size());
        for (int t = 0; t < 25; ++t) {
            Rect q = random_rect(rng, {-100, -100, 90, 90}, 30);
            CHECK(sorted(tree.window_query(q)) == sorted(scan_oracle(model, q)));
        }
    }
}

TEST_CASE("bulk load packing") {
    RTree::Params p = test_params();

    auto one = RTree::bulk_load_hilbert({{{0, 0, 1, 1}, oid_of(0)}}, p);
    CHECK(one.size() == 1);
    CHECK(one.utilization() == doctest::Approx(1.0 / p.max_entries));
    one.validate_structure();

    std::mt19937_64 rng(14);
    auto exactly_m = random_entries(rng, static_cast<size_t>(p.max_entries));
    auto full = RTree::bulk_load_hilbert(exactly_m, p);
    CHECK(full.utilization() == doctest::Approx(1.0));
    full.validate_structure();

    auto many = random_entries(rng, static_cast<size_t>(10 * p.max_entries));
    auto tree = RTree::bulk_load_hilbert(many, p);
    tree.validate_structure();
    CHECK(tree.utilization() >= 0.9);
    CHECK(sorted(tree.window_query(kWorld)) == sorted(scan_oracle(many, kWorld)));

    CHECK_THROWS_AS(RTree::bulk_load_hilbert({}, p), Error);
}

TEST_CASE("bulk loaded tree answers like an incrementally built one") {
    std::mt19937_64 rng(15);
    auto entries = random_entries(rng, 700);
    auto bulk = RTree::bulk_load_hilbert(entries, test_params());
    RTree incr(RTreeVariant::hilbert, test_params());
    for (const auto& e : entries) incr.insert(e);
    for (int t = 0; t < 50; ++t) {
        Rect q = random_rect(rng, {-100, -100, 90, 90}, 25);
        CHECK(sorted(bulk.window_query(q)) == sorted(incr.window_query(q)));
    }
}

TEST_CASE("closest matches brute force") {
    std::mt19937_64 rng(16);
    std::map<Oid, Polyline> lines;
    RTree tree(RTreeVariant::rstar, test_params());
    for (uint64_t i = 0; i < 100; ++i) {
        Polyline l = random_polyline(rng, {-90, -90, 90, 90}, 6);
        Oid oid = oid_of(i);
        lines[oid] = l;
        tree.insert({geom::mbr(Geometry{l}), oid});
    }
    auto resolve = [&](Oid oid) { return Geometry{lines.at(oid)}; };

    for (int t = 0; t < 100; ++t) {
        Point p{uniform(rng, -100, 100), uniform(rng, -100, 100)};
        Oid best{};
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& [oid, line] : lines) {
            double d = geom::distance(p, Geometry{line});
            if (d < best_d || (d == best_d && oid < best)) {
                best_d = d;
                best = oid;
            }
        }
        CHECK(tree.closest(p, resolve) == best);
    }

    // A point lying on one polyline selects it.
    auto& some = lines.begin()->second;
    CHECK(tree.closest(some.vertices[0], resolve) == lines.begin()->first);

    RTree empty_tree(RTreeVariant::rstar, test_params());
    CHECK_THROWS_AS(empty_tree.closest({0, 0}, resolve), Error);
}

TEST_CASE("spatial join equals the nested loop oracle") {
    std::mt19937_64 rng(17);
    auto diamond = [](const Rect& r) {
        Polygon poly;
        poly.outer = {{r.center().x, r.ymin},
                      {r.xmax, r.center().y},
                      {r.center().x, r.ymax},
                      {r.xmin, r.center().y}};
        return poly;
    };

    std::map<Oid, Polygon> left, right;
    RTree ta(RTreeVariant::rstar, test_params());
    RTree tb(RTreeVariant::hilbert, test_params());
    for (uint64_t i = 0; i < 200; ++i) {
        Rect ra = random_rect(rng, {-80, -80, 70, 70}, 12);
        Oid oa{1, i};
        left[oa] = diamond(ra);
        ta.insert({ra, oa});
        Rect rb = random_rect(rng, {-80, -80, 70, 70}, 12);
        Oid ob{2, i};
        right[ob] = diamond(rb);
        tb.insert({rb, ob});
    }
    auto resolve_a = [&](Oid o) { return Geometry{left.at(o)}; };
    auto resolve_b = [&](Oid o) { return Geometry{right.at(o)}; };

    std::vector<std::pair<Oid, Oid>> got;
    spatial_join(ta, tb, JoinPredicate::overlaps, resolve_a, resolve_b,
                 [&](Oid a, Oid b) { got.emplace_back(a, b); });
    std::vector<std::pair<Oid, Oid>> expected;
    for (const auto& [oa, pa] : left)
        for (const auto& [ob, pb] : right)
            if (geom::overlaps(Geometry{pa}, Geometry{pb})) expected.emplace_back(oa, ob);
    std::sort(got.begin(), got.end());
    std::sort(expected.begin(), expected.end());
    CHECK(got == expected);
}

TEST_CASE("self join emits unordered pairs once") {
    std::mt19937_64 rng(18);
    std::map<Oid, Polygon> polys;
    RTree tree(RTreeVariant::rstar, test_params());
    for (uint64_t i = 0; i < 80; ++i) {
        Rect r = random_rect(rng, {-40, -40, 30, 30}, 15);
        Oid o{1, i};
        polys[o] = Polygon{{{r.xmin, r.ymin}, {r.xmax, r.ymin}, {r.xmax, r.ymax},
                            {r.xmin, r.ymax}},
                           {}};
        tree.insert({r, o});
    }
    auto resolve = [&](Oid o) { return Geometry{polys.at(o)}; };
    std::vector<std::pair<Oid, Oid>> got;
    spatial_join(tree, tree, JoinPredicate::overlaps, resolve, resolve,
                 [&](Oid a, Oid b) { got.emplace_back(a, b); });
    std::vector<std::pair<Oid, Oid>> expected;
    for (const auto& [oa, pa] : polys)
        for (const auto& [ob, pb] : polys)
            if (oa < ob && geom::overlaps(Geometry{pa}, Geometry{pb}))
                expected.emplace_back(oa, ob);
    std::sort(got.begin(), got.end());
    std::sort(expected.begin(), expected.end());
    CHECK(got == expected);
}

TEST_CASE("join of single-entry and disjoint trees") {
    RTree a(RTreeVariant::rstar, test_params());
    RTree b(RTreeVariant::rstar, test_params());
    a.insert({{0, 0, 2, 2}, {1, 1}});
    b.insert({{0, 0, 2, 2}, {2, 1}});
    auto resolve_a = [](Oid) { return Geometry{Rect{0, 0, 2, 2}}; };
    size_t pairs = 0;
    spatial_join(a, b, JoinPredicate::overlaps, resolve_a, resolve_a,
                 [&](Oid, Oid) { ++pairs; });
    CHECK(pairs == 1);

    RTree c(RTreeVariant::rstar, test_params());
    c.insert({{50, 50, 60, 60}, {3, 1}});
    auto resolve_c = [](Oid) { return Geometry{Rect{50, 50, 60, 60}}; };
    pairs = 0;
    spatial_join(a, c, JoinPredicate::overlaps, resolve_a, resolve_c,
                 [&](Oid, Oid) { ++pairs; });
    CHECK(pairs == 0);
}

TEST_CASE("utilization") {
    RTree::Params p = test_params();
    RTree tree(RTreeVariant::rstar, p);
    for (int i = 0; i < p.max_entries; ++i)
        tree.insert({{double(i), 0, double(i) + 1, 1}, oid_of(i)});
    CHECK(tree.utilization() == doctest::Approx(1.0));

    RTree empty_tree(RTreeVariant::rstar, p);
    CHECK_THROWS_AS(empty_tree.utilization(), Error);
}

TEST_CASE("serialization round trip") {
    for (auto variant : {RTreeVariant::rstar, RTreeVariant::hilbert}) {
        std::mt19937_64 rng(19);
        RTree tree(variant, test_params());
        auto entries = random_entries(rng, 300);
        for (const auto& e : entries) tree.insert(e);

        std::vector<uint8_t> buf;
        ByteWriter w(buf);
        tree.serialize(w);
        ByteReader r(buf.data(), buf.size());
        RTree copy = RTree::deserialize(r);
        CHECK(r.done());
        copy.validate_structure();
        CHECK(copy.size() == tree.size());
        CHECK(copy.dump() == tree.dump());
        for (int t = 0; t < 20; ++t) {
            Rect q = random_rect(rng, {-100, -100, 90, 90}, 30);
            CHECK(sorted(copy.window_query(q)) == sorted(tree.window_query(q)));
        }
    }
}

TEST_CASE("debug dump shows one node per line") {
    RTree tree(RTreeVariant::hilbert, test_params());
    for (uint64_t i = 0; i < 100; ++i)
        tree.insert({{double(i % 10), double(i / 10), double(i % 10) + 1,
                      double(i / 10) + 1},
                     oid_of(i)});
    std::string text = tree.dump();
    CHECK(text.find("depth=0") != std::string::npos);
    CHECK(text.find("lhv=") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') >= 4);
}
