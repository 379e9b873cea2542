#include <doctest.h>

#include <cmath>
#include <random>

#include "mddb/geom.hpp"
#include "testutil.hpp"

using namespace mddb;
using namespace mddb::geom;
using testutil::random_polygon;
using testutil::random_polyline;
using testutil::uniform;

namespace {

Polygon square(double x0, double y0, double side) {
    return Polygon{{{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}},
                   {}};
}

// Independent point-in-polygon oracle: winding-number formulation, written
// separately from the crossing-parity implementation in geom.cpp.
bool oracle_inside(const Point& p, const Polygon& poly) {
    auto on_boundary = [&](const Ring& ring) {
        for (size_t i = 0; i < ring.size(); ++i) {
            const Point& a = ring[i];
            const Point& b = ring[(i + 1) % ring.size()];
            if (segment_distance(p, a, b) <= 1e-9) return true;
        }
        return false;
    };
    auto winding = [&](const Ring& ring) {
        int wn = 0;
        for (size_t i = 0; i < ring.size(); ++i) {
            const Point& a = ring[i];
            const Point& b = ring[(i + 1) % ring.size()];
            double side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
            if (a.y <= p.y) {
                if (b.y > p.y && side > 0) ++wn;
            } else {
                if (b.y <= p.y && side < 0) --wn;
            }
        }
        return wn != 0;
    };
    if (on_boundary(poly.outer)) return true;
    for (const Ring& h : poly.holes)
        if (on_boundary(h)) return true;
    if (!winding(poly.outer)) return false;
    for (const Ring& h : poly.holes)
        if (winding(h)) return false;
    return true;
}

// Independent point-to-segment distance via the triangle-area identity.
double oracle_segment_distance(const Point& p, const Point& a, const Point& b) {
    double ab = distance(a, b);
    if (ab == 0) return distance(p, a);
    double dot1 = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
    double dot2 = (p.x - b.x) * (a.x - b.x) + (p.y - b.y) * (a.y - b.y);
    if (dot1 < 0) return distance(p, a);
    if (dot2 < 0) return distance(p, b);
    double twice_area =
        std::abs((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y));
    return twice_area / ab;
}

// Fan triangulation with signed areas; valid for any simple polygon.
double oracle_area(const Ring& ring) {
    double total = 0;
    for (size_t i = 1; i + 1 < ring.size(); ++i) {
        const Point& a = ring[0];
        const Point& b = ring[i];
        const Point& c = ring[i + 1];
        total += ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)) / 2;
    }
    return std::abs(total);
}

}  // namespace

TEST_CASE("mbr basics") {
    CHECK(mbr(Geometry{Point{3, 4}}) == Rect{3, 4, 3, 4});
    CHECK(mbr(Geometry{square(0, 0, 10)}) == Rect{0, 0, 10, 10});
}

TEST_CASE("mbr of random polygons is tight") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 100; ++t) {
        Polygon poly = random_polygon(rng, {uniform(rng, -50, 50), uniform(rng, -50, 50)},
                                      uniform(rng, 1, 20));
        Rect r = mbr(Geometry{poly});
        bool touches_xmin = false, touches_xmax = false;
        bool touches_ymin = false, touches_ymax = false;
        for (const Point& v : poly.outer) {
            CHECK(r.contains(v));
            touches_xmin |= v.x == r.xmin;
            touches_xmax |= v.x == r.xmax;
            touches_ymin |= v.y == r.ymin;
            touches_ymax |= v.y == r.ymax;
        }
        // Shrinking any side would exclude the vertex that touches it.
        CHECK(touches_xmin);
        CHECK(touches_xmax);
        CHECK(touches_ymin);
        CHECK(touches_ymax);
    }
}

TEST_CASE("area of squares and holes") {
    CHECK(area(square(0, 0, 1)) == doctest::Approx(1.0));
    Polygon holed = square(0, 0, 10);
    holed.holes.push_back({{4, 4}, {6, 4}, {6, 6}, {4, 6}});
    CHECK(area(holed) == doctest::Approx(96.0));
}

TEST_CASE("area matches fan-triangulation oracle") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 200; ++t) {
        Polygon poly = random_polygon(rng, {0, 0}, uniform(rng, 1, 30));
        double expected = oracle_area(poly.outer);
        CHECK(area(poly) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("degenerate outer ring has zero area") {
    Polygon flat{{{0, 0}, {1, 0}, {2, 0}}, {}};
    CHECK(area(flat) == 0.0);
}

TEST_CASE("overlaps basics") {
    Geometry r1{Rect{0, 0, 10, 10}};
    Geometry r2{Rect{0, 0, 10, 10}};
    Geometry r3{Rect{20, 20, 30, 30}};
    CHECK(overlaps(r1, r2));
    CHECK_FALSE(overlaps(r1, r3));
}

TEST_CASE("L-shaped polygons with intersecting MBRs but disjoint shapes") {
    // Two L shapes interlocking around (5,5) without touching.
    Polygon a{{{0, 0}, {4, 0}, {4, 4}, {10, 4}, {10, 10}, {12, 10}, {12, -2}, {0, -2}},
              {}};
    Polygon b{{{0, 6}, {2, 6}, {2, 12}, {12, 12}, {12, 14}, {0, 14}}, {}};
    validate(a);
    validate(b);
    CHECK(mbr(Geometry{a}).intersects(mbr(Geometry{b})));
    CHECK_FALSE(overlaps(Geometry{a}, Geometry{b}));
    CHECK_FALSE(overlaps(Geometry{b}, Geometry{a}));
}

TEST_CASE("inside of unit square and hole semantics") {
    Polygon sq = square(0, 0, 1);
    CHECK(inside({0.5, 0.5}, sq));
    CHECK(inside({0, 0.5}, sq));  // outer boundary counts

    Polygon holed = square(0, 0, 10);
    holed.holes.push_back({{4, 4}, {6, 4}, {6, 6}, {4, 6}});
    CHECK_FALSE(inside({5, 5}, holed));  // strictly inside the hole
    CHECK(inside({4, 5}, holed));        // hole boundary counts as inside
    CHECK(inside({1, 1}, holed));
}

TEST_CASE("inside matches winding-number oracle on random points") {
    std::mt19937_64 rng(3);
    Polygon poly = random_polygon(rng, {0, 0}, 10, 6, 14);
    poly.holes.push_back({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}});
    validate(poly);
    for (int t = 0; t < 1000; ++t) {
        Point p{uniform(rng, -12, 12), uniform(rng, -12, 12)};
        CHECK(inside(p, poly) == oracle_inside(p, poly));
    }
}

TEST_CASE("distance point to polyline") {
    Polyline seg{{{0, 0}, {1, 0}}};
    CHECK(distance(Point{0.5, 0}, seg) == doctest::Approx(0.0));
    CHECK(distance(Point{0, 1}, seg) == doctest::Approx(1.0));
}

TEST_CASE("distance matches per-segment oracle") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 200; ++t) {
        Polyline l = random_polyline(rng, {-10, -10, 10, 10});
        Point p{uniform(rng, -15, 15), uniform(rng, -15, 15)};
        double expected = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i + 1 < l.vertices.size(); ++i)
            expected = std::min(
                expected, oracle_segment_distance(p, l.vertices[i], l.vertices[i + 1]));
        CHECK(distance(p, l) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("intersects_rect") {
    Polygon sq = square(2, 2, 2);
    CHECK(intersects_rect(Geometry{sq}, Rect{0, 0, 10, 10}));
    CHECK_FALSE(intersects_rect(Geometry{sq}, Rect{20, 20, 30, 30}));

    // L-shape whose MBR touches the rect while the shape stays clear.
    Polygon ell{{{0, 0}, {10, 0}, {10, 1}, {1, 1}, {1, 10}, {0, 10}}, {}};
    Rect probe{5, 5, 9, 9};
    CHECK(mbr(Geometry{ell}).intersects(probe));
    CHECK_FALSE(intersects_rect(Geometry{ell}, probe));
    // Cross-check against the polygon-polygon overlap path.
    Polygon probe_poly{{{5, 5}, {9, 5}, {9, 9}, {5, 9}}, {}};
    CHECK_FALSE(overlaps(Geometry{ell}, Geometry{probe_poly}));
}

TEST_CASE("overlap properties on random shapes") {
    std::mt19937_64 rng(5);
    std::vector<Geometry> shapes;
    for (int i = 0; i < 30; ++i) {
        double cx = uniform(rng, -20, 20), cy = uniform(rng, -20, 20);
        switch (i % 3) {
            case 0:
                shapes.emplace_back(random_polygon(rng, {cx, cy}, uniform(rng, 1, 6)));
                break;
            case 1:
                shapes.emplace_back(
                    random_polyline(rng, {cx - 4, cy - 4, cx + 4, cy + 4}));
                break;
            default:
                shapes.emplace_back(Point{cx, cy});
        }
    }
    for (const Geometry& g : shapes) CHECK(overlaps(g, g));
    for (size_t i = 0; i < shapes.size(); ++i) {
        for (size_t j = i + 1; j < shapes.size(); ++j) {
            bool ab = overlaps(shapes[i], shapes[j]);
            bool ba = overlaps(shapes[j], shapes[i]);
            CHECK(ab == ba);
            if (!mbr(shapes[i]).intersects(mbr(shapes[j]))) CHECK_FALSE(ab);
        }
    }
}

TEST_CASE("inside implies point-polygon overlap") {
    std::mt19937_64 rng(6);
    Polygon poly = random_polygon(rng, {0, 0}, 8);
    for (int t = 0; t < 200; ++t) {
        Point p{uniform(rng, -10, 10), uniform(rng, -10, 10)};
        if (inside(p, poly)) CHECK(overlaps(Geometry{p}, Geometry{poly}));
    }
}

TEST_CASE("hole subtraction never increases area") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        Polygon poly = random_polygon(rng, {0, 0}, 20, 8, 14);
        Polygon without = poly;
        poly.holes.push_back({{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}});
        CHECK(area(poly) <= area(without));
    }
}

TEST_CASE("distance zero iff point on polyline") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 200; ++t) {
        Polyline l = random_polyline(rng, {-10, -10, 10, 10});
        size_t seg = std::uniform_int_distribution<size_t>(0, l.vertices.size() - 2)(rng);
        double f = uniform(rng, 0, 1);
        Point on{l.vertices[seg].x + f * (l.vertices[seg + 1].x - l.vertices[seg].x),
                 l.vertices[seg].y + f * (l.vertices[seg + 1].y - l.vertices[seg].y)};
        CHECK(distance(on, l) <= 1e-9);
        Point off{on.x + 3, on.y + 3};
        if (distance(off, l) <= 1e-9) {
            // Must genuinely lie on some segment.
            bool on_some = false;
            for (size_t i = 0; i + 1 < l.vertices.size(); ++i)
                on_some |= oracle_segment_distance(off, l.vertices[i],
                                                   l.vertices[i + 1]) <= 1e-9;
            CHECK(on_some);
        }
    }
}

TEST_CASE("validation rejects bad shapes") {
    CHECK_THROWS_AS(validate(Polyline{{{0, 0}}}), Error);
    CHECK_THROWS_AS(validate(Polyline{{{0, 0}, {0, 0}}}), Error);
    CHECK_THROWS_AS(validate(Rect{1, 0, 0, 1}), Error);
    CHECK_THROWS_AS(validate(Point{std::nan(""), 0}), Error);
    // Bowtie self-intersection.
    Polygon bowtie{{{0, 0}, {2, 2}, {2, 0}, {0, 2}}, {}};
    CHECK_THROWS_AS(validate(bowtie), Error);
    // Hole outside the outer ring.
    Polygon stray = square(0, 0, 1);
    stray.holes.push_back({{5, 5}, {6, 5}, {6, 6}, {5, 6}});
    CHECK_THROWS_AS(validate(stray), Error);
}
