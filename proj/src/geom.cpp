#include "mddb/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mddb::geom {

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool finite(double v) { return std::isfinite(v); }

// Closed segment of a ring, wrapping from the last vertex back to the first.
std::pair<Point, Point> ring_segment(const Ring& ring, size_t i) {
    return {ring[i], ring[(i + 1) % ring.size()]};
}

bool point_on_ring(const Point& p, const Ring& ring) {
    for (size_t i = 0; i < ring.size(); ++i) {
        auto [a, b] = ring_segment(ring, i);
        if (segment_distance(p, a, b) <= kEpsilon) return true;
    }
    return false;
}

// Crossing-number parity for points known not to lie on the ring boundary.
bool point_in_ring_interior(const Point& p, const Ring& ring) {
    bool in = false;
    for (size_t i = 0; i < ring.size(); ++i) {
        auto [a, b] = ring_segment(ring, i);
        if ((a.y > p.y) != (b.y > p.y)) {
            double xcross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < xcross) in = !in;
        }
    }
    return in;
}

// Membership in the closed region bounded by a single ring.
bool point_in_closed_ring(const Point& p, const Ring& ring) {
    return point_on_ring(p, ring) || point_in_ring_interior(p, ring);
}

double shoelace(const Ring& ring) {
    double sum = 0.0;
    for (size_t i = 0; i < ring.size(); ++i) {
        auto [a, b] = ring_segment(ring, i);
        sum += a.x * b.y - b.x * a.y;
    }
    return std::abs(sum) / 2.0;
}

bool ring_is_simple(const Ring& ring) {
    size_t n = ring.size();
    for (size_t i = 0; i < n; ++i) {
        auto [a, b] = ring_segment(ring, i);
        for (size_t j = i + 1; j < n; ++j) {
            auto [c, d] = ring_segment(ring, j);
            bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) {
                // Neighbours may only share the common endpoint.
                const Point& shared = (j == i + 1) ? b : a;
                const Point& far1 = (j == i + 1) ? a : b;
                const Point& far2 = (j == i + 1) ? d : c;
                if (segment_distance(far1, c, d) <= kEpsilon &&
                    distance(far1, shared) > kEpsilon)
                    return false;
                if (segment_distance(far2, a, b) <= kEpsilon &&
                    distance(far2, shared) > kEpsilon)
                    return false;
            } else if (segments_intersect(a, b, c, d)) {
                return false;
            }
        }
    }
    return true;
}

bool rings_intersect(const Ring& r1, const Ring& r2) {
    for (size_t i = 0; i < r1.size(); ++i) {
        auto [a, b] = ring_segment(r1, i);
        for (size_t j = 0; j < r2.size(); ++j) {
            auto [c, d] = ring_segment(r2, j);
            if (segments_intersect(a, b, c, d)) return true;
        }
    }
    return false;
}

Rect rect_of_points(const std::vector<Point>& pts) {
    Rect r{pts[0].x, pts[0].y, pts[0].x, pts[0].y};
    for (const Point& p : pts) {
        r.xmin = std::min(r.xmin, p.x);
        r.ymin = std::min(r.ymin, p.y);
        r.xmax = std::max(r.xmax, p.x);
        r.ymax = std::max(r.ymax, p.y);
    }
    return r;
}

bool segment_intersects_rect(const Point& a, const Point& b, const Rect& r) {
    if (r.contains(a) || r.contains(b)) return true;
    const Point c1{r.xmin, r.ymin}, c2{r.xmax, r.ymin};
    const Point c3{r.xmax, r.ymax}, c4{r.xmin, r.ymax};
    return segments_intersect(a, b, c1, c2) || segments_intersect(a, b, c2, c3) ||
           segments_intersect(a, b, c3, c4) || segments_intersect(a, b, c4, c1);
}

bool polyline_intersects_polygon(const Polyline& l, const Polygon& poly) {
    for (size_t i = 0; i + 1 < l.vertices.size(); ++i) {
        const Point& a = l.vertices[i];
        const Point& b = l.vertices[i + 1];
        for (size_t s = 0; s < poly.outer.size(); ++s) {
            auto [c, d] = ring_segment(poly.outer, s);
            if (segments_intersect(a, b, c, d)) return true;
        }
        for (const Ring& hole : poly.holes) {
            for (size_t s = 0; s < hole.size(); ++s) {
                auto [c, d] = ring_segment(hole, s);
                if (segments_intersect(a, b, c, d)) return true;
            }
        }
    }
    // No boundary crossing: the polyline is entirely inside or outside the
    // polygon's region, so one vertex decides.
    return inside(l.vertices[0], poly);
}

bool polygons_overlap(const Polygon& a, const Polygon& b) {
    if (!mbr(Geometry{a}).intersects(mbr(Geometry{b}))) return false;
    // Every ring point belongs to its polygon's point set, so any ring-ring
    // contact is a shared point.
    if (rings_intersect(a.outer, b.outer)) return true;
    for (const Ring& hb : b.holes)
        if (rings_intersect(a.outer, hb)) return true;
    for (const Ring& ha : a.holes) {
        if (rings_intersect(ha, b.outer)) return true;
        for (const Ring& hb : b.holes)
            if (rings_intersect(ha, hb)) return true;
    }
    // No boundary contact: either one region contains the other (modulo
    // holes) or they are disjoint.
    return inside(a.outer[0], b) || inside(b.outer[0], a);
}

bool polygon_intersects_rect(const Polygon& poly, const Rect& r) {
    for (size_t s = 0; s < poly.outer.size(); ++s) {
        auto [a, b] = ring_segment(poly.outer, s);
        if (segment_intersects_rect(a, b, r)) return true;
    }
    for (const Ring& hole : poly.holes)
        for (size_t s = 0; s < hole.size(); ++s) {
            auto [a, b] = ring_segment(hole, s);
            if (segment_intersects_rect(a, b, r)) return true;
        }
    // No edge contact: the rect is fully inside the region, inside a hole,
    // or fully outside.
    return inside(Point{r.xmin, r.ymin}, poly);
}

bool polyline_overlaps(const Polyline& a, const Polyline& b) {
    for (size_t i = 0; i + 1 < a.vertices.size(); ++i)
        for (size_t j = 0; j + 1 < b.vertices.size(); ++j)
            if (segments_intersect(a.vertices[i], a.vertices[i + 1],
                                   b.vertices[j], b.vertices[j + 1]))
                return true;
    return false;
}

}  // namespace

void validate(const Point& p) {
    if (!finite(p.x) || !finite(p.y)) throw Error("point coordinates must be finite");
}

void validate(const Rect& r) {
    if (!finite(r.xmin) || !finite(r.ymin) || !finite(r.xmax) || !finite(r.ymax))
        throw Error("rect coordinates must be finite");
    if (r.xmin > r.xmax || r.ymin > r.ymax) throw Error("rect has inverted extents");
}

void validate(const Polyline& l) {
    if (l.vertices.size() < 2) throw Error("polyline needs at least 2 vertices");
    for (const Point& p : l.vertices) validate(p);
    for (size_t i = 0; i + 1 < l.vertices.size(); ++i)
        if (distance(l.vertices[i], l.vertices[i + 1]) <= kEpsilon)
            throw Error("polyline has coincident consecutive vertices");
}

void validate(const Polygon& poly) {
    auto check_ring = [](const Ring& ring, const char* what) {
        if (ring.size() < 3) throw Error(std::string(what) + " needs at least 3 vertices");
        for (const Point& p : ring) validate(p);
        for (size_t i = 0; i < ring.size(); ++i) {
            auto [a, b] = ring_segment(ring, i);
            if (distance(a, b) <= kEpsilon)
                throw Error(std::string(what) + " has coincident consecutive vertices");
        }
        if (!ring_is_simple(ring))
            throw Error(std::string(what) + " is self-intersecting");
    };
    check_ring(poly.outer, "polygon outer ring");
    for (const Ring& hole : poly.holes) {
        check_ring(hole, "polygon hole");
        for (const Point& p : hole)
            if (!point_in_closed_ring(p, poly.outer))
                throw Error("polygon hole lies outside the outer ring");
        if (rings_intersect(hole, poly.outer))
            throw Error("polygon hole crosses the outer ring");
    }
    for (size_t i = 0; i < poly.holes.size(); ++i)
        for (size_t j = i + 1; j < poly.holes.size(); ++j) {
            if (rings_intersect(poly.holes[i], poly.holes[j]))
                throw Error("polygon holes intersect");
            if (point_in_ring_interior(poly.holes[i][0], poly.holes[j]) ||
                point_in_ring_interior(poly.holes[j][0], poly.holes[i]))
                throw Error("polygon holes are nested");
        }
}

void validate(const Geometry& g) {
    std::visit([](const auto& shape) { validate(shape); }, g.shape);
}

void validate(const Layer& l) {
    for (const Polygon& member : l.members) validate(member);
}

void validate(const Network& n) {
    for (const Polyline& member : n.members) validate(member);
}

Rect mbr(const Geometry& g) {
    return std::visit(
        [](const auto& shape) -> Rect {
            using T = std::decay_t<decltype(shape)>;
            if constexpr (std::is_same_v<T, Point>)
                return {shape.x, shape.y, shape.x, shape.y};
            else if constexpr (std::is_same_v<T, Rect>)
                return shape;
            else if constexpr (std::is_same_v<T, Polyline>)
                return rect_of_points(shape.vertices);
            else {
                // Holes cannot extend the outer ring's bounds.
                return rect_of_points(shape.outer);
            }
        },
        g.shape);
}

double area(const Polygon& p) {
    double result = shoelace(p.outer);
    for (const Ring& hole : p.holes) result -= shoelace(hole);
    return std::max(result, 0.0);
}

double distance(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double segment_distance(const Point& p, const Point& a, const Point& b) {
    double dx = b.x - a.x, dy = b.y - a.y;
    double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) return distance(p, a);
    double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, Point{a.x + t * dx, a.y + t * dy});
}

double distance(const Point& p, const Polyline& l) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < l.vertices.size(); ++i)
        best = std::min(best, segment_distance(p, l.vertices[i], l.vertices[i + 1]));
    return best;
}

bool segments_intersect(const Point& a, const Point& b, const Point& c,
                        const Point& d) {
    double d1 = cross(a, b, c);
    double d2 = cross(a, b, d);
    double d3 = cross(c, d, a);
    double d4 = cross(c, d, b);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    // Touching cases, including collinear overlap: some endpoint lies within
    // tolerance of the other segment.
    return segment_distance(c, a, b) <= kEpsilon || segment_distance(d, a, b) <= kEpsilon ||
           segment_distance(a, c, d) <= kEpsilon || segment_distance(b, c, d) <= kEpsilon;
}

bool inside(const Point& p, const Polygon& poly) {
    if (point_on_ring(p, poly.outer)) return true;
    for (const Ring& hole : poly.holes)
        if (point_on_ring(p, hole)) return true;
    if (!point_in_ring_interior(p, poly.outer)) return false;
    for (const Ring& hole : poly.holes)
        if (point_in_ring_interior(p, hole)) return false;
    return true;
}

bool intersects_rect(const Geometry& g, const Rect& r) {
    return std::visit(
        [&](const auto& shape) -> bool {
            using T = std::decay_t<decltype(shape)>;
            if constexpr (std::is_same_v<T, Point>)
                return r.contains(shape);
            else if constexpr (std::is_same_v<T, Rect>)
                return r.intersects(shape);
            else if constexpr (std::is_same_v<T, Polyline>) {
                for (size_t i = 0; i + 1 < shape.vertices.size(); ++i)
                    if (segment_intersects_rect(shape.vertices[i],
                                                shape.vertices[i + 1], r))
                        return true;
                return false;
            } else {
                return polygon_intersects_rect(shape, r);
            }
        },
        g.shape);
}

double distance(const Point& p, const Geometry& g) {
    return std::visit(
        [&](const auto& shape) -> double {
            using T = std::decay_t<decltype(shape)>;
            if constexpr (std::is_same_v<T, Point>)
                return distance(p, shape);
            else if constexpr (std::is_same_v<T, Rect>) {
                double dx = std::max({shape.xmin - p.x, 0.0, p.x - shape.xmax});
                double dy = std::max({shape.ymin - p.y, 0.0, p.y - shape.ymax});
                return std::hypot(dx, dy);
            } else if constexpr (std::is_same_v<T, Polyline>)
                return distance(p, shape);
            else {
                if (inside(p, shape)) return 0.0;
                double best = std::numeric_limits<double>::infinity();
                for (size_t i = 0; i < shape.outer.size(); ++i) {
                    auto [a, b] = ring_segment(shape.outer, i);
                    best = std::min(best, segment_distance(p, a, b));
                }
                for (const Ring& hole : shape.holes)
                    for (size_t i = 0; i < hole.size(); ++i) {
                        auto [a, b] = ring_segment(hole, i);
                        best = std::min(best, segment_distance(p, a, b));
                    }
                return best;
            }
        },
        g.shape);
}

bool overlaps(const Geometry& a, const Geometry& b) {
    const auto& sa = a.shape;
    const auto& sb = b.shape;

    if (auto* pa = std::get_if<Point>(&sa)) {
        if (auto* pb = std::get_if<Point>(&sb)) return distance(*pa, *pb) <= kEpsilon;
        if (auto* lb = std::get_if<Polyline>(&sb)) return distance(*pa, *lb) <= kEpsilon;
        if (auto* gb = std::get_if<Polygon>(&sb)) return inside(*pa, *gb);
        return std::get<Rect>(sb).contains(*pa);
    }
    if (auto* la = std::get_if<Polyline>(&sa)) {
        if (std::holds_alternative<Point>(sb)) return overlaps(b, a);
        if (auto* lb = std::get_if<Polyline>(&sb)) return polyline_overlaps(*la, *lb);
        if (auto* gb = std::get_if<Polygon>(&sb))
            return polyline_intersects_polygon(*la, *gb);
        return intersects_rect(a, std::get<Rect>(sb));
    }
    if (auto* ga = std::get_if<Polygon>(&sa)) {
        if (auto* gb = std::get_if<Polygon>(&sb)) return polygons_overlap(*ga, *gb);
        if (std::holds_alternative<Rect>(sb))
            return polygon_intersects_rect(*ga, std::get<Rect>(sb));
        return overlaps(b, a);
    }
    // a is a Rect.
    if (std::holds_alternative<Rect>(sb))
        return std::get<Rect>(sa).intersects(std::get<Rect>(sb));
    return overlaps(b, a);
}

}  // namespace mddb::geom
