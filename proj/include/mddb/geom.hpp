#pragma once

#include <variant>
#include <vector>

#include "mddb/common.hpp"

namespace mddb::geom {

// All coordinate comparisons in this module use an absolute tolerance in
// world units.
inline constexpr double kEpsilon = 1e-9;

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend auto operator<=>(const Point&, const Point&) = default;
};

// Axis-aligned rectangle; degenerate extents (xmin == xmax) are legal so a
// Point has a well-defined MBR.
struct Rect {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 0.0;
    double ymax = 0.0;

    friend auto operator<=>(const Rect&, const Rect&) = default;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double area() const { return width() * height(); }

    bool contains(const Point& p) const {
        return p.x >= xmin - kEpsilon && p.x <= xmax + kEpsilon &&
               p.y >= ymin - kEpsilon && p.y <= ymax + kEpsilon;
    }
    bool contains(const Rect& o) const {
        return o.xmin >= xmin - kEpsilon && o.xmax <= xmax + kEpsilon &&
               o.ymin >= ymin - kEpsilon && o.ymax <= ymax + kEpsilon;
    }
    bool intersects(const Rect& o) const {
        return xmin <= o.xmax + kEpsilon && o.xmin <= xmax + kEpsilon &&
               ymin <= o.ymax + kEpsilon && o.ymin <= ymax + kEpsilon;
    }
    Rect united(const Rect& o) const {
        return {std::min(xmin, o.xmin), std::min(ymin, o.ymin),
                std::max(xmax, o.xmax), std::max(ymax, o.ymax)};
    }
    Point center() const { return {(xmin + xmax) / 2, (ymin + ymax) / 2}; }
};

struct Polyline {
    std::vector<Point> vertices;  // at least 2, consecutive vertices distinct

    friend bool operator==(const Polyline&, const Polyline&) = default;
};

// Rings are stored unclosed (last vertex != first); closure is implicit.
using Ring = std::vector<Point>;

struct Polygon {
    Ring outer;               // >= 3 vertices, simple
    std::vector<Ring> holes;  // each simple, inside outer, pairwise disjoint

    friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct Geometry;

struct Layer {
    std::vector<Polygon> members;
};

struct Network {
    std::vector<Polyline> members;
};

struct Geometry {
    std::variant<Point, Polyline, Polygon, Rect> shape;

    Geometry() = default;
    Geometry(Point p) : shape(p) {}
    Geometry(Polyline l) : shape(std::move(l)) {}
    Geometry(Polygon p) : shape(std::move(p)) {}
    Geometry(Rect r) : shape(r) {}

    bool is_point() const { return std::holds_alternative<Point>(shape); }
    bool is_polyline() const { return std::holds_alternative<Polyline>(shape); }
    bool is_polygon() const { return std::holds_alternative<Polygon>(shape); }
    bool is_rect() const { return std::holds_alternative<Rect>(shape); }

    friend bool operator==(const Geometry&, const Geometry&) = default;
};

// Validation. Throws mddb::Error on any invariant violation; every operation
// below assumes its inputs passed validation.
void validate(const Point& p);
void validate(const Rect& r);
void validate(const Polyline& l);
void validate(const Polygon& p);
void validate(const Geometry& g);
void validate(const Layer& l);
void validate(const Network& n);

Rect mbr(const Geometry& g);

// Shoelace area of the outer ring minus the hole areas. A degenerate outer
// ring yields 0.
double area(const Polygon& p);

// Closed-set intersection test: shared boundary counts, open hole interiors
// do not belong to a polygon's point set.
bool overlaps(const Geometry& a, const Geometry& b);

// True iff p lies in the closed outer region and not strictly inside any
// hole. Boundaries of the outer ring and of holes count as inside.
bool inside(const Point& p, const Polygon& poly);

double distance(const Point& a, const Point& b);
double distance(const Point& p, const Polyline& l);
double segment_distance(const Point& p, const Point& a, const Point& b);

// Minimum distance from p to the point set of g (0 when p is contained).
double distance(const Point& p, const Geometry& g);

// Exact geometry-vs-rectangle test, used as the refinement step after an
// index MBR filter.
bool intersects_rect(const Geometry& g, const Rect& r);

bool segments_intersect(const Point& a, const Point& b, const Point& c,
                        const Point& d);

}  // namespace mddb::geom
