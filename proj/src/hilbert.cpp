#include "mddb/hilbert.hpp"

#include <algorithm>
#include <cmath>

namespace mddb::sidx {

namespace {

void check_order(int order) {
    if (order < 1 || order > 31) throw Error("hilbert order must be in 1..31");
}

}  // namespace

uint64_t hilbert_cell(uint32_t x, uint32_t y, int order) {
    check_order(order);
    uint64_t d = 0;
    for (uint32_t s = 1u << (order - 1); s > 0; s >>= 1) {
        uint32_t rx = (x & s) ? 1 : 0;
        uint32_t ry = (y & s) ? 1 : 0;
        d += static_cast<uint64_t>(s) * s * ((3 * rx) ^ ry);
        // Rotate/reflect the lower-order quadrant into canonical position.
        x &= s - 1;
        y &= s - 1;
        if (ry == 0) {
            if (rx == 1) {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::swap(x, y);
        }
    }
    return d;
}

std::pair<uint32_t, uint32_t> hilbert_cell_coords(uint64_t d, int order) {
    check_order(order);
    uint32_t x = 0, y = 0;
    for (uint32_t s = 1; s < (1u << order); s <<= 1) {
        uint32_t rx = 1 & static_cast<uint32_t>(d / 2);
        uint32_t ry = 1 & static_cast<uint32_t>(d ^ rx);
        if (ry == 0) {
            if (rx == 1) {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::swap(x, y);
        }
        x += s * rx;
        y += s * ry;
        d /= 4;
    }
    return {x, y};
}

namespace {

uint64_t cell_of_center(const geom::Point& c, int order, const geom::Rect& world,
                        bool clamp) {
    double w = world.width();
    double h = world.height();
    double fx = w > 0 ? (c.x - world.xmin) / w : 0.0;
    double fy = h > 0 ? (c.y - world.ymin) / h : 0.0;
    double n = static_cast<double>(1u << order);
    auto grid = [&](double f) {
        auto g = static_cast<int64_t>(std::floor(f * n));
        return std::clamp<int64_t>(g, 0, static_cast<int64_t>(n) - 1);
    };
    if (clamp) {
        fx = std::clamp(fx, 0.0, 1.0);
        fy = std::clamp(fy, 0.0, 1.0);
    }
    return hilbert_cell(static_cast<uint32_t>(grid(fx)), static_cast<uint32_t>(grid(fy)),
                        order);
}

}  // namespace

HilbertValue hilbert_value(const geom::Rect& r, int order, const geom::Rect& world) {
    check_order(order);
    if (!world.contains(r)) throw Error("rect lies outside the hilbert domain");
    return {cell_of_center(r.center(), order, world, false)};
}

uint64_t hilbert_key_clamped(const geom::Rect& r, int order, const geom::Rect& world) {
    check_order(order);
    return cell_of_center(r.center(), order, world, true);
}

}  // namespace mddb::sidx
