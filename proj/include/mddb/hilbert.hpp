#pragma once

#include <cstdint>
#include <utility>

#include "mddb/geom.hpp"

namespace mddb::sidx {

// Position of a grid cell along the Hilbert curve of a given order; v < 4^k.
struct HilbertValue {
    uint64_t v = 0;

    friend auto operator<=>(const HilbertValue&, const HilbertValue&) = default;
};

// Curve index of cell (x, y) on the 2^order x 2^order grid. The curve starts
// at (0, 0).
uint64_t hilbert_cell(uint32_t x, uint32_t y, int order);

// Inverse of hilbert_cell.
std::pair<uint32_t, uint32_t> hilbert_cell_coords(uint64_t d, int order);

// Hilbert index of the grid cell containing the center of r, on the grid
// induced by `world`. Throws when r is not contained in world or the order is
// out of range (1..31).
HilbertValue hilbert_value(const geom::Rect& r, int order, const geom::Rect& world);

// Same mapping but with the center clamped into the world box; used by the
// Hilbert R-tree so stray entries still get a key.
uint64_t hilbert_key_clamped(const geom::Rect& r, int order, const geom::Rect& world);

}  // namespace mddb::sidx
