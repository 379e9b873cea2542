#pragma once

#include <string_view>

namespace mddb {

// Bundled biodiversity object model: the Order/Family/Genera/PlantSpecies
// taxonomy chain with identification characteristics, habitat geometry and
// DNA entries.
std::string_view demo_schema();

// Vector benchmark model: named points, landuse polygons and graph polylines.
std::string_view sequoia_schema();

}  // namespace mddb
