#include "mddb/demo.hpp"

namespace mddb {

std::string_view demo_schema() {
    return R"(// Biodiversity object model
class Order {
  name: string;
  families: collection(reference(Family));
}
class Family {
  name: string;
  genera: collection(reference(Genera));
}
class Genera {
  name: string;
  species: collection(reference(PlantSpecies));
}
class PlantSpecies {
  name: string;
  georegion: polygon;
  habitats: collection(polygon);
  flowerchar: reference(FlowerChar);
  stDNAEntries: collection(reference(EMBLEntry));
}
class IdentChar {
  descr: string;
}
class FlowerChar extends IdentChar {
  inflochar: reference(InfloChar);
}
class InfloChar {
  name: string;
}
class EMBLEntry {
  accession: string;
  dna: dna;
}
index btree(PlantSpecies.name)
index rtree(PlantSpecies.georegion)
index pathdict(PlantSpecies.flowerchar.inflochar)
index mt(IdentChar, descr)
)";
}

std::string_view sequoia_schema() {
    return R"(// Vector benchmark model
class SPoint {
  name: string;
  loc: point;
}
class SPolygon {
  landuse: integer;
  area: real;
  region: polygon;
}
class SGraph {
  shape: polyline;
}
index btree(SPoint.name)
index rtree(SPoint.loc)
index rtree(SPolygon.region)
index btree(SPolygon.area)
index btree(SPolygon.landuse)
index rtree(SGraph.shape)
)";
}

}  // namespace mddb
