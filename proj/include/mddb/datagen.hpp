#pragma once

#include <optional>

#include "mddb/store.hpp"

namespace mddb::bench {

// Synthetic biodiversity population parameters: a fixed fan-out of four
// orders, then U(lo, hi) children per level; every species gets one habitat
// rectangle and a fixed number of DNA sequences.
struct GeneratorConfig {
    uint64_t seed = 1;
    int orders = 4;
    int branch_lo = 1;
    int branch_hi = 19;
    double habitat_mean_height = 10.0;
    double habitat_mean_width = 12.0;
    // Habitat centers are uniform over this box.
    double center_min = -1000.0;
    double center_max = -100.0;
    int sequences_per_species = 10;
    uint64_t dna_min_length = 1000;
    uint64_t dna_max_length = 10000;
    int inflochar_pool = 5;
    // Fraction of species carrying mutated copies of the reference species'
    // sequences, so similarity queries have non-trivial answers.
    double relative_fraction = 0.1;
    std::optional<std::string> fasta_pool;  // sequences drawn from a file instead
};

struct PopulationSummary {
    uint64_t orders = 0;
    uint64_t families = 0;
    uint64_t genera = 0;
    uint64_t species = 0;
    uint64_t flower_chars = 0;
    uint64_t inflo_chars = 0;
    uint64_t embl_entries = 0;
    uint64_t habitats = 0;

    std::string table() const;
};

// Populates a database created over the demo schema. Deterministic for a
// fixed config; "Magnolia-champa" is always planted as the first species.
PopulationSummary generate(store::Database& db, const GeneratorConfig& cfg);

// Synthetic vector datasets in the loader's ASCII formats.
struct SequoiaGenConfig {
    uint64_t seed = 1;
    uint64_t points = 5000;
    uint64_t polygons = 5000;
    uint64_t graphs = 10000;
    double world_min = 0.0;
    double world_max = 100000.0;
    double hole_fraction = 0.2;  // polygons carrying an island
    int landuse_kinds = 10;
};

void write_sequoia_files(const std::string& points_path,
                         const std::string& polygons_path,
                         const std::string& graphs_path, const SequoiaGenConfig& cfg);

}  // namespace mddb::bench
