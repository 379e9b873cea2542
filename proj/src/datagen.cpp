#include "mddb/datagen.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "mddb/fasta.hpp"

namespace mddb::bench {

using store::Database;
using store::Value;
using store::ValueList;

namespace {

std::string random_dna(std::mt19937_64& rng, uint64_t len) {
    static const char bases[] = "ACGT";
    std::string s(len, 'A');
    for (auto& c : s) c = bases[rng() % 4];
    return s;
}

}  // namespace

std::string PopulationSummary::table() const {
    std::ostringstream out;
    out << "Order " << orders << "\n"
        << "Family " << families << "\n"
        << "Genera " << genera << "\n"
        << "Species " << species << "\n"
        << "FlowerChar " << flower_chars << "\n"
        << "InfloChar " << inflo_chars << "\n"
        << "EMBLEntry " << embl_entries << "\n"
        << "Habitats " << habitats << "\n";
    return out.str();
}

PopulationSummary generate(Database& db, const GeneratorConfig& cfg) {
    const auto& catalog = db.catalog();
    for (const char* cls : {"Order", "Family", "Genera", "PlantSpecies", "FlowerChar",
                            "InfloChar", "EMBLEntry"})
        if (!catalog.has_class(cls))
            throw Error(std::string("generator needs class ") + cls +
                        " in the schema");
    if (cfg.branch_lo < 1 || cfg.branch_hi < cfg.branch_lo)
        throw Error("branch factor range must be a positive interval");
    if (cfg.sequences_per_species < 0 || cfg.orders < 1)
        throw Error("generator counts must be positive");

    std::mt19937_64 rng(cfg.seed);
    auto branch = [&]() {
        return std::uniform_int_distribution<int>(cfg.branch_lo, cfg.branch_hi)(rng);
    };

    std::vector<std::string> pool;
    if (cfg.fasta_pool) {
        for (auto& rec : seq::read_fasta_file(*cfg.fasta_pool))
            pool.push_back(std::move(rec.sequence));
        if (pool.empty()) throw Error("fasta pool is empty: " + *cfg.fasta_pool);
    }
    size_t pool_at = 0;

    PopulationSummary sum;
    std::vector<Oid> inflos;
    for (int i = 0; i < cfg.inflochar_pool; ++i)
        inflos.push_back(db.insert_object(
            "InfloChar", {Value{std::string("inflo") + std::to_string(i)}}));
    sum.inflo_chars = inflos.size();

    std::vector<std::string> reference_seqs;

    auto make_species = [&](const std::string& name, bool is_reference) {
        Oid flower = db.insert_object(
            "FlowerChar", {Value{std::string("fc-") + name},
                           Value{inflos[rng() % inflos.size()]}});
        ++sum.flower_chars;

        ValueList entries;
        bool relative = !is_reference &&
                        std::uniform_real_distribution<>(0, 1)(rng) <
                            cfg.relative_fraction &&
                        !reference_seqs.empty();
        for (int k = 0; k < cfg.sequences_per_species; ++k) {
            std::string text;
            if (!pool.empty()) {
                text = pool[pool_at++ % pool.size()];
            } else if (relative) {
                text = reference_seqs[rng() % reference_seqs.size()];
                uint64_t muts = std::max<uint64_t>(1, text.size() / 20);
                for (uint64_t m = 0; m < muts; ++m)
                    text[rng() % text.size()] = "ACGT"[rng() % 4];
            } else {
                uint64_t len = std::uniform_int_distribution<uint64_t>(
                    cfg.dna_min_length, cfg.dna_max_length)(rng);
                text = random_dna(rng, len);
            }
            if (is_reference) reference_seqs.push_back(text);
            store::SeqRef ref = db.put_dna(seq::encode_dna(text));
            Oid entry = db.insert_object(
                "EMBLEntry",
                {Value{"EMBL" + std::to_string(sum.embl_entries)}, Value{ref}});
            ++sum.embl_entries;
            entries.push_back(Value{entry});
        }

        double h = cfg.habitat_mean_height *
                   std::uniform_real_distribution<>(0.5, 1.5)(rng);
        double w = cfg.habitat_mean_width *
                   std::uniform_real_distribution<>(0.5, 1.5)(rng);
        double cx =
            std::uniform_real_distribution<>(cfg.center_min, cfg.center_max)(rng);
        double cy =
            std::uniform_real_distribution<>(cfg.center_min, cfg.center_max)(rng);
        geom::Polygon habitat{{{cx - w / 2, cy - h / 2},
                               {cx + w / 2, cy - h / 2},
                               {cx + w / 2, cy + h / 2},
                               {cx - w / 2, cy + h / 2}},
                              {}};
        ++sum.habitats;
        ++sum.species;
        return db.insert_object(
            "PlantSpecies",
            {Value{name}, Value{geom::Geometry{habitat}},
             Value{ValueList{Value{geom::Geometry{habitat}}}}, Value{flower},
             Value{std::move(entries)}});
    };

    bool planted_reference = false;
    for (int o = 0; o < cfg.orders; ++o) {
        ValueList families;
        int nfam = branch();
        for (int f = 0; f < nfam; ++f) {
            ValueList genera;
            int ngen = branch();
            for (int g = 0; g < ngen; ++g) {
                ValueList species;
                int nsp = branch();
                for (int s = 0; s < nsp; ++s) {
                    std::string name;
                    if (!planted_reference) {
                        name = "Magnolia-champa";
                        planted_reference = true;
                        species.push_back(Value{make_species(name, true)});
                    } else {
                        name = "sp" + std::to_string(sum.species);
                        species.push_back(Value{make_species(name, false)});
                    }
                }
                genera.push_back(Value{db.insert_object(
                    "Genera", {Value{"genus" + std::to_string(sum.genera)},
                               Value{std::move(species)}})});
                ++sum.genera;
            }
            families.push_back(Value{db.insert_object(
                "Family", {Value{"family" + std::to_string(sum.families)},
                           Value{std::move(genera)}})});
            ++sum.families;
        }
        db.insert_object("Order", {Value{"order" + std::to_string(sum.orders)},
                                   Value{std::move(families)}});
        ++sum.orders;
    }
    return sum;
}

void write_sequoia_files(const std::string& points_path,
                         const std::string& polygons_path,
                         const std::string& graphs_path, const SequoiaGenConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    auto coord = [&]() {
        return std::uniform_real_distribution<>(cfg.world_min, cfg.world_max)(rng);
    };

    {
        std::ofstream out(points_path);
        if (!out) throw Error("cannot write " + points_path);
        for (uint64_t i = 0; i < cfg.points; ++i)
            out << i << "\tpt" << i << "\t" << coord() << "\t" << coord() << "\n";
    }
    {
        std::ofstream out(polygons_path);
        if (!out) throw Error("cannot write " + polygons_path);
        double span = cfg.world_max - cfg.world_min;
        for (uint64_t i = 0; i < cfg.polygons; ++i) {
            double cx = coord(), cy = coord();
            double w = std::uniform_real_distribution<>(span / 2000, span / 200)(rng);
            double h = std::uniform_real_distribution<>(span / 2000, span / 200)(rng);
            int landuse = static_cast<int>(rng() % cfg.landuse_kinds);
            out << i << "\t" << landuse << "\t4\t" << cx - w << " " << cy - h << " "
                << cx + w << " " << cy - h << " " << cx + w << " " << cy + h << " "
                << cx - w << " " << cy + h;
            if (std::uniform_real_distribution<>(0, 1)(rng) < cfg.hole_fraction) {
                double hw = w / 3, hh = h / 3;
                out << "\tH 4 " << cx - hw << " " << cy - hh << " " << cx + hw << " "
                    << cy - hh << " " << cx + hw << " " << cy + hh << " " << cx - hw
                    << " " << cy + hh;
            }
            out << "\n";
        }
    }
    {
        std::ofstream out(graphs_path);
        if (!out) throw Error("cannot write " + graphs_path);
        double span = cfg.world_max - cfg.world_min;
        for (uint64_t i = 0; i < cfg.graphs; ++i) {
            int n = 2 + static_cast<int>(rng() % 6);
            double x = coord(), y = coord();
            out << i << "\t" << n << "\t" << x << " " << y;
            for (int v = 1; v < n; ++v) {
                x += std::uniform_real_distribution<>(-span / 500, span / 500)(rng);
                y += std::uniform_real_distribution<>(-span / 500, span / 500)(rng);
                out << " " << x << " " << y;
            }
            out << "\n";
        }
    }
}

}  // namespace mddb::bench
