#include <chrono>
#include <future>
#include <iomanip>
#include <sstream>

#include "mddb/bench.hpp"
#include "mddb/demo.hpp"

namespace mddb::bench {

using query::EvalContext;
using query::PhysicalPlan;
using query::PlannerConfig;
using query::QueryAst;
using query::RowSet;
using store::Database;
using store::Value;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

// Execution-ordered operator names taken from the explain text.
std::string plan_summary(const query::PhysicalPlan& plan) {
    std::string text = query::explain(plan);
    std::string out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        size_t start = line.find_first_not_of(' ');
        if (start == std::string::npos) continue;
        size_t end = line.find(' ', start);
        std::string name = line.substr(start, end - start);
        if (!out.empty()) out += " > ";
        out += name;
    }
    return out;
}

std::vector<std::string> sorted_row_keys(const RowSet& rs, const Database& db) {
    std::vector<std::string> out;
    out.reserve(rs.rows.size());
    for (const auto& row : rs.rows) {
        RowSet one;
        one.columns = rs.columns;
        one.rows.push_back(row);
        out.push_back(query::serialize_rows(one, db, query::OutputFormat::tsv));
    }
    std::sort(out.begin(), out.end());
    return out;
}

geom::Rect data_mbr(const Database& db, const std::string& class_name,
                    const std::string& attr) {
    bool first = true;
    geom::Rect world{0, 0, 0, 0};
    db.scan_extent(class_name, true, [&](Oid oid, const store::ObjectRecord& rec) {
        size_t pos = db.field_index(db.class_of(oid), attr);
        geom::Rect r = geom::mbr(rec.fields[pos].as_geometry());
        world = first ? r : world.united(r);
        first = false;
    });
    if (first) throw Error("extent " + class_name + " is empty");
    return world;
}

std::string fmt(double v) {
    std::ostringstream out;
    out << std::setprecision(12) << v;
    return out.str();
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& bio_queries() {
    static const std::vector<std::pair<std::string, std::string>> queries = {
        {"tq1",
         "select s.name from s in PlantSpecies, m in PlantSpecies "
         "where m.name = 'Magnolia-champa' "
         "and s.flowerchar.inflochar = m.flowerchar.inflochar"},
        {"gq1",
         "select e.dna from s in PlantSpecies, e in s.stDNAEntries "
         "where s.name = 'Magnolia-champa'"},
        {"gq2",
         "select distinct s.name from m in PlantSpecies, me in m.stDNAEntries, "
         "s in PlantSpecies, e in s.stDNAEntries "
         "where m.name = 'Magnolia-champa' and e in me.dna.blast(70)"},
        {"mdq1",
         "select s.name from s in PlantSpecies, m in PlantSpecies "
         "where m.name = 'Magnolia-champa' "
         "and s.georegion overlaps m.georegion "
         "and s.flowerchar.inflochar = m.flowerchar.inflochar"},
        {"mdq2",
         "select * from species1 in PlantSpecies, \n"
         "              species2 in PlantSpecies,\n"
         "              embl1 in species1.stDNAEntries, \n"
         "              embl2 in species2.stDNAEntries \n"
         "        where\n"
         "              species1.flowerchar.inflochar = species2.flowerchar.inflochar\n"
         "              and\n"
         "              species1.georegion overlaps species2.georegion\n"
         "              and\n"
         "              embl1 in embl2.dna.blast(80);"},
    };
    return queries;
}

PlannerConfig planner_config_for(const Database& db, const std::string& config_name) {
    PlannerConfig cfg;
    if (config_name == "all" || config_name == "hilbert") return cfg;
    std::set<std::string> allowed;
    for (const auto& decl : db.catalog().indexes()) {
        bool take = false;
        switch (decl.kind) {
            case cat::IndexDecl::Kind::pathdict:
            case cat::IndexDecl::Kind::btree:
                take = config_name == "pathdict" || config_name == "pathdict+rtree";
                break;
            case cat::IndexDecl::Kind::rtree:
            case cat::IndexDecl::Kind::mt:
                take = config_name == "pathdict+rtree";
                break;
        }
        if (take) allowed.insert(decl.name());
    }
    if (config_name != "none" && config_name != "pathdict" &&
        config_name != "pathdict+rtree")
        throw Error("unknown index configuration: " + config_name);
    cfg.allowed_indexes = std::move(allowed);
    return cfg;
}

std::string BenchReport::table() const {
    std::ostringstream out;
    out << std::left << std::setw(12) << "query" << std::setw(16) << "config"
        << std::right << std::setw(12) << "seconds" << std::setw(10) << "rows"
        << "  " << std::left << std::setw(9) << "verified"
        << "plan" << "\n";
    for (const auto& e : entries) {
        out << std::left << std::setw(12) << e.query << std::setw(16) << e.config
            << std::right << std::setw(12) << std::fixed << std::setprecision(4)
            << e.seconds << std::setw(10) << e.rows << "  " << std::left
            << std::setw(9) << (e.verify_ran ? (e.verified ? "yes" : "NO") : "-")
            << e.plan << "\n";
    }
    for (const auto& [k, v] : extras) out << k << ": " << v << "\n";
    return out.str();
}

std::string BenchReport::records() const {
    std::ostringstream out;
    for (const auto& e : entries) {
        out << "query=" << e.query << "\tconfig=" << e.config << "\tseconds="
            << std::fixed << std::setprecision(6) << e.seconds << "\trows=" << e.rows
            << "\tverified=" << (e.verify_ran ? (e.verified ? "1" : "0") : "-")
            << "\tplan=" << e.plan << "\n";
    }
    for (const auto& [k, v] : extras) out << k << "=" << v << "\n";
    return out.str();
}

bool BenchReport::all_verified() const {
    for (const auto& e : entries)
        if (e.verify_ran && !e.verified) return false;
    return true;
}

const BenchReport::Entry* BenchReport::find(const std::string& query,
                                            const std::string& config) const {
    for (const auto& e : entries)
        if (e.query == query && e.config == config) return &e;
    return nullptr;
}

namespace {

struct SuiteRunner {
    const Database& db;
    const SuiteOptions& options;
    BenchReport report;

    // Hilbert copies of the declared spatial indexes, built once per run.
    std::map<std::string, sidx::RTree> hilbert_trees;

    explicit SuiteRunner(const Database& db, const SuiteOptions& options)
        : db(db), options(options) {}

    bool wants(const std::string& query) const {
        if (options.queries.empty()) return true;
        for (const auto& q : options.queries)
            if (q == query) return true;
        return false;
    }

    void ensure_hilbert() {
        if (!hilbert_trees.empty()) return;
        for (const auto& decl : db.catalog().indexes()) {
            if (decl.kind != cat::IndexDecl::Kind::rtree) continue;
            const sidx::RTree* base = db.rtree(decl.class_name, decl.attr);
            if (!base || base->empty()) continue;
            std::vector<sidx::SpatialEntry> entries;
            entries.reserve(base->size());
            base->for_each_entry(
                [&](const sidx::SpatialEntry& e) { entries.push_back(e); });
            sidx::RTreeParams params = base->params();
            geom::Rect world = entries.front().key;
            for (const auto& e : entries) world = world.united(e.key);
            params.world = world;
            hilbert_trees.emplace(decl.name(),
                                  sidx::RTree::bulk_load_hilbert(entries, params));
            report.extras.emplace_back("utilization.rstar." + decl.name(),
                                       fmt(base->utilization()));
            report.extras.emplace_back(
                "utilization.hilbert." + decl.name(),
                fmt(hilbert_trees.at(decl.name()).utilization()));
        }
    }

    EvalContext make_context(const std::string& config) {
        EvalContext ctx(db);
        if (config == "hilbert") {
            ensure_hilbert();
            for (const auto& [name, tree] : hilbert_trees)
                ctx.rtree_overrides[name] = &tree;
        }
        return ctx;
    }

    void run_oql(const std::string& name, const std::string& text,
                 const std::string& config) {
        QueryAst ast = query::parse_query(text);
        query::typecheck(ast, db.catalog());
        PlannerConfig cfg = planner_config_for(db, config);
        PhysicalPlan plan = query::optimize(ast, db, cfg);

        BenchReport::Entry entry;
        entry.query = name;
        entry.config = config;
        entry.plan = plan_summary(plan);

        EvalContext ctx = make_context(config);
        auto start = std::chrono::steady_clock::now();
        RowSet rows = query::execute(plan, ctx);
        entry.seconds = seconds_since(start);
        entry.rows = rows.rows.size();

        if (options.verify) {
            entry.verify_ran = true;
            auto check = [this, text, got = sorted_row_keys(rows, db)]() {
                QueryAst fresh = query::parse_query(text);
                query::typecheck(fresh, db.catalog());
                RowSet expected = query::naive_execute(fresh, db);
                return got == sorted_row_keys(expected, db);
            };
            if (options.parallel_verify) {
                size_t slot = report.entries.size();
                pending_checks.emplace_back(slot, std::async(std::launch::async, check));
            } else {
                entry.verified = check();
            }
        }
        report.entries.push_back(std::move(entry));
    }

    // Deferred parallel verification results.
    std::vector<std::pair<size_t, std::future<bool>>> pending_checks;

    void settle_checks() {
        for (auto& [slot, fut] : pending_checks)
            report.entries[slot].verified = fut.get();
        pending_checks.clear();
    }

    const sidx::RTree* spatial_tree(const std::string& config,
                                    const std::string& class_name,
                                    const std::string& attr) {
        std::string name = "rtree:" + class_name + "." + attr;
        if (config == "hilbert") {
            ensure_hilbert();
            auto it = hilbert_trees.find(name);
            if (it != hilbert_trees.end()) return &it->second;
        }
        return db.rtree(class_name, attr);
    }

    std::vector<geom::Point> probe_points(int count) {
        std::vector<geom::Point> probes;
        db.scan_extent("SPoint", true, [&](Oid, const store::ObjectRecord& rec) {
            if (static_cast<int>(probes.size()) >= count && count > 0) return;
            size_t pos = db.field_index("SPoint", "loc");
            probes.push_back(std::get<geom::Point>(rec.fields[pos].as_geometry().shape));
        });
        return probes;
    }

    void run_closest(const std::string& name, const std::string& config, int sample,
                     bool all_points) {
        const sidx::RTree* tree = spatial_tree(config, "SGraph", "shape");
        if (!tree) throw Error("closest benchmark needs rtree(SGraph.shape)");
        auto resolve = [&](Oid oid) {
            return db.get_field(oid, "shape").as_geometry();
        };
        std::vector<geom::Point> probes =
            probe_points(all_points && options.full_closest_scan ? 0 : sample);

        BenchReport::Entry entry;
        entry.query = name;
        entry.config = config;
        entry.plan = "RtreeClosest";

        std::vector<Oid> found;
        found.reserve(probes.size());
        auto start = std::chrono::steady_clock::now();
        for (const auto& p : probes) found.push_back(tree->closest(p, resolve));
        entry.seconds = seconds_since(start);
        entry.rows = found.size();

        if (options.verify) {
            entry.verify_ran = true;
            entry.verified = true;
            for (size_t i = 0; i < probes.size(); ++i) {
                // Index-free oracle with the same tie-break.
                bool first = true;
                double best_d = 0;
                Oid best{};
                db.scan_extent("SGraph", true, [&](Oid oid, const store::ObjectRecord&) {
                    double d = geom::distance(probes[i], resolve(oid));
                    if (first || d < best_d || (d == best_d && oid < best)) {
                        first = false;
                        best_d = d;
                        best = oid;
                    }
                });
                if (best != found[i]) entry.verified = false;
            }
        }
        report.entries.push_back(std::move(entry));
    }

    void run_polyline_self_join(const std::string& config) {
        const sidx::RTree* tree = spatial_tree(config, "SGraph", "shape");
        if (!tree) throw Error("spatial join benchmark needs rtree(SGraph.shape)");
        auto resolve = [&](Oid oid) {
            return db.get_field(oid, "shape").as_geometry();
        };

        BenchReport::Entry entry;
        entry.query = "paradise13";
        entry.config = config;
        entry.plan = "SpatialJoin(self)";

        uint64_t pairs = 0;
        auto start = std::chrono::steady_clock::now();
        std::vector<std::pair<Oid, Oid>> got;
        sidx::spatial_join(*tree, *tree, sidx::JoinPredicate::overlaps, resolve,
                           resolve, [&](Oid a, Oid b) {
                               ++pairs;
                               if (options.verify) got.emplace_back(a, b);
                           });
        entry.seconds = seconds_since(start);
        entry.rows = pairs;

        if (options.verify) {
            entry.verify_ran = true;
            std::vector<std::pair<Oid, Oid>> expected;
            std::vector<std::pair<Oid, geom::Geometry>> shapes;
            db.scan_extent("SGraph", true, [&](Oid oid, const store::ObjectRecord& rec) {
                size_t pos = db.field_index("SGraph", "shape");
                shapes.emplace_back(oid, rec.fields[pos].as_geometry());
            });
            for (size_t i = 0; i < shapes.size(); ++i)
                for (size_t j = i + 1; j < shapes.size(); ++j)
                    if (geom::overlaps(shapes[i].second, shapes[j].second))
                        expected.emplace_back(shapes[i].first, shapes[j].first);
            std::sort(got.begin(), got.end());
            std::sort(expected.begin(), expected.end());
            entry.verified = got == expected;
        }
        report.entries.push_back(std::move(entry));
    }

    void run_bio(const std::string& config) {
        for (const auto& [name, text] : bio_queries())
            if (wants(name)) run_oql(name, text, config);
    }

    void run_sequoia(const std::string& config) {
        geom::Rect world = data_mbr(db, "SPolygon", "region");
        double w = world.width(), h = world.height();

        std::string first_name;
        db.scan_extent("SPoint", true, [&](Oid, const store::ObjectRecord& rec) {
            if (first_name.empty()) first_name = rec.fields[0].as_text();
        });

        double total_area = 0;
        uint64_t polys = 0;
        db.scan_extent("SPolygon", true, [&](Oid, const store::ObjectRecord& rec) {
            total_area += std::get<double>(rec.fields[1].v);
            ++polys;
        });
        double avg_area = polys ? total_area / double(polys) : 0;

        auto box = [&](double frac) {
            double cx = world.xmin + w / 2, cy = world.ymin + h / 2;
            std::ostringstream out;
            out << "rect(" << cx - w * frac / 2 << ", " << cy - h * frac / 2 << ", "
                << cx + w * frac / 2 << ", " << cy + h * frac / 2 << ")";
            return out.str();
        };

        if (wants("sequoia5"))
            run_oql("sequoia5",
                    "select p.name from p in SPoint where p.name = '" + first_name +
                        "'",
                    config);
        if (wants("sequoia6"))
            run_oql("sequoia6",
                    "select g.landuse from g in SPolygon where g.region overlaps " +
                        box(0.1),
                    config);
        if (wants("sequoia7"))
            run_oql("sequoia7",
                    "select g.area from g in SPolygon where g.area > " +
                        fmt(avg_area) + " and g.region overlaps " + box(0.3),
                    config);
        if (wants("sequoia8"))
            run_oql("sequoia8",
                    "select pt.name, pg.landuse from pt in SPoint, pg in SPolygon "
                    "where pg.region overlaps rect_around(pt.loc, " +
                        fmt(w / 2000) + ")",
                    config);
        if (wants("sequoia10"))
            run_oql("sequoia10",
                    "select pt.name, pg.landuse from pt in SPoint, pg in SPolygon "
                    "where pg.landuse = 3 and pt.loc inside pg.region",
                    config);
    }

    void run_paradise(const std::string& config) {
        if (wants("paradise11"))
            run_closest("paradise11", config, options.closest_probes, false);
        if (wants("paradise12"))
            run_closest("paradise12", config, options.closest_all_sample, true);
        if (wants("paradise13")) run_polyline_self_join(config);
    }
};

}  // namespace

BenchReport run_suite(const Database& db, const std::string& suite,
                      const SuiteOptions& options) {
    SuiteRunner runner(db, options);
    for (const auto& config : options.configs) {
        if (suite == "bio")
            runner.run_bio(config);
        else if (suite == "sequoia")
            runner.run_sequoia(config);
        else if (suite == "paradise")
            runner.run_paradise(config);
        else
            throw Error("unknown suite: " + suite + " (bio, sequoia, paradise)");
    }
    runner.settle_checks();
    return runner.report;
}

}  // namespace mddb::bench
