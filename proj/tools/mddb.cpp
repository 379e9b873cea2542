// mddb command-line front end: schema loading, data generation, vector file
// loading, queries, a small repl and the benchmark suites.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mddb/bench.hpp"
#include "mddb/datagen.hpp"
#include "mddb/demo.hpp"
#include "mddb/exec.hpp"
#include "mddb/fasta.hpp"
#include "mddb/mtindex.hpp"
#include "mddb/pathdict.hpp"

using namespace mddb;
using store::Database;

namespace {

struct CliConfig {
    std::string db_path;
    uint64_t cache_pages = 0;
    std::string format = "table";
    bool verbose = false;
    bool timing = false;
};

query::OutputFormat output_format(const CliConfig& cfg) {
    if (cfg.format == "tsv") return query::OutputFormat::tsv;
    return query::OutputFormat::records;
}

Database open_db(const CliConfig& cfg) {
    if (cfg.db_path.empty()) throw Error("no database given (use --db)");
    Database db = Database::open(cfg.db_path);
    if (cfg.cache_pages) db.set_cache_size(cfg.cache_pages);
    return db;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double run_timed(const std::function<void()>& fn) {
    auto start = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

void print_rows(const CliConfig& cfg, const Database& db, const query::RowSet& rows) {
    if (cfg.format == "table") {
        for (size_t i = 0; i < rows.columns.size(); ++i)
            std::cout << (i ? "\t" : "") << rows.columns[i];
        std::cout << "\n";
        query::RowSet body = rows;
        std::cout << query::serialize_rows(body, db, query::OutputFormat::tsv);
        std::cout << "(" << rows.rows.size() << " rows)\n";
    } else {
        std::cout << query::serialize_rows(rows, db, output_format(cfg));
    }
}

void run_query_text(const CliConfig& cfg, Database& db, const std::string& text,
                    bool show_explain, bool show_timing) {
    query::QueryAst ast = query::parse_query(text);
    query::typecheck(ast, db.catalog());
    query::PhysicalPlan plan = query::optimize(ast, db, {});
    if (show_explain) std::cout << query::explain(plan);
    query::EvalContext ctx(db);
    query::RowSet rows;
    double secs = run_timed([&] { rows = query::execute(plan, ctx); });
    print_rows(cfg, db, rows);
    if (show_timing || cfg.timing)
        std::cout << "time: " << std::fixed << std::setprecision(4) << secs << "s\n";
}

void repl(const CliConfig& cfg, Database& db) {
    std::cout << "mddb repl; end queries with ';', \\q quits, \\explain and "
                 "\\timing toggle.\n";
    bool show_explain = false;
    bool show_timing = false;
    std::string pending;
    std::string line;
    while (std::cout << (pending.empty() ? "mddb> " : "  ... ") && std::cout.flush() &&
           std::getline(std::cin, line)) {
        if (pending.empty() && !line.empty() && line[0] == '\\') {
            if (line == "\\q" || line == "\\quit") break;
            if (line == "\\explain")
                std::cout << "explain " << ((show_explain = !show_explain) ? "on" : "off")
                          << "\n";
            else if (line == "\\timing")
                std::cout << "timing " << ((show_timing = !show_timing) ? "on" : "off")
                          << "\n";
            else
                std::cout << "commands: \\q \\explain \\timing\n";
            continue;
        }
        pending += line + "\n";
        if (line.find(';') == std::string::npos) continue;
        try {
            run_query_text(cfg, db, pending, show_explain, show_timing);
        } catch (const std::exception& e) {
            std::cout << "error: " << e.what() << "\n";
        }
        pending.clear();
    }
}

void dump_index(const Database& db, const std::string& name) {
    for (const auto& decl : db.catalog().indexes()) {
        if (decl.name() != name) continue;
        switch (decl.kind) {
            case cat::IndexDecl::Kind::rtree:
                std::cout << db.rtree(decl.class_name, decl.attr)->dump();
                return;
            case cat::IndexDecl::Kind::mt:
                std::cout << db.mt_index(decl.class_name, decl.attr)->dump();
                return;
            case cat::IndexDecl::Kind::pathdict:
                std::cout << db.path_dict(name)->dump();
                return;
            case cat::IndexDecl::Kind::btree: {
                const store::BTree* tree = db.btree(decl.class_name, decl.attr);
                std::cout << "entries=" << tree->size()
                          << " distinct=" << tree->distinct_keys()
                          << " height=" << tree->height()
                          << " nodes=" << tree->node_count() << "\n";
                return;
            }
        }
    }
    throw Error("no index named " + name + " (see stats for declared indexes)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mddb: embedded taxonomy/spatial/sequence database"};
    app.require_subcommand(1);
    app.fallthrough();

    CliConfig cfg;
    app.add_option("-d,--db", cfg.db_path, "database file");
    app.add_option("--cache", cfg.cache_pages, "read cache budget in pages");
    app.add_option("--format", cfg.format, "output format: table|tsv|records")
        ->check(CLI::IsMember({"table", "tsv", "records"}));
    app.add_flag("-v,--verbose", cfg.verbose, "verbose diagnostics");
    app.add_flag("--timing", cfg.timing, "print elapsed time per command");

    // init
    auto* cmd_init = app.add_subcommand("init", "create an empty database");
    std::string init_schema;
    cmd_init->add_option("--schema", init_schema, "schema file to load immediately");

    // load-schema
    auto* cmd_schema = app.add_subcommand("load-schema", "load a schema into an empty database");
    std::string schema_file, schema_builtin;
    cmd_schema->add_option("file", schema_file, "schema DSL file");
    cmd_schema->add_option("--builtin", schema_builtin,
                           "use a bundled schema: bio|sequoia")
        ->check(CLI::IsMember({"bio", "sequoia"}));

    // show-schema
    auto* cmd_show = app.add_subcommand("show-schema", "print a bundled schema");
    std::string show_which;
    cmd_show->add_option("which", show_which, "bio|sequoia")
        ->required()
        ->check(CLI::IsMember({"bio", "sequoia"}));

    // gen-data
    auto* cmd_gen = app.add_subcommand("gen-data", "generate the synthetic biodiversity population");
    bench::GeneratorConfig gen_cfg;
    cmd_gen->add_option("--seed", gen_cfg.seed, "generator seed");
    cmd_gen->add_option("--orders", gen_cfg.orders, "top-level fan-out");
    cmd_gen->add_option("--branch-lo", gen_cfg.branch_lo, "per-level branch minimum");
    cmd_gen->add_option("--branch-hi", gen_cfg.branch_hi, "per-level branch maximum");
    cmd_gen->add_option("--sequences", gen_cfg.sequences_per_species,
                        "DNA sequences per species");
    cmd_gen->add_option("--dna-min", gen_cfg.dna_min_length, "minimum DNA length");
    cmd_gen->add_option("--dna-max", gen_cfg.dna_max_length, "maximum DNA length");
    cmd_gen->add_option("--relatives", gen_cfg.relative_fraction,
                        "fraction of species with sequences similar to the reference");
    std::string fasta_pool;
    cmd_gen->add_option("--fasta", fasta_pool, "draw sequences from this FASTA file");

    // gen-sequoia
    auto* cmd_genseq = app.add_subcommand("gen-sequoia", "write synthetic vector data files");
    bench::SequoiaGenConfig seq_cfg;
    std::string out_dir = ".";
    cmd_genseq->add_option("--seed", seq_cfg.seed, "generator seed");
    cmd_genseq->add_option("--points", seq_cfg.points, "point count");
    cmd_genseq->add_option("--polygons", seq_cfg.polygons, "polygon count");
    cmd_genseq->add_option("--graphs", seq_cfg.graphs, "polyline count");
    cmd_genseq->add_option("--out-dir", out_dir, "output directory");

    // load-sequoia
    auto* cmd_loadseq = app.add_subcommand("load-sequoia", "load vector data files");
    std::string pts_file, polys_file, graphs_file;
    cmd_loadseq->add_option("points", pts_file)->required();
    cmd_loadseq->add_option("polygons", polys_file)->required();
    cmd_loadseq->add_option("graphs", graphs_file)->required();

    // load-fasta
    auto* cmd_fasta = app.add_subcommand("load-fasta", "load FASTA records as objects");
    std::string fasta_file, fasta_class, fasta_attr, fasta_header_attr;
    cmd_fasta->add_option("file", fasta_file)->required();
    cmd_fasta->add_option("--class", fasta_class, "target class")->required();
    cmd_fasta->add_option("--attr", fasta_attr, "dna attribute")->required();
    cmd_fasta->add_option("--header-attr", fasta_header_attr,
                          "string attribute receiving the header");

    // query / explain / repl
    auto* cmd_query = app.add_subcommand("query", "run a query");
    std::string query_text, query_file;
    cmd_query->add_option("text", query_text, "query text");
    cmd_query->add_option("--file", query_file, "read the query from a file");
    bool query_explain = false;
    cmd_query->add_flag("--explain", query_explain, "print the plan first");

    auto* cmd_explain = app.add_subcommand("explain", "show a query plan");
    std::string explain_text;
    cmd_explain->add_option("text", explain_text, "query text")->required();

    auto* cmd_repl = app.add_subcommand("repl", "interactive query loop");

    // bench
    auto* cmd_bench = app.add_subcommand("bench", "run a benchmark suite");
    std::string suite;
    cmd_bench->add_option("suite", suite, "bio|sequoia|paradise")->required();
    std::string configs_arg = "none";
    cmd_bench->add_option("--configs", configs_arg,
                          "comma list: none,pathdict,pathdict+rtree,hilbert");
    bool bench_verify = false;
    cmd_bench->add_flag("--verify", bench_verify, "check results against the naive evaluator");
    std::string queries_arg;
    cmd_bench->add_option("--queries", queries_arg, "comma list of query names");
    bench::SuiteOptions suite_opts;
    cmd_bench->add_flag("--parallel-verify", suite_opts.parallel_verify,
                        "run verification re-runs on worker threads");
    cmd_bench->add_option("--probes", suite_opts.closest_probes,
                          "nearest-object probe count");
    cmd_bench->add_option("--sample", suite_opts.closest_all_sample,
                          "sample size for the all-points nearest query");
    cmd_bench->add_flag("--full", suite_opts.full_closest_scan,
                        "run the all-points nearest query unsampled");

    // stats / dump-index / dump-seq
    app.add_subcommand("stats", "print extent and index statistics");
    auto* cmd_dumpseq = app.add_subcommand("dump-seq", "print a stored sequence as text");
    uint64_t dumpseq_id = 0;
    bool dumpseq_fasta = false;
    cmd_dumpseq->add_option("id", dumpseq_id, "sequence number")->required();
    cmd_dumpseq->add_flag("--fasta", dumpseq_fasta, "wrap as a FASTA record");
    auto* cmd_dump = app.add_subcommand("dump-index", "debug dump of one index");
    std::string dump_name;
    cmd_dump->add_option("name", dump_name, "index name, e.g. rtree:SPolygon.region")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_init->parsed()) {
            if (cfg.db_path.empty()) throw Error("no database given (use --db)");
            cat::Catalog catalog =
                init_schema.empty() ? cat::parse_schema("")
                                    : cat::parse_schema(read_file(init_schema));
            Database db = Database::create(cfg.db_path, catalog);
            db.flush();
            std::cout << "created " << cfg.db_path << "\n";
        } else if (cmd_schema->parsed()) {
            if (schema_file.empty() == schema_builtin.empty())
                throw Error("load-schema needs a file or --builtin, not both");
            {
                Database db = open_db(cfg);
                if (db.catalog().class_count() > 0)
                    throw Error("database already has a schema");
            }
            std::filesystem::remove(cfg.db_path);
            std::string text = schema_builtin == "bio"    ? std::string(demo_schema())
                               : schema_builtin == "sequoia"
                                   ? std::string(sequoia_schema())
                                   : read_file(schema_file);
            cat::Catalog catalog = cat::parse_schema(text);
            Database db = Database::create(cfg.db_path, catalog);
            db.flush();
            std::cout << "schema loaded: " << catalog.classes().size() << " classes, "
                      << catalog.indexes().size() << " indexes\n";
        } else if (cmd_show->parsed()) {
            std::cout << (show_which == "bio" ? demo_schema() : sequoia_schema());
        } else if (cmd_gen->parsed()) {
            if (!fasta_pool.empty()) gen_cfg.fasta_pool = fasta_pool;
            Database db = open_db(cfg);
            bench::PopulationSummary sum;
            double secs = run_timed([&] {
                sum = bench::generate(db, gen_cfg);
                db.flush();
            });
            std::cout << sum.table();
            if (cfg.timing) std::cout << "time: " << secs << "s\n";
        } else if (cmd_genseq->parsed()) {
            namespace fs = std::filesystem;
            fs::create_directories(out_dir);
            bench::write_sequoia_files((fs::path(out_dir) / "points.txt").string(),
                                       (fs::path(out_dir) / "polygons.txt").string(),
                                       (fs::path(out_dir) / "graphs.txt").string(),
                                       seq_cfg);
            std::cout << "wrote points.txt polygons.txt graphs.txt to " << out_dir
                      << "\n";
        } else if (cmd_loadseq->parsed()) {
            Database db = open_db(cfg);
            bench::LoadCounts counts;
            double secs = run_timed([&] {
                counts = bench::load_sequoia(db, pts_file, polys_file, graphs_file);
                db.flush();
            });
            std::cout << "points=" << counts.points << " polygons=" << counts.polygons
                      << " graphs=" << counts.graphs << "\n";
            std::cout << "load+index time: " << std::fixed << std::setprecision(3)
                      << secs << "s\n";
        } else if (cmd_fasta->parsed()) {
            Database db = open_db(cfg);
            auto records = seq::read_fasta_file(fasta_file);
            auto attrs = db.catalog().all_attributes(fasta_class);
            uint64_t n = 0;
            for (const auto& rec : records) {
                std::vector<store::Value> fields;
                for (const auto& attr : attrs) {
                    if (attr.name == fasta_attr)
                        fields.emplace_back(db.put_dna(seq::encode_dna(rec.sequence)));
                    else if (attr.name == fasta_header_attr ||
                             (fasta_header_attr.empty() &&
                              attr.type.kind == cat::AttrType::Kind::scalar &&
                              attr.type.scalar == cat::ScalarType::text))
                        fields.emplace_back(rec.header);
                    else
                        throw Error("load-fasta cannot fill attribute " + fasta_class +
                                    "." + attr.name);
                }
                db.insert_object(fasta_class, std::move(fields));
                ++n;
            }
            db.flush();
            std::cout << "loaded " << n << " sequences into " << fasta_class << "\n";
        } else if (cmd_query->parsed()) {
            if (query_text.empty() && query_file.empty())
                throw Error("query needs text or --file");
            if (!query_file.empty()) query_text = read_file(query_file);
            Database db = open_db(cfg);
            run_query_text(cfg, db, query_text, query_explain, false);
        } else if (cmd_explain->parsed()) {
            Database db = open_db(cfg);
            query::QueryAst ast = query::parse_query(explain_text);
            query::typecheck(ast, db.catalog());
            std::cout << query::explain(query::optimize(ast, db, {}));
        } else if (cmd_repl->parsed()) {
            Database db = open_db(cfg);
            repl(cfg, db);
        } else if (cmd_bench->parsed()) {
            suite_opts.verify = bench_verify;
            suite_opts.configs.clear();
            std::istringstream cs(configs_arg);
            std::string item;
            while (std::getline(cs, item, ','))
                if (!item.empty()) suite_opts.configs.push_back(item);
            if (!queries_arg.empty()) {
                std::istringstream qs(queries_arg);
                while (std::getline(qs, item, ','))
                    if (!item.empty()) suite_opts.queries.push_back(item);
            }
            Database db = open_db(cfg);
            bench::BenchReport report = bench::run_suite(db, suite, suite_opts);
            if (cfg.format == "records")
                std::cout << report.records();
            else
                std::cout << report.table();
            if (bench_verify)
                std::cout << (report.all_verified() ? "verification PASS\n"
                                                    : "verification FAIL\n");
            if (bench_verify && !report.all_verified()) return 1;
        } else if (app.get_subcommand("stats")->parsed()) {
            Database db = open_db(cfg);
            std::cout << db.stats_text();
        } else if (cmd_dump->parsed()) {
            Database db = open_db(cfg);
            dump_index(db, dump_name);
        } else if (cmd_dumpseq->parsed()) {
            Database db = open_db(cfg);
            std::string text = db.sequence_text(store::SeqRef{dumpseq_id});
            if (dumpseq_fasta)
                seq::write_fasta(std::cout,
                                 {{"seq" + std::to_string(dumpseq_id), text}});
            else
                std::cout << text << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
