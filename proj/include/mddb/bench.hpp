#pragma once

#include "mddb/exec.hpp"

namespace mddb::bench {

struct LoadCounts {
    uint64_t points = 0;
    uint64_t polygons = 0;
    uint64_t graphs = 0;
};

// Loads the three vector files (tab-separated ASCII, one record per line)
// into the SPoint/SPolygon/SGraph extents; polygon areas are computed at load
// time. Malformed lines raise errors naming the line number.
LoadCounts load_sequoia(store::Database& db, const std::string& points_path,
                        const std::string& polygons_path,
                        const std::string& graphs_path);

struct BenchReport {
    struct Entry {
        std::string query;
        std::string config;
        double seconds = 0;
        uint64_t rows = 0;
        std::string plan;  // one-line summary
        bool verified = false;
        bool verify_ran = false;
    };
    std::vector<Entry> entries;
    std::vector<std::pair<std::string, std::string>> extras;

    std::string table() const;
    std::string records() const;
    bool all_verified() const;
    const Entry* find(const std::string& query, const std::string& config) const;
};

struct SuiteOptions {
    // Index configurations: none | pathdict | pathdict+rtree | hilbert | all.
    std::vector<std::string> configs = {"none"};
    bool verify = false;  // re-run each query with the naive evaluator
    bool parallel_verify = false;  // verification re-runs on worker threads
    int closest_probes = 100;     // sample size for the nearest-object queries
    int closest_all_sample = 100; // sampled points for the all-points variant
    bool full_closest_scan = false;
    std::vector<std::string> queries;  // subset filter; empty = whole suite
};

// Runs one of the bundled suites ("bio", "sequoia", "paradise") under each
// requested index configuration.
BenchReport run_suite(const store::Database& db, const std::string& suite,
                      const SuiteOptions& options);

// The bundled biodiversity query texts, keyed tq1/gq1/gq2/mdq1/mdq2.
const std::vector<std::pair<std::string, std::string>>& bio_queries();

query::PlannerConfig planner_config_for(const store::Database& db,
                                        const std::string& config_name);

}  // namespace mddb::bench
