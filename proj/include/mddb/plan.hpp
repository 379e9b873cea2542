#pragma once

#include <optional>
#include <set>

#include "mddb/query.hpp"
#include "mddb/store.hpp"

namespace mddb::query {

// Pinned planner constants; experiments can vary them per run.
struct PlannerConfig {
    // Index declarations the planner may use; absent = all declared.
    std::optional<std::set<std::string>> allowed_indexes;
    double range_selectivity = 1.0 / 3;
    double spatial_selectivity = 0.1;
    double blast_selectivity = 0.01;
    // Distinct-value estimate for equality selectivity when no index knows
    // better.
    int default_distinct = 10;
    double collection_fanout = 8.0;

    bool index_allowed(const std::string& name) const {
        return !allowed_indexes || allowed_indexes->count(name) > 0;
    }
};

struct PhysOp;
using PhysOpPtr = std::unique_ptr<PhysOp>;

struct PhysOp {
    enum class Kind : uint8_t {
        extent_scan,
        btree_scan,
        mt_scan,
        pd_scan,       // modes: attr scan, identity probe, path filter
        rtree_window,
        spatial_join,
        nested_loop_join,
        collection_bind,
        filter,
        blast_probe,
        project,
        distinct,
        minus,
    };
    enum class PdMode : uint8_t { attr, probe, path_filter };

    Kind kind;
    std::vector<PhysOpPtr> children;

    int out_var = -1;              // binding slot produced by scans/joins
    std::string class_name;        // scan class (binding's class)
    std::string index_name;        // backing index declaration name
    std::string attr;              // indexed attribute / join attribute
    cat::ScalarType attr_scalar = cat::ScalarType::integer;

    // Bounds or predicates, cloned from the query.
    ExprPtr lo, hi;                // btree/mt/pd-attr bounds (inclusive)
    bool lo_strict = false, hi_strict = false;
    ExprPtr predicate;             // filter / refinement predicate
    ExprPtr probe;                 // spatial join outer geometry / pd probe
    Expr::Op spatial_pred = Expr::Op::overlaps;
    bool inner_is_lhs = false;     // operand order of the spatial predicate
    ExprPtr member;                // blast member expression
    ExprPtr receiver;              // blast receiver expression
    int64_t threshold = 0;
    std::vector<ExprPtr> exprs;    // project outputs

    double est_rows = 0;

    static PhysOpPtr make(Kind kind) {
        auto op = std::make_unique<PhysOp>();
        op->kind = kind;
        return op;
    }
};

struct PhysicalPlan {
    PhysOpPtr root;
    size_t num_slots = 0;
    std::vector<std::string> columns;
    bool select_star = false;
};

// Rule-based planning: predicate pushdown, index selection, greedy join
// ordering by estimated cardinality, and equivalent-method substitution.
// Always yields a plan; with no usable indexes every leaf is a scan.
PhysicalPlan optimize(const QueryAst& ast, const store::Database& db,
                      const PlannerConfig& config = {});

// Operator tree in execution order (producers first, root last), one line per
// operator with index names and cardinality estimates. Pure and stable.
std::string explain(const PhysicalPlan& plan);

}  // namespace mddb::query
