#pragma once

#include <map>

#include "mddb/align.hpp"
#include "mddb/plan.hpp"

namespace mddb::query {

struct RowSet {
    std::vector<std::string> columns;
    std::vector<std::vector<store::Value>> rows;
};

// Per-query evaluation state: the database plus memoized blast results and
// decoded sequence views (blast over one receiver is pure, so repeated
// predicate evaluations share one search).
class EvalContext {
public:
    explicit EvalContext(const store::Database& db, bool use_indexes = true)
        : db(db), use_indexes(use_indexes) {}

    const store::Database& db;
    bool use_indexes;
    // Bench configurations can substitute a different spatial structure for a
    // declared rtree index (key: IndexDecl name).
    std::map<std::string, const sidx::RTree*> rtree_overrides;

    const sidx::RTree* rtree(const std::string& index_name, const std::string& class_name,
                             const std::string& attr) const {
        auto it = rtree_overrides.find(index_name);
        if (it != rtree_overrides.end()) return it->second;
        return db.rtree(class_name, attr);
    }

    // Sorted oids whose `attr` sequence aligns with the referenced sequence at
    // or above the threshold.
    const std::vector<Oid>& blast_hits(const std::string& class_name,
                                       const std::string& attr, store::SeqRef ref,
                                       int64_t threshold);

private:
    struct SubjectSet {
        std::vector<store::Value> refs;  // seqref per object
        std::vector<Oid> oids;
        std::vector<seq::SeqView> views;
    };
    const SubjectSet& subjects(const std::string& class_name, const std::string& attr);

    std::map<std::pair<std::string, std::string>, SubjectSet> subjects_;
    std::map<std::tuple<std::string, std::string, uint64_t, int64_t>, std::vector<Oid>>
        blast_cache_;
};

using Row = std::vector<store::Value>;

// Expression evaluation over a row of bound binding slots.
store::Value eval(EvalContext& ctx, const Row& row, const Expr& e);
bool eval_bool(EvalContext& ctx, const Row& row, const Expr& e);

// Streaming execution of a physical plan; emit receives each projected row.
void execute(const PhysicalPlan& plan, EvalContext& ctx,
             const std::function<void(const Row&)>& emit);
RowSet execute(const PhysicalPlan& plan, EvalContext& ctx);

// Direct nested-loop evaluation of the typed query, index-free; the oracle
// the optimizer is checked against.
RowSet naive_execute(const QueryAst& ast, const store::Database& db);

enum class OutputFormat : uint8_t { records, tsv };

// Line-delimited result text; sequence references decode to their text.
std::string serialize_rows(const RowSet& rows, const store::Database& db,
                           OutputFormat format);

}  // namespace mddb::query
