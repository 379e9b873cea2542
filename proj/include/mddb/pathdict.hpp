#pragma once

#include <map>
#include <set>

#include "mddb/store.hpp"

namespace mddb::hidx {

// One materialized root-to-leaf combination along the declared path, stored
// top-down so lookups stream from the root side.
struct PathRecord {
    uint64_t id = 0;
    std::vector<Oid> chain;  // object steps, root first
    int32_t ordinal = -1;    // element index for a value-collection terminal
    // Attribute-index keys captured at derivation time, so records can be
    // unindexed after the base objects changed.
    std::vector<std::pair<std::string, store::TypedKey>> attr_keys;
};

// Path Dictionary over a declared aggregation path: the record store plus an
// identity index (any chain position) and attribute indexes over the terminal
// class's scalar attributes. Lookups never touch base extents.
class PathDictionary {
public:
    PathDictionary(cat::IndexDecl decl, const cat::Catalog& catalog);

    const cat::IndexDecl& decl() const { return decl_; }
    const std::string& root_class() const { return decl_.class_name; }
    bool terminal_is_value() const { return terminal_is_value_; }
    const std::string& terminal_class() const { return terminal_class_; }
    size_t path_length() const { return steps_.size(); }

    void build(const store::Database& db);

    // Mutation hooks; the store calls these after applying the change.
    void on_insert(const store::Database& db, Oid oid);
    void on_delete(const store::Database& db, Oid oid);
    void on_update(const store::Database& db, Oid oid, const std::string& attr);

    // Every record containing oid at any chain position.
    void lookup_oid(Oid oid, const std::function<void(const PathRecord&)>& emit) const;

    bool has_attr_index(const std::string& attr) const;
    // Records whose terminal attribute key lies in [lo, hi] (inclusive;
    // absent bound = open). Throws when no attribute index exists.
    void lookup_attr(const std::string& attr, const std::optional<store::TypedKey>& lo,
                     const std::optional<store::TypedKey>& hi,
                     const std::function<void(const PathRecord&)>& emit) const;

    void for_each_record(const std::function<void(const PathRecord&)>& emit) const;
    size_t record_count() const { return records_.size(); }
    std::string dump() const;

    void serialize(ByteWriter& w) const;
    void load(ByteReader& r, const store::Database& db);

private:
    struct Step {
        std::string attr;
        std::string target;  // reference target; empty for a value collection
        bool is_reference = false;
        bool is_collection = false;
        cat::ScalarType value_scalar = cat::ScalarType::integer;
    };

    void refresh_edges(const store::Database& db, Oid oid);
    void drop_edges_of(Oid oid);
    std::set<Oid> affected_roots(const store::Database& db, Oid oid) const;
    void recompute_roots(const store::Database& db, const std::set<Oid>& roots);
    void derive_from_root(const store::Database& db, Oid root);
    void emit_record(const store::Database& db, const std::vector<Oid>& chain,
                     int32_t ordinal, const store::Value* terminal_value);
    void remove_record(uint64_t id);
    void rebuild_lookup_structures(const store::Database& db);

    cat::IndexDecl decl_;
    std::vector<Step> steps_;
    std::string terminal_class_;
    bool terminal_is_value_ = false;
    std::vector<std::string> terminal_scalar_attrs_;

    uint64_t next_id_ = 1;
    std::map<uint64_t, PathRecord> records_;
    std::map<Oid, std::vector<uint64_t>> identity_;
    std::map<std::string, store::BTree> attr_index_;
    // Link edges per step: forward (parent -> children) to undo, reverse
    // (child -> parents) to find affected roots.
    std::vector<std::map<Oid, std::vector<Oid>>> forward_;
    std::vector<std::map<Oid, std::vector<Oid>>> reverse_;
};

}  // namespace mddb::hidx
