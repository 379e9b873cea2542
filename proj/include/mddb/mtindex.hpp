#pragma once

#include <functional>
#include <optional>

#include "mddb/catalog.hpp"
#include "mddb/keycodec.hpp"
#include "mddb/rtree.hpp"

namespace mddb::store {
class Database;
struct Value;
}  // namespace mddb::store

namespace mddb::hidx {

// Multi-key Type index: objects become points (typecode, key rank) in a
// point R-tree, so one window query answers "key in range over all classes of
// a subtree". The rank dimension is a lossy 6-byte prefix of the typed key;
// callers must re-check the exact key on the base object.
class MTIndex {
public:
    MTIndex(cat::IndexDecl decl, const cat::Catalog& catalog);

    const cat::IndexDecl& decl() const { return decl_; }

    void insert(uint32_t typecode, const store::TypedKey& key, Oid oid);
    bool erase(uint32_t typecode, const store::TypedKey& key, Oid oid);

    // Candidate oids whose typecode lies in the interval and whose key rank
    // falls within the (prefix-widened) range.
    void query_candidates(const cat::TypeInterval& types,
                          const std::optional<store::TypedKey>& lo,
                          const std::optional<store::TypedKey>& hi,
                          const std::function<void(Oid)>& emit) const;

    size_t size() const { return points_.size(); }
    std::string dump() const { return points_.dump(); }

    void serialize(ByteWriter& w) const;
    static MTIndex deserialize(ByteReader& r, const cat::Catalog& catalog);

    // 6-byte big-endian prefix; exactly representable in the double rank axis.
    static uint64_t key_rank(const store::TypedKey& key);

private:
    cat::IndexDecl decl_;
    sidx::RTree points_;
};

// Builds a fresh index over the root class's subtree from the current
// database state.
MTIndex mt_build(const store::Database& db, const std::string& root_class,
                 const std::string& attr);

// Exact subtree-plus-range query: index candidates, then each candidate's key
// re-checked on the base object. Bounds are inclusive; an absent bound is
// open. Throws when the class lies outside the indexed subtree.
std::vector<Oid> mt_query(const store::Database& db, const MTIndex& idx,
                          const std::string& class_name,
                          const std::optional<store::Value>& lo,
                          const std::optional<store::Value>& hi);

}  // namespace mddb::hidx
