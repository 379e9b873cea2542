#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "mddb/bytes.hpp"
#include "mddb/common.hpp"
#include "mddb/keycodec.hpp"

namespace mddb::store {

// B+-tree multimap from TypedKey bytes to oids. Entries are ordered by
// (key, oid); duplicates of the full pair are allowed. Deletion does not
// rebalance.
class BTree {
public:
    explicit BTree(int fanout = 64);

    void insert(const TypedKey& key, Oid oid);
    bool erase(const TypedKey& key, Oid oid);

    std::vector<Oid> lookup(const TypedKey& key) const;

    // Inclusive bounds; an absent bound is open on that side.
    void range(const std::optional<TypedKey>& lo, const std::optional<TypedKey>& hi,
               const std::function<void(const TypedKey&, Oid)>& emit) const;

    size_t size() const { return size_; }
    size_t node_count() const;
    int height() const;

    // Number of distinct keys; recomputed lazily after mutations.
    size_t distinct_keys() const;

    // Canonical form: the sorted (key, oid) sequence. Loading bulk-packs the
    // leaves, so a loaded tree serializes back to identical bytes.
    void serialize(ByteWriter& w) const;
    static BTree deserialize(ByteReader& r, int fanout = 64);

private:
    struct Node {
        bool leaf = true;
        std::vector<TypedKey> keys;
        std::vector<Oid> oids;                         // leaf only
        std::vector<std::unique_ptr<Node>> children;   // internal only
        std::vector<Oid> child_min_oid;                // separator oid tiebreak
    };

    struct SplitResult {
        TypedKey sep_key;
        Oid sep_oid;
        std::unique_ptr<Node> right;
    };

    static bool pair_less(const TypedKey& ka, Oid oa, const TypedKey& kb, Oid ob);
    std::optional<SplitResult> insert_rec(Node* node, const TypedKey& key, Oid oid);
    bool erase_rec(Node* node, const TypedKey& key, Oid oid);
    void range_rec(const Node* node, const std::optional<TypedKey>& lo,
                   const std::optional<TypedKey>& hi,
                   const std::function<void(const TypedKey&, Oid)>& emit) const;

    int fanout_;
    size_t size_ = 0;
    std::unique_ptr<Node> root_;
    mutable size_t distinct_cache_ = 0;
    mutable bool distinct_valid_ = false;
};

}  // namespace mddb::store
