#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mddb/bytes.hpp"
#include "mddb/geom.hpp"
#include "mddb/hilbert.hpp"

namespace mddb::sidx {

struct SpatialEntry {
    geom::Rect key;
    Oid oid;

    friend auto operator<=>(const SpatialEntry&, const SpatialEntry&) = default;
};

enum class RTreeVariant : uint8_t { rstar = 0, hilbert = 1 };

struct RTreeParams {
    int max_entries = 32;            // M
    double min_fill = 0.4;           // m = min_fill * M
    double reinsert_fraction = 0.3;  // rstar forced-reinsert share
    int hilbert_order = 16;          // curve order for hilbert keys
    geom::Rect world{-1e9, -1e9, 1e9, 1e9};  // hilbert key domain
};

// Disk-oriented R-tree with two maintenance policies behind one interface:
// the rstar variant applies forced reinsertion on the first overflow per
// level, the hilbert variant orders entries by Hilbert value and splits
// 2-to-3 through a cooperating sibling. Multiset semantics: duplicate
// (key, oid) pairs are kept.
class RTree {
public:
    using Params = RTreeParams;

    struct Node;
    struct Entry {
        geom::Rect rect;
        Oid oid;                      // leaf entries
        std::unique_ptr<Node> child;  // internal entries
        uint64_t hv = 0;              // hilbert value (leaf) / subtree LHV (internal)
    };
    struct Node {
        bool leaf = true;
        std::vector<Entry> entries;

        geom::Rect mbr() const;
        uint64_t lhv() const;
    };

    explicit RTree(RTreeVariant variant = RTreeVariant::rstar, Params params = {});

    RTree(RTree&&) noexcept = default;
    RTree& operator=(RTree&&) noexcept = default;

    void insert(const SpatialEntry& e);

    // Removes one exactly matching (key, oid) entry; underflowing nodes are
    // dissolved and their entries reinserted.
    bool erase(const SpatialEntry& e);

    // Emits every oid whose stored MBR intersects r (closed intersection).
    void window_query(const geom::Rect& r, const std::function<void(Oid)>& emit) const;
    std::vector<Oid> window_query(const geom::Rect& r) const;

    // Visits every stored entry in leaf order.
    void for_each_entry(const std::function<void(const SpatialEntry&)>& fn) const;

    // Packs leaves to the fill factor in ascending Hilbert order. Throws on
    // empty input.
    static RTree bulk_load_hilbert(std::vector<SpatialEntry> entries,
                                   Params params = {}, double fill_factor = 1.0);

    // Nearest entry to p by exact geometry distance, found by expanding-box
    // search with a final correctness re-query at the best distance. Ties
    // break toward the smallest oid. Throws on an empty tree.
    Oid closest(const geom::Point& p,
                const std::function<geom::Geometry(Oid)>& resolve) const;

    // Mean node fill ratio. Throws on an empty tree.
    double utilization() const;

    size_t size() const { return count_; }
    bool empty() const { return count_ == 0; }
    RTreeVariant variant() const { return variant_; }
    const Params& params() const { return params_; }
    const Node& root() const { return *root_; }

    // Throws Error describing the first violated structural invariant.
    void validate_structure() const;

    // One node per line: depth, MBR, child count, LHV.
    std::string dump() const;

    void serialize(ByteWriter& w) const;
    static RTree deserialize(ByteReader& r);

private:
    int max_entries() const { return params_.max_entries; }
    int min_entries() const;

    uint64_t hilbert_key(const geom::Rect& r) const;

    // R* machinery.
    void rstar_insert(Entry entry, int target_level, bool forbid_reinsert);
    Node* choose_subtree(const geom::Rect& rect, int target_level,
                         std::vector<Node*>& path) const;
    void rstar_overflow(Node* node, int level, std::vector<Node*>& path,
                        std::vector<bool>& reinserted_at_level);
    std::unique_ptr<Node> rstar_split(Node* node);

    // Hilbert machinery.
    void hilbert_insert(Entry entry);
    void hilbert_overflow(std::vector<Node*>& path, size_t depth);

    void condense(std::vector<std::pair<Entry, int>>& orphans, Node* node,
                  std::vector<Node*>& path, int level);
    int height() const;

    RTreeVariant variant_;
    Params params_;
    std::unique_ptr<Node> root_;
    size_t count_ = 0;
};

enum class JoinPredicate : uint8_t { overlaps = 0, inside = 1 };

// All pairs whose exact geometries satisfy the predicate; candidate pairs come
// from a synchronized traversal of both trees. A self-join (same tree passed
// twice) skips identical oids and emits each unordered pair once.
void spatial_join(const RTree& a, const RTree& b, JoinPredicate pred,
                  const std::function<geom::Geometry(Oid)>& resolve_a,
                  const std::function<geom::Geometry(Oid)>& resolve_b,
                  const std::function<void(Oid, Oid)>& emit);

}  // namespace mddb::sidx
