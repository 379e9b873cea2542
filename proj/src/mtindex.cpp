#include "mddb/mtindex.hpp"

#include <algorithm>

#include "mddb/store.hpp"

namespace mddb::hidx {

namespace {

sidx::RTreeParams mt_params() {
    sidx::RTreeParams p;
    p.world = {0, 0, double(1u << 16), double(1ull << 48)};
    return p;
}

geom::Rect point_rect(uint32_t typecode, uint64_t rank) {
    double t = typecode;
    double r = static_cast<double>(rank);
    return {t, r, t, r};
}

}  // namespace

MTIndex::MTIndex(cat::IndexDecl decl, const cat::Catalog& catalog)
    : decl_(std::move(decl)), points_(sidx::RTreeVariant::rstar, mt_params()) {
    if (!catalog.has_class(decl_.class_name))
        throw Error("mt index root class unknown: " + decl_.class_name);
    if (!catalog.find_attribute(decl_.class_name, decl_.attr))
        throw Error("mt index attribute unknown: " + decl_.class_name + "." + decl_.attr);
}

uint64_t MTIndex::key_rank(const store::TypedKey& key) {
    uint64_t rank = 0;
    for (size_t i = 0; i < 6; ++i)
        rank = (rank << 8) | (i < key.size() ? key[i] : 0);
    return rank;
}

void MTIndex::insert(uint32_t typecode, const store::TypedKey& key, Oid oid) {
    points_.insert({point_rect(typecode, key_rank(key)), oid});
}

bool MTIndex::erase(uint32_t typecode, const store::TypedKey& key, Oid oid) {
    return points_.erase({point_rect(typecode, key_rank(key)), oid});
}

void MTIndex::query_candidates(const cat::TypeInterval& types,
                               const std::optional<store::TypedKey>& lo,
                               const std::optional<store::TypedKey>& hi,
                               const std::function<void(Oid)>& emit) const {
    double rank_lo = lo ? static_cast<double>(key_rank(*lo)) : 0.0;
    double rank_hi = hi ? static_cast<double>(key_rank(*hi))
                        : static_cast<double>((1ull << 48) - 1);
    geom::Rect window{static_cast<double>(types.lo), rank_lo,
                      static_cast<double>(types.hi), rank_hi};
    points_.window_query(window, emit);
}

void MTIndex::serialize(ByteWriter& w) const {
    w.str(decl_.class_name);
    w.str(decl_.attr);
    points_.serialize(w);
}

MTIndex MTIndex::deserialize(ByteReader& r, const cat::Catalog& catalog) {
    cat::IndexDecl decl;
    decl.kind = cat::IndexDecl::Kind::mt;
    decl.class_name = r.str();
    decl.attr = r.str();
    MTIndex idx(std::move(decl), catalog);
    idx.points_ = sidx::RTree::deserialize(r);
    return idx;
}

MTIndex mt_build(const store::Database& db, const std::string& root_class,
                 const std::string& attr) {
    cat::IndexDecl decl;
    decl.kind = cat::IndexDecl::Kind::mt;
    decl.class_name = root_class;
    decl.attr = attr;
    MTIndex idx(std::move(decl), db.catalog());
    db.scan_extent(root_class, true, [&](Oid oid, const store::ObjectRecord& rec) {
        size_t pos = db.field_index(db.class_of(oid), attr);
        idx.insert(rec.typecode, store::Database::attr_key(rec.fields[pos]), oid);
    });
    return idx;
}

std::vector<Oid> mt_query(const store::Database& db, const MTIndex& idx,
                          const std::string& class_name,
                          const std::optional<store::Value>& lo,
                          const std::optional<store::Value>& hi) {
    const auto& catalog = db.catalog();
    if (!catalog.is_subclass(class_name, idx.decl().class_name))
        throw Error(class_name + " lies outside the subtree indexed by " +
                    idx.decl().name());
    cat::TypeInterval types = catalog.interval(class_name);
    std::optional<store::TypedKey> klo, khi;
    if (lo) klo = store::Database::attr_key(*lo);
    if (hi) khi = store::Database::attr_key(*hi);

    std::vector<Oid> out;
    idx.query_candidates(types, klo, khi, [&](Oid oid) {
        // The rank axis is lossy; re-check the exact key on the base object.
        store::TypedKey key =
            store::Database::attr_key(db.get_field(oid, idx.decl().attr));
        if (klo && key < *klo) return;
        if (khi && *khi < key) return;
        out.push_back(oid);
    });
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace mddb::hidx
