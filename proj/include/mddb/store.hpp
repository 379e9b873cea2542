#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mddb/btree.hpp"
#include "mddb/catalog.hpp"
#include "mddb/keycodec.hpp"
#include "mddb/pager.hpp"
#include "mddb/rtree.hpp"
#include "mddb/seq.hpp"
#include "mddb/value.hpp"

namespace mddb::hidx {
class MTIndex;
class PathDictionary;
}  // namespace mddb::hidx

namespace mddb::store {

struct ObjectRecord {
    uint32_t typecode = 0;
    std::vector<Value> fields;  // aligned with Catalog::all_attributes

    bool operator==(const ObjectRecord&) const = default;
};

struct DbStats {
    std::vector<std::pair<std::string, uint64_t>> extents;  // class, live count
    struct Index {
        std::string name;
        uint64_t entries = 0;
        uint64_t pages = 0;
    };
    std::vector<Index> indexes;
    uint64_t sequences = 0;
    uint64_t pages = 0;
    uint64_t free_pages = 0;
};

// Single-file persistent object store: one extent per class, a sequence area,
// and the declared indexes, all kept consistent on every mutation. Objects
// are held serialized and decoded on access. Single writer, readers see
// flushed state only across handles.
class Database {
public:
    static Database create(const std::string& path, const cat::Catalog& catalog);
    static Database open(const std::string& path);
    ~Database();

    Database(Database&&) noexcept;
    Database& operator=(Database&&) noexcept;

    const cat::Catalog& catalog() const { return catalog_; }

    Oid insert_object(const std::string& class_name, std::vector<Value> fields);
    ObjectRecord get_object(Oid oid) const;
    bool object_exists(Oid oid) const;
    bool delete_object(Oid oid);
    void update_field(Oid oid, const std::string& attr, Value value);

    // Deterministic (typecode, slot) order; with subclasses, the union of the
    // subtree's extents.
    void scan_extent(const std::string& class_name, bool include_subclasses,
                     const std::function<void(Oid, const ObjectRecord&)>& fn) const;
    uint64_t extent_size(const std::string& class_name, bool include_subclasses) const;

    const std::string& class_of(Oid oid) const;
    size_t field_index(const std::string& class_name, const std::string& attr) const;
    Value get_field(Oid oid, const std::string& attr) const;

    SeqRef put_dna(const seq::EncodedDNA& d);
    SeqRef put_protein(const seq::EncodedProtein& p);
    seq::SeqKind sequence_kind(SeqRef ref) const;
    seq::EncodedDNA get_dna(SeqRef ref) const;
    seq::EncodedProtein get_protein(SeqRef ref) const;
    std::string sequence_text(SeqRef ref) const;
    uint64_t sequence_count() const { return sequences_.size(); }

    // Typed key for an index over the given scalar value.
    static TypedKey attr_key(const Value& value);

    BTree* btree(const std::string& class_name, const std::string& attr);
    const BTree* btree(const std::string& class_name, const std::string& attr) const;
    sidx::RTree* rtree(const std::string& class_name, const std::string& attr);
    const sidx::RTree* rtree(const std::string& class_name,
                             const std::string& attr) const;
    hidx::MTIndex* mt_index(const std::string& root_class, const std::string& attr);
    const hidx::MTIndex* mt_index(const std::string& root_class,
                                  const std::string& attr) const;
    hidx::PathDictionary* path_dict(const std::string& index_name);
    const hidx::PathDictionary* path_dict(const std::string& index_name) const;
    std::vector<const hidx::PathDictionary*> path_dicts() const;

    void flush();
    void set_cache_size(uint64_t pages) { file_->set_cache_limit(pages); }
    DbStats stats() const;
    std::string stats_text() const;
    const std::string& path() const { return file_->path(); }

private:
    explicit Database(std::unique_ptr<PagedFile> file);

    struct Extent {
        // Slot -> serialized record; nullopt marks a tombstone.
        std::vector<std::optional<std::vector<uint8_t>>> records;
    };

    void init_indexes();
    void load();
    void validate_fields(const std::string& class_name,
                         const std::vector<Value>& fields) const;
    void index_object(Oid oid, const ObjectRecord& rec, bool removing);
    void notify_path_dicts_insert(Oid oid);
    void notify_path_dicts_delete(Oid oid);
    void notify_path_dicts_update(Oid oid, const std::string& attr);
    ObjectRecord decode_record(const std::vector<uint8_t>& bytes) const;
    std::vector<uint8_t> encode_record(const ObjectRecord& rec) const;

    std::unique_ptr<PagedFile> file_;
    cat::Catalog catalog_;
    std::vector<Extent> extents_;                   // by typecode
    std::vector<std::vector<uint8_t>> sequences_;   // kind tag + payload
    std::map<std::string, BTree> btrees_;           // by IndexDecl::name()
    std::map<std::string, sidx::RTree> rtrees_;
    std::map<std::string, std::unique_ptr<hidx::MTIndex>> mts_;
    std::map<std::string, std::unique_ptr<hidx::PathDictionary>> pds_;
    std::map<std::string, std::map<std::string, size_t>> field_index_;  // class -> attr -> pos
    bool modified_ = false;
};

}  // namespace mddb::store
