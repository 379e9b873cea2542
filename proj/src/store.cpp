#include "mddb/store.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mddb/mtindex.hpp"
#include "mddb/pathdict.hpp"

namespace mddb::store {

using cat::AttrType;
using cat::IndexDecl;
using cat::ScalarType;

Database::Database(std::unique_ptr<PagedFile> file) : file_(std::move(file)) {}

Database::~Database() {
    try {
        if (file_) flush();
    } catch (...) {
        // Best-effort close; explicit flush reports errors.
    }
}

Database::Database(Database&&) noexcept = default;
Database& Database::operator=(Database&&) noexcept = default;

Database Database::create(const std::string& path, const cat::Catalog& catalog) {
    Database db(std::make_unique<PagedFile>(path, true));
    db.catalog_ = catalog;
    db.extents_.resize(db.catalog_.class_count());
    db.init_indexes();
    db.modified_ = true;
    db.flush();
    return db;
}

Database Database::open(const std::string& path) {
    Database db(std::make_unique<PagedFile>(path, false));
    db.load();
    return db;
}

void Database::init_indexes() {
    for (const auto& def : catalog_.classes()) {
        auto attrs = catalog_.all_attributes(def.name);
        auto& map = field_index_[def.name];
        for (size_t i = 0; i < attrs.size(); ++i) map[attrs[i].name] = i;
    }
    for (const auto& decl : catalog_.indexes()) {
        switch (decl.kind) {
            case IndexDecl::Kind::btree: {
                const auto* attr = catalog_.find_attribute(decl.class_name, decl.attr);
                if (attr->type.kind != AttrType::Kind::scalar ||
                    attr->type.is_spatial_scalar() ||
                    attr->type.scalar == ScalarType::dna ||
                    attr->type.scalar == ScalarType::protein)
                    throw Error("btree index needs an orderable scalar: " + decl.name());
                btrees_.emplace(decl.name(), BTree());
                break;
            }
            case IndexDecl::Kind::rtree: {
                const auto* attr = catalog_.find_attribute(decl.class_name, decl.attr);
                bool ok = attr->type.is_spatial_scalar() ||
                          (attr->type.kind == AttrType::Kind::collection &&
                           !attr->type.element_is_reference &&
                           (attr->type.scalar == ScalarType::polygon ||
                            attr->type.scalar == ScalarType::polyline ||
                            attr->type.scalar == ScalarType::point));
                if (!ok) throw Error("rtree index needs a spatial attribute: " + decl.name());
                rtrees_.emplace(decl.name(), sidx::RTree(sidx::RTreeVariant::rstar));
                break;
            }
            case IndexDecl::Kind::mt:
                mts_.emplace(decl.name(),
                             std::make_unique<hidx::MTIndex>(decl, catalog_));
                break;
            case IndexDecl::Kind::pathdict:
                pds_.emplace(decl.name(),
                             std::make_unique<hidx::PathDictionary>(decl, catalog_));
                break;
        }
    }
}

// ---------------------------------------------------------------------------
// Records

std::vector<uint8_t> Database::encode_record(const ObjectRecord& rec) const {
    std::vector<uint8_t> out;
    ByteWriter w(out);
    w.u32(rec.typecode);
    w.u32(static_cast<uint32_t>(rec.fields.size()));
    for (const auto& field : rec.fields) serialize(w, field);
    return out;
}

ObjectRecord Database::decode_record(const std::vector<uint8_t>& bytes) const {
    ByteReader r(bytes.data(), bytes.size());
    ObjectRecord rec;
    rec.typecode = r.u32();
    uint32_t n = r.u32();
    rec.fields.reserve(n);
    for (uint32_t i = 0; i < n; ++i) rec.fields.push_back(deserialize_value(r));
    return rec;
}

void Database::validate_fields(const std::string& class_name,
                               const std::vector<Value>& fields) const {
    auto attrs = catalog_.all_attributes(class_name);
    if (fields.size() != attrs.size())
        throw Error(class_name + " expects " + std::to_string(attrs.size()) +
                    " fields, got " + std::to_string(fields.size()));
    for (size_t i = 0; i < attrs.size(); ++i) {
        const auto& attr = attrs[i];
        const Value& v = fields[i];
        auto fail = [&](const char* wanted) {
            throw Error("attribute " + class_name + "." + attr.name + " expects " +
                        wanted + ", got " + kind_name(v.kind()));
        };
        auto check_scalar = [&](ScalarType t, const Value& val) {
            switch (t) {
                case ScalarType::integer:
                    if (val.kind() != ValueKind::integer) fail("integer");
                    break;
                case ScalarType::real:
                    if (val.kind() != ValueKind::real) fail("real");
                    if (std::isnan(std::get<double>(val.v)))
                        throw Error("attribute " + class_name + "." + attr.name +
                                    " rejects NaN");
                    break;
                case ScalarType::text:
                    if (val.kind() != ValueKind::text) fail("string");
                    break;
                case ScalarType::polygon:
                    if (val.kind() != ValueKind::geometry ||
                        !val.as_geometry().is_polygon())
                        fail("polygon");
                    geom::validate(val.as_geometry());
                    break;
                case ScalarType::polyline:
                    if (val.kind() != ValueKind::geometry ||
                        !val.as_geometry().is_polyline())
                        fail("polyline");
                    geom::validate(val.as_geometry());
                    break;
                case ScalarType::point:
                    if (val.kind() != ValueKind::geometry || !val.as_geometry().is_point())
                        fail("point");
                    geom::validate(val.as_geometry());
                    break;
                case ScalarType::dna: {
                    if (val.kind() != ValueKind::seqref) fail("dna sequence");
                    if (sequence_kind(val.as_seqref()) != seq::SeqKind::dna)
                        fail("dna sequence");
                    break;
                }
                case ScalarType::protein: {
                    if (val.kind() != ValueKind::seqref) fail("protein sequence");
                    if (sequence_kind(val.as_seqref()) != seq::SeqKind::protein)
                        fail("protein sequence");
                    break;
                }
            }
        };
        auto check_reference = [&](const std::string& target, const Value& val) {
            if (val.kind() != ValueKind::ref) fail("reference");
            Oid oid = val.as_oid();
            if (!object_exists(oid))
                throw Error("attribute " + class_name + "." + attr.name +
                            " references missing object " + to_string(oid));
            if (!catalog_.is_subclass(class_of(oid), target))
                throw Error("attribute " + class_name + "." + attr.name +
                            " expects reference to " + target + ", got " +
                            class_of(oid));
        };
        switch (attr.type.kind) {
            case AttrType::Kind::scalar:
                check_scalar(attr.type.scalar, v);
                break;
            case AttrType::Kind::reference:
                if (v.is_null()) break;  // optional link
                check_reference(attr.type.target, v);
                break;
            case AttrType::Kind::collection: {
                if (v.kind() != ValueKind::list) fail("collection");
                for (const auto& item : v.as_list()) {
                    if (attr.type.element_is_reference)
                        check_reference(attr.type.target, item);
                    else
                        check_scalar(attr.type.scalar, item);
                }
                break;
            }
        }
    }
}

Oid Database::insert_object(const std::string& class_name, std::vector<Value> fields) {
    validate_fields(class_name, fields);
    uint32_t typecode = catalog_.typecode(class_name);
    ObjectRecord rec{typecode, std::move(fields)};
    auto& extent = extents_[typecode];
    Oid oid{typecode, extent.records.size()};
    extent.records.emplace_back(encode_record(rec));
    index_object(oid, rec, false);
    notify_path_dicts_insert(oid);
    modified_ = true;
    return oid;
}

ObjectRecord Database::get_object(Oid oid) const {
    if (oid.extent >= extents_.size()) throw Error("unknown extent in " + to_string(oid));
    const auto& extent = extents_[oid.extent];
    if (oid.slot >= extent.records.size() || !extent.records[oid.slot])
        throw Error("object not found: " + to_string(oid));
    return decode_record(*extent.records[oid.slot]);
}

bool Database::object_exists(Oid oid) const {
    if (oid.extent >= extents_.size()) return false;
    const auto& extent = extents_[oid.extent];
    return oid.slot < extent.records.size() && extent.records[oid.slot].has_value();
}

bool Database::delete_object(Oid oid) {
    if (!object_exists(oid)) return false;
    ObjectRecord rec = get_object(oid);
    index_object(oid, rec, true);
    extents_[oid.extent].records[oid.slot].reset();  // tombstone, slot not reused
    notify_path_dicts_delete(oid);
    modified_ = true;
    return true;
}

void Database::update_field(Oid oid, const std::string& attr, Value value) {
    ObjectRecord old_rec = get_object(oid);
    const std::string& class_name = class_of(oid);
    size_t pos = field_index(class_name, attr);
    ObjectRecord updated = old_rec;
    updated.fields[pos] = std::move(value);
    validate_fields(class_name, updated.fields);
    index_object(oid, old_rec, true);
    extents_[oid.extent].records[oid.slot] = encode_record(updated);
    index_object(oid, updated, false);
    notify_path_dicts_update(oid, attr);
    modified_ = true;
}

void Database::scan_extent(const std::string& class_name, bool include_subclasses,
                           const std::function<void(Oid, const ObjectRecord&)>& fn) const {
    cat::TypeInterval iv = catalog_.interval(class_name);
    uint32_t hi = include_subclasses ? iv.hi : iv.lo;
    for (uint32_t code = iv.lo; code <= hi; ++code) {
        const auto& extent = extents_[code];
        for (uint64_t slot = 0; slot < extent.records.size(); ++slot) {
            if (!extent.records[slot]) continue;
            fn(Oid{code, slot}, decode_record(*extent.records[slot]));
        }
    }
}

uint64_t Database::extent_size(const std::string& class_name,
                               bool include_subclasses) const {
    cat::TypeInterval iv = catalog_.interval(class_name);
    uint32_t hi = include_subclasses ? iv.hi : iv.lo;
    uint64_t n = 0;
    for (uint32_t code = iv.lo; code <= hi; ++code)
        for (const auto& rec : extents_[code].records)
            if (rec) ++n;
    return n;
}

const std::string& Database::class_of(Oid oid) const {
    return catalog_.class_of_code(oid.extent);
}

size_t Database::field_index(const std::string& class_name,
                             const std::string& attr) const {
    auto cit = field_index_.find(class_name);
    if (cit == field_index_.end()) throw Error("unknown class " + class_name);
    auto ait = cit->second.find(attr);
    if (ait == cit->second.end())
        throw Error("unknown attribute " + class_name + "." + attr);
    return ait->second;
}

Value Database::get_field(Oid oid, const std::string& attr) const {
    ObjectRecord rec = get_object(oid);
    return rec.fields[field_index(class_of(oid), attr)];
}

// ---------------------------------------------------------------------------
// Sequences

SeqRef Database::put_dna(const seq::EncodedDNA& d) {
    std::vector<uint8_t> bytes;
    ByteWriter w(bytes);
    w.u8(static_cast<uint8_t>(seq::SeqKind::dna));
    serialize(w, d);
    sequences_.push_back(std::move(bytes));
    modified_ = true;
    return SeqRef{sequences_.size() - 1};
}

SeqRef Database::put_protein(const seq::EncodedProtein& p) {
    std::vector<uint8_t> bytes;
    ByteWriter w(bytes);
    w.u8(static_cast<uint8_t>(seq::SeqKind::protein));
    serialize(w, p);
    sequences_.push_back(std::move(bytes));
    modified_ = true;
    return SeqRef{sequences_.size() - 1};
}

seq::SeqKind Database::sequence_kind(SeqRef ref) const {
    if (ref.id >= sequences_.size())
        throw Error("unknown sequence #" + std::to_string(ref.id));
    return static_cast<seq::SeqKind>(sequences_[ref.id].front());
}

seq::EncodedDNA Database::get_dna(SeqRef ref) const {
    if (sequence_kind(ref) != seq::SeqKind::dna)
        throw Error("sequence #" + std::to_string(ref.id) + " is not dna");
    ByteReader r(sequences_[ref.id].data() + 1, sequences_[ref.id].size() - 1);
    return seq::deserialize_dna(r);
}

seq::EncodedProtein Database::get_protein(SeqRef ref) const {
    if (sequence_kind(ref) != seq::SeqKind::protein)
        throw Error("sequence #" + std::to_string(ref.id) + " is not protein");
    ByteReader r(sequences_[ref.id].data() + 1, sequences_[ref.id].size() - 1);
    return seq::deserialize_protein(r);
}

std::string Database::sequence_text(SeqRef ref) const {
    if (sequence_kind(ref) == seq::SeqKind::dna) return seq::decode(get_dna(ref));
    return seq::decode(get_protein(ref));
}

// ---------------------------------------------------------------------------
// Index maintenance

TypedKey Database::attr_key(const Value& value) {
    switch (value.kind()) {
        case ValueKind::integer: return int_key(value.as_int());
        case ValueKind::real: return real_key(std::get<double>(value.v));
        case ValueKind::text: return string_key(value.as_text());
        default: throw Error(std::string("cannot build a key from ") + kind_name(value.kind()));
    }
}

void Database::index_object(Oid oid, const ObjectRecord& rec, bool removing) {
    const std::string& class_name = class_of(oid);
    for (const auto& decl : catalog_.indexes()) {
        if (decl.kind == IndexDecl::Kind::pathdict) continue;
        if (!catalog_.is_subclass(class_name, decl.class_name)) continue;
        size_t pos = field_index(class_name, decl.attr);
        const Value& v = rec.fields[pos];
        switch (decl.kind) {
            case IndexDecl::Kind::btree: {
                auto& tree = btrees_.at(decl.name());
                TypedKey key = attr_key(v);
                if (removing)
                    tree.erase(key, oid);
                else
                    tree.insert(key, oid);
                break;
            }
            case IndexDecl::Kind::rtree: {
                auto& tree = rtrees_.at(decl.name());
                auto apply = [&](const geom::Geometry& g) {
                    sidx::SpatialEntry e{geom::mbr(g), oid};
                    if (removing)
                        tree.erase(e);
                    else
                        tree.insert(e);
                };
                if (v.kind() == ValueKind::geometry) {
                    apply(v.as_geometry());
                } else if (v.kind() == ValueKind::list) {
                    for (const auto& item : v.as_list()) apply(item.as_geometry());
                }
                break;
            }
            case IndexDecl::Kind::mt: {
                auto& mt = mts_.at(decl.name());
                TypedKey key = attr_key(v);
                if (removing)
                    mt->erase(rec.typecode, key, oid);
                else
                    mt->insert(rec.typecode, key, oid);
                break;
            }
            default: break;
        }
    }
}

void Database::notify_path_dicts_insert(Oid oid) {
    for (auto& [name, pd] : pds_) pd->on_insert(*this, oid);
}

void Database::notify_path_dicts_delete(Oid oid) {
    for (auto& [name, pd] : pds_) pd->on_delete(*this, oid);
}

void Database::notify_path_dicts_update(Oid oid, const std::string& attr) {
    for (auto& [name, pd] : pds_) pd->on_update(*this, oid, attr);
}

// ---------------------------------------------------------------------------
// Index handles

BTree* Database::btree(const std::string& class_name, const std::string& attr) {
    auto it = btrees_.find("btree:" + class_name + "." + attr);
    return it == btrees_.end() ? nullptr : &it->second;
}

const BTree* Database::btree(const std::string& class_name,
                             const std::string& attr) const {
    return const_cast<Database*>(this)->btree(class_name, attr);
}

sidx::RTree* Database::rtree(const std::string& class_name, const std::string& attr) {
    auto it = rtrees_.find("rtree:" + class_name + "." + attr);
    return it == rtrees_.end() ? nullptr : &it->second;
}

const sidx::RTree* Database::rtree(const std::string& class_name,
                                   const std::string& attr) const {
    return const_cast<Database*>(this)->rtree(class_name, attr);
}

hidx::MTIndex* Database::mt_index(const std::string& root_class,
                                  const std::string& attr) {
    auto it = mts_.find("mt:" + root_class + "." + attr);
    return it == mts_.end() ? nullptr : it->second.get();
}

const hidx::MTIndex* Database::mt_index(const std::string& root_class,
                                        const std::string& attr) const {
    return const_cast<Database*>(this)->mt_index(root_class, attr);
}

hidx::PathDictionary* Database::path_dict(const std::string& index_name) {
    auto it = pds_.find(index_name);
    return it == pds_.end() ? nullptr : it->second.get();
}

const hidx::PathDictionary* Database::path_dict(const std::string& index_name) const {
    return const_cast<Database*>(this)->path_dict(index_name);
}

std::vector<const hidx::PathDictionary*> Database::path_dicts() const {
    std::vector<const hidx::PathDictionary*> out;
    for (const auto& [name, pd] : pds_) out.push_back(pd.get());
    return out;
}

// ---------------------------------------------------------------------------
// Persistence

void Database::flush() {
    if (modified_) {
        file_->write_blob("catalog", [&] {
            std::string text = catalog_.print();
            return std::vector<uint8_t>(text.begin(), text.end());
        }());

        for (const auto& def : catalog_.classes()) {
            const auto& extent = extents_[catalog_.typecode(def.name)];
            std::vector<uint8_t> bytes;
            ByteWriter w(bytes);
            w.u64(extent.records.size());
            for (const auto& rec : extent.records) {
                w.u8(rec.has_value() ? 1 : 0);
                if (rec) w.bytes(*rec);
            }
            file_->write_blob("extent:" + def.name, bytes);
        }

        {
            std::vector<uint8_t> bytes;
            ByteWriter w(bytes);
            w.u64(sequences_.size());
            for (const auto& rec : sequences_) w.bytes(rec);
            file_->write_blob("seqarea", bytes);
        }

        for (const auto& decl : catalog_.indexes()) {
            std::vector<uint8_t> bytes;
            ByteWriter w(bytes);
            switch (decl.kind) {
                case IndexDecl::Kind::btree: btrees_.at(decl.name()).serialize(w); break;
                case IndexDecl::Kind::rtree: rtrees_.at(decl.name()).serialize(w); break;
                case IndexDecl::Kind::mt: mts_.at(decl.name())->serialize(w); break;
                case IndexDecl::Kind::pathdict:
                    pds_.at(decl.name())->serialize(w);
                    break;
            }
            file_->write_blob("idx:" + decl.name(), bytes);
        }
        modified_ = false;
    }
    file_->flush();
}

void Database::load() {
    auto catalog_bytes = file_->read_blob("catalog");
    catalog_ = cat::parse_schema(
        std::string_view(reinterpret_cast<const char*>(catalog_bytes.data()),
                         catalog_bytes.size()));
    extents_.resize(catalog_.class_count());
    init_indexes();

    for (const auto& def : catalog_.classes()) {
        auto bytes = file_->read_blob("extent:" + def.name);
        ByteReader r(bytes.data(), bytes.size());
        uint64_t n = r.u64();
        auto& extent = extents_[catalog_.typecode(def.name)];
        extent.records.reserve(n);
        for (uint64_t i = 0; i < n; ++i) {
            if (r.u8())
                extent.records.emplace_back(r.bytes());
            else
                extent.records.emplace_back(std::nullopt);
        }
    }
    {
        auto bytes = file_->read_blob("seqarea");
        ByteReader r(bytes.data(), bytes.size());
        uint64_t n = r.u64();
        sequences_.reserve(n);
        for (uint64_t i = 0; i < n; ++i) sequences_.push_back(r.bytes());
    }
    for (const auto& decl : catalog_.indexes()) {
        auto bytes = file_->read_blob("idx:" + decl.name());
        ByteReader r(bytes.data(), bytes.size());
        switch (decl.kind) {
            case IndexDecl::Kind::btree:
                btrees_.at(decl.name()) = BTree::deserialize(r);
                break;
            case IndexDecl::Kind::rtree:
                rtrees_.at(decl.name()) = sidx::RTree::deserialize(r);
                break;
            case IndexDecl::Kind::mt:
                *mts_.at(decl.name()) = hidx::MTIndex::deserialize(r, catalog_);
                break;
            case IndexDecl::Kind::pathdict:
                pds_.at(decl.name())->load(r, *this);
                break;
        }
    }
}

DbStats Database::stats() const {
    DbStats s;
    for (const auto& def : catalog_.classes())
        s.extents.emplace_back(def.name, extent_size(def.name, false));
    for (const auto& decl : catalog_.indexes()) {
        DbStats::Index idx;
        idx.name = decl.name();
        idx.pages = file_->blob_page_count("idx:" + decl.name());
        switch (decl.kind) {
            case IndexDecl::Kind::btree: idx.entries = btrees_.at(decl.name()).size(); break;
            case IndexDecl::Kind::rtree: idx.entries = rtrees_.at(decl.name()).size(); break;
            case IndexDecl::Kind::mt: idx.entries = mts_.at(decl.name())->size(); break;
            case IndexDecl::Kind::pathdict:
                idx.entries = pds_.at(decl.name())->record_count();
                break;
        }
        s.indexes.push_back(std::move(idx));
    }
    s.sequences = sequences_.size();
    s.pages = file_->page_count();
    s.free_pages = file_->free_page_count();
    return s;
}

std::string Database::stats_text() const {
    DbStats s = stats();
    std::ostringstream out;
    for (const auto& [name, count] : s.extents)
        out << "extent " << name << ": " << count << "\n";
    for (const auto& idx : s.indexes)
        out << "index " << idx.name << ": entries=" << idx.entries
            << " pages=" << idx.pages << "\n";
    out << "sequences: " << s.sequences << "\n";
    out << "pages: " << s.pages << " free: " << s.free_pages << "\n";
    return out.str();
}

}  // namespace mddb::store
