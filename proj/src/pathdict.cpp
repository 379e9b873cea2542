#include "mddb/pathdict.hpp"

#include <algorithm>
#include <sstream>

namespace mddb::hidx {

using cat::AttrType;
using cat::ScalarType;
using store::Database;
using store::TypedKey;
using store::Value;
using store::ValueKind;

PathDictionary::PathDictionary(cat::IndexDecl decl, const cat::Catalog& catalog)
    : decl_(std::move(decl)) {
    std::string cur = decl_.class_name;
    for (size_t s = 0; s < decl_.path.size(); ++s) {
        const cat::Attribute* attr = catalog.find_attribute(cur, decl_.path[s]);
        if (!attr) throw Error("path step " + cur + "." + decl_.path[s] + " missing");
        Step step;
        step.attr = decl_.path[s];
        step.is_collection = attr->type.kind == AttrType::Kind::collection;
        step.is_reference = attr->type.kind == AttrType::Kind::reference ||
                            (step.is_collection && attr->type.element_is_reference);
        if (step.is_reference) {
            step.target = attr->type.target;
            cur = step.target;
        } else {
            step.value_scalar = attr->type.scalar;
            if (s + 1 != decl_.path.size())
                throw Error("value collection must terminate the path");
        }
        steps_.push_back(std::move(step));
    }
    const Step& last = steps_.back();
    terminal_is_value_ = !last.is_reference;
    if (terminal_is_value_) {
        // The attribute index covers the element values themselves when they
        // are orderable scalars.
        if (last.value_scalar == ScalarType::integer ||
            last.value_scalar == ScalarType::real || last.value_scalar == ScalarType::text)
            terminal_scalar_attrs_.push_back(last.attr);
    } else {
        terminal_class_ = last.target;
        for (const auto& attr : catalog.all_attributes(terminal_class_)) {
            if (attr.type.kind != AttrType::Kind::scalar) continue;
            if (attr.type.scalar == ScalarType::integer ||
                attr.type.scalar == ScalarType::real ||
                attr.type.scalar == ScalarType::text)
                terminal_scalar_attrs_.push_back(attr.name);
        }
    }
    for (const auto& attr : terminal_scalar_attrs_) attr_index_.emplace(attr, store::BTree());
    forward_.resize(steps_.size());
    reverse_.resize(steps_.size());
}

namespace {

// Distinct oids of a chain, for identity-index bookkeeping.
std::vector<Oid> unique_oids(const std::vector<Oid>& chain) {
    std::vector<Oid> out(chain);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

void PathDictionary::refresh_edges(const Database& db, Oid oid) {
    drop_edges_of(oid);
    if (!db.object_exists(oid)) return;
    const std::string& cls = db.class_of(oid);
    const auto& catalog = db.catalog();

    auto scan_level = [&](size_t level) {
        const Step& step = steps_[level];
        Value v;
        if (!catalog.find_attribute(cls, step.attr)) return;
        v = db.get_field(oid, step.attr);
        auto add_edge = [&](Oid child) {
            forward_[level][oid].push_back(child);
            reverse_[level][child].push_back(oid);
        };
        if (!step.is_reference) return;  // value terminals have no object edges
        if (v.kind() == ValueKind::ref) {
            add_edge(v.as_oid());
        } else if (v.kind() == ValueKind::list) {
            for (const auto& item : v.as_list()) add_edge(item.as_oid());
        }
    };

    if (catalog.is_subclass(cls, decl_.class_name)) scan_level(0);
    for (size_t level = 1; level < steps_.size(); ++level) {
        const Step& prev = steps_[level - 1];
        if (prev.is_reference && catalog.is_subclass(cls, prev.target))
            scan_level(level);
    }
}

void PathDictionary::drop_edges_of(Oid oid) {
    for (size_t level = 0; level < steps_.size(); ++level) {
        auto fit = forward_[level].find(oid);
        if (fit != forward_[level].end()) {
            for (Oid child : fit->second) {
                auto rit = reverse_[level].find(child);
                if (rit == reverse_[level].end()) continue;
                auto& parents = rit->second;
                auto pos = std::find(parents.begin(), parents.end(), oid);
                if (pos != parents.end()) parents.erase(pos);
                if (parents.empty()) reverse_[level].erase(rit);
            }
            forward_[level].erase(fit);
        }
    }
}

std::set<Oid> PathDictionary::affected_roots(const Database& db, Oid oid) const {
    const auto& catalog = db.catalog();
    std::set<Oid> roots;
    // Walk reverse edges from every level the object can occupy.
    std::function<void(Oid, size_t)> up = [&](Oid cur, size_t level) {
        if (level == 0) {
            roots.insert(cur);
            return;
        }
        auto it = reverse_[level - 1].find(cur);
        if (it == reverse_[level - 1].end()) return;
        for (Oid parent : it->second) up(parent, level - 1);
    };

    std::string cls;
    if (db.object_exists(oid))
        cls = db.class_of(oid);
    else
        cls = db.catalog().class_of_code(oid.extent);
    if (catalog.is_subclass(cls, decl_.class_name)) up(oid, 0);
    // Chain positions run 0..steps; position i > 0 holds targets of step i-1.
    for (size_t level = 1; level <= steps_.size(); ++level) {
        const Step& prev = steps_[level - 1];
        if (prev.is_reference && catalog.is_subclass(cls, prev.target)) up(oid, level);
    }
    return roots;
}

void PathDictionary::recompute_roots(const Database& db, const std::set<Oid>& roots) {
    for (Oid root : roots) {
        std::vector<uint64_t> stale;
        auto it = identity_.find(root);
        if (it != identity_.end()) {
            for (uint64_t id : it->second)
                if (records_.at(id).chain.front() == root) stale.push_back(id);
        }
        for (uint64_t id : stale) remove_record(id);
        if (db.object_exists(root) &&
            db.catalog().is_subclass(db.class_of(root), decl_.class_name))
            derive_from_root(db, root);
    }
}

void PathDictionary::derive_from_root(const Database& db, Oid root) {
    std::vector<Oid> chain{root};
    std::function<void(size_t)> rec = [&](size_t level) {
        if (level == steps_.size()) {
            emit_record(db, chain, -1, nullptr);
            return;
        }
        const Step& step = steps_[level];
        Value v = db.get_field(chain.back(), step.attr);
        if (step.is_reference) {
            auto follow = [&](Oid target) {
                if (!db.object_exists(target)) return;  // dangling: inner join
                chain.push_back(target);
                rec(level + 1);
                chain.pop_back();
            };
            if (v.kind() == ValueKind::ref)
                follow(v.as_oid());
            else if (v.kind() == ValueKind::list)
                for (const auto& item : v.as_list()) follow(item.as_oid());
            // null link: no record
        } else {
            // Value collection terminal: one record per element.
            const auto& list = v.as_list();
            for (size_t i = 0; i < list.size(); ++i)
                emit_record(db, chain, static_cast<int32_t>(i), &list[i]);
        }
    };
    rec(0);
}

void PathDictionary::emit_record(const Database& db, const std::vector<Oid>& chain,
                                 int32_t ordinal, const Value* terminal_value) {
    PathRecord rec;
    rec.id = next_id_++;
    rec.chain = chain;
    rec.ordinal = ordinal;
    if (terminal_is_value_) {
        if (terminal_value && !terminal_scalar_attrs_.empty())
            rec.attr_keys.emplace_back(steps_.back().attr,
                                       Database::attr_key(*terminal_value));
    } else {
        Oid terminal = chain.back();
        for (const auto& attr : terminal_scalar_attrs_)
            rec.attr_keys.emplace_back(attr, Database::attr_key(db.get_field(terminal, attr)));
    }
    for (const auto& [attr, key] : rec.attr_keys)
        attr_index_.at(attr).insert(key, Oid{0, rec.id});
    for (Oid oid : unique_oids(rec.chain)) identity_[oid].push_back(rec.id);
    records_.emplace(rec.id, std::move(rec));
}

void PathDictionary::remove_record(uint64_t id) {
    auto it = records_.find(id);
    if (it == records_.end()) return;
    const PathRecord& rec = it->second;
    for (const auto& [attr, key] : rec.attr_keys)
        attr_index_.at(attr).erase(key, Oid{0, id});
    for (Oid oid : unique_oids(rec.chain)) {
        auto iit = identity_.find(oid);
        if (iit == identity_.end()) continue;
        auto& ids = iit->second;
        auto pos = std::find(ids.begin(), ids.end(), id);
        if (pos != ids.end()) ids.erase(pos);
        if (ids.empty()) identity_.erase(iit);
    }
    records_.erase(it);
}

void PathDictionary::build(const Database& db) {
    records_.clear();
    identity_.clear();
    for (auto& [attr, tree] : attr_index_) tree = store::BTree();
    for (auto& m : forward_) m.clear();
    for (auto& m : reverse_) m.clear();
    next_id_ = 1;

    // Edges for every object on the path, then chains from every root.
    db.scan_extent(decl_.class_name, true,
                   [&](Oid oid, const store::ObjectRecord&) { refresh_edges(db, oid); });
    for (size_t level = 1; level < steps_.size(); ++level) {
        const Step& prev = steps_[level - 1];
        if (!prev.is_reference) continue;
        db.scan_extent(prev.target, true, [&](Oid oid, const store::ObjectRecord&) {
            refresh_edges(db, oid);
        });
    }
    db.scan_extent(decl_.class_name, true,
                   [&](Oid oid, const store::ObjectRecord&) { derive_from_root(db, oid); });
}

void PathDictionary::on_insert(const Database& db, Oid oid) {
    refresh_edges(db, oid);
    recompute_roots(db, affected_roots(db, oid));
}

void PathDictionary::on_delete(const Database& db, Oid oid) {
    // Roots are found through the edges recorded before the delete.
    std::set<Oid> roots = affected_roots(db, oid);
    drop_edges_of(oid);
    for (auto& level : reverse_)
        level.erase(oid);
    recompute_roots(db, roots);
}

void PathDictionary::on_update(const Database& db, Oid oid, const std::string& attr) {
    bool on_path = false;
    for (const auto& step : steps_)
        if (step.attr == attr) on_path = true;
    if (!on_path) return;
    std::set<Oid> roots = affected_roots(db, oid);
    refresh_edges(db, oid);
    for (Oid root : affected_roots(db, oid)) roots.insert(root);
    recompute_roots(db, roots);
}

void PathDictionary::lookup_oid(Oid oid,
                                const std::function<void(const PathRecord&)>& emit) const {
    auto it = identity_.find(oid);
    if (it == identity_.end()) return;
    for (uint64_t id : it->second) emit(records_.at(id));
}

bool PathDictionary::has_attr_index(const std::string& attr) const {
    return attr_index_.count(attr) > 0;
}

void PathDictionary::lookup_attr(const std::string& attr,
                                 const std::optional<TypedKey>& lo,
                                 const std::optional<TypedKey>& hi,
                                 const std::function<void(const PathRecord&)>& emit) const {
    auto it = attr_index_.find(attr);
    if (it == attr_index_.end())
        throw Error("no attribute index on " + decl_.name() + " terminal ." + attr);
    it->second.range(lo, hi,
                     [&](const TypedKey&, Oid rid) { emit(records_.at(rid.slot)); });
}

void PathDictionary::for_each_record(
    const std::function<void(const PathRecord&)>& emit) const {
    for (const auto& [id, rec] : records_) emit(rec);
}

std::string PathDictionary::dump() const {
    std::ostringstream out;
    for (const auto& [id, rec] : records_) {
        out << id << ":";
        for (Oid oid : rec.chain) out << " " << to_string(oid);
        if (rec.ordinal >= 0) out << " [" << rec.ordinal << "]";
        out << "\n";
    }
    return out.str();
}

void PathDictionary::serialize(ByteWriter& w) const {
    w.u64(next_id_);
    w.u64(records_.size());
    for (const auto& [id, rec] : records_) {
        w.u64(rec.id);
        w.u32(static_cast<uint32_t>(rec.chain.size()));
        for (Oid oid : rec.chain) {
            w.u32(oid.extent);
            w.u64(oid.slot);
        }
        w.i64(rec.ordinal);
        w.u32(static_cast<uint32_t>(rec.attr_keys.size()));
        for (const auto& [attr, key] : rec.attr_keys) {
            w.str(attr);
            w.bytes(key);
        }
    }
}

void PathDictionary::load(ByteReader& r, const Database& db) {
    records_.clear();
    identity_.clear();
    for (auto& [attr, tree] : attr_index_) tree = store::BTree();
    next_id_ = r.u64();
    uint64_t n = r.u64();
    for (uint64_t i = 0; i < n; ++i) {
        PathRecord rec;
        rec.id = r.u64();
        uint32_t clen = r.u32();
        rec.chain.reserve(clen);
        for (uint32_t c = 0; c < clen; ++c) {
            Oid oid{r.u32(), r.u64()};
            rec.chain.push_back(oid);
        }
        rec.ordinal = static_cast<int32_t>(r.i64());
        uint32_t akeys = r.u32();
        for (uint32_t k = 0; k < akeys; ++k) {
            std::string attr = r.str();
            rec.attr_keys.emplace_back(std::move(attr), r.bytes());
        }
        for (const auto& [attr, key] : rec.attr_keys)
            attr_index_.at(attr).insert(key, Oid{0, rec.id});
        for (Oid oid : unique_oids(rec.chain)) identity_[oid].push_back(rec.id);
        records_.emplace(rec.id, std::move(rec));
    }
    rebuild_lookup_structures(db);
}

void PathDictionary::rebuild_lookup_structures(const Database& db) {
    for (auto& m : forward_) m.clear();
    for (auto& m : reverse_) m.clear();
    db.scan_extent(decl_.class_name, true,
                   [&](Oid oid, const store::ObjectRecord&) { refresh_edges(db, oid); });
    for (size_t level = 1; level < steps_.size(); ++level) {
        const Step& prev = steps_[level - 1];
        if (!prev.is_reference) continue;
        db.scan_extent(prev.target, true, [&](Oid oid, const store::ObjectRecord&) {
            refresh_edges(db, oid);
        });
    }
}

}  // namespace mddb::hidx
