#include "mddb/exec.hpp"

#include <algorithm>
#include <sstream>

#include "mddb/align.hpp"
#include "mddb/geom.hpp"
#include "mddb/mtindex.hpp"
#include "mddb/pathdict.hpp"

namespace mddb::query {

using mddb::Oid;
using store::Value;
using store::ValueKind;

// ---------------------------------------------------------------------------
// Blast memoization

const EvalContext::SubjectSet& EvalContext::subjects(const std::string& class_name,
                                                     const std::string& attr) {
    auto key = std::make_pair(class_name, attr);
    auto it = subjects_.find(key);
    if (it != subjects_.end()) return it->second;
    SubjectSet set;
    db.scan_extent(class_name, true, [&](Oid oid, const store::ObjectRecord& rec) {
        size_t pos = db.field_index(db.class_of(oid), attr);
        const Value& v = rec.fields[pos];
        if (v.kind() != ValueKind::seqref) return;
        set.oids.push_back(oid);
        store::SeqRef ref = v.as_seqref();
        if (db.sequence_kind(ref) == seq::SeqKind::dna)
            set.views.push_back(seq::SeqView::of(db.get_dna(ref)));
        else
            set.views.push_back(seq::SeqView::of(db.get_protein(ref)));
    });
    return subjects_.emplace(key, std::move(set)).first->second;
}

const std::vector<Oid>& EvalContext::blast_hits(const std::string& class_name,
                                                const std::string& attr,
                                                store::SeqRef ref, int64_t threshold) {
    auto key = std::make_tuple(class_name, attr, ref.id, threshold);
    auto it = blast_cache_.find(key);
    if (it != blast_cache_.end()) return it->second;

    const SubjectSet& set = subjects(class_name, attr);
    std::vector<std::pair<Oid, const seq::SeqView*>> db_view;
    db_view.reserve(set.oids.size());
    for (size_t i = 0; i < set.oids.size(); ++i)
        db_view.emplace_back(set.oids[i], &set.views[i]);

    seq::SeqView query_view;
    seq::ScoringScheme scheme;
    if (db.sequence_kind(ref) == seq::SeqKind::dna) {
        query_view = seq::SeqView::of(db.get_dna(ref));
        scheme = seq::ScoringScheme::dna_scheme();
    } else {
        query_view = seq::SeqView::of(db.get_protein(ref));
        scheme = seq::ScoringScheme::blosum62();
    }
    auto hits = seq::blast_search(db_view, query_view, static_cast<int>(threshold),
                                  scheme);
    std::vector<Oid> oids;
    oids.reserve(hits.size());
    for (const auto& h : hits) oids.push_back(h.oid);
    std::sort(oids.begin(), oids.end());
    return blast_cache_.emplace(key, std::move(oids)).first->second;
}

// ---------------------------------------------------------------------------
// Expression evaluation

namespace {

[[noreturn]] void eval_fail(const Expr& e, const std::string& msg) {
    throw Error(msg + " in '" + to_text(e) + "'");
}

geom::Geometry geometry_of(const Value& v, const Expr& e) {
    if (v.kind() != ValueKind::geometry) eval_fail(e, "expected a geometry value");
    return v.as_geometry();
}

int compare_values(const Value& l, const Value& r, const Expr& e) {
    if (l.kind() == ValueKind::text && r.kind() == ValueKind::text)
        return l.as_text().compare(r.as_text());
    if (l.kind() == ValueKind::ref && r.kind() == ValueKind::ref) {
        Oid a = l.as_oid(), b = r.as_oid();
        if (a == b) return 0;
        return a < b ? -1 : 1;
    }
    if ((l.kind() == ValueKind::integer || l.kind() == ValueKind::real) &&
        (r.kind() == ValueKind::integer || r.kind() == ValueKind::real)) {
        if (l.kind() == ValueKind::integer && r.kind() == ValueKind::integer) {
            int64_t a = l.as_int(), b = r.as_int();
            if (a == b) return 0;
            return a < b ? -1 : 1;
        }
        double a = l.as_real(), b = r.as_real();
        if (a == b) return 0;
        return a < b ? -1 : 1;
    }
    eval_fail(e, std::string("cannot compare ") + kind_name(l.kind()) + " with " +
                     kind_name(r.kind()));
}

// The unique spatial attribute of a class, for closest().
std::string spatial_attr_of(const cat::Catalog& catalog, const std::string& class_name,
                            const Expr& e) {
    std::string name;
    for (const auto& attr : catalog.all_attributes(class_name)) {
        if (attr.type.is_spatial_scalar()) {
            if (!name.empty())
                eval_fail(e, class_name + " has several spatial attributes");
            name = attr.name;
        }
    }
    if (name.empty()) eval_fail(e, class_name + " has no spatial attribute");
    return name;
}

Value eval_closest(EvalContext& ctx, const Row& row, const Expr& e);

}  // namespace

bool eval_bool(EvalContext& ctx, const Row& row, const Expr& e) {
    switch (e.op) {
        case Expr::Op::and_:
            return eval_bool(ctx, row, *e.lhs) && eval_bool(ctx, row, *e.rhs);
        case Expr::Op::or_:
            return eval_bool(ctx, row, *e.lhs) || eval_bool(ctx, row, *e.rhs);
        case Expr::Op::not_: return !eval_bool(ctx, row, *e.lhs);
        case Expr::Op::eq:
        case Expr::Op::ne:
        case Expr::Op::lt:
        case Expr::Op::le:
        case Expr::Op::gt:
        case Expr::Op::ge: {
            int c = compare_values(eval(ctx, row, *e.lhs), eval(ctx, row, *e.rhs), e);
            switch (e.op) {
                case Expr::Op::eq: return c == 0;
                case Expr::Op::ne: return c != 0;
                case Expr::Op::lt: return c < 0;
                case Expr::Op::le: return c <= 0;
                case Expr::Op::gt: return c > 0;
                default: return c >= 0;
            }
        }
        case Expr::Op::overlaps: {
            geom::Geometry a = geometry_of(eval(ctx, row, *e.lhs), e);
            geom::Geometry b = geometry_of(eval(ctx, row, *e.rhs), e);
            return geom::overlaps(a, b);
        }
        case Expr::Op::inside: {
            geom::Geometry a = geometry_of(eval(ctx, row, *e.lhs), e);
            geom::Geometry b = geometry_of(eval(ctx, row, *e.rhs), e);
            return geom::inside(std::get<geom::Point>(a.shape),
                                std::get<geom::Polygon>(b.shape));
        }
        case Expr::Op::in: {
            // blast() membership goes through the memoized search.
            if (e.rhs->kind == Expr::Kind::method && e.rhs->name == "blast") {
                const Expr& recv = *e.rhs->base;
                Value ref = eval(ctx, row, recv);
                Value member = eval(ctx, row, *e.lhs);
                int64_t threshold = eval(ctx, row, *e.rhs->args[0]).as_int();
                const auto& hits =
                    ctx.blast_hits(recv.base->type.class_name, recv.name,
                                   ref.as_seqref(), threshold);
                return std::binary_search(hits.begin(), hits.end(), member.as_oid());
            }
            Value member = eval(ctx, row, *e.lhs);
            Value coll = eval(ctx, row, *e.rhs);
            for (const auto& item : coll.as_list())
                if (item == member) return true;
            return false;
        }
        default: eval_fail(e, "expression is not a predicate");
    }
}

Value eval(EvalContext& ctx, const Row& row, const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::literal: return e.value;
        case Expr::Kind::var: {
            const Value& v = row.at(e.var_index);
            if (v.is_null()) eval_fail(e, "unbound variable");
            return v;
        }
        case Expr::Kind::field: {
            Value base = eval(ctx, row, *e.base);
            if (base.is_null()) eval_fail(e, "field access on a null reference");
            return ctx.db.get_field(base.as_oid(), e.name);
        }
        case Expr::Kind::method: {
            if (!e.base) {
                if (e.name == "point") {
                    geom::Point p{eval(ctx, row, *e.args[0]).as_real(),
                                  eval(ctx, row, *e.args[1]).as_real()};
                    return Value{geom::Geometry{p}};
                }
                if (e.name == "rect") {
                    geom::Rect r{eval(ctx, row, *e.args[0]).as_real(),
                                 eval(ctx, row, *e.args[1]).as_real(),
                                 eval(ctx, row, *e.args[2]).as_real(),
                                 eval(ctx, row, *e.args[3]).as_real()};
                    geom::validate(r);
                    return Value{geom::Geometry{r}};
                }
                if (e.name == "rect_around") {
                    geom::Geometry g = eval(ctx, row, *e.args[0]).as_geometry();
                    const auto& p = std::get<geom::Point>(g.shape);
                    double half = eval(ctx, row, *e.args[1]).as_real();
                    return Value{geom::Geometry{
                        geom::Rect{p.x - half, p.y - half, p.x + half, p.y + half}}};
                }
                if (e.name == "closest") return eval_closest(ctx, row, e);
                eval_fail(e, "unknown function");
            }
            if (e.name == "blast") {
                Value ref = eval(ctx, row, *e.base);
                int64_t threshold = eval(ctx, row, *e.args[0]).as_int();
                const auto& hits = ctx.blast_hits(e.base->base->type.class_name,
                                                  e.base->name, ref.as_seqref(),
                                                  threshold);
                store::ValueList list;
                list.reserve(hits.size());
                for (Oid oid : hits) list.emplace_back(oid);
                return Value{std::move(list)};
            }
            // area and its catalog-declared equivalents.
            Value base = eval(ctx, row, *e.base);
            geom::Geometry g = geometry_of(base, e);
            if (!g.is_polygon()) eval_fail(e, "area() needs a polygon");
            return Value{geom::area(std::get<geom::Polygon>(g.shape))};
        }
        default: eval_fail(e, "not a value expression");
    }
}

namespace {

Value eval_closest(EvalContext& ctx, const Row& row, const Expr& e) {
    const std::string& class_name = e.args[0]->name;
    geom::Geometry pg = eval(ctx, row, *e.args[1]).as_geometry();
    const auto& probe = std::get<geom::Point>(pg.shape);
    std::string attr = spatial_attr_of(ctx.db.catalog(), class_name, e);

    auto resolve = [&](Oid oid) { return ctx.db.get_field(oid, attr).as_geometry(); };
    if (ctx.use_indexes) {
        if (const sidx::RTree* tree =
                ctx.rtree("rtree:" + class_name + "." + attr, class_name, attr)) {
            if (tree->empty()) eval_fail(e, "closest over an empty extent");
            return Value{tree->closest(probe, resolve)};
        }
    }
    // Index-free fallback: full scan with the same tie-break.
    bool found = false;
    double best_d = 0;
    Oid best{};
    ctx.db.scan_extent(class_name, true, [&](Oid oid, const store::ObjectRecord&) {
        double d = geom::distance(probe, resolve(oid));
        if (!found || d < best_d || (d == best_d && oid < best)) {
            found = true;
            best_d = d;
            best = oid;
        }
    });
    if (!found) eval_fail(e, "closest over an empty extent");
    return Value{best};
}

// ---------------------------------------------------------------------------
// Iterators

class OpIter {
public:
    virtual ~OpIter() = default;
    virtual void open(const Row* outer) = 0;  // outer row for dependent ops
    virtual bool next(Row& row) = 0;
};

using OpIterPtr = std::unique_ptr<OpIter>;

OpIterPtr make_iter(const PhysOp& op, EvalContext& ctx);

bool slot_in_class(const EvalContext& ctx, Oid oid, const std::string& class_name) {
    return ctx.db.catalog().interval(class_name).contains(oid.extent);
}

// Leaf scans buffer candidate oids at open; everything downstream streams.
class OidListIter : public OpIter {
public:
    OidListIter(const PhysOp& op, EvalContext& ctx) : op_(op), ctx_(ctx) {}

    void open(const Row* outer) override {
        (void)outer;
        oids_.clear();
        collect();
        pos_ = 0;
    }

    bool next(Row& row) override {
        if (pos_ >= oids_.size()) return false;
        row[op_.out_var] = Value{oids_[pos_++]};
        return true;
    }

protected:
    virtual void collect() = 0;

    const PhysOp& op_;
    EvalContext& ctx_;
    std::vector<Oid> oids_;
    size_t pos_ = 0;
};

class ExtentScanIter : public OidListIter {
public:
    using OidListIter::OidListIter;

private:
    void collect() override {
        ctx_.db.scan_extent(op_.class_name, true,
                            [&](Oid oid, const store::ObjectRecord&) {
                                oids_.push_back(oid);
                            });
    }
};

store::TypedKey bound_key(EvalContext& ctx, const PhysOp& op, const Expr& bound) {
    Value v = eval(ctx, {}, bound);
    // Coerce integer literals into the attribute's key space.
    if (op.attr_scalar == cat::ScalarType::real && v.kind() == ValueKind::integer)
        v = Value{static_cast<double>(v.as_int())};
    return store::Database::attr_key(v);
}

class BtreeScanIter : public OidListIter {
public:
    using OidListIter::OidListIter;

private:
    void collect() override {
        // index_name is "btree:Class.attr".
        auto dot = op_.index_name.rfind('.');
        auto colon = op_.index_name.find(':');
        const store::BTree* tree =
            ctx_.db.btree(op_.index_name.substr(colon + 1, dot - colon - 1),
                          op_.index_name.substr(dot + 1));
        if (!tree) throw Error("missing index " + op_.index_name);
        std::optional<store::TypedKey> lo, hi;
        if (op_.lo) lo = bound_key(ctx_, op_, *op_.lo);
        if (op_.hi) hi = bound_key(ctx_, op_, *op_.hi);
        tree->range(lo, hi, [&](const store::TypedKey&, Oid oid) {
            if (slot_in_class(ctx_, oid, op_.class_name)) oids_.push_back(oid);
        });
    }
};

class MtScanIter : public OidListIter {
public:
    using OidListIter::OidListIter;

private:
    void collect() override {
        auto colon = op_.index_name.find(':');
        auto dot = op_.index_name.rfind('.');
        const hidx::MTIndex* idx =
            ctx_.db.mt_index(op_.index_name.substr(colon + 1, dot - colon - 1),
                             op_.index_name.substr(dot + 1));
        if (!idx) throw Error("missing index " + op_.index_name);
        std::optional<Value> lo, hi;
        if (op_.lo) {
            Value v = eval(ctx_, {}, *op_.lo);
            if (op_.attr_scalar == cat::ScalarType::real &&
                v.kind() == ValueKind::integer)
                v = Value{static_cast<double>(v.as_int())};
            lo = v;
        }
        if (op_.hi) {
            Value v = eval(ctx_, {}, *op_.hi);
            if (op_.attr_scalar == cat::ScalarType::real &&
                v.kind() == ValueKind::integer)
                v = Value{static_cast<double>(v.as_int())};
            hi = v;
        }
        oids_ = hidx::mt_query(ctx_.db, *idx, op_.class_name, lo, hi);
    }
};

class RtreeWindowIter : public OidListIter {
public:
    using OidListIter::OidListIter;

private:
    void collect() override {
        auto colon = op_.index_name.find(':');
        auto dot = op_.index_name.rfind('.');
        const sidx::RTree* tree =
            ctx_.rtree(op_.index_name, op_.index_name.substr(colon + 1, dot - colon - 1),
                       op_.index_name.substr(dot + 1));
        if (!tree) throw Error("missing index " + op_.index_name);
        geom::Rect window = geom::mbr(eval(ctx_, {}, *op_.probe).as_geometry());
        tree->window_query(window, [&](Oid oid) {
            if (slot_in_class(ctx_, oid, op_.class_name)) oids_.push_back(oid);
        });
        std::sort(oids_.begin(), oids_.end());
        oids_.erase(std::unique(oids_.begin(), oids_.end()), oids_.end());
    }
};

class PdAttrIter : public OpIter {
public:
    PdAttrIter(const PhysOp& op, EvalContext& ctx) : op_(op), ctx_(ctx) {}

    void open(const Row* outer) override {
        (void)outer;
        const hidx::PathDictionary* pd = ctx_.db.path_dict(op_.index_name);
        if (!pd) throw Error("missing index " + op_.index_name);
        std::optional<store::TypedKey> lo, hi;
        if (op_.lo) lo = bound_key(ctx_, op_, *op_.lo);
        if (op_.hi) hi = bound_key(ctx_, op_, *op_.hi);
        oids_.clear();
        pd->lookup_attr(op_.attr, lo, hi, [&](const hidx::PathRecord& rec) {
            if (slot_in_class(ctx_, rec.chain.front(), op_.class_name))
                oids_.push_back(rec.chain.front());
        });
        pos_ = 0;
    }

    bool next(Row& row) override {
        if (pos_ >= oids_.size()) return false;
        row[op_.out_var] = Value{oids_[pos_++]};
        return true;
    }

private:
    const PhysOp& op_;
    EvalContext& ctx_;
    std::vector<Oid> oids_;
    size_t pos_ = 0;
};

// Probe mode: bind the path root whose terminal equals the probe object.
class PdProbeIter : public OpIter {
public:
    PdProbeIter(const PhysOp& op, EvalContext& ctx)
        : op_(op), ctx_(ctx), child_(make_iter(*op.children[0], ctx)) {}

    void open(const Row* outer) override {
        child_->open(outer);
        queue_.clear();
        at_ = 0;
    }

    bool next(Row& row) override {
        for (;;) {
            if (at_ < queue_.size()) {
                row[op_.out_var] = Value{queue_[at_++]};
                return true;
            }
            if (!child_->next(row)) return false;
            queue_.clear();
            at_ = 0;
            const hidx::PathDictionary* pd = ctx_.db.path_dict(op_.index_name);
            if (!pd) throw Error("missing index " + op_.index_name);
            Oid probe = eval(ctx_, row, *op_.probe).as_oid();
            pd->lookup_oid(probe, [&](const hidx::PathRecord& rec) {
                if (rec.chain.back() == probe &&
                    slot_in_class(ctx_, rec.chain.front(), op_.class_name))
                    queue_.push_back(rec.chain.front());
            });
            std::sort(queue_.begin(), queue_.end());
        }
    }

private:
    const PhysOp& op_;
    EvalContext& ctx_;
    OpIterPtr child_;
    std::vector<Oid> queue_;
    size_t at_ = 0;
};

// Path-equality filter answered by the path dictionary; falls back to direct
// evaluation when a side has no materialized record.
class PdFilterIter : public OpIter {
public:
    PdFilterIter(const PhysOp& op, EvalContext& ctx)
        : op_(op), ctx_(ctx), child_(make_iter(*op.children[0], ctx)) {}

    void open(const Row* outer) override { child_->open(outer); }

    bool next(Row& row) override {
        while (child_->next(row)) {
            if (passes(row)) return true;
        }
        return false;
    }

private:
    bool passes(const Row& row) {
        const hidx::PathDictionary* pd = ctx_.db.path_dict(op_.index_name);
        if (!pd) throw Error("missing index " + op_.index_name);
        Oid lhs_root = eval(ctx_, row, *op_.member).as_oid();
        Oid rhs_root = eval(ctx_, row, *op_.receiver).as_oid();
        std::optional<Oid> lt = terminal_of(*pd, lhs_root);
        std::optional<Oid> rt = terminal_of(*pd, rhs_root);
        if (!lt || !rt) return eval_bool(ctx_, row, *op_.predicate);
        return *lt == *rt;
    }

    static std::optional<Oid> terminal_of(const hidx::PathDictionary& pd, Oid root) {
        std::optional<Oid> out;
        pd.lookup_oid(root, [&](const hidx::PathRecord& rec) {
            if (rec.chain.front() == root) out = rec.chain.back();
        });
        return out;
    }

    const PhysOp& op_;
    EvalContext& ctx_;
    OpIterPtr child_;
};

class SpatialJoinIter : public OpIter {
public:
    SpatialJoinIter(const PhysOp& op, EvalContext& ctx)
        : op_(op), ctx_(ctx), child_(make_iter(*op.children[0], ctx)) {}

    void open(const Row* outer) override {
        child_->open(outer);
        queue_.clear();
        at_ = 0;
    }

    bool next(Row& row) override {
        for (;;) {
            if (at_ < queue_.size()) {
                row[op_.out_var] = Value{queue_[at_++]};
                return true;
            }
            if (!child_->next(row)) return false;
            refill(row);
        }
    }

private:
    void refill(const Row& row) {
        queue_.clear();
        at_ = 0;
        auto colon = op_.index_name.find(':');
        auto dot = op_.index_name.rfind('.');
        const sidx::RTree* tree =
            ctx_.rtree(op_.index_name, op_.index_name.substr(colon + 1, dot - colon - 1),
                       op_.index_name.substr(dot + 1));
        if (!tree) throw Error("missing index " + op_.index_name);

        geom::Geometry outer_geom = eval(ctx_, row, *op_.probe).as_geometry();
        std::vector<Oid> candidates = tree->window_query(geom::mbr(outer_geom));
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()),
                         candidates.end());
        for (Oid cand : candidates) {
            if (!slot_in_class(ctx_, cand, op_.class_name)) continue;
            Value inner = ctx_.db.get_field(cand, op_.attr);
            bool hit = false;
            auto test = [&](const geom::Geometry& g) {
                if (hit) return;
                const geom::Geometry& lhs = op_.inner_is_lhs ? g : outer_geom;
                const geom::Geometry& rhs = op_.inner_is_lhs ? outer_geom : g;
                if (op_.spatial_pred == Expr::Op::overlaps)
                    hit = geom::overlaps(lhs, rhs);
                else
                    hit = geom::inside(std::get<geom::Point>(lhs.shape),
                                       std::get<geom::Polygon>(rhs.shape));
            };
            if (inner.kind() == ValueKind::geometry) {
                test(inner.as_geometry());
            } else if (inner.kind() == ValueKind::list) {
                for (const auto& item : inner.as_list()) test(item.as_geometry());
            }
            if (hit) queue_.push_back(cand);
        }
    }

    const PhysOp& op_;
    EvalContext& ctx_;
    OpIterPtr child_;
    std::vector<Oid> queue_;
    size_t at_ = 0;
};

class CollectionBindIter : public OpIter {
public:
    CollectionBindIter(const PhysOp& op, EvalContext& ctx)
        : op_(op), ctx_(ctx), child_(make_iter(*op.children[0], ctx)) {}

    void open(const Row* outer) override {
        child_->open(outer);
        list_.clear();
        at_ = 0;
    }

    bool next(Row& row) override {
        for (;;) {
            if (at_ < list_.size()) {
                row[op_.out_var] = list_[at_++];
                return true;
            }
            if (!child_->next(row)) return false;
            list_ = eval(ctx_, row, *op_.probe).as_list();
            at_ = 0;
        }
    }

private:
    const PhysOp& op_;
    EvalContext& ctx_;
    OpIterPtr child_;
    store::ValueList list_;
    size_t at_ = 0;
};

class FilterIter : public OpIter {
public:
    FilterIter(const PhysOp& op, EvalContext& ctx)
        : op_(op), ctx_(ctx), child_(make_iter(*op.children[0], ctx)) {}

    void open(const Row* outer) override { child_->open(outer); }

    bool next(Row& row) override {
        while (child_->next(row))
            if (eval_bool(ctx_, row, *op_.predicate)) return true;
        return false;
    }

private:
    const PhysOp& op_;
    EvalContext& ctx_;
    OpIterPtr child_;
};

class BlastProbeIter : public OpIter {
public:
    BlastProbeIter(const PhysOp& op, EvalContext& ctx)
        : op_(op), ctx_(ctx), child_(make_iter(*op.children[0], ctx)) {}

    void open(const Row* outer) override {
        child_->open(outer);
        queue_.clear();
        at_ = 0;
    }

    bool next(Row& row) override {
        for (;;) {
            if (op_.out_var >= 0 && at_ < queue_.size()) {
                row[op_.out_var] = Value{queue_[at_++]};
                return true;
            }
            if (!child_->next(row)) return false;
            Value ref = eval(ctx_, row, *op_.receiver);
            const auto& hits =
                ctx_.blast_hits(op_.class_name, op_.attr, ref.as_seqref(),
                                op_.threshold);
            if (op_.out_var >= 0) {
                queue_.clear();
                for (Oid oid : hits)
                    if (slot_in_class(ctx_, oid, op_.index_name)) queue_.push_back(oid);
                at_ = 0;
                continue;
            }
            Oid member = eval(ctx_, row, *op_.member).as_oid();
            if (std::binary_search(hits.begin(), hits.end(), member)) return true;
        }
    }

private:
    const PhysOp& op_;
    EvalContext& ctx_;
    OpIterPtr child_;
    std::vector<Oid> queue_;
    size_t at_ = 0;
};

class NestedLoopJoinIter : public OpIter {
public:
    NestedLoopJoinIter(const PhysOp& op, EvalContext& ctx)
        : outer_(make_iter(*op.children[0], ctx)),
          inner_(make_iter(*op.children[1], ctx)) {}

    void open(const Row* outer) override {
        outer_->open(outer);
        have_outer_ = false;
    }

    bool next(Row& row) override {
        for (;;) {
            if (!have_outer_) {
                if (!outer_->next(row)) return false;
                have_outer_ = true;
                inner_->open(&row);
            }
            if (inner_->next(row)) return true;
            have_outer_ = false;
        }
    }

private:
    OpIterPtr outer_;
    OpIterPtr inner_;
    bool have_outer_ = false;
};

class MinusIter : public OpIter {
public:
    MinusIter(const PhysOp& op, EvalContext& ctx)
        : op_(op),
          left_(make_iter(*op.children[0], ctx)),
          right_(make_iter(*op.children[1], ctx)) {}

    void open(const Row* outer) override {
        left_->open(outer);
        right_->open(outer);
        // The right side is buffered; the left side streams.
        excluded_.clear();
        Row row(row_width(op_));
        while (right_->next(row)) excluded_.insert(row_key(row));
    }

    bool next(Row& row) override {
        while (left_->next(row))
            if (!excluded_.count(row_key(row))) return true;
        return false;
    }

private:
    static size_t row_width(const PhysOp& op) {
        size_t w = 0;
        std::function<void(const PhysOp&)> walk = [&](const PhysOp& o) {
            w = std::max(w, static_cast<size_t>(o.out_var + 1));
            for (const auto& c : o.children) walk(*c);
        };
        walk(op);
        return w;
    }
    static std::string row_key(const Row& row) {
        std::vector<uint8_t> bytes;
        ByteWriter w(bytes);
        for (const auto& v : row) serialize(w, v);
        return std::string(bytes.begin(), bytes.end());
    }

    const PhysOp& op_;
    OpIterPtr left_;
    OpIterPtr right_;
    std::set<std::string> excluded_;
};

OpIterPtr make_iter(const PhysOp& op, EvalContext& ctx) {
    switch (op.kind) {
        case PhysOp::Kind::extent_scan: return std::make_unique<ExtentScanIter>(op, ctx);
        case PhysOp::Kind::btree_scan: return std::make_unique<BtreeScanIter>(op, ctx);
        case PhysOp::Kind::mt_scan: return std::make_unique<MtScanIter>(op, ctx);
        case PhysOp::Kind::rtree_window:
            return std::make_unique<RtreeWindowIter>(op, ctx);
        case PhysOp::Kind::pd_scan:
            if (op.children.empty()) return std::make_unique<PdAttrIter>(op, ctx);
            if (op.probe && op.member) return std::make_unique<PdFilterIter>(op, ctx);
            return std::make_unique<PdProbeIter>(op, ctx);
        case PhysOp::Kind::spatial_join:
            return std::make_unique<SpatialJoinIter>(op, ctx);
        case PhysOp::Kind::collection_bind:
            return std::make_unique<CollectionBindIter>(op, ctx);
        case PhysOp::Kind::filter: return std::make_unique<FilterIter>(op, ctx);
        case PhysOp::Kind::blast_probe: return std::make_unique<BlastProbeIter>(op, ctx);
        case PhysOp::Kind::nested_loop_join:
            return std::make_unique<NestedLoopJoinIter>(op, ctx);
        case PhysOp::Kind::minus: return std::make_unique<MinusIter>(op, ctx);
        default: throw Error("operator cannot run standalone");
    }
}

std::string dedupe_key(const Row& out) {
    std::vector<uint8_t> bytes;
    ByteWriter w(bytes);
    for (const auto& v : out) serialize(w, v);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace

void execute(const PhysicalPlan& plan, EvalContext& ctx,
             const std::function<void(const Row&)>& emit) {
    const PhysOp* top = plan.root.get();
    bool distinct = false;
    if (top->kind == PhysOp::Kind::distinct) {
        distinct = true;
        top = top->children[0].get();
    }
    if (top->kind != PhysOp::Kind::project)
        throw Error("plan root must be a projection");

    OpIterPtr iter = make_iter(*top->children[0], ctx);
    Row row(plan.num_slots);
    Row out;
    std::set<std::string> seen;
    iter->open(nullptr);
    while (iter->next(row)) {
        out.clear();
        for (const auto& e : top->exprs) out.push_back(eval(ctx, row, *e));
        if (distinct && !seen.insert(dedupe_key(out)).second) continue;
        emit(out);
    }
}

RowSet execute(const PhysicalPlan& plan, EvalContext& ctx) {
    RowSet rs;
    rs.columns = plan.columns;
    execute(plan, ctx, [&](const Row& row) { rs.rows.push_back(row); });
    return rs;
}

// ---------------------------------------------------------------------------
// Naive evaluation (the oracle): direct nested loops in binding order.

RowSet naive_execute(const QueryAst& ast, const store::Database& db) {
    EvalContext ctx(db, /*use_indexes=*/false);
    RowSet rs;
    for (const auto& e : ast.select) rs.columns.push_back(to_text(*e));
    if (ast.select_star)
        for (const auto& b : ast.bindings) rs.columns.push_back(b.var);

    Row row(ast.bindings.size());
    std::set<std::string> seen;

    std::function<void(size_t)> recurse = [&](size_t depth) {
        if (depth == ast.bindings.size()) {
            if (ast.where && !eval_bool(ctx, row, *ast.where)) return;
            Row out;
            if (ast.select_star) {
                out = row;
            } else {
                for (const auto& e : ast.select) out.push_back(eval(ctx, row, *e));
            }
            if (ast.distinct && !seen.insert(dedupe_key(out)).second) return;
            rs.rows.push_back(std::move(out));
            return;
        }
        const Binding& b = ast.bindings[depth];
        if (b.is_extent) {
            db.scan_extent(b.extent_class, true, [&](Oid oid, const store::ObjectRecord&) {
                row[depth] = Value{oid};
                recurse(depth + 1);
            });
        } else {
            store::ValueList list = eval(ctx, row, *b.source).as_list();
            for (auto& item : list) {
                row[depth] = item;
                recurse(depth + 1);
            }
        }
        row[depth] = Value{};
    };
    recurse(0);
    return rs;
}

std::string serialize_rows(const RowSet& rows, const store::Database& db,
                           OutputFormat format) {
    std::ostringstream out;
    auto display = [&](const Value& v) {
        if (v.kind() == ValueKind::seqref) return db.sequence_text(v.as_seqref());
        return store::to_display(v);
    };
    for (const auto& row : rows.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << '\t';
            if (format == OutputFormat::records && i < rows.columns.size())
                out << rows.columns[i] << '=';
            out << display(row[i]);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace mddb::query
