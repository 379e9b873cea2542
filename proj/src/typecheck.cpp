#include <set>

#include "mddb/query.hpp"

namespace mddb::query {

namespace {

using Base = SemType::Base;

SemType scalar_sem(cat::ScalarType t) {
    switch (t) {
        case cat::ScalarType::integer: return {Base::integer, "", t};
        case cat::ScalarType::real: return {Base::real, "", t};
        case cat::ScalarType::text: return {Base::text, "", t};
        case cat::ScalarType::polygon: return {Base::polygon, "", t};
        case cat::ScalarType::polyline: return {Base::polyline, "", t};
        case cat::ScalarType::point: return {Base::point, "", t};
        case cat::ScalarType::dna: return {Base::dna, "", t};
        case cat::ScalarType::protein: return {Base::protein, "", t};
    }
    return {};
}

class Checker {
public:
    Checker(QueryAst& ast, const cat::Catalog& catalog) : ast_(ast), catalog_(catalog) {}

    void run() {
        std::set<std::string> seen;
        for (auto& b : ast_.bindings) {
            if (!seen.insert(b.var).second)
                throw Error("duplicate binding variable " + b.var);
            if (catalog_.has_class(b.var))
                throw Error("binding variable " + b.var + " shadows a class name");
        }

        for (size_t i = 0; i < ast_.bindings.size(); ++i) {
            Binding& b = ast_.bindings[i];
            visible_ = static_cast<int>(i);
            if (b.source->kind == Expr::Kind::var &&
                catalog_.has_class(b.source->name)) {
                b.is_extent = true;
                b.extent_class = b.source->name;
                b.element_type = SemType{Base::object, b.extent_class};
            } else {
                deps_.clear();
                check(*b.source);
                b.depends_on.assign(deps_.begin(), deps_.end());
                const SemType& t = b.source->type;
                if (t.base == Base::obj_collection)
                    b.element_type = SemType{Base::object, t.class_name};
                else if (t.base == Base::scalar_collection)
                    b.element_type = scalar_sem(t.elem_scalar);
                else
                    throw Error("binding " + b.var + " needs a collection, got " +
                                t.name() + " in '" + to_text(*b.source) + "'");
            }
        }

        visible_ = static_cast<int>(ast_.bindings.size());
        deps_.clear();
        for (auto& e : ast_.select) check(*e);
        if (ast_.where) {
            check(*ast_.where);
            if (ast_.where->type.base != Base::boolean)
                throw Error("where clause must be boolean, got " +
                            ast_.where->type.name());
        }
    }

private:
    [[noreturn]] void fail(const Expr& e, const std::string& msg) {
        throw Error(msg + " in '" + to_text(e) + "'");
    }

    void check(Expr& e) {
        switch (e.kind) {
            case Expr::Kind::literal: {
                switch (e.value.kind()) {
                    case store::ValueKind::integer: e.type = {Base::integer}; break;
                    case store::ValueKind::real: e.type = {Base::real}; break;
                    case store::ValueKind::text: e.type = {Base::text}; break;
                    default: fail(e, "unsupported literal");
                }
                break;
            }
            case Expr::Kind::var: {
                int idx = ast_.binding_index(e.name);
                if (idx < 0 || idx >= visible_)
                    fail(e, "unknown identifier '" + e.name + "'");
                e.var_index = idx;
                e.type = ast_.bindings[idx].element_type;
                deps_.insert(idx);
                break;
            }
            case Expr::Kind::field: {
                check(*e.base);
                if (e.base->type.base != Base::object)
                    fail(e, "field access on " + e.base->type.name());
                const cat::Attribute* attr =
                    catalog_.find_attribute(e.base->type.class_name, e.name);
                if (!attr)
                    fail(e, "class " + e.base->type.class_name + " has no attribute " +
                                e.name);
                switch (attr->type.kind) {
                    case cat::AttrType::Kind::scalar:
                        e.type = scalar_sem(attr->type.scalar);
                        break;
                    case cat::AttrType::Kind::reference:
                        e.type = {Base::object, attr->type.target};
                        break;
                    case cat::AttrType::Kind::collection:
                        if (attr->type.element_is_reference)
                            e.type = {Base::obj_collection, attr->type.target};
                        else
                            e.type = {Base::scalar_collection, "", attr->type.scalar};
                        break;
                }
                break;
            }
            case Expr::Kind::method: check_method(e); break;
            case Expr::Kind::unary: {
                check(*e.lhs);
                if (e.lhs->type.base != Base::boolean)
                    fail(e, "'not' needs a boolean operand");
                e.type = {Base::boolean};
                break;
            }
            case Expr::Kind::binary: check_binary(e); break;
        }
    }

    void check_method(Expr& e) {
        if (!e.base && e.name == "closest") {
            // The first argument names an extent, not a binding.
            if (e.args.size() != 2 || e.args[0]->kind != Expr::Kind::var ||
                !catalog_.has_class(e.args[0]->name))
                fail(e, "closest(Extent, point) expected");
            check(*e.args[1]);
            if (e.args[1]->type.base != Base::point)
                fail(e, "closest(Extent, point) expected");
            e.args[0]->type = {Base::object, e.args[0]->name};
            e.type = {Base::object, e.args[0]->name};
            return;
        }
        for (auto& a : e.args) check(*a);
        if (!e.base) {
            // Free functions.
            if (e.name == "point") {
                if (e.args.size() != 2 || !e.args[0]->type.is_numeric() ||
                    !e.args[1]->type.is_numeric())
                    fail(e, "point(x, y) needs two numeric arguments");
                e.type = {Base::point};
                return;
            }
            if (e.name == "rect") {
                if (e.args.size() != 4) fail(e, "rect needs four numeric arguments");
                for (const auto& a : e.args)
                    if (!a->type.is_numeric()) fail(e, "rect needs numeric arguments");
                e.type = {Base::rect};
                return;
            }
            if (e.name == "rect_around") {
                if (e.args.size() != 2 || e.args[0]->type.base != Base::point ||
                    !e.args[1]->type.is_numeric())
                    fail(e, "rect_around(point, halfwidth) expected");
                e.type = {Base::rect};
                return;
            }
            fail(e, "unknown function '" + e.name + "'");
        }

        check(*e.base);
        if (e.name == "blast") {
            if (e.base->type.base != Base::dna && e.base->type.base != Base::protein)
                fail(e, "blast() needs a dna or protein receiver");
            if (e.args.size() != 1 || e.args[0]->type.base != Base::integer)
                fail(e, "blast(threshold) needs an integer threshold");
            if (e.base->kind != Expr::Kind::field ||
                e.base->base->type.base != Base::object)
                fail(e, "blast() receiver must be an object's sequence attribute");
            e.type = {Base::obj_collection, e.base->base->type.class_name};
            return;
        }
        // Catalog-declared method names resolve to a built-in through their
        // equivalence group; `area` is the built-in.
        std::string effective = e.name;
        if (e.base->kind == Expr::Kind::field || e.base->kind == Expr::Kind::var) {
            // Receiver's owner class for cost lookups.
            const Expr* owner = e.base->kind == Expr::Kind::field ? e.base->base.get()
                                                                  : e.base.get();
            if (owner && owner->type.base == Base::object)
                effective = catalog_.cheapest_equivalent(owner->type.class_name, e.name);
        }
        if (effective == "area" || e.name == "area") {
            if (e.base->type.base != Base::polygon)
                fail(e, "area() needs a polygon receiver");
            if (!e.args.empty()) fail(e, "area() takes no arguments");
            e.type = {Base::real};
            return;
        }
        fail(e, "unknown method '" + e.name + "'");
    }

    void check_binary(Expr& e) {
        check(*e.lhs);
        check(*e.rhs);
        const SemType& l = e.lhs->type;
        const SemType& r = e.rhs->type;
        switch (e.op) {
            case Expr::Op::and_:
            case Expr::Op::or_:
                if (l.base != Base::boolean || r.base != Base::boolean)
                    fail(e, "boolean connective over non-boolean operands");
                break;
            case Expr::Op::eq:
            case Expr::Op::ne: {
                bool ok = (l.is_numeric() && r.is_numeric()) ||
                          (l.base == Base::text && r.base == Base::text) ||
                          (l.base == Base::object && r.base == Base::object);
                if (!ok)
                    fail(e, "cannot compare " + l.name() + " with " + r.name());
                break;
            }
            case Expr::Op::lt:
            case Expr::Op::le:
            case Expr::Op::gt:
            case Expr::Op::ge: {
                bool ok = (l.is_numeric() && r.is_numeric()) ||
                          (l.base == Base::text && r.base == Base::text);
                if (!ok)
                    fail(e, "cannot order " + l.name() + " against " + r.name());
                break;
            }
            case Expr::Op::overlaps:
                if (!l.is_spatial() || !r.is_spatial())
                    fail(e, "overlaps needs spatial operands, got " + l.name() +
                                " and " + r.name());
                break;
            case Expr::Op::inside:
                if (l.base != Base::point || r.base != Base::polygon)
                    fail(e, "inside needs a point and a polygon, got " + l.name() +
                                " and " + r.name());
                break;
            case Expr::Op::in: {
                bool ok = (r.base == Base::obj_collection && l.base == Base::object) ||
                          (r.base == Base::scalar_collection &&
                           scalar_sem(r.elem_scalar).base == l.base);
                if (!ok) fail(e, l.name() + " cannot be a member of " + r.name());
                break;
            }
            default: fail(e, "malformed expression");
        }
        e.type = {Base::boolean};
    }

    QueryAst& ast_;
    const cat::Catalog& catalog_;
    int visible_ = 0;
    std::set<int> deps_;
};

}  // namespace

void typecheck(QueryAst& ast, const cat::Catalog& catalog) {
    Checker(ast, catalog).run();
}

}  // namespace mddb::query
