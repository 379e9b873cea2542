#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mddb/catalog.hpp"
#include "mddb/value.hpp"

namespace mddb::query {

// Semantic type of an expression after typechecking.
struct SemType {
    enum class Base : uint8_t {
        unknown,
        boolean,
        integer,
        real,
        text,
        point,
        polyline,
        polygon,
        rect,
        dna,
        protein,
        object,
        obj_collection,
        scalar_collection,
    };

    Base base = Base::unknown;
    std::string class_name;  // object / obj_collection element class
    cat::ScalarType elem_scalar = cat::ScalarType::integer;  // scalar_collection

    SemType() = default;
    SemType(Base base, std::string class_name = "",
            cat::ScalarType elem_scalar = cat::ScalarType::integer)
        : base(base), class_name(std::move(class_name)), elem_scalar(elem_scalar) {}

    bool is_numeric() const { return base == Base::integer || base == Base::real; }
    bool is_spatial() const {
        return base == Base::point || base == Base::polyline ||
               base == Base::polygon || base == Base::rect;
    }
    std::string name() const;
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
    enum class Kind : uint8_t {
        literal,  // constant in `value`
        var,      // binding use; `name`, slot in `var_index`
        field,    // base.member
        method,   // base.member(args) or free function member(args)
        unary,    // not
        binary,   // comparisons, and/or, overlaps/inside, in
    };
    enum class Op : uint8_t {
        none,
        eq,
        ne,
        lt,
        le,
        gt,
        ge,
        and_,
        or_,
        not_,
        overlaps,
        inside,
        in,
    };

    Kind kind = Kind::literal;
    Op op = Op::none;
    store::Value value;    // literal
    std::string name;      // var name / member name
    int var_index = -1;    // resolved binding slot
    ExprPtr base;          // field/method receiver (null for free functions)
    std::vector<ExprPtr> args;
    ExprPtr lhs, rhs;      // binary; unary uses lhs

    SemType type;  // filled by typecheck

    ExprPtr clone() const;
};

struct Binding {
    std::string var;
    ExprPtr source;           // extent name (var expr) or collection path
    bool is_extent = false;   // resolved by typecheck
    std::string extent_class;
    SemType element_type;
    std::vector<int> depends_on;  // binding slots used by `source`
};

struct QueryAst {
    bool distinct = false;
    bool select_star = false;
    std::vector<ExprPtr> select;
    std::vector<Binding> bindings;
    ExprPtr where;  // null means true

    int binding_index(const std::string& var) const;
};

// Parses the OQL subset:
//   select [distinct] (* | expr, ...) from v in <source>, ... [where pred] [;]
// with and/or/not, comparisons, infix overlaps/inside/in, path expressions,
// method calls (blast, area) and the point/rect/rect_around/closest builtins.
QueryAst parse_query(std::string_view text);

// Resolves names against the catalog and annotates every expression; throws
// Error/ParseError naming the offending expression.
void typecheck(QueryAst& ast, const cat::Catalog& catalog);

// Canonical text of an expression (used for column headers and explain).
std::string to_text(const Expr& e);

}  // namespace mddb::query
