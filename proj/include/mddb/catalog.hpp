#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mddb/common.hpp"

namespace mddb::cat {

enum class ScalarType : uint8_t {
    integer,
    real,
    text,
    polygon,
    polyline,
    point,
    dna,
    protein,
};

const char* scalar_name(ScalarType t);

enum class Cardinality : uint8_t { one_to_n, n_to_m };

// Attribute types: a scalar, a reference to a class, or a collection of
// either. Collections do not nest.
struct AttrType {
    enum class Kind : uint8_t { scalar, reference, collection };

    Kind kind = Kind::scalar;
    ScalarType scalar = ScalarType::integer;  // scalar / collection-of-scalar
    std::string target;                       // reference target class
    bool element_is_reference = false;        // collection element kind
    Cardinality cardinality = Cardinality::one_to_n;

    bool is_spatial_scalar() const {
        return kind == Kind::scalar &&
               (scalar == ScalarType::polygon || scalar == ScalarType::polyline ||
                scalar == ScalarType::point);
    }
    bool operator==(const AttrType&) const = default;
};

struct Attribute {
    std::string name;
    AttrType type;

    bool operator==(const Attribute&) const = default;
};

struct ClassDef {
    std::string name;
    std::string super;  // empty for roots
    std::vector<Attribute> attributes;

    bool operator==(const ClassDef&) const = default;
};

struct IndexDecl {
    enum class Kind : uint8_t { btree, rtree, pathdict, mt };

    Kind kind = Kind::btree;
    std::string class_name;
    std::string attr;               // btree / rtree / mt key attribute
    std::vector<std::string> path;  // pathdict attribute chain

    std::string name() const;
    bool operator==(const IndexDecl&) const = default;
};

struct CostDecl {
    std::string class_name;
    std::string method;
    int64_t cost = 0;
    std::string equiv_group;  // empty when the method stands alone

    bool operator==(const CostDecl&) const = default;
};

// Preorder interval of a class: [lo, hi] covers exactly its subtree, lo is the
// class's own typecode.
struct TypeInterval {
    uint32_t lo = 0;
    uint32_t hi = 0;

    bool contains(uint32_t code) const { return code >= lo && code <= hi; }
    bool contains(const TypeInterval& o) const { return o.lo >= lo && o.hi <= hi; }
    bool operator==(const TypeInterval&) const = default;
};

inline constexpr int64_t kDefaultMethodCost = 100;

class Catalog {
public:
    void add_class(ClassDef def);
    void add_index(IndexDecl decl);
    void register_cost(const std::string& class_name, const std::string& method,
                       int64_t cost, const std::string& equiv_group = "");

    // Validates every invariant and assigns preorder typecodes. Must be called
    // after construction and before any lookup.
    void finalize();

    bool has_class(const std::string& name) const;
    const ClassDef& cls(const std::string& name) const;
    const std::vector<ClassDef>& classes() const { return classes_; }

    // Inherited attributes first, in base-to-derived declaration order.
    std::vector<Attribute> all_attributes(const std::string& name) const;
    const Attribute* find_attribute(const std::string& class_name,
                                    const std::string& attr) const;
    // Class that owns the attribute (walks up the inheritance chain).
    std::optional<std::string> attribute_owner(const std::string& class_name,
                                               const std::string& attr) const;

    uint32_t typecode(const std::string& name) const;
    TypeInterval interval(const std::string& name) const;
    const std::string& class_of_code(uint32_t code) const;
    uint32_t class_count() const { return static_cast<uint32_t>(classes_.size()); }
    bool is_subclass(const std::string& sub, const std::string& super) const;
    std::vector<std::string> subtree_classes(const std::string& name) const;

    const std::vector<IndexDecl>& indexes() const { return indexes_; }
    const std::vector<CostDecl>& costs() const { return costs_; }
    int64_t method_cost(const std::string& class_name, const std::string& method) const;
    // Cheapest member of the method's equivalence group (the method itself
    // when it is not grouped).
    std::string cheapest_equivalent(const std::string& class_name,
                                    const std::string& method) const;

    // Canonical DSL form; parse_schema(print()) reproduces the catalog.
    std::string print() const;

private:
    const ClassDef* find_class(const std::string& name) const;

    std::vector<ClassDef> classes_;
    std::vector<IndexDecl> indexes_;
    std::vector<CostDecl> costs_;
    std::map<std::string, uint32_t> index_by_name_;
    std::map<std::string, TypeInterval> intervals_;
    std::vector<std::string> class_by_code_;
    bool finalized_ = false;
};

// Parses the schema DSL:
//   class Name [extends Parent] { attr: type; ... }
//   index btree(Class.attr) | rtree(Class.attr) | mt(Class, attr)
//         | pathdict(Class.attr.attr...)
//   cost Class.method = integer [equiv group]
// with '//' comments. Errors carry line/column.
Catalog parse_schema(std::string_view text);

}  // namespace mddb::cat
