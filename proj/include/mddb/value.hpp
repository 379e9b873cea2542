#pragma once

#include <string>
#include <variant>
#include <vector>

#include "mddb/bytes.hpp"
#include "mddb/geom.hpp"

namespace mddb::store {

// Reference into the database's sequence area.
struct SeqRef {
    uint64_t id = 0;

    friend auto operator<=>(const SeqRef&, const SeqRef&) = default;
};

struct Value;
using ValueList = std::vector<Value>;

enum class ValueKind : uint8_t {
    null = 0,
    integer,
    real,
    text,
    geometry,
    ref,
    seqref,
    list,
};

// Tagged runtime value: object fields, query constants and result columns.
struct Value {
    std::variant<std::monostate, int64_t, double, std::string, geom::Geometry, Oid,
                 SeqRef, ValueList>
        v;

    Value() = default;
    Value(int64_t i) : v(i) {}
    Value(double d) : v(d) {}
    Value(std::string s) : v(std::move(s)) {}
    Value(const char* s) : v(std::string(s)) {}
    Value(geom::Geometry g) : v(std::move(g)) {}
    Value(Oid oid) : v(oid) {}
    Value(SeqRef r) : v(r) {}
    Value(ValueList l) : v(std::move(l)) {}

    ValueKind kind() const { return static_cast<ValueKind>(v.index()); }
    bool is_null() const { return kind() == ValueKind::null; }

    int64_t as_int() const;
    double as_real() const;
    // as_real also accepts integers (numeric widening in comparisons).
    const std::string& as_text() const;
    const geom::Geometry& as_geometry() const;
    Oid as_oid() const;
    SeqRef as_seqref() const;
    const ValueList& as_list() const;

    friend bool operator==(const Value&, const Value&) = default;
};

const char* kind_name(ValueKind k);

void serialize(ByteWriter& w, const Value& value);
Value deserialize_value(ByteReader& r);

void serialize(ByteWriter& w, const geom::Geometry& g);
geom::Geometry deserialize_geometry(ByteReader& r);

// Human-readable single-line rendering used by result output and stats.
std::string to_display(const Value& value);

}  // namespace mddb::store
