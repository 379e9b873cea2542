#include "mddb/value.hpp"

#include <sstream>

namespace mddb::store {

namespace {

[[noreturn]] void wrong_kind(const Value& v, const char* wanted) {
    throw Error(std::string("value is ") + kind_name(v.kind()) + ", expected " + wanted);
}

}  // namespace

const char* kind_name(ValueKind k) {
    switch (k) {
        case ValueKind::null: return "null";
        case ValueKind::integer: return "integer";
        case ValueKind::real: return "real";
        case ValueKind::text: return "string";
        case ValueKind::geometry: return "geometry";
        case ValueKind::ref: return "reference";
        case ValueKind::seqref: return "sequence";
        case ValueKind::list: return "collection";
    }
    return "?";
}

int64_t Value::as_int() const {
    if (auto* p = std::get_if<int64_t>(&v)) return *p;
    wrong_kind(*this, "integer");
}

double Value::as_real() const {
    if (auto* p = std::get_if<double>(&v)) return *p;
    if (auto* p = std::get_if<int64_t>(&v)) return static_cast<double>(*p);
    wrong_kind(*this, "real");
}

const std::string& Value::as_text() const {
    if (auto* p = std::get_if<std::string>(&v)) return *p;
    wrong_kind(*this, "string");
}

const geom::Geometry& Value::as_geometry() const {
    if (auto* p = std::get_if<geom::Geometry>(&v)) return *p;
    wrong_kind(*this, "geometry");
}

Oid Value::as_oid() const {
    if (auto* p = std::get_if<Oid>(&v)) return *p;
    wrong_kind(*this, "reference");
}

SeqRef Value::as_seqref() const {
    if (auto* p = std::get_if<SeqRef>(&v)) return *p;
    wrong_kind(*this, "sequence");
}

const ValueList& Value::as_list() const {
    if (auto* p = std::get_if<ValueList>(&v)) return *p;
    wrong_kind(*this, "collection");
}

void serialize(ByteWriter& w, const geom::Geometry& g) {
    std::visit(
        [&](const auto& shape) {
            using T = std::decay_t<decltype(shape)>;
            if constexpr (std::is_same_v<T, geom::Point>) {
                w.u8(0);
                w.f64(shape.x);
                w.f64(shape.y);
            } else if constexpr (std::is_same_v<T, geom::Polyline>) {
                w.u8(1);
                w.u32(static_cast<uint32_t>(shape.vertices.size()));
                for (const auto& p : shape.vertices) {
                    w.f64(p.x);
                    w.f64(p.y);
                }
            } else if constexpr (std::is_same_v<T, geom::Polygon>) {
                w.u8(2);
                w.u32(static_cast<uint32_t>(shape.outer.size()));
                for (const auto& p : shape.outer) {
                    w.f64(p.x);
                    w.f64(p.y);
                }
                w.u32(static_cast<uint32_t>(shape.holes.size()));
                for (const auto& hole : shape.holes) {
                    w.u32(static_cast<uint32_t>(hole.size()));
                    for (const auto& p : hole) {
                        w.f64(p.x);
                        w.f64(p.y);
                    }
                }
            } else {
                w.u8(3);
                w.f64(shape.xmin);
                w.f64(shape.ymin);
                w.f64(shape.xmax);
                w.f64(shape.ymax);
            }
        },
        g.shape);
}

geom::Geometry deserialize_geometry(ByteReader& r) {
    switch (r.u8()) {
        case 0: {
            geom::Point p;
            p.x = r.f64();
            p.y = r.f64();
            return {p};
        }
        case 1: {
            geom::Polyline l;
            uint32_t n = r.u32();
            l.vertices.reserve(n);
            for (uint32_t i = 0; i < n; ++i) {
                double x = r.f64(), y = r.f64();
                l.vertices.push_back({x, y});
            }
            return {std::move(l)};
        }
        case 2: {
            geom::Polygon poly;
            uint32_t n = r.u32();
            poly.outer.reserve(n);
            for (uint32_t i = 0; i < n; ++i) {
                double x = r.f64(), y = r.f64();
                poly.outer.push_back({x, y});
            }
            uint32_t holes = r.u32();
            poly.holes.resize(holes);
            for (auto& hole : poly.holes) {
                uint32_t hn = r.u32();
                hole.reserve(hn);
                for (uint32_t i = 0; i < hn; ++i) {
                    double x = r.f64(), y = r.f64();
                    hole.push_back({x, y});
                }
            }
            return {std::move(poly)};
        }
        case 3: {
            geom::Rect rect;
            rect.xmin = r.f64();
            rect.ymin = r.f64();
            rect.xmax = r.f64();
            rect.ymax = r.f64();
            return {rect};
        }
        default: throw Error("unknown geometry tag");
    }
}

void serialize(ByteWriter& w, const Value& value) {
    w.u8(static_cast<uint8_t>(value.kind()));
    switch (value.kind()) {
        case ValueKind::null: break;
        case ValueKind::integer: w.i64(value.as_int()); break;
        case ValueKind::real: w.f64(std::get<double>(value.v)); break;
        case ValueKind::text: w.str(value.as_text()); break;
        case ValueKind::geometry: serialize(w, value.as_geometry()); break;
        case ValueKind::ref:
            w.u32(value.as_oid().extent);
            w.u64(value.as_oid().slot);
            break;
        case ValueKind::seqref: w.u64(value.as_seqref().id); break;
        case ValueKind::list: {
            const auto& list = value.as_list();
            w.u32(static_cast<uint32_t>(list.size()));
            for (const auto& item : list) serialize(w, item);
            break;
        }
    }
}

Value deserialize_value(ByteReader& r) {
    auto kind = static_cast<ValueKind>(r.u8());
    switch (kind) {
        case ValueKind::null: return {};
        case ValueKind::integer: return {r.i64()};
        case ValueKind::real: return {r.f64()};
        case ValueKind::text: return {r.str()};
        case ValueKind::geometry: return {deserialize_geometry(r)};
        case ValueKind::ref: {
            Oid oid{r.u32(), r.u64()};
            return {oid};
        }
        case ValueKind::seqref: return {SeqRef{r.u64()}};
        case ValueKind::list: {
            uint32_t n = r.u32();
            ValueList list;
            list.reserve(n);
            for (uint32_t i = 0; i < n; ++i) list.push_back(deserialize_value(r));
            return {std::move(list)};
        }
    }
    throw Error("unknown value tag");
}

std::string to_display(const Value& value) {
    std::ostringstream out;
    out.precision(15);
    switch (value.kind()) {
        case ValueKind::null: out << "null"; break;
        case ValueKind::integer: out << value.as_int(); break;
        case ValueKind::real: out << std::get<double>(value.v); break;
        case ValueKind::text: out << value.as_text(); break;
        case ValueKind::ref: out << "@" << to_string(value.as_oid()); break;
        case ValueKind::seqref: out << "seq#" << value.as_seqref().id; break;
        case ValueKind::geometry: {
            const auto& g = value.as_geometry();
            if (g.is_point()) {
                const auto& p = std::get<geom::Point>(g.shape);
                out << "point(" << p.x << " " << p.y << ")";
            } else if (g.is_rect()) {
                const auto& r = std::get<geom::Rect>(g.shape);
                out << "rect(" << r.xmin << " " << r.ymin << " " << r.xmax << " "
                    << r.ymax << ")";
            } else if (g.is_polyline()) {
                out << "polyline[" << std::get<geom::Polyline>(g.shape).vertices.size()
                    << "]";
            } else {
                const auto& poly = std::get<geom::Polygon>(g.shape);
                out << "polygon[" << poly.outer.size();
                if (!poly.holes.empty()) out << "," << poly.holes.size() << "h";
                out << "]";
            }
            break;
        }
        case ValueKind::list: {
            const auto& list = value.as_list();
            out << "{";
            for (size_t i = 0; i < list.size(); ++i) {
                if (i) out << ", ";
                out << to_display(list[i]);
            }
            out << "}";
            break;
        }
    }
    return out.str();
}

}  // namespace mddb::store
