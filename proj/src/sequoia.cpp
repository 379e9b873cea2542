#include <fstream>
#include <sstream>

#include "mddb/bench.hpp"

namespace mddb::bench {

using store::Database;
using store::Value;
using store::ValueList;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    for (;;) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

[[noreturn]] void line_error(const std::string& path, uint64_t line,
                             const std::string& msg) {
    throw Error(path + ": line " + std::to_string(line) + ": " + msg);
}

std::vector<geom::Point> parse_points(std::istringstream& in, size_t n,
                                      const std::string& path, uint64_t line) {
    std::vector<geom::Point> pts;
    pts.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        geom::Point p;
        if (!(in >> p.x >> p.y)) line_error(path, line, "truncated coordinate list");
        pts.push_back(p);
    }
    return pts;
}

}  // namespace

LoadCounts load_sequoia(Database& db, const std::string& points_path,
                        const std::string& polygons_path,
                        const std::string& graphs_path) {
    for (const char* cls : {"SPoint", "SPolygon", "SGraph"})
        if (!db.catalog().has_class(cls))
            throw Error(std::string("vector loader needs class ") + cls);

    LoadCounts counts;
    std::string line;

    {
        std::ifstream in(points_path);
        if (!in) throw Error("cannot open " + points_path);
        uint64_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            auto fields = split_tabs(line);
            if (fields.size() != 4)
                line_error(points_path, lineno, "expected id, name, x, y");
            try {
                geom::Point p{std::stod(fields[2]), std::stod(fields[3])};
                db.insert_object("SPoint",
                                 {Value{fields[1]}, Value{geom::Geometry{p}}});
            } catch (const std::exception& e) {
                line_error(points_path, lineno, e.what());
            }
            ++counts.points;
        }
    }

    {
        std::ifstream in(polygons_path);
        if (!in) throw Error("cannot open " + polygons_path);
        uint64_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            auto fields = split_tabs(line);
            if (fields.size() < 4)
                line_error(polygons_path, lineno,
                           "expected id, landuse, n, coordinates");
            try {
                int64_t landuse = std::stoll(fields[1]);
                size_t n = std::stoull(fields[2]);
                std::istringstream coords(fields[3]);
                geom::Polygon poly;
                poly.outer = parse_points(coords, n, polygons_path, lineno);
                for (size_t f = 4; f < fields.size(); ++f) {
                    std::istringstream hole_in(fields[f]);
                    std::string tag;
                    size_t hn = 0;
                    if (!(hole_in >> tag >> hn) || tag != "H")
                        line_error(polygons_path, lineno, "malformed hole section");
                    poly.holes.push_back(parse_points(hole_in, hn, polygons_path, lineno));
                }
                geom::validate(poly);
                double area = geom::area(poly);
                db.insert_object("SPolygon", {Value{landuse}, Value{area},
                                              Value{geom::Geometry{poly}}});
            } catch (const Error&) {
                throw;
            } catch (const std::exception& e) {
                line_error(polygons_path, lineno, e.what());
            }
            ++counts.polygons;
        }
    }

    {
        std::ifstream in(graphs_path);
        if (!in) throw Error("cannot open " + graphs_path);
        uint64_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            auto fields = split_tabs(line);
            if (fields.size() != 3)
                line_error(graphs_path, lineno, "expected id, n, coordinates");
            try {
                size_t n = std::stoull(fields[1]);
                std::istringstream coords(fields[2]);
                geom::Polyline l;
                l.vertices = parse_points(coords, n, graphs_path, lineno);
                geom::validate(l);
                db.insert_object("SGraph", {Value{geom::Geometry{l}}});
            } catch (const Error&) {
                throw;
            } catch (const std::exception& e) {
                line_error(graphs_path, lineno, e.what());
            }
            ++counts.graphs;
        }
    }
    return counts;
}

}  // namespace mddb::bench
