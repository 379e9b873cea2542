#include <doctest.h>

#include <random>
#include <set>

#include "mddb/catalog.hpp"
#include "mddb/demo.hpp"

using namespace mddb;
using namespace mddb::cat;

TEST_CASE("demo model parses into eight classes") {
    Catalog c = parse_schema(demo_schema());
    CHECK(c.classes().size() == 8);
    CHECK(c.has_class("PlantSpecies"));
    CHECK(c.cls("FlowerChar").super == "IdentChar");
    const Attribute* habitats = c.find_attribute("PlantSpecies", "habitats");
    REQUIRE(habitats);
    CHECK(habitats->type.kind == AttrType::Kind::collection);
    CHECK(habitats->type.scalar == ScalarType::polygon);
    const Attribute* entries = c.find_attribute("PlantSpecies", "stDNAEntries");
    REQUIRE(entries);
    CHECK(entries->type.element_is_reference);
    CHECK(entries->type.target == "EMBLEntry");
    // FlowerChar inherits descr from IdentChar.
    CHECK(c.find_attribute("FlowerChar", "descr") != nullptr);
    CHECK(c.indexes().size() == 4);
}

TEST_CASE("minimal and broken schemas") {
    Catalog minimal = parse_schema("class A {}");
    CHECK(minimal.classes().size() == 1);
    CHECK(minimal.cls("A").attributes.empty());

    CHECK_THROWS_AS(parse_schema("class B extends B {}"), Error);
    CHECK_THROWS_AS(parse_schema("class A { x: bogus; }"), Error);
    CHECK_THROWS_AS(parse_schema("class A {} class A {}"), Error);
    CHECK_THROWS_AS(parse_schema("class A { x: reference(Nope); }"), Error);
    CHECK_THROWS_AS(parse_schema("class A extends Missing {}"), Error);
    CHECK_THROWS_AS(parse_schema("klass A {}"), Error);

    try {
        parse_schema("class A {\n  x integer;\n}");
        FAIL("expected parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(e.column > 1);
    }
}

TEST_CASE("typecode intervals on a chain") {
    Catalog c = parse_schema("class A {} class B extends A {} class C extends B {}");
    CHECK(c.interval("A") == TypeInterval{0, 2});
    CHECK(c.interval("B") == TypeInterval{1, 2});
    CHECK(c.interval("C") == TypeInterval{2, 2});
    CHECK(c.class_of_code(1) == "B");
}

TEST_CASE("unrelated roots get disjoint intervals") {
    Catalog c = parse_schema(
        "class A {} class A1 extends A {} class B {} class B1 extends B {}");
    TypeInterval a = c.interval("A");
    TypeInterval b = c.interval("B");
    CHECK((a.hi < b.lo || b.hi < a.lo));
}

TEST_CASE("interval containment is equivalent to subtyping on random forests") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 50;
        std::vector<int> parent(n, -1);
        std::string text;
        for (int i = 0; i < n; ++i) {
            std::string name = "C" + std::to_string(i);
            text += "class " + name;
            if (i > 0 && std::uniform_real_distribution<>(0, 1)(rng) < 0.8) {
                parent[i] = std::uniform_int_distribution<int>(0, i - 1)(rng);
                text += " extends C" + std::to_string(parent[i]);
            }
            text += " {}\n";
        }
        Catalog c = parse_schema(text);

        // Reachability oracle over the inheritance graph.
        auto is_ancestor = [&](int anc, int node) {
            for (int cur = node; cur != -1; cur = parent[cur])
                if (cur == anc) return true;
            return false;
        };
        for (int x = 0; x < n; ++x) {
            for (int y = 0; y < n; ++y) {
                std::string cx = "C" + std::to_string(x);
                std::string cy = "C" + std::to_string(y);
                bool oracle = is_ancestor(x, y);
                CHECK(c.interval(cx).contains(c.interval(cy)) == oracle);
                CHECK(c.is_subclass(cy, cx) == oracle);
            }
        }
    }
}

TEST_CASE("subtree interval shapes") {
    Catalog c = parse_schema(demo_schema());
    // Single root hierarchy spans the whole code range only when one root.
    Catalog chain =
        parse_schema("class R {} class S extends R {} class T extends R {}");
    CHECK(chain.interval("R") == TypeInterval{0, 2});
    // A leaf has a degenerate interval.
    TypeInterval leaf = c.interval("EMBLEntry");
    CHECK(leaf.lo == leaf.hi);
    // Cross-check every class against its own interval map.
    for (const auto& def : c.classes()) {
        TypeInterval iv = c.interval(def.name);
        for (const auto& sub : c.subtree_classes(def.name))
            CHECK(iv.contains(c.interval(sub)));
    }
}

TEST_CASE("typecode assignment is deterministic") {
    Catalog a = parse_schema(demo_schema());
    Catalog b = parse_schema(demo_schema());
    for (const auto& def : a.classes())
        CHECK(a.typecode(def.name) == b.typecode(def.name));
}

TEST_CASE("method costs and equivalence groups") {
    Catalog c = parse_schema(
        "class Polygon2 {}\n"
        "cost Polygon2.area = 5\n"
        "cost Polygon2.fast_area = 2 equiv area_impl\n"
        "cost Polygon2.slow_area = 9 equiv area_impl\n");
    CHECK(c.method_cost("Polygon2", "area") == 5);
    CHECK(c.method_cost("Polygon2", "unregistered") == kDefaultMethodCost);
    CHECK(c.cheapest_equivalent("Polygon2", "slow_area") == "fast_area");
    CHECK(c.cheapest_equivalent("Polygon2", "area") == "area");

    c.register_cost("Polygon2", "area", 7);
    CHECK(c.method_cost("Polygon2", "area") == 7);
    CHECK_THROWS_AS(c.register_cost("Nope", "m", 1), Error);
}

TEST_CASE("print round trip") {
    for (std::string_view text : {demo_schema(), sequoia_schema()}) {
        Catalog a = parse_schema(text);
        Catalog b = parse_schema(a.print());
        CHECK(a.classes() == b.classes());
        CHECK(a.indexes() == b.indexes());
        CHECK(a.costs() == b.costs());
        CHECK(a.print() == b.print());
    }
    Catalog costs = parse_schema("class A {}\ncost A.m = 3 equiv g\n");
    Catalog again = parse_schema(costs.print());
    CHECK(costs.costs() == again.costs());
}

TEST_CASE("pathdict index declarations are checked") {
    CHECK_THROWS_AS(parse_schema("class A { x: integer; }\nindex pathdict(A.x.y)"),
                    Error);
    Catalog ok = parse_schema(
        "class B { v: integer; }\n"
        "class A { b: reference(B); vals: collection(integer); }\n"
        "index pathdict(A.b)\n"
        "index pathdict(A.vals)\n");
    CHECK(ok.indexes().size() == 2);
    // Value collections may only terminate a path.
    CHECK_THROWS_AS(
        parse_schema("class A { vals: collection(integer); }\nindex pathdict(A.vals.z)"),
        Error);
}

TEST_CASE("duplicate index declarations are rejected") {
    CHECK_THROWS_AS(parse_schema("class A { x: integer; }\n"
                                 "index btree(A.x)\n"
                                 "index btree(A.x)\n"),
                    Error);
}
