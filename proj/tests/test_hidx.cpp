#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include "mddb/mtindex.hpp"
#include "mddb/pathdict.hpp"
#include "mddb/store.hpp"

using namespace mddb;
using namespace mddb::store;
using namespace mddb::hidx;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() /
              ("mddb_hidx_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string file(const std::string& name) const { return (dir / name).string(); }
};

// Random inheritance forest over one indexed root, objects with integer keys.
std::string random_hierarchy_schema(std::mt19937_64& rng, int n) {
    std::string text = "class C0 { key: integer; }\n";
    for (int i = 1; i < n; ++i) {
        text += "class C" + std::to_string(i);
        if (std::uniform_real_distribution<>(0, 1)(rng) < 0.85)
            text += " extends C" +
                    std::to_string(std::uniform_int_distribution<int>(0, i - 1)(rng));
        else
            text += " extends C0";
        text += " {}\n";
    }
    text += "index mt(C0, key)\n";
    return text;
}

using Chain = std::vector<Oid>;

// Chains and ordinals, comparable across rebuilds (record ids differ).
std::multiset<std::pair<Chain, int32_t>> record_set(const PathDictionary& pd) {
    std::multiset<std::pair<Chain, int32_t>> out;
    pd.for_each_record(
        [&](const PathRecord& rec) { out.insert({rec.chain, rec.ordinal}); });
    return out;
}

}  // namespace

TEST_CASE("mt_query equals union-of-scans on random hierarchies") {
    std::mt19937_64 rng(61);
    TempDir tmp;
    for (int trial = 0; trial < 3; ++trial) {
        cat::Catalog catalog =
            cat::parse_schema(random_hierarchy_schema(rng, 50));
        Database db = Database::create(
            tmp.file("mt" + std::to_string(trial) + ".db"), catalog);

        std::vector<std::pair<Oid, int64_t>> objects;
        for (int i = 0; i < 10000; ++i) {
            std::string cls = "C" + std::to_string(rng() % 50);
            int64_t key = std::uniform_int_distribution<int64_t>(0, 300)(rng);
            std::vector<Value> fields;
            fields.push_back(Value{key});
            Oid oid = db.insert_object(cls, std::move(fields));
            objects.emplace_back(oid, key);
        }

        const MTIndex* idx = db.mt_index("C0", "key");
        REQUIRE(idx);
        CHECK(idx->size() == objects.size());

        for (int q = 0; q < 60; ++q) {
            std::string cls = "C" + std::to_string(rng() % 50);
            int64_t lo = std::uniform_int_distribution<int64_t>(0, 300)(rng);
            int64_t hi = std::uniform_int_distribution<int64_t>(0, 300)(rng);
            if (lo > hi) std::swap(lo, hi);

            auto got = mt_query(db, *idx, cls, Value{lo}, Value{hi});

            std::vector<Oid> expected;
            cat::TypeInterval iv = db.catalog().interval(cls);
            for (const auto& [oid, key] : objects)
                if (iv.contains(oid.extent) && key >= lo && key <= hi)
                    expected.push_back(oid);
            std::sort(expected.begin(), expected.end());
            CHECK(got == expected);
        }

        // Unbounded query at the root returns everything indexed.
        auto all = mt_query(db, *idx, "C0", std::nullopt, std::nullopt);
        CHECK(all.size() == objects.size());
    }
}

TEST_CASE("mt_query rejects classes outside the subtree") {
    TempDir tmp;
    cat::Catalog catalog = cat::parse_schema(
        "class A { k: integer; } class B {} index mt(A, k)");
    Database db = Database::create(tmp.file("mt_err.db"), catalog);
    const MTIndex* idx = db.mt_index("A", "k");
    REQUIRE(idx);
    CHECK_THROWS_AS(mt_query(db, *idx, "B", std::nullopt, std::nullopt), Error);
}

TEST_CASE("path dictionary over a reference chain") {
    TempDir tmp;
    cat::Catalog catalog = cat::parse_schema(
        "class C { name: string; v: integer; }\n"
        "class B { c: reference(C); }\n"
        "class A { b: reference(B); }\n"
        "index pathdict(A.b.c)\n");
    Database db = Database::create(tmp.file("pd1.db"), catalog);

    std::vector<Oid> cs, bs, as;
    for (int i = 0; i < 10; ++i)
        cs.push_back(db.insert_object(
            "C", {Value{std::string("c") + std::to_string(i)}, Value{int64_t{i}}}));
    for (int i = 0; i < 10; ++i)
        bs.push_back(db.insert_object("B", {Value{cs[i]}}));
    for (int i = 0; i < 10; ++i)
        as.push_back(db.insert_object("A", {Value{bs[i]}}));

    const PathDictionary* pd = db.path_dict("pathdict:A.b.c");
    REQUIRE(pd);
    CHECK(pd->record_count() == 10);  // 1:1 links, one record per root

    // Identity lookup from any position.
    size_t hits = 0;
    pd->lookup_oid(cs[3], [&](const PathRecord& rec) {
        ++hits;
        CHECK(rec.chain == Chain{as[3], bs[3], cs[3]});
    });
    CHECK(hits == 1);
    hits = 0;
    pd->lookup_oid(as[3], [&](const PathRecord&) { ++hits; });
    CHECK(hits == 1);
    pd->lookup_oid(Oid{0, 9999}, [&](const PathRecord&) { FAIL("no records expected"); });

    // Attribute lookup answers through the terminal attribute index.
    CHECK(pd->has_attr_index("name"));
    CHECK(pd->has_attr_index("v"));
    hits = 0;
    pd->lookup_attr("name", string_key("c7"), string_key("c7"),
                    [&](const PathRecord& rec) {
                        ++hits;
                        CHECK(rec.chain.front() == as[7]);
                    });
    CHECK(hits == 1);
    pd->lookup_attr("v", int_key(100), int_key(200),
                    [&](const PathRecord&) { FAIL("nothing in range"); });
    CHECK_THROWS_AS(pd->lookup_attr("absent", std::nullopt, std::nullopt,
                                    [](const PathRecord&) {}),
                    Error);
}

TEST_CASE("value-collection terminals fan out") {
    TempDir tmp;
    cat::Catalog catalog = cat::parse_schema(
        "class S { name: string; habitats: collection(integer); }\n"
        "index pathdict(S.habitats)\n");
    Database db = Database::create(tmp.file("pd2.db"), catalog);
    Oid s = db.insert_object(
        "S", {Value{std::string("sp")},
              Value{ValueList{Value{int64_t{5}}, Value{int64_t{6}}, Value{int64_t{7}}}}});
    const PathDictionary* pd = db.path_dict("pathdict:S.habitats");
    REQUIRE(pd);
    CHECK(pd->record_count() == 3);
    size_t hits = 0;
    pd->lookup_attr("habitats", int_key(6), int_key(7), [&](const PathRecord& rec) {
        ++hits;
        CHECK(rec.chain.front() == s);
        CHECK(rec.ordinal >= 1);
    });
    CHECK(hits == 2);
}

TEST_CASE("path dictionary equals the nested-loop join oracle on random data") {
    std::mt19937_64 rng(62);
    TempDir tmp;
    cat::Catalog catalog = cat::parse_schema(
        "class C { v: integer; }\n"
        "class B { cs: collection(reference(C), N:M); }\n"
        "class A { bs: collection(reference(B)); }\n"
        "index pathdict(A.bs.cs)\n");
    Database db = Database::create(tmp.file("pd3.db"), catalog);

    std::vector<Oid> cs, bs, as;
    for (int i = 0; i < 20; ++i)
        cs.push_back(db.insert_object("C", {Value{int64_t{i % 7}}}));
    for (int i = 0; i < 15; ++i) {
        ValueList list;
        for (int k = (int)(rng() % 4); k > 0; --k)
            list.push_back(Value{cs[rng() % cs.size()]});
        bs.push_back(db.insert_object("B", {Value{std::move(list)}}));
    }
    for (int i = 0; i < 12; ++i) {
        ValueList list;
        for (int k = (int)(rng() % 3); k > 0; --k)
            list.push_back(Value{bs[rng() % bs.size()]});
        as.push_back(db.insert_object("A", {Value{std::move(list)}}));
    }

    const PathDictionary* pd = db.path_dict("pathdict:A.bs.cs");
    REQUIRE(pd);

    // Nested-loop join oracle over the extents.
    std::multiset<std::pair<Chain, int32_t>> expected;
    db.scan_extent("A", true, [&](Oid a, const ObjectRecord& arec) {
        for (const auto& bref : arec.fields[0].as_list()) {
            ObjectRecord brec = db.get_object(bref.as_oid());
            for (const auto& cref : brec.fields[0].as_list())
                expected.insert({Chain{a, bref.as_oid(), cref.as_oid()}, -1});
        }
    });
    CHECK(record_set(*pd) == expected);

    // Attribute lookups equal join-then-filter.
    for (int64_t probe = 0; probe < 7; ++probe) {
        std::multiset<Chain> got;
        pd->lookup_attr("v", int_key(probe), int_key(probe),
                        [&](const PathRecord& rec) { got.insert(rec.chain); });
        std::multiset<Chain> want;
        for (const auto& [chain, ord] : expected)
            if (db.get_field(chain.back(), "v").as_int() == probe) want.insert(chain);
        CHECK(got == want);
    }
}

TEST_CASE("path dictionary maintenance equals rebuild after every event") {
    std::mt19937_64 rng(63);
    TempDir tmp;
    cat::Catalog catalog = cat::parse_schema(
        "class C { v: integer; }\n"
        "class B { c: reference(C); }\n"
        "class A { bs: collection(reference(B)); }\n"
        "index pathdict(A.bs.c)\n");
    Database db = Database::create(tmp.file("pd4.db"), catalog);

    std::vector<Oid> cs, bs, as;
    auto rebuild_equal = [&]() {
        PathDictionary fresh(db.catalog().indexes()[0], db.catalog());
        fresh.build(db);
        return record_set(*db.path_dict("pathdict:A.bs.c")) == record_set(fresh);
    };

    for (int i = 0; i < 8; ++i) cs.push_back(db.insert_object("C", {Value{int64_t{i}}}));
    for (int i = 0; i < 8; ++i)
        bs.push_back(db.insert_object("B", {Value{cs[rng() % cs.size()]}}));
    for (int i = 0; i < 6; ++i) {
        ValueList list;
        for (int k = 0; k < (int)(rng() % 3) + 1; ++k)
            list.push_back(Value{bs[rng() % bs.size()]});
        as.push_back(db.insert_object("A", {Value{std::move(list)}}));
    }
    REQUIRE(rebuild_equal());

    // Insert a full new chain.
    Oid nc = db.insert_object("C", {Value{int64_t{99}}});
    Oid nb = db.insert_object("B", {Value{nc}});
    db.insert_object("A", {Value{ValueList{Value{nb}}}});
    CHECK(rebuild_equal());

    // Relink a mid-path object.
    db.update_field(bs[0], "c", Value{cs[(0 + 3) % cs.size()]});
    CHECK(rebuild_equal());

    // Delete a terminal object: its records disappear.
    db.delete_object(cs[1]);
    CHECK(rebuild_equal());

    // Delete a root.
    db.delete_object(as[0]);
    CHECK(rebuild_equal());

    // Random trace.
    for (int op = 0; op < 300; ++op) {
        switch (rng() % 5) {
            case 0: cs.push_back(db.insert_object("C", {Value{int64_t{(int64_t)(rng() % 50)}}})); break;
            case 1: {
                std::vector<Oid> live;
                for (Oid c : cs)
                    if (db.object_exists(c)) live.push_back(c);
                if (live.empty()) break;
                bs.push_back(db.insert_object("B", {Value{live[rng() % live.size()]}}));
                break;
            }
            case 2: {
                std::vector<Oid> live;
                for (Oid b : bs)
                    if (db.object_exists(b)) live.push_back(b);
                if (live.empty()) break;
                ValueList list{Value{live[rng() % live.size()]}};
                as.push_back(db.insert_object("A", {Value{std::move(list)}}));
                break;
            }
            case 3: {
                // Relink a live B to a live C.
                std::vector<Oid> lb, lc;
                for (Oid b : bs)
                    if (db.object_exists(b)) lb.push_back(b);
                for (Oid c : cs)
                    if (db.object_exists(c)) lc.push_back(c);
                if (lb.empty() || lc.empty()) break;
                db.update_field(lb[rng() % lb.size()], "c", Value{lc[rng() % lc.size()]});
                break;
            }
            default: {
                std::vector<Oid> all;
                for (auto* vec : {&cs, &bs, &as})
                    for (Oid o : *vec)
                        if (db.object_exists(o)) all.push_back(o);
                if (all.empty()) break;
                db.delete_object(all[rng() % all.size()]);
                break;
            }
        }
        if (op % 29 == 0) CHECK(rebuild_equal());
    }
    CHECK(rebuild_equal());
}

TEST_CASE("path dictionary survives persistence") {
    TempDir tmp;
    std::string path = tmp.file("pd5.db");
    cat::Catalog catalog = cat::parse_schema(
        "class C { v: integer; }\n"
        "class A { c: reference(C); }\n"
        "index pathdict(A.c)\n");
    std::multiset<std::pair<Chain, int32_t>> before;
    {
        Database db = Database::create(path, catalog);
        for (int i = 0; i < 30; ++i) {
            Oid c = db.insert_object("C", {Value{int64_t{i}}});
            db.insert_object("A", {Value{c}});
        }
        before = record_set(*db.path_dict("pathdict:A.c"));
        db.flush();
    }
    Database db = Database::open(path);
    const PathDictionary* pd = db.path_dict("pathdict:A.c");
    REQUIRE(pd);
    CHECK(record_set(*pd) == before);
    // Maintenance continues to work after reload.
    Oid c = db.insert_object("C", {Value{int64_t{100}}});
    db.insert_object("A", {Value{c}});
    CHECK(pd->record_count() == 31);
    size_t hits = 0;
    pd->lookup_attr("v", int_key(100), int_key(100),
                    [&](const PathRecord&) { ++hits; });
    CHECK(hits == 1);
}

TEST_CASE("mt_build constructs an index from existing extents") {
    TempDir tmp;
    cat::Catalog catalog =
        cat::parse_schema("class A { k: integer; } class B extends A {}");
    Database db = Database::create(tmp.file("mtb.db"), catalog);
    for (int i = 0; i < 50; ++i)
        db.insert_object(i % 2 ? "A" : "B", {Value{int64_t{i % 7}}});
    MTIndex idx = mt_build(db, "A", "k");
    CHECK(idx.size() == 50);
    auto got = mt_query(db, idx, "B", Value{int64_t{3}}, Value{int64_t{5}});
    std::vector<Oid> expected;
    db.scan_extent("B", false, [&](Oid oid, const ObjectRecord& rec) {
        int64_t k = rec.fields[0].as_int();
        if (k >= 3 && k <= 5) expected.push_back(oid);
    });
    std::sort(expected.begin(), expected.end());
    CHECK(got == expected);
}
