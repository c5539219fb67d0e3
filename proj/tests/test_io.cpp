#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "dynramp/csv.hpp"
#include "dynramp/kvtree.hpp"
#include "dynramp/lp.hpp"

using namespace dynramp;

namespace {
std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_SUITE("io") {

TEST_CASE("kv tree numeric round trip is bit-exact") {
    KvTree t;
    t.set_number("a.pi", 3.141592653589793);
    t.set_number("a.tiny", 1.95e-4);
    t.set_number("b.neg", -0.123456789012345678);
    t.set_numbers("c.pair", {0.1, 0.3});
    t.set("name", "demo");
    KvTree r = KvTree::parse(t.serialize());
    CHECK(r.get_number("a.pi") == 3.141592653589793);
    CHECK(r.get_number("a.tiny") == 1.95e-4);
    CHECK(r.get_number("b.neg") == -0.123456789012345678);
    CHECK(r.get_numbers("c.pair")[1] == 0.3);
    CHECK(r.get("name") == "demo");
}

TEST_CASE("kv tree errors") {
    CHECK_THROWS_AS(KvTree::parse("justakey\n"), KvError);
    KvTree t = KvTree::parse("x 1\n# comment\n  y  2 3 \n");
    CHECK(t.get_numbers("y") == std::vector<double>{2, 3});
    CHECK_THROWS_AS(t.get("missing"), KvError);
    CHECK_THROWS_AS(t.get_number("x2"), KvError);
}

TEST_CASE("kv keys_with_prefix preserves file order") {
    KvTree t = KvTree::parse("p.b 1\np.a 2\nq.z 3\n");
    auto keys = t.keys_with_prefix("p.");
    REQUIRE(keys.size() == 2);
    CHECK(keys[0] == "b");
    CHECK(keys[1] == "a");
}

TEST_CASE("csv round trip") {
    CsvTable t;
    t.header = {"hour", "value"};
    t.rows = {{0, 1.25}, {1, -3.5e-7}};
    auto path = temp_path("dynramp_test.csv");
    t.save_file(path);
    CsvTable r = CsvTable::load_file(path);
    CHECK(r.header == t.header);
    CHECK(r.rows[1][1] == -3.5e-7);
    CHECK(r.column_values("value")[0] == 1.25);
    CHECK_THROWS_AS(r.column("nope"), CsvError);
    std::remove(path.c_str());
}

TEST_CASE("csv rejects ragged and non-numeric rows") {
    auto path = temp_path("dynramp_bad.csv");
    {
        FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("a,b\n1,2\n3\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(CsvTable::load_file(path), CsvError);
    {
        FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("a,b\n1,zzz\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(CsvTable::load_file(path), CsvError);
    std::remove(path.c_str());
}

TEST_CASE("lp problem dump/load round trips bit-exactly") {
    MilpProblem p;
    p.name = "roundtrip";
    p.add_var("x", -1.2345678901234567, kInf, 0.3333333333333333);
    p.add_var("z", 0.0, 1.0, -1.0 / 3.0);
    p.add_binary(1);
    SparseRow& r = p.add_row(RowSense::GE, 1e-17, "mix", true);
    r.idx = {0, 1};
    r.val = {0.1 + 0.2, -7.7};
    MilpProblem q = parse_lp(dump_lp(p));
    CHECK(q.lower[0] == p.lower[0]);
    CHECK(q.upper[0] == kInf);
    CHECK(q.objective[0] == p.objective[0]);
    CHECK(q.objective[1] == p.objective[1]);
    CHECK(q.binaries == p.binaries);
    CHECK(q.rows[0].rhs == p.rows[0].rhs);
    CHECK(q.rows[0].val[0] == p.rows[0].val[0]);
    CHECK(q.rows[0].lazy == true);
    CHECK(q.rows[0].sense == RowSense::GE);
    // and the dump of the parse is textually identical
    CHECK(dump_lp(q) == dump_lp(p));
}

}  // TEST_SUITE
