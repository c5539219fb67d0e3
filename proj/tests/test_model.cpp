#include <doctest.h>

#include "dynramp/model.hpp"

using namespace dynramp;

namespace {
const std::string kData = DYNRAMP_DATA_DIR;
}

TEST_SUITE("model") {

TEST_CASE("shipped benchmark reactor files load and validate") {
    ProcessModel m1 = ProcessModel::load_file(kData + "/cstr1.model");
    CHECK(m1.states == std::vector<std::string>{"c", "T"});
    CHECK(m1.u_max == 700.0);
    CHECK(m1.rho_nom == 1.0);
    CHECK(m1.y_nom == 0.1367);
    // parameters were substituted: the only free symbols are states and rho
    for (const auto& e : m1.f1) {
        for (const auto& v : e.variables())
            CHECK((v == "c" || v == "T" || v == "rho"));
    }
    // f2r.c evaluates to (1-c)/V
    CHECK(m1.f2_rho[0].eval({{"c", 0.1367}}) == doctest::Approx(0.8633 / 20.0).epsilon(1e-14));

    ProcessModel m2 = ProcessModel::load_file(kData + "/cstr2.model");
    CHECK(m2.states.size() == 3);
    CHECK(m2.ranges.count("rho_d1") == 1);
    // jacket balance: f1.T_j = tau2 (T - T_j)
    CHECK(m2.f1[2].eval({{"T", 0.73}, {"T_j", 0.72}}) ==
          doctest::Approx(14.66 * 0.01).epsilon(1e-10));
}

TEST_CASE("model file round trip preserves evaluation") {
    ProcessModel m = ProcessModel::load_file(kData + "/cstr1.model");
    ProcessModel r = ProcessModel::from_kv(m.to_kv());
    Binding b{{"c", 0.2}, {"T", 0.71}, {"rho", 1.1}};
    for (std::size_t i = 0; i < m.dim(); ++i) {
        CHECK(r.f1[i].eval(b) == doctest::Approx(m.f1[i].eval(b)).epsilon(1e-15));
        CHECK(r.f2_rho[i].eval(b) == doctest::Approx(m.f2_rho[i].eval(b)).epsilon(1e-15));
    }
    CHECK(r.u_max == m.u_max);
    CHECK(r.nominal_state.at("T") == m.nominal_state.at("T"));
}

TEST_CASE("validation rejects inconsistent models") {
    ProcessModel m = ProcessModel::load_file(kData + "/cstr1.model");
    SUBCASE("bad input bounds") {
        m.u_min = m.u_max;
        CHECK_THROWS_AS(m.validate(), ModelError);
    }
    SUBCASE("rate bounds must bracket the nominal rate") {
        m.rho_nom = 2.0;
        CHECK_THROWS_AS(m.validate(), ModelError);
    }
    SUBCASE("unknown symbol in an expression") {
        m.f1[0] = parse_expression("c*unknown_symbol");
        CHECK_THROWS_AS(m.validate(), ModelError);
    }
    SUBCASE("missing state range") {
        m.ranges.erase("T");
        CHECK_THROWS_AS(m.validate(), ModelError);
    }
}

TEST_CASE("malformed expression reports the model key") {
    KvTree t = ProcessModel::load_file(kData + "/cstr1.model").to_kv();
    t.set("f1.c", "c*(1 +");
    try {
        ProcessModel::from_kv(t);
        CHECK(false);
    } catch (const ModelError& e) {
        CHECK(std::string(e.what()).find("f1.c") != std::string::npos);
    }
}

}  // TEST_SUITE
