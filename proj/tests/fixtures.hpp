#ifndef DYNRAMP_TEST_FIXTURES_HPP
#define DYNRAMP_TEST_FIXTURES_HPP

#include <string>

#include "dynramp/limitfit.hpp"
#include "dynramp/scheduler.hpp"

namespace fixtures {

inline const std::string kData = DYNRAMP_DATA_DIR;

inline const dynramp::ProcessModel& model1() {
    static auto m = dynramp::ProcessModel::load_file(kData + "/cstr1.model");
    return m;
}
inline const dynramp::ProcessModel& model2() {
    static auto m = dynramp::ProcessModel::load_file(kData + "/cstr2.model");
    return m;
}
inline const dynramp::RampingDerivation& deriv1() {
    static auto d = dynramp::derive(model1());
    return d;
}
inline const dynramp::RampingDerivation& deriv2() {
    static auto d = dynramp::derive(model2());
    return d;
}

inline const dynramp::AffineLimitSet& limits1() {
    static auto s = dynramp::fit_limit_set(deriv1(), {{0.8, 1.2}}, {100});
    return s;
}
inline const dynramp::AffineLimitSet& limits2() {
    static auto s = dynramp::fit_limit_set(deriv2(), {{0.8, 1.2}, {-0.45, 0.45}}, {100, 100});
    return s;
}
inline const dynramp::DemandSurrogate& surrogate1() {
    static auto s = dynramp::fit_demand(deriv1(), limits1(), {{0.8, 1.2}}, {11, 11});
    return s;
}
inline const dynramp::DemandSurrogate& surrogate2() {
    static auto s =
        dynramp::fit_demand(deriv2(), limits2(), {{0.8, 1.2}, {-0.45, 0.45}}, {11, 11, 11});
    return s;
}

inline dynramp::EnergySystemConfig demo_system() {
    return dynramp::EnergySystemConfig::load_file(kData + "/system.kv");
}

inline dynramp::ProcessFlexConfig flex1() {
    dynramp::ProcessFlexConfig c;
    c.name = "cstr1";
    c.limits = limits1();
    c.surrogate = surrogate1();
    c.demand_scale = 10.0 / surrogate1().nominal_demand;
    return c;
}
inline dynramp::ProcessFlexConfig flex2() {
    dynramp::ProcessFlexConfig c;
    c.name = "cstr2";
    c.limits = limits2();
    c.surrogate = surrogate2();
    c.demand_scale = 10.0 / surrogate2().nominal_demand;
    return c;
}

inline dynramp::PriceSeries prices24() {
    return dynramp::PriceSeries::load_csv(kData + "/prices_24h.csv");
}
inline dynramp::DemandSeries demands24() {
    return dynramp::DemandSeries::load_csv(kData + "/demands_24h.csv");
}

// Clipped series for short-horizon tests.
inline dynramp::PriceSeries prices(int hours) {
    auto p = prices24();
    p.buy.resize(hours);
    p.sell.resize(hours);
    p.fuel.resize(hours);
    return p;
}
inline dynramp::DemandSeries demands(int hours) {
    auto d = demands24();
    d.heat.resize(hours);
    d.electricity.resize(hours);
    return d;
}

}  // namespace fixtures

#endif
