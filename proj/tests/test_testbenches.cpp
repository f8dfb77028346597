#include "sawsim/error.hpp"
#include "sawsim/testbenches.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace sawsim;
using Catch::Approx;

namespace {

// 0 -> hi over [t0, t0 + tr], held elsewhere; falling when `fall`.
Waveform ramp(const TimeGrid& g, double hi, double t0, double tr, bool fall, Unit u = Unit::volt) {
    std::vector<double> s(g.n);
    for (std::size_t k = 0; k < g.n; ++k) {
        const double x = std::clamp((g.time(k) - t0) / tr, 0.0, 1.0);
        s[k] = hi * (fall ? 1.0 - x : x);
    }
    return {g, s, u};
}

const DptResult& default_dpt() {
    static const DptResult r = run_dpt(DptConfig{});
    return r;
}

}  // namespace

TEST_CASE("linear 0 -> 25 V ramp over 100 ns measures 80 ns") {
    const auto g = TimeGrid::covering(0.0, 1e-6, 0.1e-9);
    const auto v = ramp(g, 25.0, 300e-9, 100e-9, false);
    CHECK(switching_time(v, Edge::rising, {0.0, 1e-6}) == Approx(80e-9).epsilon(1e-6));
    const auto f = ramp(g, 25.0, 300e-9, 100e-9, true);
    CHECK(switching_time(f, Edge::falling, {0.0, 1e-6}) == Approx(80e-9).epsilon(1e-6));
}

TEST_CASE("an instantaneous switch measures at most one sample") {
    const auto g = TimeGrid::covering(0.0, 1e-6, 0.1e-9);
    const auto v = ramp(g, 25.0, 500e-9, 1e-15, false);
    CHECK(switching_time(v, Edge::rising, {0.0, 1e-6}) <= g.dt);
}

TEST_CASE("triangle overlap energy matches the closed form") {
    const auto g = TimeGrid::covering(0.0, 1e-6, 0.01e-9);
    const double T = 100e-9, V = 25.0, I = 2.0;
    const auto v = ramp(g, V, 400e-9, T, true);
    const auto i = ramp(g, I, 400e-9, T, false, Unit::ampere);
    // integral of V(1-s) I s T ds between the 1% and 99% points of v
    auto prim = [&](double s) { return V * I * T * (s * s / 2 - s * s * s / 3); };
    const double want = prim(0.99) - prim(0.01);
    CHECK(switching_energy(v, i, Edge::falling, {0.0, 1e-6}) == Approx(want).epsilon(1e-6));
}

TEST_CASE("two transitions in one window are a metric error") {
    const auto g = TimeGrid::covering(0.0, 1e-6, 0.1e-9);
    std::vector<double> s(g.n);
    for (std::size_t k = 0; k < g.n; ++k) {
        const double t = g.time(k);
        s[k] = (t > 200e-9 && t < 400e-9) || t > 600e-9 ? 25.0 : 0.0;
    }
    try {
        switching_time({g, s, Unit::volt}, Edge::rising, {0.0, 1e-6});
        FAIL("expected a metric error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::metric);
    }
}

TEST_CASE("least-squares slope of a line") {
    const auto g = TimeGrid::covering(0.0, 1e-6, 1e-9);
    std::vector<double> s(g.n);
    for (std::size_t k = 0; k < g.n; ++k) s[k] = 3.0 + 2e5 * g.time(k);
    CHECK(fitted_slope({g, s, Unit::ampere}, {0.1e-6, 0.9e-6}) == Approx(2e5).epsilon(1e-9));
}

TEST_CASE("DPT: freewheel decay follows the diode drop over L") {
    const DptConfig cfg;
    const auto& r = default_dpt();
    const auto& il = r.traces["i_l"];
    const double i_mid = il.at(0.5 * (cfg.pulse1_end() + cfg.pulse2_start()));
    const double oracle = -(cfg.fwd.v_f + cfg.fwd.r_s * i_mid) / cfg.l;
    CHECK(r.metrics.freewheel_di_dt == Approx(oracle).epsilon(0.05));
}

TEST_CASE("DPT: pulse-1 slope is (V_DC - I r_on) / L") {
    const DptConfig cfg;
    const auto& r = default_dpt();
    const auto& il = r.traces["i_l"];
    const double i_mean = il.at(0.5 * (cfg.pulse1_start() + cfg.pulse1_end()));
    CHECK(r.metrics.di_dt == Approx((cfg.v_dc - i_mean * cfg.dut.r_on) / cfg.l).epsilon(0.02));
}

TEST_CASE("DPT: energy bookkeeping and ordering") {
    const auto& m = default_dpt().metrics;
    CHECK(m.t_on > 0.0);
    CHECK(m.t_off > 0.0);
    CHECK(m.e_on > 0.0);
    CHECK(m.e_off > m.e_on);
    CHECK(m.i_at_second_turn_on > 0.0);
    CHECK(m.overshoot_current > 0.0);
}

TEST_CASE("DPT traces carry the probes the metrics need") {
    const auto& tr = default_dpt().traces;
    for (const char* name : {"v_ds", "v_gs", "i_ds", "i_l"}) CHECK(tr.has(name));
    // the supply holds the drain at V_DC while the DUT is off before pulse 1
    CHECK(tr["v_ds"].at(1e-6) == Approx(25.0).epsilon(1e-3));
}

TEST_CASE("bench configs name the offending key") {
    DptConfig d;
    d.l = -1e-6;
    CHECK_THROWS_WITH(d.validate(), Catch::Matchers::ContainsSubstring("dpt.l"));
    BuckConfig b;
    b.duty = 1.2;
    CHECK_THROWS_WITH(b.validate(), Catch::Matchers::ContainsSubstring("buck.duty"));
    CharacterizationConfig c;
    c.f_hi = c.f_lo;
    CHECK_THROWS_WITH(c.validate(), Catch::Matchers::ContainsSubstring("characterize.f_hi"));
}
