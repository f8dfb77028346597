#include "sawsim/driver_output.hpp"
#include "sawsim/error.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace sawsim;
using Catch::Approx;

namespace {

ComplexEnvelope envelope(const TimeGrid& g, const std::function<double(double)>& amp) {
    std::vector<Complex> s(g.n);
    for (std::size_t k = 0; k < g.n; ++k) s[k] = amp(g.time(k));
    return {g, 223e6, s};
}

double pulse(double t, double a, double t0, double t1) { return t >= t0 && t < t1 ? a : 0.0; }

}  // namespace

TEST_CASE("I-V endpoints and the Thevenin midpoint") {
    const SourceIvModel m;
    CHECK(source_voltage_at_load(m, 0.0) == 13.4);
    CHECK(source_voltage_at_load(m, 44.4e-3) == 0.0);
    const double r_th = 13.4 / 0.0444;
    CHECK(m.thevenin_resistance() == Approx(301.8).epsilon(1e-4));
    CHECK(source_voltage_at_load(m, 22.2e-3) == Approx(13.4 - 22.2e-3 * r_th).margin(1e-12));
    CHECK(source_voltage_at_load(m, 22.2e-3) == Approx(6.7).margin(0.01));
    CHECK_THROWS_AS(source_voltage_at_load(m, 0.05), Error);
}

TEST_CASE("measured I-V points replace the linear model") {
    SourceIvModel m;
    m.iv_points = {{0.0, 13.4}, {0.02, 7.5}, {0.0444, 0.0}};
    CHECK(source_voltage_at_load(m, 0.02) == 7.5);
    CHECK(source_voltage_at_load(m, 0.01) == Approx(0.5 * (13.4 + 7.5)));
    m.iv_points = {{0.001, 13.4}, {0.0444, 0.0}};
    CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("power table: anchor, endpoints, and midpoints between neighbours") {
    const SourceIvModel m;
    CHECK(output_voltage_vs_power(m, 34.0, 385.0) == Approx(6.23).epsilon(1e-12));
    const auto& pts = m.power_voltage_points;
    CHECK(output_voltage_vs_power(m, pts.front().dbm, 385.0) == Approx(pts.front().volts).epsilon(1e-12));
    CHECK(output_voltage_vs_power(m, pts.back().dbm, 385.0) == Approx(pts.back().volts).epsilon(1e-12));
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const double mid = output_voltage_vs_power(m, 0.5 * (pts[k - 1].dbm + pts[k].dbm), 385.0);
        REQUIRE(mid > pts[k - 1].volts);
        REQUIRE(mid < pts[k].volts);
    }
    CHECK_THROWS_AS(output_voltage_vs_power(m, pts.back().dbm + 1.0, 385.0), Error);
}

TEST_CASE("open-circuit voltage reproduces the table into the reference load") {
    const SourceIvModel m;
    const double r_th = m.thevenin_resistance();
    for (double p = 28.0; p <= 37.0; p += 0.5) {
        const double v_oc = open_circuit_voltage_at_power(m, p);
        REQUIRE(v_oc * 385.0 / (385.0 + r_th) == Approx(output_voltage_vs_power(m, p, 385.0)).epsilon(1e-9));
    }
}

TEST_CASE("rectifier plateau sits two diode drops under the envelope") {
    const SourceIvModel src;
    const auto g = TimeGrid::covering(0.0, 3e-6, 0.1e-9);
    const auto env = envelope(g, [](double) { return 7.0; });
    // bleed large enough that the divider is negligible
    const auto plateau = [&](double vf) {
        const auto v = rectify(env, {vf, 72e-12, 1e12}, src);
        return v[v.size() - 1];
    };
    CHECK(plateau(0.3) == Approx(6.4).epsilon(1e-3));
    CHECK(plateau(0.0) == Approx(7.0).epsilon(1e-3));
}

TEST_CASE("rectifier with zero drive decays as R C") {
    const SourceIvModel src;
    const auto g = TimeGrid::covering(0.0, 200e-9, 0.05e-9);
    const auto env = envelope(g, [](double) { return 0.0; });
    RectifyOptions opt;
    opt.v_initial = 6.0;
    opt.dt = 0.05e-9;
    const auto v = rectify(env, {0.3, 72e-12, 385.0}, src, {}, opt);
    const double tau = 385.0 * 72e-12;
    CHECK(tau == Approx(27.7e-9).epsilon(1e-3));
    for (double t : {10e-9, 27.72e-9, 60e-9, 150e-9})
        REQUIRE(v.at(t) == Approx(6.0 * std::exp(-t / tau)).epsilon(0.01));
}

TEST_CASE("rectifier output is bounded and monotone in the drive") {
    const SourceIvModel src;
    const RectifierSpec spec{0.3, 72e-12, 385.0};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> amp(1.0, 14.0), start(20e-9, 200e-9), width(50e-9, 400e-9);
    const auto g = TimeGrid::covering(0.0, 800e-9, 0.1e-9);
    for (int trial = 0; trial < 15; ++trial) {
        const double a = amp(rng), t0 = start(rng), t1 = t0 + width(rng);
        const auto lo = rectify(envelope(g, [&](double t) { return pulse(t, a, t0, t1); }), spec, src);
        const auto hi = rectify(envelope(g, [&](double t) { return pulse(t, a * 1.2, t0, t1); }), spec, src);
        const double bound = std::max(0.0, a - 0.6);
        for (std::size_t k = 0; k < lo.size(); ++k) {
            REQUIRE(lo[k] >= -1e-9);
            REQUIRE(lo[k] <= bound + 1e-9);
            REQUIRE(hi[k] >= lo[k] - 1e-9);
        }
    }
}

TEST_CASE("charge on the hold capacitor balances the currents") {
    const SourceIvModel src;
    const RectifierSpec spec{0.3, 72e-12, 385.0};
    const double r_th = src.thevenin_resistance();
    const auto g = TimeGrid::covering(0.0, 600e-9, 0.05e-9);
    auto amp = [](double t) { return pulse(t, 9.0, 50e-9, 300e-9); };
    RectifyOptions opt;
    opt.dt = 0.05e-9;
    const auto v = rectify(envelope(g, amp), spec, src, {}, opt);
    // trapezoidal integral of the oracle currents rebuilt from the trace
    double q = 0.0;
    auto i_net = [&](std::size_t k) {
        const double e = amp(g.time(k));
        const double i_in = std::max(0.0, e - 0.6 - v[k]) / r_th;
        return i_in - v[k] / spec.r_bleed;
    };
    for (std::size_t k = 1; k < v.size(); ++k) q += 0.5 * (i_net(k - 1) + i_net(k)) * g.dt;
    const std::size_t mid = static_cast<std::size_t>(250e-9 / g.dt);
    double q_mid = 0.0;
    for (std::size_t k = 1; k <= mid; ++k) q_mid += 0.5 * (i_net(k - 1) + i_net(k)) * g.dt;
    CHECK(q_mid == Approx(72e-12 * (v[mid] - v[0])).epsilon(0.005));
    CHECK(std::abs(q - 72e-12 * (v[v.size() - 1] - v[0])) < 0.005 * 72e-12 * v[mid]);
}

TEST_CASE("rectifier refuses a step too coarse for the charging time constant") {
    const SourceIvModel src;
    const auto g = TimeGrid::covering(0.0, 1e-6, 5e-9);
    RectifyOptions opt;
    opt.dt = 5e-9;
    CHECK_THROWS_AS(rectify(envelope(g, [](double) { return 5.0; }), {0.3, 72e-12, 385.0}, src, {}, opt), Error);
}

TEST_CASE("pull-down sink: off, saturated cap, and gain limit") {
    PullDownSpec p;
    p.enabled = true;
    CHECK(pull_down_current(p, 6.0, 6.0) == 0.0);
    CHECK(pull_down_current(p, 6.0, 0.0) == Approx(1.2));
    // small base drive: gain-limited
    const double v_drv = 6.0 - p.pnp_vbe_on - 0.001;
    CHECK(pull_down_current(p, 6.0, v_drv) == Approx(p.pnp_gain * 0.001 / p.base_resistance));
    p.enabled = false;
    CHECK(pull_down_current(p, 6.0, 0.0) == 0.0);
}
