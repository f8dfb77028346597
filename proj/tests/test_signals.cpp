#include "sawsim/error.hpp"
#include "sawsim/signals.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace sawsim;
using Catch::Approx;

namespace {

Waveform exp_step(double tau, double amp, double t_step, double dt, double dur) {
    const auto g = TimeGrid::covering(0.0, dur, dt);
    std::vector<double> s(g.n);
    for (std::size_t k = 0; k < g.n; ++k) {
        const double t = g.time(k) - t_step;
        s[k] = t > 0 ? amp * (1.0 - std::exp(-t / tau)) : 0.0;
    }
    return {g, s, Unit::volt, "v"};
}

Waveform constant(double v, const TimeGrid& g, Unit u) { return {g, std::vector<double>(g.n, v), u, "c"}; }

}  // namespace

TEST_CASE("grid rejects bad sampling") {
    CHECK_THROWS_AS(TimeGrid(0.0, 0.0, 10), Error);
    CHECK_THROWS_AS(TimeGrid(0.0, 1e-9, 1), Error);
    const auto g = TimeGrid::covering(0.0, 1e-6, 1e-9);
    CHECK(g.n == 1001);
    CHECK(g.duration() == Approx(1e-6));
}

TEST_CASE("waveform rejects non-finite samples and size mismatch") {
    const TimeGrid g(0.0, 1.0, 3);
    CHECK_THROWS_AS(Waveform(g, {0.0, NAN, 1.0}, Unit::volt), Error);
    CHECK_THROWS_AS(Waveform(g, {0.0, 1.0}, Unit::volt), Error);
}

TEST_CASE("pwm: 10 kHz 50% over 2 ms has 20 periods and mean 0.5") {
    const auto g = TimeGrid(0.0, 100e-9, 20000);
    const auto w = make_pwm({10e3, 0.5}, g);
    CHECK(w.mean() == Approx(0.5).margin(1.0 / 20000));
    int rising = 0;
    for (std::size_t k = 1; k < w.size(); ++k) rising += w[k - 1] < 0.5 && w[k] >= 0.5;
    CHECK(rising == 19);  // first edge sits at t0
    CHECK(w[0] == 1.0);
}

TEST_CASE("pwm: 50 kHz period 20 us, high for 10 us") {
    const auto g = TimeGrid(0.0, 10e-9, 4000);
    const auto w = make_pwm({50e3, 0.5}, g);
    CHECK(w.at(5e-6) == 1.0);
    CHECK(w.at(15e-6) == 0.0);
    CHECK(w.at(25e-6) == 1.0);
}

TEST_CASE("pwm mean tracks duty and levels") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> duty(0.05, 0.95), lvl(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        PwmSpec s;
        s.freq = 10e3;
        s.duty = duty(rng);
        s.low_level = lvl(rng);
        s.high_level = s.low_level + 1.0 + std::abs(lvl(rng));
        const auto w = make_pwm(s, TimeGrid(0.0, 100e-9, 20000));
        const double want = s.duty * s.high_level + (1 - s.duty) * s.low_level;
        REQUIRE(w.mean() == Approx(want).margin(2.0 * (s.high_level - s.low_level) / 1000));
    }
}

TEST_CASE("pwm rejects bad duty and undersampling") {
    const auto g = TimeGrid(0.0, 1e-6, 1000);
    CHECK_THROWS_AS(make_pwm({10e3, 1.0}, g), Error);
    CHECK_THROWS_AS(make_pwm({10e3, 0.0}, g), Error);
    CHECK_THROWS_AS(make_pwm({1e6, 0.5}, g), Error);
}

TEST_CASE("am_modulate: constant command gives a flat envelope, zero gives zero") {
    const auto g = TimeGrid(0.0, 1e-9, 100);
    const auto on = am_modulate(constant(1.0, g, Unit::dimensionless), 223e6, 10.0);
    for (double m : on.magnitude()) CHECK(m == 10.0);
    const auto off = am_modulate(constant(0.0, g, Unit::dimensionless), 223e6, 10.0);
    for (double m : off.magnitude()) CHECK(m == 0.0);
}

TEST_CASE("am_modulate is linear in amplitude") {
    const auto g = TimeGrid(0.0, 1e-9, 40000);
    const auto cmd = make_pulse_train({{2e-6, 12e-6}, {22e-6, 32e-6}}, g, 5e-9);
    const auto a = am_modulate(cmd, 223e6, 1.0);
    const auto b = am_modulate(cmd, 223e6, 7.0);
    for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(b.samples()[k] == 7.0 * a.samples()[k]);
    CHECK(std::abs(a.samples()[7000]) == 1.0);   // inside pulse 1
    CHECK(std::abs(a.samples()[17000]) == 0.0);  // gap
}

TEST_CASE("am_modulate rejects commands outside [0, 1]") {
    const auto g = TimeGrid(0.0, 1e-9, 10);
    CHECK_THROWS_AS(am_modulate(constant(1.5, g, Unit::dimensionless), 223e6, 1.0), Error);
    CHECK_THROWS_AS(am_modulate(constant(-0.1, g, Unit::dimensionless), 223e6, 1.0), Error);
}

TEST_CASE("rise time of an exponential step is tau ln 9") {
    const double tau = 10e-9;
    const auto w = exp_step(tau, 5.0, 50e-9, 0.01e-9, 500e-9);
    CHECK(rise_time_10_90(w, Edge::rising) == Approx(tau * std::log(9.0)).epsilon(1e-4));
}

TEST_CASE("rise time of a hard step is at most one sample") {
    const auto g = TimeGrid(0.0, 1e-9, 200);
    std::vector<double> s(g.n, 0.0);
    for (std::size_t k = 100; k < g.n; ++k) s[k] = 3.0;
    CHECK(rise_time_10_90({g, s, Unit::volt}, Edge::rising) <= g.dt);
}

TEST_CASE("rise time is invariant to amplitude scaling and translation") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> amp(0.1, 100.0), shift(0.0, 100e-9), tau(2e-9, 30e-9);
    for (int trial = 0; trial < 30; ++trial) {
        const double t = tau(rng);
        const auto a = exp_step(t, 1.0, 60e-9, 0.05e-9, 1.5e-6);
        // whole-sample shifts keep the interpolation nodes aligned
        const double sh = std::round(shift(rng) / 0.05e-9) * 0.05e-9;
        const auto b = exp_step(t, amp(rng), 60e-9 + sh, 0.05e-9, 1.5e-6);
        REQUIRE(rise_time_10_90(b, Edge::rising) == Approx(rise_time_10_90(a, Edge::rising)).epsilon(1e-6));
    }
}

TEST_CASE("falling edges are measured too") {
    auto up = exp_step(10e-9, 2.0, 50e-9, 0.01e-9, 500e-9);
    std::vector<double> s(up.samples().begin(), up.samples().end());
    for (auto& x : s) x = 2.0 - x;
    CHECK(rise_time_10_90({up.grid(), s, Unit::volt}, Edge::falling) == Approx(10e-9 * std::log(9.0)).epsilon(1e-4));
}

TEST_CASE("flat waveform has no transition") {
    const auto g = TimeGrid(0.0, 1e-9, 100);
    CHECK_THROWS_AS(rise_time_10_90(constant(1.0, g, Unit::volt), Edge::rising), Error);
}

TEST_CASE("first_crossing interpolates between samples") {
    const TimeGrid g(0.0, 1.0, 5);
    const Waveform w(g, {0, 1, 2, 3, 4}, Unit::volt);
    CHECK(*first_crossing(w, 2.5, Edge::rising) == Approx(2.5));
    CHECK_FALSE(first_crossing(w, 2.5, Edge::falling).has_value());
}

TEST_CASE("integrate_product: constant and triangle oracles") {
    const auto g = TimeGrid::covering(0.0, 1e-6, 1e-10);
    CHECK(integrate_product(constant(25.0, g, Unit::volt), constant(1.0, g, Unit::ampere), {0.0, 1e-6}) ==
          Approx(25e-6).epsilon(1e-12));

    std::vector<double> v(g.n);
    for (std::size_t k = 0; k < g.n; ++k) v[k] = std::min(25.0, 25.0 * g.time(k) / 100e-9);
    const Waveform ramp(g, v, Unit::volt);
    CHECK(integrate_product(ramp, constant(2.0, g, Unit::ampere), {0.0, 100e-9}) == Approx(2.5e-6).epsilon(1e-9));
}

TEST_CASE("integrate_product is bilinear and additive over windows") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> d;
    const TimeGrid g(0.0, 1e-9, 500);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(g.n), b(g.n), c(g.n);
        for (std::size_t k = 0; k < g.n; ++k) a[k] = d(rng), b[k] = d(rng), c[k] = d(rng);
        const Waveform va(g, a, Unit::volt), vb(g, b, Unit::volt), ic(g, c, Unit::ampere);
        std::vector<double> ab(g.n);
        for (std::size_t k = 0; k < g.n; ++k) ab[k] = 2.0 * a[k] + 3.0 * b[k];
        const Waveform vab(g, ab, Unit::volt);
        const TimeWindow all{10.3e-9, 480.7e-9};
        const double lhs = integrate_product(vab, ic, all);
        const double rhs = 2.0 * integrate_product(va, ic, all) + 3.0 * integrate_product(vb, ic, all);
        REQUIRE(lhs == Approx(rhs).margin(1e-18));
        const double split = integrate_product(va, ic, {10.3e-9, 200.45e-9}) + integrate_product(va, ic, {200.45e-9, 480.7e-9});
        REQUIRE(split == Approx(integrate_product(va, ic, all)).margin(1e-18));
    }
}

TEST_CASE("csv header carries names and units") {
    const TimeGrid g(0.0, 1e-9, 3);
    const Waveform a(g, {1, 2, 3}, Unit::volt, "v_ds"), b(g, {0, 0, 1}, Unit::ampere, "i_ds");
    std::ostringstream os;
    const Waveform both[] = {a, b};
    write_csv(os, both);
    CHECK(os.str().rfind("t_s,v_ds_V,i_ds_A\n", 0) == 0);
}
