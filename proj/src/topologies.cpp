#include "sawsim/topologies.hpp"

#include "sawsim/error.hpp"

#include <cmath>

namespace sawsim {

using engine::Circuit;
using engine::ground;
using engine::Node;

double drive_emf(const DriveChain& c) {
    const double v_oc = c.open_circuit_voltage ? *c.open_circuit_voltage
                                               : open_circuit_voltage_at_power(c.source, c.rf_power_dbm);
    return c.thermal_scale * v_oc + 2.0 * c.rectifier.diode_vf;
}

EnvelopeEmf::EnvelopeEmf(TimeGrid grid, std::vector<double> magnitude, double period, double start)
    : grid_(grid), mag_(std::make_shared<const std::vector<double>>(std::move(magnitude))), period_(period),
      start_(start) {
    if (mag_->size() != grid_.n) fail(ErrorKind::config, "EnvelopeEmf: sample count does not match grid");
}

double EnvelopeEmf::operator()(double t) const {
    if (period_ > 0.0) {
        double x = std::fmod(t - start_, period_);
        if (x < 0.0) x += period_;
        t = start_ + x;
    }
    const auto& m = *mag_;
    const double x = (t - grid_.t0) / grid_.dt;
    if (x <= 0.0) return m.front();
    const auto k = static_cast<std::size_t>(x);
    if (k + 1 >= m.size()) return m.back();
    const double f = x - static_cast<double>(k);
    return m[k] + f * (m[k + 1] - m[k]);
}

namespace {

ComplexEnvelope filtered(const DriveChain& chain, const Waveform& command) {
    const SawDevice saw(chain.saw);
    const double gain = std::abs(saw.transfer_function(saw.center_frequency()));
    const auto rf = am_modulate(command, saw.center_frequency(), drive_emf(chain) / gain);
    return saw.filter_envelope(rf);
}

}  // namespace

EnvelopeEmf chain_emf(const DriveChain& chain, const Waveform& command) {
    const auto out = filtered(chain, command);
    return EnvelopeEmf(out.grid(), out.magnitude());
}

EnvelopeEmf periodic_chain_emf(const DriveChain& chain, const PwmSpec& pwm) {
    const double period = 1.0 / pwm.freq;
    const auto n = static_cast<std::size_t>(std::llround(2.0 * period / chain.envelope_dt));
    const TimeGrid g(0.0, 2.0 * period / static_cast<double>(n), n + 1);
    const auto out = filtered(chain, make_pwm(pwm, g));
    // keep the second period, where the filter memory holds the first
    const std::size_t k0 = n / 2;
    const auto mag = out.magnitude();
    std::vector<double> second(mag.begin() + static_cast<long>(k0), mag.begin() + static_cast<long>(n + 1));
    const TimeGrid grid(period, g.dt, second.size());
    return EnvelopeEmf(grid, std::move(second), period, period);
}

DriverStage add_driver(Circuit& c, const std::string& p, Node gate, Node ref, const RectifierSpec& rect,
                       const PullDownSpec& pd, double r_th, engine::TimeFunction emf) {
    rect.validate();
    DriverStage d{};
    if (pd.enabled) {
        pd.validate();
        d.hold = c.add_node(p + "hold");
        d.series_diode = c.diode(p + "d_series", d.hold, gate, DiodeSpec{pd.series_diode_vf, pd.series_diode_rs, 0.0});
        d.pnp = c.pnp_pulldown(p + "pnp", gate, d.hold, ref, pd);
    } else {
        d.hold = gate;
    }
    d.bridge = c.sourced_diode(p + "bridge", d.hold, ref, r_th, 2.0 * rect.diode_vf, std::move(emf));
    d.c_hold = c.capacitor(p + "c_hold", d.hold, ref, rect.c_hold);
    d.r_bleed = c.resistor(p + "r_bleed", d.hold, ref, rect.r_bleed);
    return d;
}

std::vector<std::pair<int, double>> HemtStage::drain_current() const {
    return {{channel, 1.0}, {c_ds, 1.0}, {c_gd, 1.0}};
}

std::vector<int> HemtStage::elements() const {
    std::vector<int> out{channel, c_gd, c_ds};
    if (c_gs >= 0) out.push_back(c_gs);
    return out;
}

HemtStage add_hemt(Circuit& c, const std::string& p, Node drain, Node gate, Node source, const HemtSpec& spec) {
    spec.validate();
    HemtStage h{};
    h.channel = c.hemt_channel(p + "channel", drain, gate, source, spec);
    if (gate != source) h.c_gs = c.capacitor(p + "c_gs", gate, source, spec.c_gs);
    h.c_gd = c.gd_capacitor(p + "c_gd", drain, gate, spec);
    h.c_ds = c.capacitor(p + "c_ds", drain, source, spec.c_ds);
    return h;
}

// ---------------------------------------------------------------- DPT

void DptConfig::validate() const {
    auto pos = [](double v, const char* key) {
        if (!(v > 0.0)) fail(ErrorKind::config, std::string("dpt.") + key + ": must be > 0");
    };
    pos(v_dc, "v_dc");
    pos(l, "l");
    pos(c_link, "c_link");
    pos(r_supply, "r_supply");
    pos(pulse1, "pulse1");
    pos(gap, "gap");
    pos(pulse2, "pulse2");
    pos(lead, "lead");
    pos(tail, "tail");
    pos(envelope_dt, "envelope_dt");
    fwd.validate("fwd");
    if (!(fwd.r_s > 0.0)) fail(ErrorKind::config, "fwd.r_s: must be > 0 in the transient netlist");
    dut.validate("hemt");
    rectifier.validate("rectifier");
    pulldown.validate("pulldown");
    source.validate();
    saw.validate();
    solver.validate();
}

DriveChain DptConfig::chain() const {
    DriveChain c;
    c.saw = saw;
    c.source = source;
    c.rectifier = rectifier;
    c.rf_power_dbm = rf_power_dbm;
    c.envelope_dt = envelope_dt;
    return c;
}

DptCircuit build_dpt(const DptConfig& cfg, engine::TimeFunction emf) {
    cfg.validate();
    DptCircuit d;
    Circuit& c = d.circuit;
    d.link = c.add_node("link");
    d.drain = c.add_node("drain");
    d.gate = c.add_node("gate");
    c.set_initial_voltage(d.link, cfg.v_dc);
    c.set_initial_voltage(d.drain, cfg.v_dc);

    const double v_dc = cfg.v_dc;
    d.supply = c.norton_source("v_dc", d.link, ground, cfg.r_supply, [v_dc](double) { return v_dc; });
    d.c_link = c.capacitor("c_link", d.link, ground, cfg.c_link);
    d.inductor = c.inductor("l", d.link, d.drain, cfg.l);
    d.fwd = c.diode("fwd", d.drain, d.link, cfg.fwd);
    if (cfg.fwd.c_j > 0.0) d.c_j = c.capacitor("fwd_c_j", d.drain, d.link, cfg.fwd.c_j);
    d.dut = add_hemt(c, "dut_", d.drain, d.gate, ground, cfg.dut);
    d.driver = add_driver(c, "drv_", d.gate, ground, cfg.rectifier, cfg.pulldown,
                          cfg.source.thevenin_resistance(), std::move(emf));
    return d;
}

std::vector<engine::Probe> DptCircuit::probes() const {
    using engine::Probe;
    return {Probe::voltage("v_ds", drain), Probe::voltage("v_gs", gate),
            Probe::current("i_ds", dut.drain_current()), Probe::current("i_l", {{inductor, 1.0}}),
            Probe::voltage("v_drv", driver.hold)};
}

std::vector<engine::EnergyMeter> DptCircuit::meters() const {
    return {{"e_dut", dut.elements()}};
}

// ---------------------------------------------------------------- buck

void BuckConfig::validate() const {
    auto pos = [](double v, const char* key) {
        if (!(v > 0.0)) fail(ErrorKind::config, std::string("buck.") + key + ": must be > 0");
    };
    pos(v_in, "v_in");
    pos(l, "l");
    pos(c_out, "c_out");
    pos(r_load, "r_load");
    pos(r_supply, "r_supply");
    pos(f_sw, "f_sw");
    pos(envelope_dt, "envelope_dt");
    pos(ideal_gate_voltage, "ideal_gate_voltage");
    pos(settle_tol, "settle_tol");
    if (!(duty > 0.0 && duty < 1.0)) fail(ErrorKind::config, "buck.duty: must be in (0, 1)");
    if (min_cycles < 2) fail(ErrorKind::config, "buck.min_cycles: must be >= 2");
    if (max_cycles < min_cycles) fail(ErrorKind::config, "buck.max_cycles: must be >= min_cycles");
    high_side.validate("buck.high_side");
    low_side.validate("buck.low_side");
    rectifier.validate("rectifier");
    pulldown.validate("pulldown");
    source.validate();
    saw.validate();
    solver.validate();
}

DriveChain BuckConfig::chain() const {
    DriveChain c;
    c.saw = saw;
    c.source = source;
    c.rectifier = rectifier;
    c.rf_power_dbm = rf_power_dbm;
    c.envelope_dt = envelope_dt;
    return c;
}

BuckCircuit build_buck(const BuckConfig& cfg, engine::TimeFunction gate_drive) {
    cfg.validate();
    BuckCircuit b;
    Circuit& c = b.circuit;
    b.vin = c.add_node("vin");
    b.sw = c.add_node("sw");
    b.out = c.add_node("out");
    b.gate = c.add_node("gate_hs");
    c.set_initial_voltage(b.vin, cfg.v_in);

    HemtSpec hs = cfg.high_side;
    HemtSpec ls = cfg.low_side;
    if (cfg.ideal) {
        for (HemtSpec* s : {&hs, &ls}) {
            s->r_on = 1e-4;
            s->reverse_offset = 0.0;
            s->reverse_slope = 1e-4;
        }
    }

    const double v_in = cfg.v_in;
    b.supply = c.norton_source("v_in", b.vin, ground, cfg.r_supply, [v_in](double) { return v_in; });
    b.high = add_hemt(c, "hs_", b.vin, b.gate, b.sw, hs);
    b.low = add_hemt(c, "ls_", b.sw, ground, ground, ls);
    b.inductor = c.inductor("l", b.sw, b.out, cfg.l);
    b.c_out = c.capacitor("c_out", b.out, ground, cfg.c_out);
    b.r_load = c.resistor("r_load", b.out, ground, cfg.r_load);
    if (cfg.ideal) {
        b.ideal_gate = c.norton_source("gate_src", b.gate, b.sw, 1.0, std::move(gate_drive));
    } else {
        b.driver = add_driver(c, "drv_", b.gate, b.sw, cfg.rectifier, cfg.pulldown,
                              cfg.source.thevenin_resistance(), std::move(gate_drive));
    }
    return b;
}

std::vector<engine::Probe> BuckCircuit::probes() const {
    using engine::Probe;
    return {Probe::voltage("v_out", out),
            Probe::voltage("v_ds", vin, sw),
            Probe::voltage("v_gs", gate, sw),
            Probe::voltage("v_sw", sw),
            Probe::current("i_l", {{inductor, 1.0}}),
            Probe::current("i_in", {{supply, -1.0}})};
}

std::vector<engine::EnergyMeter> BuckCircuit::meters() const {
    std::vector<engine::EnergyMeter> m{{"e_supply", {supply}},   {"e_load", {r_load}},
                                       {"e_high", high.elements()}, {"e_low", low.elements()},
                                       {"e_inductor", {inductor}}, {"e_c_out", {c_out}}};
    if (driver) {
        std::vector<int> d{driver->bridge, driver->c_hold, driver->r_bleed};
        if (driver->pnp >= 0) {
            d.push_back(driver->pnp);
            d.push_back(driver->series_diode);
        }
        m.push_back({"e_driver", d});
    } else {
        m.push_back({"e_driver", {ideal_gate}});
    }
    return m;
}

}  // namespace sawsim
