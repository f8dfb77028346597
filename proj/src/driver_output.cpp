#include "sawsim/driver_output.hpp"

#include "sawsim/engine.hpp"
#include "sawsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace sawsim {

namespace {

void require(bool ok, const char* prefix, const char* field, const char* what) {
    if (!ok) fail(ErrorKind::config, std::string(prefix) + "." + field + ": " + what);
}

// Unscaled I-V curve.
double base_voltage(const SourceIvModel& m, double current) {
    if (m.iv_points.empty()) return m.v_oc * (1.0 - current / m.i_sc);
    const auto& p = m.iv_points;
    if (current <= p.front().current) return p.front().voltage;
    for (std::size_t k = 1; k < p.size(); ++k) {
        if (current <= p[k].current) {
            const double f = (current - p[k - 1].current) / (p[k].current - p[k - 1].current);
            return p[k - 1].voltage + f * (p[k].voltage - p[k - 1].voltage);
        }
    }
    return p.back().voltage;
}

// Operating current of the unscaled curve into a resistor. Scaling both
// axes by k leaves this intersection at the same u = I / k.
double operating_point(const SourceIvModel& m, double load_ohm) {
    double lo = 0.0, hi = m.i_sc;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (base_voltage(m, mid) > mid * load_ohm) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double table_voltage(const SourceIvModel& m, double p_dbm) {
    const auto& t = m.power_voltage_points;
    if (p_dbm < t.front().dbm - 1e-12 || p_dbm > t.back().dbm + 1e-12)
        fail(ErrorKind::range, "RF power " + std::to_string(p_dbm) + " dBm outside the power table");
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (p_dbm <= t[k].dbm + 1e-12) {
            // linear in log amplitude, which reproduces a power law exactly
            const double f = (p_dbm - t[k - 1].dbm) / (t[k].dbm - t[k - 1].dbm);
            return t[k - 1].volts * std::pow(t[k].volts / t[k - 1].volts, f);
        }
    }
    return t.back().volts;
}

double scale_at_power(const SourceIvModel& m, double p_dbm) {
    const double u = operating_point(m, m.reference_load);
    return table_voltage(m, p_dbm) / base_voltage(m, u);
}

}  // namespace

std::vector<PowerPoint> default_power_voltage_points() {
    std::vector<PowerPoint> out;
    for (int p = 28; p <= 37; ++p) out.push_back({double(p), 6.23 * std::pow(10.0, (p - 34) / 20.0)});
    return out;
}

void SourceIvModel::validate() const {
    require(v_oc > 0.0, "source", "v_oc", "must be > 0");
    require(i_sc > 0.0, "source", "i_sc", "must be > 0");
    require(reference_load > 0.0, "source", "reference_load", "must be > 0");
    require(power_voltage_points.size() >= 2, "source", "power_voltage_points", "need at least 2 entries");
    for (std::size_t k = 0; k < power_voltage_points.size(); ++k) {
        require(power_voltage_points[k].volts > 0.0, "source", "power_voltage_points", "voltages must be > 0");
        if (k > 0)
            require(power_voltage_points[k].dbm > power_voltage_points[k - 1].dbm, "source",
                    "power_voltage_points", "powers must increase");
    }
    if (!iv_points.empty()) {
        require(iv_points.size() >= 2, "source", "iv_points", "need at least 2 points");
        require(std::abs(iv_points.front().current) < 1e-12 &&
                    std::abs(iv_points.front().voltage - v_oc) <= 1e-9 * v_oc,
                "source", "iv_points", "must start at (0, v_oc)");
        require(std::abs(iv_points.back().current - i_sc) <= 1e-9 * i_sc &&
                    std::abs(iv_points.back().voltage) < 1e-12,
                "source", "iv_points", "must end at (i_sc, 0)");
        for (std::size_t k = 1; k < iv_points.size(); ++k)
            require(iv_points[k].current > iv_points[k - 1].current &&
                        iv_points[k].voltage <= iv_points[k - 1].voltage,
                    "source", "iv_points", "current must increase and voltage not increase");
    }
}

double source_voltage_at_load(const SourceIvModel& model, double load_current) {
    model.validate();
    if (load_current < 0.0) fail(ErrorKind::range, "source: negative load current");
    if (load_current > model.i_sc * (1.0 + 1e-12))
        fail(ErrorKind::range, "source: load current exceeds short-circuit current");
    return base_voltage(model, load_current);
}

double open_circuit_voltage_at_power(const SourceIvModel& model, double p_dbm) {
    model.validate();
    return scale_at_power(model, p_dbm) * model.v_oc;
}

double output_voltage_vs_power(const SourceIvModel& model, double p_dbm, double load_ohm) {
    model.validate();
    if (!(load_ohm > 0.0)) fail(ErrorKind::config, "load resistance must be > 0");
    const double k = scale_at_power(model, p_dbm);
    return k * base_voltage(model, operating_point(model, load_ohm));
}

void RectifierSpec::validate(const char* prefix) const {
    require(diode_vf >= 0.0, prefix, "diode_vf", "must be >= 0");
    require(c_hold > 0.0, prefix, "c_hold", "must be > 0");
    require(r_bleed > 0.0, prefix, "r_bleed", "must be > 0");
}

void PullDownSpec::validate(const char* prefix) const {
    require(pnp_gain > 0.0, prefix, "pnp_gain", "must be > 0");
    require(pnp_vbe_on >= 0.0, prefix, "pnp_vbe_on", "must be >= 0");
    require(base_resistance > 0.0, prefix, "base_resistance", "must be > 0");
    require(series_diode_vf >= 0.0, prefix, "series_diode_vf", "must be >= 0");
    require(series_diode_rs > 0.0, prefix, "series_diode_rs", "must be > 0");
    require(pulldown_resistance > 0.0, prefix, "pulldown_resistance", "must be > 0");
}

double pull_down_current(const PullDownSpec& spec, double v_gate, double v_driver) {
    if (!spec.enabled) return 0.0;
    const double x = v_gate - v_driver - spec.pnp_vbe_on;
    if (x <= 0.0) return 0.0;
    const double i_b = x / spec.base_resistance;
    return std::min(spec.pnp_gain * i_b, std::max(0.0, v_gate) / spec.pulldown_resistance);
}

Waveform rectify(const ComplexEnvelope& envelope, const RectifierSpec& spec, const SourceIvModel& source,
                 ExternalLoad load, RectifyOptions options) {
    spec.validate();
    source.validate();
    const double r_th = source.thevenin_resistance();
    if (!(options.dt > 0.0) || options.dt > r_th * spec.c_hold / 5.0)
        fail(ErrorKind::resolution, "rectify: dt must resolve the charging time constant (dt <= R_th C_hold / 5)");
    if (load.resistance && !(*load.resistance > 0.0)) fail(ErrorKind::config, "rectify: load must be > 0");

    const TimeGrid g = envelope.grid();
    auto mag = std::make_shared<std::vector<double>>(envelope.magnitude());
    auto emf = [g, mag](double t) {
        const double x = (t - g.t0) / g.dt;
        if (x <= 0.0) return (*mag)[0];
        const auto k = static_cast<std::size_t>(x);
        if (k + 1 >= mag->size()) return mag->back();
        const double f = x - static_cast<double>(k);
        return (*mag)[k] + f * ((*mag)[k + 1] - (*mag)[k]);
    };

    engine::Circuit c;
    const auto hold = c.add_node("hold");
    c.set_initial_voltage(hold, options.v_initial);
    c.sourced_diode("bridge", hold, engine::ground, r_th, 2.0 * spec.diode_vf, emf);
    c.capacitor("c_hold", hold, engine::ground, spec.c_hold, options.v_initial);
    c.resistor("r_bleed", hold, engine::ground, spec.r_bleed);
    if (load.resistance) c.resistor("r_load", hold, engine::ground, *load.resistance);

    engine::SolverConfig cfg;
    cfg.dt_fast = std::min(options.dt, g.dt);
    cfg.dt_slow = std::max(cfg.dt_fast, g.dt);
    cfg.event_tol = cfg.dt_fast * 1e-3;
    engine::Engine eng(c, cfg);

    engine::RunOptions run;
    run.t0 = g.t0;
    run.duration = g.duration();
    run.dt_out = g.dt;
    run.all_fast = true;
    run.probes = {engine::Probe::voltage("v_hold", hold)};
    auto traces = eng.run(run);
    return traces.traces.front();
}

}  // namespace sawsim
