#pragma once

// Receiver-side electrical model: the rectified SAW output as a Thevenin
// source, the RF-power-to-voltage map, the envelope-domain full-bridge
// rectifier, and the PNP pull-down stage of the enhanced driver.

#include "sawsim/signals.hpp"

#include <optional>
#include <vector>

namespace sawsim {

struct IvPoint {
    double current;
    double voltage;
};

struct PowerPoint {
    double dbm;
    double volts;
};

/// Default RF-power table at the 385 ohm reference load. The 34 dBm entry
/// (6.23 V) is measured; the rest follow an assumed amplitude ~ sqrt(power)
/// law through it.
std::vector<PowerPoint> default_power_voltage_points();

struct SourceIvModel {
    double v_oc = 13.4;
    double i_sc = 44.4e-3;
    std::vector<IvPoint> iv_points;  // optional; must span (0, v_oc) .. (i_sc, 0)
    std::vector<PowerPoint> power_voltage_points = default_power_voltage_points();
    double reference_load = 385.0;

    void validate() const;
    double thevenin_resistance() const { return v_oc / i_sc; }
};

/// Terminal voltage at a given load current (linear Thevenin unless
/// iv_points are supplied).
double source_voltage_at_load(const SourceIvModel& model, double load_current);

/// Open-circuit voltage of the I-V curve scaled to RF power p_dbm, such that
/// the scaled curve delivers the tabulated voltage into the reference load.
double open_circuit_voltage_at_power(const SourceIvModel& model, double p_dbm);

/// Output voltage into `load_ohm` at RF power p_dbm.
double output_voltage_vs_power(const SourceIvModel& model, double p_dbm, double load_ohm);

struct RectifierSpec {
    double diode_vf = 0.3;
    double c_hold = 72e-12;
    double r_bleed = 1000.0;

    void validate(const char* prefix = "rectifier") const;
};

struct PullDownSpec {
    bool enabled = false;
    double pnp_gain = 100.0;
    double pnp_vbe_on = 0.65;
    double base_resistance = 100.0;
    double series_diode_vf = 0.35;
    double series_diode_rs = 1.0;
    double pulldown_resistance = 5.0;

    void validate(const char* prefix = "pulldown") const;
};

/// Collector sink current from gate to source. Active when the driver node
/// sits more than one V_BE below the gate; base current flows through the
/// base resistance and the sink is capped by the saturated path.
double pull_down_current(const PullDownSpec& spec, double v_gate, double v_driver);

/// Resistive load hanging on the hold node (absent when nullopt).
struct ExternalLoad {
    std::optional<double> resistance;
};

struct RectifyOptions {
    double dt = 0.1e-9;
    double v_initial = 0.0;
};

/// Envelope-domain full-bridge rectifier: the hold node charges through the
/// source's Thevenin resistance whenever |env| - 2 vf exceeds it, and bleeds
/// through r_bleed and the external load. Solved with the transient engine.
Waveform rectify(const ComplexEnvelope& envelope, const RectifierSpec& spec,
                 const SourceIvModel& source, ExternalLoad load = {},
                 RectifyOptions options = {});

}  // namespace sawsim
