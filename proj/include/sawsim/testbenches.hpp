#pragma once

// Executable versions of the four bench experiments and their metrics.

#include "sawsim/topologies.hpp"

#include <vector>

namespace sawsim {

// ------------------------------------------------------ characterization

struct CharacterizationConfig {
    SawDeviceSpec saw;
    SourceIvModel source;
    RectifierSpec rectifier{0.3, 72e-12, 1000.0};
    double peak_output = 4.5;  // V, rectified plateau at room temperature
    double f_lo = 150e6;
    double f_hi = 300e6;
    std::size_t sweep_points = 3001;
    std::size_t iv_points = 45;
    double pulse_start = 0.2e-6;
    double pulse_width = 2.0e-6;
    double duration = 3.0e-6;
    double envelope_dt = 0.25e-9;
    double rectifier_dt = 0.05e-9;

    void validate() const;
};

struct EdgeRun {
    Waveform v_out;
    double peak;       // V
    double rise_time;  // s, 10-90
    double fall_time;  // s, 90-10
};

struct CharacterizationResult {
    TwoPortSweep sweep;
    std::vector<IvPoint> iv;
    EdgeRun edge;
    double peak_freq;
    double peak_db;
    double frac_bandwidth_3db;
};

/// Single RF burst through SAW and rectifier into the bleed resistor.
EdgeRun run_edge(const CharacterizationConfig& cfg, double thermal_scale = 1.0);
CharacterizationResult run_characterization(const CharacterizationConfig& cfg);

// --------------------------------------------------------------- thermal

struct ThermalRow {
    double kelvin;
    double scale;
    double peak;
    double rise_time;
    double fall_time;
    Waveform v_out;
};

std::vector<ThermalRow> run_thermal_sweep(const CharacterizationConfig& cfg, const std::vector<double>& kelvin,
                                          const std::vector<ThermalAnchor>& anchors = default_thermal_anchors());

// ------------------------------------------------------------------- DPT

struct SwitchingMetrics {
    double t_on;
    double t_off;
    double e_on;
    double e_off;
    double di_dt;                // A/s, pulse-1 fit of I_DS
    double freewheel_di_dt;      // A/s, inductor current between pulses (negative)
    double i_at_second_turn_on;  // A
    double overshoot_current;    // A above the inductor current at turn-on
};

struct DptResult {
    engine::TraceSet traces;
    SwitchingMetrics metrics;
};

DptResult run_dpt(const DptConfig& cfg);

/// Expects traces v_ds, i_ds, v_gs and i_l spanning both pulses.
SwitchingMetrics extract_switching_metrics(const engine::TraceSet& traces, const DptConfig& cfg);

/// 10-90 V_DS transition time of the single transition in `window`.
/// More than one candidate transition is a metric error.
double switching_time(const Waveform& v_ds, Edge direction, TimeWindow window);
/// v*i integrated over the 1%-99% span of the same transition.
double switching_energy(const Waveform& v_ds, const Waveform& i_ds, Edge direction, TimeWindow window);
/// Least-squares slope of w over the window.
double fitted_slope(const Waveform& w, TimeWindow window);

// ------------------------------------------------------------------ buck

struct BuckResult {
    engine::TraceSet traces;  // last (steady) switching period
    int cycles;
    double v_out;               // cycle average
    double ripple;              // peak-to-peak inductor current
    double avg_inductor_voltage;
    double p_in;                // from the DC supply
    double p_out;
    double p_rf;                // RF drive input power (0 in the ideal limit)
    double efficiency;          // p_out / p_in
    double efficiency_with_rf;  // p_out / (p_in + p_rf)
    double loss_high;
    double loss_low;
    double loss_driver;
    double audit_error;  // |p_in - p_out - losses - storage| / p_in
};

BuckResult run_buck(const BuckConfig& cfg);

}  // namespace sawsim
