#pragma once

// The fixed power-stage netlists: double pulse test and buck converter, both
// gated by the SAW isolated driver (RF command -> SAW -> rectifier).

#include "sawsim/driver_output.hpp"
#include "sawsim/engine.hpp"
#include "sawsim/power_devices.hpp"
#include "sawsim/saw_device.hpp"
#include "sawsim/signals.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace sawsim {

/// RF link from a baseband command to the EMF seen by the rectifier bridge.
struct DriveChain {
    SawDeviceSpec saw;
    SourceIvModel source;
    RectifierSpec rectifier;
    double rf_power_dbm = 34.0;
    /// Replaces the power-table open-circuit voltage when set.
    std::optional<double> open_circuit_voltage;
    double thermal_scale = 1.0;
    double envelope_dt = 0.5e-9;
};

/// Bridge EMF while the carrier is on: scaled open-circuit voltage plus the
/// two diode drops it has to overcome.
double drive_emf(const DriveChain& chain);

/// |envelope| after the SAW, as a function of time for the engine. When
/// `period` > 0 the samples cover [start, start + period) and repeat.
class EnvelopeEmf {
public:
    EnvelopeEmf(TimeGrid grid, std::vector<double> magnitude, double period = 0.0, double start = 0.0);

    double operator()(double t) const;
    const TimeGrid& grid() const { return grid_; }
    std::span<const double> samples() const { return *mag_; }

private:
    TimeGrid grid_;
    std::shared_ptr<const std::vector<double>> mag_;
    double period_;
    double start_;
};

EnvelopeEmf chain_emf(const DriveChain& chain, const Waveform& command);
/// Steady periodic drive: filters two PWM periods and keeps the second.
EnvelopeEmf periodic_chain_emf(const DriveChain& chain, const PwmSpec& pwm);

/// Rectifier stage between `gate` and `ref`. With the pull-down enabled the
/// bridge charges a separate node that feeds the gate through a series
/// diode and drives the PNP base.
struct DriverStage {
    engine::Node hold;
    int bridge;
    int c_hold;
    int r_bleed;
    int series_diode = -1;
    int pnp = -1;
};
DriverStage add_driver(engine::Circuit& c, const std::string& prefix, engine::Node gate, engine::Node ref,
                       const RectifierSpec& rect, const PullDownSpec& pulldown, double r_th,
                       engine::TimeFunction emf);

/// HEMT with its three capacitances. Passing ground as gate ties it to source.
struct HemtStage {
    int channel;
    int c_gs = -1;
    int c_gd;
    int c_ds;
    std::vector<std::pair<int, double>> drain_current() const;
    std::vector<int> elements() const;
};
HemtStage add_hemt(engine::Circuit& c, const std::string& prefix, engine::Node drain, engine::Node gate,
                   engine::Node source, const HemtSpec& spec);

struct DptConfig {
    double v_dc = 25.0;
    double l = 132e-6;
    double c_link = 94e-6;
    double r_supply = 0.05;  // assumed bench supply + wiring
    DiodeSpec fwd{3.0, 0.1, 100e-12};  // drop lumps the whole freewheel loop
    HemtSpec dut;
    RectifierSpec rectifier{0.3, 72e-12, 385.0};  // r_bleed is the gate resistor r_g
    double pulse1 = 10e-6;
    double gap = 10e-6;
    double pulse2 = 10e-6;
    double lead = 2e-6;
    double tail = 2e-6;
    double rf_power_dbm = 34.0;
    PullDownSpec pulldown;  // disabled
    SawDeviceSpec saw;
    SourceIvModel source;
    engine::SolverConfig solver;
    double envelope_dt = 0.5e-9;

    void validate() const;
    double duration() const { return lead + pulse1 + gap + pulse2 + tail; }
    double pulse1_start() const { return lead; }
    double pulse1_end() const { return lead + pulse1; }
    double pulse2_start() const { return lead + pulse1 + gap; }
    double pulse2_end() const { return lead + pulse1 + gap + pulse2; }
    DriveChain chain() const;
};

struct DptCircuit {
    engine::Circuit circuit;
    engine::Node link, drain, gate;
    int supply, c_link, inductor, fwd, c_j = -1;
    HemtStage dut;
    DriverStage driver;
    std::vector<engine::Probe> probes() const;
    std::vector<engine::EnergyMeter> meters() const;
};
DptCircuit build_dpt(const DptConfig& cfg, engine::TimeFunction emf);

struct BuckConfig {
    double v_in = 15.0;
    double l = 132e-6;
    double c_out = 4.2e-6;
    double r_load = 8.0;
    double r_supply = 0.05;  // assumed
    double f_sw = 50e3;
    double duty = 0.5;
    HemtSpec high_side;
    HemtSpec low_side;  // gate shorted to source
    PullDownSpec pulldown{.enabled = true};
    RectifierSpec rectifier{0.3, 72e-12, 385.0};
    double rf_power_dbm = 34.0;
    SawDeviceSpec saw;
    SourceIvModel source;
    engine::SolverConfig solver;
    double envelope_dt = 0.5e-9;
    int min_cycles = 40;
    int max_cycles = 200;
    double settle_tol = 1e-3;  // V change of the cycle-average output
    /// Textbook limit: lossless switches and a stiff gate source.
    bool ideal = false;
    double ideal_gate_voltage = 6.0;

    void validate() const;
    DriveChain chain() const;
};

struct BuckCircuit {
    engine::Circuit circuit;
    engine::Node vin, sw, out, gate;
    int supply, inductor, c_out, r_load, ideal_gate = -1;
    HemtStage high, low;
    std::optional<DriverStage> driver;
    std::vector<engine::Probe> probes() const;
    std::vector<engine::EnergyMeter> meters() const;
};
BuckCircuit build_buck(const BuckConfig& cfg, engine::TimeFunction gate_drive);

}  // namespace sawsim
