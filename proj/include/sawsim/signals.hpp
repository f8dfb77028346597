#pragma once

// Time grids, real waveforms and complex baseband envelopes shared by every
// testbench, plus the handful of waveform metrics the scenarios report.

#include <complex>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace sawsim {

using Complex = std::complex<double>;

/// Uniform sampling grid: t_k = t0 + k*dt, k = 0..n-1.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 1e-9;
    std::size_t n = 2;

    TimeGrid() = default;
    TimeGrid(double t0_, double dt_, std::size_t n_);

    /// Grid covering [t0, t0 + duration] inclusive.
    static TimeGrid covering(double t0, double duration, double dt);

    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double duration() const { return static_cast<double>(n - 1) * dt; }
    double end() const { return time(n - 1); }

    bool same_as(const TimeGrid& other) const;
};

enum class Unit { volt, ampere, watt, joule, dimensionless };

/// Short unit symbol used in CSV headers ("V", "A", "W", "J", "1").
const char* unit_symbol(Unit u);

class Waveform {
public:
    Waveform(TimeGrid grid, std::vector<double> samples, Unit unit, std::string name = "w");

    const TimeGrid& grid() const { return grid_; }
    std::span<const double> samples() const { return samples_; }
    Unit unit() const { return unit_; }
    const std::string& name() const { return name_; }
    std::size_t size() const { return samples_.size(); }
    double operator[](std::size_t k) const { return samples_[k]; }

    /// Linear interpolation; clamps outside the grid.
    double at(double t) const;
    double mean() const;

    Waveform renamed(std::string name) const;

private:
    TimeGrid grid_;
    std::vector<double> samples_;
    Unit unit_;
    std::string name_;
};

class ComplexEnvelope {
public:
    ComplexEnvelope(TimeGrid grid, double carrier_freq, std::vector<Complex> samples);

    const TimeGrid& grid() const { return grid_; }
    double carrier_freq() const { return carrier_; }
    std::span<const Complex> samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }

    /// Instantaneous RF amplitude |s(t)| on the envelope grid.
    std::vector<double> magnitude() const;

    ComplexEnvelope scaled(double k) const;

private:
    TimeGrid grid_;
    double carrier_;
    std::vector<Complex> samples_;
};

struct PwmSpec {
    double freq = 10e3;
    double duty = 0.5;
    double high_level = 1.0;
    double low_level = 0.0;
    double edge_time = 0.0;  // linear ramp of the baseband command
    double phase = 0.0;      // time of the first rising edge relative to t0
};

Waveform make_pwm(const PwmSpec& spec, const TimeGrid& grid);

/// One or more rectangular pulses: each (start, stop) interval is high.
Waveform make_pulse_train(const std::vector<std::pair<double, double>>& pulses,
                          const TimeGrid& grid, double edge_time = 0.0);

/// Full on-off keying of a carrier. The command must lie in [0, 1].
ComplexEnvelope am_modulate(const Waveform& command, double carrier_freq,
                            double amplitude_at_high);

enum class Edge { rising, falling };

struct TimeWindow {
    double start;
    double stop;
};

/// 10%-90% transition time of the first transition in the window, measured
/// against the excursion from the initial baseline to the settled plateau
/// (median of the last 5% of the window). Crossings are linearly
/// interpolated between samples.
double rise_time_10_90(const Waveform& w, Edge direction,
                       std::optional<TimeWindow> window = std::nullopt);

/// Generalized crossing-based transition time between fractions lo and hi
/// of the excursion. Returns {t_lo, t_hi}.
std::pair<double, double> transition_crossings(const Waveform& w, Edge direction,
                                               double lo, double hi,
                                               std::optional<TimeWindow> window = std::nullopt);

/// First time in [from, ...) at which w crosses `level` in the given
/// direction, linearly interpolated. nullopt when absent.
std::optional<double> first_crossing(const Waveform& w, double level, Edge direction,
                                     double from = -1e300);

/// Trapezoidal integral of v*i over the window (endpoints interpolated).
double integrate_product(const Waveform& v, const Waveform& i, TimeWindow window);

/// Trapezoidal integral of w over the window.
double integrate(const Waveform& w, TimeWindow window);

/// CSV with header `t_s,<name>_<unit>,...`, scientific notation, 9 significant
/// digits. All waveforms must share one grid.
void write_csv(std::ostream& os, std::span<const Waveform> traces);
void write_csv(const std::string& path, std::span<const Waveform> traces);

}  // namespace sawsim
