#pragma once

// Behavioral two-port model of the SAW delay line.
//
// Magnitude follows the uniform-IDT delta-function shape |H| ~ sinc^2 with
// the width pinned to a target -3 dB fractional bandwidth. The impulse
// response of a sinc^2 band is a triangle of base 2/W; it is placed so that
// it starts exactly one acoustic transit (gap / velocity) after the input,
// which makes the model causal.

#include "sawsim/signals.hpp"

#include <optional>
#include <ostream>
#include <utility>
#include <vector>

namespace sawsim {

struct TablePoint {
    double gap_mm;
    double value;
};

struct SawDeviceSpec {
    double pitch_um = 8.55;
    int pairs = 20;
    double aperture_um = 500.0;
    double gap_mm = 1.25;
    double saw_velocity = 3813.3;  // m/s; back-solved from 8.55 um / 223 MHz
    double peak_transmission_db = -5.12;
    double frac_bandwidth = 0.10;
    double prop_loss_db_per_mm = 0.2;
    double k2 = 0.053;
    double coercive_field_v_per_um = 20.0;
    double max_input_power_w = 10.0;
    std::vector<TablePoint> isolation_cap_pf = {{1.25, 0.032}};
    // The 1.0 mm entry is an assumed value consistent with "exceeding 2.7 kV".
    std::vector<TablePoint> breakdown_kv = {{1.0, 2.72}, {1.25, 2.75}};

    /// Throws ErrorKind::config naming the offending field.
    void validate() const;
};

double center_frequency(const SawDeviceSpec& spec);
double acoustic_wavelength(const SawDeviceSpec& spec);
/// Acoustic transit time across the IDT-to-IDT gap.
double delay(const SawDeviceSpec& spec);

struct TwoPortSweep {
    std::vector<double> freqs;
    std::vector<Complex> s21;
    double z0 = 50.0;

    void validate() const;
};

class SawDevice {
public:
    explicit SawDevice(SawDeviceSpec spec);

    const SawDeviceSpec& spec() const { return spec_; }
    double center_frequency() const { return fc_; }
    double delay() const { return tau_; }
    /// Width W of the sinc^2 magnitude, |H| ~ sinc^2((f - fc) / W).
    double sinc_width() const { return width_; }
    /// Group delay of the linear-phase response (transit + half the triangle).
    double group_delay() const { return tau_ + 1.0 / width_; }
    /// Linear amplitude at the passband center, 10^(peak_db/20).
    double peak_gain() const { return peak_gain_; }

    Complex transfer_function(double f) const;

    TwoPortSweep sweep(const std::vector<double>& freqs) const;
    TwoPortSweep sweep(double f_lo, double f_hi, std::size_t points) const;

    /// Baseband-equivalent filtering, H_env(f) = H(f + carrier). The output
    /// grid starts at the input t0 and extends by the filter tail.
    ComplexEnvelope filter_envelope(const ComplexEnvelope& in) const;

    /// Log-linear interpolation of the isolation-capacitance table [pF].
    double isolation_capacitance(double gap_mm) const;
    /// Linear interpolation of the breakdown table [kV].
    double breakdown_voltage(double gap_mm) const;

    struct InputRating {
        double peak_voltage;  // V, coercive field across one electrode pitch
        double max_power;     // W
    };
    InputRating max_input_voltage() const;

private:
    SawDeviceSpec spec_;
    double fc_;
    double tau_;
    double width_;
    double peak_gain_;
};

/// sinc(x)^2 half-width: the x at which sinc(x)^4 = 1/2 (-3 dB in power for
/// an amplitude response of sinc^2). Solved by bisection.
double sinc2_half_power_point();

struct CapacitanceExtraction {
    double capacitance_pf;
    bool overlaps_passband;
};

/// Isolation capacitance from S21 of a series-element two-port:
/// Y = S21 / (2 Z0 (1 - S21)), C(f) = Im{Y} / (2 pi f), averaged over band.
CapacitanceExtraction extract_isolation_capacitance(
    const TwoPortSweep& sweep, std::pair<double, double> band = {80e6, 85e6},
    std::optional<std::pair<double, double>> passband = std::nullopt);

/// S21 of an ideal series capacitor between two z0 ports.
TwoPortSweep synthesize_series_capacitor(double capacitance_f, const std::vector<double>& freqs,
                                         double z0 = 50.0);

/// Touchstone-style text: option line then `freq_Hz Re(S21) Im(S21)`.
void write_touchstone(std::ostream& os, const TwoPortSweep& sweep);
/// CSV: `f_Hz,s21_re,s21_im,s21_db`.
void write_sweep_csv(std::ostream& os, const TwoPortSweep& sweep);

/// Temperature scaling of the chain output amplitude, anchored to 1 at
/// 294.7 K. Piecewise linear in T over the anchor table.
struct ThermalAnchor {
    double kelvin;
    double scale;
};
std::vector<ThermalAnchor> default_thermal_anchors();
double thermal_output_scale(double kelvin,
                            const std::vector<ThermalAnchor>& anchors = default_thermal_anchors());

}  // namespace sawsim
