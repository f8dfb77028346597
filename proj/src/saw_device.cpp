#include "sawsim/saw_device.hpp"

#include "sawsim/error.hpp"
#include "sawsim/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace sawsim {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

void require(bool ok, const char* field, const char* what) {
    if (!ok) fail(ErrorKind::config, std::string("saw.") + field + ": " + what);
}

void check_table(const std::vector<TablePoint>& t, const char* field, bool decreasing) {
    require(!t.empty(), field, "table is empty");
    for (std::size_t i = 0; i < t.size(); ++i) {
        require(t[i].gap_mm > 0.0 && t[i].value > 0.0, field, "entries must be positive");
        if (i == 0) continue;
        require(t[i].gap_mm > t[i - 1].gap_mm, field, "gaps must be strictly increasing");
        require(decreasing ? t[i].value < t[i - 1].value : t[i].value > t[i - 1].value, field,
                decreasing ? "values must strictly decrease with gap" : "values must strictly increase with gap");
    }
}

// Bracketing segment of a gap table; refuses extrapolation.
std::size_t table_segment(const std::vector<TablePoint>& t, double gap, const char* what) {
    const double tol = 1e-12 * std::max(1.0, std::abs(gap));
    if (gap < t.front().gap_mm - tol || gap > t.back().gap_mm + tol)
        fail(ErrorKind::range, std::string(what) + ": gap outside table range, extrapolation refused");
    std::size_t i = 0;
    while (i + 2 < t.size() && gap > t[i + 1].gap_mm) ++i;
    return i;
}

}  // namespace

void SawDeviceSpec::validate() const {
    require(pitch_um > 0.0, "pitch_um", "must be > 0");
    require(pairs > 0, "pairs", "must be > 0");
    require(aperture_um > 0.0, "aperture_um", "must be > 0");
    require(gap_mm >= 0.0, "gap_mm", "must be >= 0");
    require(saw_velocity > 0.0, "saw_velocity", "must be > 0");
    require(peak_transmission_db <= 0.0, "peak_transmission_db", "must be <= 0 dB");
    require(frac_bandwidth > 0.0 && frac_bandwidth < 1.0, "frac_bandwidth", "must be in (0,1)");
    require(prop_loss_db_per_mm >= 0.0, "prop_loss_db_per_mm", "must be >= 0");
    require(k2 > 0.0 && k2 < 1.0, "k2", "must be in (0,1)");
    require(coercive_field_v_per_um > 0.0, "coercive_field_v_per_um", "must be > 0");
    require(max_input_power_w > 0.0, "max_input_power_w", "must be > 0");
    check_table(isolation_cap_pf, "isolation_cap_pf", true);
    check_table(breakdown_kv, "breakdown_kv", false);
}

double center_frequency(const SawDeviceSpec& spec) {
    return spec.saw_velocity / acoustic_wavelength(spec);
}

double acoustic_wavelength(const SawDeviceSpec& spec) { return 2.0 * spec.pitch_um * 1e-6; }

double delay(const SawDeviceSpec& spec) { return spec.gap_mm * 1e-3 / spec.saw_velocity; }

double sinc2_half_power_point() {
    static const double x3 = [] {
        const double target = std::pow(0.5, 0.25);
        double lo = 0.0, hi = 1.0;  // sinc decreasing on [0, 1]
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (sinc(mid) > target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }();
    return x3;
}

void TwoPortSweep::validate() const {
    if (freqs.size() != s21.size()) fail(ErrorKind::config, "TwoPortSweep: freqs/s21 size mismatch");
    if (freqs.empty()) fail(ErrorKind::config, "TwoPortSweep: empty sweep");
    if (!(z0 > 0.0)) fail(ErrorKind::config, "TwoPortSweep: reference impedance must be > 0");
    for (std::size_t i = 1; i < freqs.size(); ++i)
        if (!(freqs[i] > freqs[i - 1])) fail(ErrorKind::config, "TwoPortSweep: freqs must increase");
    for (const auto& s : s21)
        if (std::abs(s) > 1.0 + 1e-12) fail(ErrorKind::config, "TwoPortSweep: |S21| > 1 (active)");
}

SawDevice::SawDevice(SawDeviceSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    fc_ = sawsim::center_frequency(spec_);
    tau_ = sawsim::delay(spec_);
    // -3 dB half-bandwidth frac*fc/2 maps onto the sinc^2 half-power point.
    width_ = spec_.frac_bandwidth * fc_ / (2.0 * sinc2_half_power_point());
    peak_gain_ = std::pow(10.0, spec_.peak_transmission_db / 20.0);
}

Complex SawDevice::transfer_function(double f) const {
    // The calibration anchor is the device-level peak; propagation loss
    // is folded into it (A_peak = peak / loss), so the product is the anchor.
    const double loss = std::pow(10.0, -spec_.prop_loss_db_per_mm * spec_.gap_mm / 20.0);
    const double a_peak = peak_gain_ / loss;
    const double s = sinc((f - fc_) / width_);
    const double mag = a_peak * s * s * loss;
    return std::polar(mag, -2.0 * kPi * f * group_delay());
}

TwoPortSweep SawDevice::sweep(const std::vector<double>& freqs) const {
    TwoPortSweep out;
    out.freqs = freqs;
    out.s21.reserve(freqs.size());
    for (double f : freqs) out.s21.push_back(transfer_function(f));
    out.validate();
    return out;
}

TwoPortSweep SawDevice::sweep(double f_lo, double f_hi, std::size_t points) const {
    if (points < 2 || !(f_hi > f_lo) || !(f_lo > 0.0))
        fail(ErrorKind::config, "sweep: need f_hi > f_lo > 0 and >= 2 points");
    std::vector<double> f(points);
    for (std::size_t i = 0; i < points; ++i)
        f[i] = f_lo + (f_hi - f_lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return sweep(f);
}

ComplexEnvelope SawDevice::filter_envelope(const ComplexEnvelope& in) const {
    const double fcar = in.carrier_freq();
    if (fcar < 0.5 * fc_ || fcar > 1.5 * fc_)
        fail(ErrorKind::range, "filter_envelope: carrier outside [0.5 fc, 1.5 fc]");
    const TimeGrid& g = in.grid();
    const double dt = g.dt;
    const double detune = fc_ - fcar;
    if (width_ * dt > 0.125 || std::abs(detune) * dt > 0.125)
        fail(ErrorKind::resolution, "filter_envelope: envelope grid too coarse for the passband");

    // h(t) = A W tri(W (t - tc)) exp(i 2 pi detune (t - tc)) exp(-i 2 pi fcar tc)
    const double tc = group_delay();
    const double t_first = tau_;
    const double t_last = tau_ + 2.0 / width_;
    const auto k_first = static_cast<std::size_t>(std::ceil(t_first / dt - 1e-9));
    const auto k_last = static_cast<std::size_t>(std::floor(t_last / dt + 1e-9));
    const std::size_t taps = k_last - k_first + 1;

    std::vector<double> tri(taps);
    double area = 0.0;
    for (std::size_t j = 0; j < taps; ++j) {
        const double t = static_cast<double>(k_first + j) * dt;
        tri[j] = std::max(0.0, 1.0 - std::abs(width_ * (t - tc)));
        area += tri[j];
    }
    // exact unit DC gain of the discrete triangle
    const double norm = 1.0 / area;

    std::vector<double> h_re(taps), h_im(taps);
    const Complex rot = std::polar(peak_gain_, -2.0 * kPi * fcar * tc);
    for (std::size_t j = 0; j < taps; ++j) {
        const double t = static_cast<double>(k_first + j) * dt;
        const Complex h = rot * std::polar(tri[j] * norm, 2.0 * kPi * detune * (t - tc));
        h_re[j] = h.real();
        h_im[j] = h.imag();
    }

    const auto x = in.samples();
    std::vector<double> x_re(x.size()), x_im(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        x_re[k] = x[k].real();
        x_im[k] = x[k].imag();
    }
    const std::size_t ny = x.size() + taps - 1;
    std::vector<double> y_re(ny), y_im(ny);
    kernels::convolve_complex({h_re, h_im}, {x_re, x_im}, {y_re, y_im});

    std::vector<Complex> out(x.size() + k_last, Complex{});
    for (std::size_t n = 0; n < ny; ++n) out[n + k_first] = Complex(y_re[n], y_im[n]);
    const TimeGrid grid(g.t0, dt, out.size());
    return ComplexEnvelope(grid, fcar, std::move(out));
}

double SawDevice::isolation_capacitance(double gap_mm) const {
    const auto& t = spec_.isolation_cap_pf;
    const std::size_t i = table_segment(t, gap_mm, "isolation_capacitance");
    for (const auto& p : t)
        if (p.gap_mm == gap_mm) return p.value;
    const auto& a = t[i];
    const auto& b = t[i + 1];
    const double f = (gap_mm - a.gap_mm) / (b.gap_mm - a.gap_mm);
    return std::exp(std::log(a.value) + f * (std::log(b.value) - std::log(a.value)));
}

double SawDevice::breakdown_voltage(double gap_mm) const {
    const auto& t = spec_.breakdown_kv;
    const std::size_t i = table_segment(t, gap_mm, "breakdown_voltage");
    for (const auto& p : t)
        if (p.gap_mm == gap_mm) return p.value;
    const auto& a = t[i];
    const auto& b = t[i + 1];
    return a.value + (gap_mm - a.gap_mm) / (b.gap_mm - a.gap_mm) * (b.value - a.value);
}

SawDevice::InputRating SawDevice::max_input_voltage() const {
    return {spec_.coercive_field_v_per_um * spec_.pitch_um, spec_.max_input_power_w};
}

CapacitanceExtraction extract_isolation_capacitance(const TwoPortSweep& sweep,
                                                    std::pair<double, double> band,
                                                    std::optional<std::pair<double, double>> passband) {
    sweep.validate();
    const auto [f_lo, f_hi] = band;
    if (!(f_hi > f_lo)) fail(ErrorKind::config, "extract_isolation_capacitance: empty band");
    if (f_lo < sweep.freqs.front() || f_hi > sweep.freqs.back())
        fail(ErrorKind::range, "extract_isolation_capacitance: band outside sweep range");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < sweep.freqs.size(); ++i) {
        const double f = sweep.freqs[i];
        if (f < f_lo || f > f_hi) continue;
        const Complex s = sweep.s21[i];
        const Complex y = s / (2.0 * sweep.z0 * (1.0 - s));
        sum += y.imag() / (2.0 * kPi * f);
        ++count;
    }
    if (count == 0) fail(ErrorKind::metric, "extract_isolation_capacitance: no sweep points in band");
    bool overlap = false;
    if (passband) overlap = f_lo < passband->second && f_hi > passband->first;
    return {sum / static_cast<double>(count) * 1e12, overlap};
}

TwoPortSweep synthesize_series_capacitor(double capacitance_f, const std::vector<double>& freqs, double z0) {
    if (capacitance_f < 0.0) fail(ErrorKind::config, "synthesize_series_capacitor: C must be >= 0");
    TwoPortSweep out;
    out.freqs = freqs;
    out.z0 = z0;
    for (double f : freqs) {
        // S21 = 2 Z0 / (2 Z0 + Z), Z = 1/(j w C); written in admittance form
        const Complex y(0.0, 2.0 * kPi * f * capacitance_f);
        out.s21.push_back(2.0 * z0 * y / (1.0 + 2.0 * z0 * y));
    }
    out.validate();
    return out;
}

void write_touchstone(std::ostream& os, const TwoPortSweep& sweep) {
    os << "! S21 only: freq_Hz Re(S21) Im(S21)\n";
    char buf[96];
    std::snprintf(buf, sizeof buf, "# Hz S RI R %g\n", sweep.z0);
    os << buf;
    for (std::size_t i = 0; i < sweep.freqs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.8e %.8e %.8e\n", sweep.freqs[i], sweep.s21[i].real(),
                      sweep.s21[i].imag());
        os << buf;
    }
}

void write_sweep_csv(std::ostream& os, const TwoPortSweep& sweep) {
    os << "f_Hz,s21_re,s21_im,s21_db\n";
    char buf[128];
    for (std::size_t i = 0; i < sweep.freqs.size(); ++i) {
        const double p = std::norm(sweep.s21[i]);
        std::snprintf(buf, sizeof buf, "%.8e,%.8e,%.8e,%.8e\n", sweep.freqs[i], sweep.s21[i].real(),
                      sweep.s21[i].imag(), p > 0.0 ? 10.0 * std::log10(p) : -400.0);
        os << buf;
    }
}

std::vector<ThermalAnchor> default_thermal_anchors() {
    const double cryo = 5.6 / 4.5;
    // Above 473 K the output degrades; the 550 K value is an assumed endpoint.
    return {{0.5, cryo}, {0.535, cryo}, {290.0, 1.0}, {473.0, 1.0}, {550.0, 0.85}};
}

double thermal_output_scale(double kelvin, const std::vector<ThermalAnchor>& a) {
    if (a.size() < 2) fail(ErrorKind::config, "thermal anchors: need at least two points");
    if (kelvin < a.front().kelvin || kelvin > a.back().kelvin)
        fail(ErrorKind::range, "thermal_output_scale: temperature outside model range");
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (!(a[i].kelvin > a[i - 1].kelvin)) fail(ErrorKind::config, "thermal anchors must increase in T");
        if (a[i].scale > a[i - 1].scale) fail(ErrorKind::config, "thermal anchors must be non-increasing");
    }
    std::size_t i = 0;
    while (i + 2 < a.size() && kelvin > a[i + 1].kelvin) ++i;
    if (kelvin == a[i].kelvin) return a[i].scale;
    if (kelvin == a[i + 1].kelvin) return a[i + 1].scale;
    const double f = (kelvin - a[i].kelvin) / (a[i + 1].kelvin - a[i].kelvin);
    return a[i].scale + f * (a[i + 1].scale - a[i].scale);
}

}  // namespace sawsim
