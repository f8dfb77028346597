#include "sawsim/power_devices.hpp"

#include "sawsim/error.hpp"
#include "knee.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sawsim {

namespace {

void require(bool ok, const char* prefix, const char* field, const char* what) {
    if (!ok) fail(ErrorKind::config, std::string(prefix) + "." + field + ": " + what);
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double logistic(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

void HemtSpec::validate(const char* p) const {
    require(v_th > 0.0, p, "v_th", "must be > 0");
    require(g_m > 0.0, p, "g_m", "must be > 0");
    require(r_on > 0.0, p, "r_on", "must be > 0");
    require(c_gs > 0.0, p, "c_gs", "must be > 0");
    require(c_gd_high_vds > 0.0, p, "c_gd_high_vds", "must be > 0");
    require(c_gd_low_vds >= c_gd_high_vds, p, "c_gd_low_vds", "must be >= c_gd_high_vds");
    require(c_gd_crossover > 0.0, p, "c_gd_crossover", "must be > 0");
    require(c_gd_blend > 0.0, p, "c_gd_blend", "must be > 0");
    require(c_ds > 0.0, p, "c_ds", "must be > 0");
    require(reverse_offset >= 0.0, p, "reverse_offset", "must be >= 0");
    require(reverse_slope > 0.0, p, "reverse_slope", "must be > 0");
    require(knee > 0.0, p, "knee", "must be > 0");
}

void DiodeSpec::validate(const char* p) const {
    require(v_f >= 0.0, p, "v_f", "must be >= 0");
    require(r_s >= 0.0, p, "r_s", "must be >= 0");
    require(c_j >= 0.0, p, "c_j", "must be >= 0");
}

ChannelDerivatives hemt_channel_eval(const HemtSpec& s, double v_gs, double v_ds) {
    using detail::ramp;
    const auto ov = ramp(v_gs - s.v_th, detail::knee_volts);
    const double i_sat = s.g_m * ov.y;
    const double di_sat = s.g_m * ov.dy;

    if (v_ds >= 0.0) {
        const double v_sat = i_sat * s.r_on;
        const double half = 0.5 * s.knee;
        const bool small = v_sat < half;
        const double k = small ? v_sat : half;
        if (v_ds <= v_sat - k) return {v_ds / s.r_on, 0.0, 1.0 / s.r_on};
        if (v_ds >= v_sat + k) return {i_sat, di_sat, 0.0};
        // quadratic blend; k > 0 here because v_sat - k < v_ds < v_sat + k
        const double u = v_ds - v_sat + k;
        const double i = v_ds / s.r_on - u * u / (4.0 * k * s.r_on);
        const double d_vds = 1.0 / s.r_on - u / (2.0 * k * s.r_on);
        const double d_vgs = small ? di_sat * v_ds * v_ds / (4.0 * v_sat * v_sat)
                                   : u * di_sat / (2.0 * k);
        return {i, d_vgs, d_vds};
    }

    // third quadrant: current flows source -> drain, magnitudes below
    const double neg = -v_ds;
    // ohmic path capped by the channel: min(neg/r_on, i_sat)
    const auto cut = ramp(neg / s.r_on - i_sat, detail::knee_amps);
    const double ohm = neg / s.r_on - cut.y;
    const double ohm_dneg = (1.0 - cut.dy) / s.r_on;
    const double ohm_dvgs = cut.dy * di_sat;

    const auto gate = ramp(s.reverse_offset - v_gs, detail::knee_volts);
    const auto br = ramp(neg - gate.y, detail::knee_volts);
    const double tq = br.y / s.reverse_slope;
    const double tq_dneg = br.dy / s.reverse_slope;
    const double tq_dvgs = br.dy * gate.dy / s.reverse_slope;

    // larger of the two paths
    const auto up = ramp(tq - ohm, detail::knee_amps);
    const double mag = ohm + up.y;
    const double d_neg = ohm_dneg + up.dy * (tq_dneg - ohm_dneg);
    const double d_vgs = ohm_dvgs + up.dy * (tq_dvgs - ohm_dvgs);
    return {-mag, -d_vgs, d_neg};
}

double hemt_channel_current(const HemtSpec& spec, double v_gs, double v_ds) {
    return hemt_channel_eval(spec, v_gs, v_ds).current;
}

double hemt_gd_charge(const HemtSpec& s, double v_dg) {
    const double w = s.c_gd_blend;
    const double x = s.c_gd_crossover;
    return s.c_gd_high_vds * v_dg +
           (s.c_gd_low_vds - s.c_gd_high_vds) * w * (softplus(x / w) - softplus((x - v_dg) / w));
}

double hemt_gd_capacitance(const HemtSpec& s, double v_dg) {
    return s.c_gd_high_vds +
           (s.c_gd_low_vds - s.c_gd_high_vds) * logistic((s.c_gd_crossover - v_dg) / s.c_gd_blend);
}

double hemt_gate_charge(const HemtSpec& spec, GateState st) {
    return spec.c_gs * st.v_gs - hemt_gd_charge(spec, st.v_ds - st.v_gs);
}

GateState hemt_gate_charge_step(const HemtSpec& spec, GateState state, double i_gate,
                                double dv_ds_dt, double dt) {
    const double target = hemt_gate_charge(spec, state) + i_gate * dt;
    GateState next{state.v_gs, state.v_ds + dv_ds_dt * dt};
    // Q_g is strictly increasing in v_gs (slope C_gs + C_gd), Newton converges fast
    for (int it = 0; it < 100; ++it) {
        const double r = hemt_gate_charge(spec, next) - target;
        const double slope = spec.c_gs + hemt_gd_capacitance(spec, next.v_ds - next.v_gs);
        const double dv = r / slope;
        next.v_gs -= dv;
        if (std::abs(dv) < 1e-13 * (1.0 + std::abs(next.v_gs))) break;
    }
    return next;
}

double diode_current(const DiodeSpec& spec, double v) {
    if (v <= spec.v_f) return 0.0;
    if (spec.r_s == 0.0)
        fail(ErrorKind::range, "diode_current: r_s = 0 above the knee is ideal-switch mode");
    return (v - spec.v_f) / spec.r_s;
}

}  // namespace sawsim
