#pragma once

// Behavioral switching devices: a three-region GaN HEMT with a two-level
// gate-drain capacitance, and a piecewise-linear Schottky diode.

namespace sawsim {

struct HemtSpec {
    double v_th = 1.7;
    double g_m = 0.88;          // S, saturation transconductance
    double r_on = 0.15;
    double c_gs = 260e-12;
    double c_gd_low_vds = 290e-12;
    double c_gd_high_vds = 4e-12;
    double c_gd_crossover = 3.5;   // V
    double c_gd_blend = 0.5;       // V, width of the smooth step between levels
    double c_ds = 25e-12;
    double reverse_offset = 1.7;
    double reverse_slope = 3.24;   // ohm
    double knee = 0.05;            // V, ohmic/saturation blend width

    void validate(const char* prefix = "hemt") const;
};

struct DiodeSpec {
    double v_f = 1.0;
    double r_s = 0.1;
    double c_j = 0.0;

    void validate(const char* prefix = "diode") const;
};

/// Drain-to-source channel current. Zero for v_gs <= v_th and v_ds >= 0.
/// Forward: min(g_m (v_gs - v_th), v_ds / r_on) with a C1 quadratic blend
/// over the knee. Reverse (v_ds < 0): the larger of the gate-enhanced ohmic
/// path and the third-quadrant path (-v_ds - max(0, offset - v_gs)) / slope,
/// returned as a negative current.
double hemt_channel_current(const HemtSpec& spec, double v_gs, double v_ds);

struct ChannelDerivatives {
    double current;
    double d_vgs;
    double d_vds;
};
ChannelDerivatives hemt_channel_eval(const HemtSpec& spec, double v_gs, double v_ds);

/// Gate-drain charge as a function of v_dg = v_d - v_g; capacitance steps
/// smoothly from c_gd_low_vds (below crossover) to c_gd_high_vds. q(0) = 0.
double hemt_gd_charge(const HemtSpec& spec, double v_dg);
double hemt_gd_capacitance(const HemtSpec& spec, double v_dg);

struct GateState {
    double v_gs = 0.0;
    double v_ds = 0.0;
};

/// Advances the gate node by one implicit step. The drain is driven
/// externally at dv_ds_dt; gate current i_gate flows into the gate.
/// Charge balance: i_gate dt = C_gs dv_gs - [q_gd(v_dg') - q_gd(v_dg)].
GateState hemt_gate_charge_step(const HemtSpec& spec, GateState state, double i_gate,
                                double dv_ds_dt, double dt);

/// Total gate charge referenced to the source: C_gs v_gs - q_gd(v_dg).
double hemt_gate_charge(const HemtSpec& spec, GateState state);

/// Piecewise-linear conduction current (v - v_f) / r_s above the knee.
/// r_s == 0 above the knee is the ideal-switch case and is rejected here.
double diode_current(const DiodeSpec& spec, double v);

}  // namespace sawsim
