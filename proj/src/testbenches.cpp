#include "sawsim/testbenches.hpp"

#include "sawsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sawsim {

namespace {

Waveform command_pulses(const std::vector<std::pair<double, double>>& pulses, double duration, double dt) {
    return make_pulse_train(pulses, TimeGrid::covering(0.0, duration, dt));
}

double max_in(const Waveform& w, TimeWindow win) {
    double m = -1e300;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double t = w.grid().time(k);
        if (t >= win.start && t <= win.stop) m = std::max(m, w[k]);
    }
    if (m == -1e300) fail(ErrorKind::metric, "empty window for " + w.name());
    return m;
}

}  // namespace

// ------------------------------------------------------ characterization

void CharacterizationConfig::validate() const {
    saw.validate();
    source.validate();
    rectifier.validate();
    auto pos = [](double v, const char* key) {
        if (!(v > 0.0)) fail(ErrorKind::config, std::string("characterize.") + key + ": must be > 0");
    };
    pos(peak_output, "peak_output");
    pos(f_lo, "f_lo");
    pos(pulse_start, "pulse_start");
    pos(pulse_width, "pulse_width");
    pos(envelope_dt, "envelope_dt");
    pos(rectifier_dt, "rectifier_dt");
    if (!(f_hi > f_lo)) fail(ErrorKind::config, "characterize.f_hi: must exceed f_lo");
    if (sweep_points < 3) fail(ErrorKind::config, "characterize.sweep_points: must be >= 3");
    if (iv_points < 2) fail(ErrorKind::config, "characterize.iv_points: must be >= 2");
    if (!(duration > pulse_start + pulse_width))
        fail(ErrorKind::config, "characterize.duration: must cover the pulse");
}

EdgeRun run_edge(const CharacterizationConfig& cfg, double thermal_scale) {
    cfg.validate();
    DriveChain chain;
    chain.saw = cfg.saw;
    chain.source = cfg.source;
    chain.rectifier = cfg.rectifier;
    const double r_th = cfg.source.thevenin_resistance();
    chain.open_circuit_voltage = cfg.peak_output * (cfg.rectifier.r_bleed + r_th) / cfg.rectifier.r_bleed;
    chain.thermal_scale = thermal_scale;

    const SawDevice saw(cfg.saw);
    const double gain = std::abs(saw.transfer_function(saw.center_frequency()));
    const double pulse_end = cfg.pulse_start + cfg.pulse_width;
    const auto cmd = command_pulses({{cfg.pulse_start, pulse_end}}, cfg.duration, cfg.envelope_dt);
    const auto env = saw.filter_envelope(am_modulate(cmd, saw.center_frequency(), drive_emf(chain) / gain));
    RectifyOptions opt;
    opt.dt = cfg.rectifier_dt;
    Waveform v = rectify(env, cfg.rectifier, cfg.source, {}, opt).renamed("v_out");

    const TimeWindow rise{cfg.pulse_start, pulse_end};
    const TimeWindow fall{pulse_end, v.grid().end()};
    EdgeRun r{v, max_in(v, rise), rise_time_10_90(v, Edge::rising, rise), rise_time_10_90(v, Edge::falling, fall)};
    return r;
}

CharacterizationResult run_characterization(const CharacterizationConfig& cfg) {
    cfg.validate();
    const SawDevice saw(cfg.saw);
    CharacterizationResult r{saw.sweep(cfg.f_lo, cfg.f_hi, cfg.sweep_points), {}, run_edge(cfg), 0.0, 0.0, 0.0};

    const auto& s = r.sweep;
    std::vector<double> db(s.s21.size());
    for (std::size_t k = 0; k < db.size(); ++k) db[k] = 20.0 * std::log10(std::max(std::abs(s.s21[k]), 1e-300));
    const auto peak = static_cast<std::size_t>(std::max_element(db.begin(), db.end()) - db.begin());
    r.peak_freq = s.freqs[peak];
    r.peak_db = db[peak];
    const double level = r.peak_db - 3.0;
    auto edge = [&](int dir) {
        std::size_t k = peak;
        while (true) {
            if ((dir < 0 && k == 0) || (dir > 0 && k + 1 == db.size()))
                fail(ErrorKind::metric, "characterize: -3 dB point outside the sweep");
            const std::size_t j = dir < 0 ? k - 1 : k + 1;
            if (db[j] < level) {
                const double f = (db[k] - level) / (db[k] - db[j]);
                return s.freqs[k] + f * (s.freqs[j] - s.freqs[k]);
            }
            k = j;
        }
    };
    r.frac_bandwidth_3db = (edge(+1) - edge(-1)) / r.peak_freq;

    for (std::size_t k = 0; k < cfg.iv_points; ++k) {
        const double i = cfg.source.i_sc * static_cast<double>(k) / static_cast<double>(cfg.iv_points - 1);
        r.iv.push_back({i, source_voltage_at_load(cfg.source, i)});
    }
    return r;
}

std::vector<ThermalRow> run_thermal_sweep(const CharacterizationConfig& cfg, const std::vector<double>& kelvin,
                                          const std::vector<ThermalAnchor>& anchors) {
    std::vector<ThermalRow> rows;
    for (double t : kelvin) {
        const double s = thermal_output_scale(t, anchors);
        const auto e = run_edge(cfg, s);
        rows.push_back({t, s, e.peak, e.rise_time, e.fall_time, e.v_out});
    }
    return rows;
}

// ------------------------------------------------------------------- DPT

namespace {

struct Levels {
    double low;
    double peak;
};

Levels levels_in(const Waveform& w, TimeWindow win) {
    Levels l{1e300, -1e300};
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double t = w.grid().time(k);
        if (t < win.start || t > win.stop) continue;
        l.low = std::min(l.low, w[k]);
        l.peak = std::max(l.peak, w[k]);
    }
    if (!(l.peak > l.low)) fail(ErrorKind::metric, "no " + w.name() + " transition in window");
    return l;
}

// Crossing of `a` then `b` (levels in transition order) inside the window.
std::pair<double, double> crossing_pair(const Waveform& w, Edge dir, double a, double b, TimeWindow win) {
    const auto ta = first_crossing(w, a, dir, win.start);
    if (!ta || *ta > win.stop) fail(ErrorKind::metric, w.name() + ": transition start not found in window");
    const auto tb = first_crossing(w, b, dir, *ta);
    if (!tb || *tb > win.stop) fail(ErrorKind::metric, w.name() + ": transition end not found in window");
    return {*ta, *tb};
}

}  // namespace

double switching_time(const Waveform& v_ds, Edge dir, TimeWindow win) {
    const Levels l = levels_in(v_ds, win);
    // A second transition in the same direction makes the window ambiguous.
    const double mid = 0.5 * (l.low + l.peak);
    std::vector<double> candidates;
    double from = win.start;
    while (auto t = first_crossing(v_ds, mid, dir, from)) {
        if (*t > win.stop) break;
        candidates.push_back(*t);
        from = *t + v_ds.grid().dt;
    }
    if (candidates.size() > 1) {
        std::ostringstream os;
        os << "ambiguous " << v_ds.name() << " transition in [" << win.start << ", " << win.stop
           << "]: candidates at";
        for (double t : candidates) os << ' ' << t;
        fail(ErrorKind::metric, os.str());
    }
    // 10% and 90% of the peak value
    const double lo = 0.1 * l.peak, hi = 0.9 * l.peak;
    const auto [ta, tb] = dir == Edge::rising ? crossing_pair(v_ds, dir, lo, hi, win)
                                              : crossing_pair(v_ds, dir, hi, lo, win);
    return tb - ta;
}

double switching_energy(const Waveform& v_ds, const Waveform& i_ds, Edge dir, TimeWindow win) {
    const Levels l = levels_in(v_ds, win);
    const double lo = l.low + 0.01 * (l.peak - l.low), hi = l.low + 0.99 * (l.peak - l.low);
    const auto [ta, tb] = dir == Edge::rising ? crossing_pair(v_ds, dir, lo, hi, win)
                                              : crossing_pair(v_ds, dir, hi, lo, win);
    return integrate_product(v_ds, i_ds, {ta, tb});
}

double fitted_slope(const Waveform& w, TimeWindow win) {
    double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double t = w.grid().time(k);
        if (t < win.start || t > win.stop) continue;
        const double x = t - win.start;
        n += 1;
        st += x;
        sy += w[k];
        stt += x * x;
        sty += x * w[k];
    }
    const double den = n * stt - st * st;
    if (n < 3 || den <= 0.0) fail(ErrorKind::metric, "fitted_slope: fewer than 3 samples in window");
    return (n * sty - st * sy) / den;
}

SwitchingMetrics extract_switching_metrics(const engine::TraceSet& tr, const DptConfig& cfg) {
    const auto& v_ds = tr["v_ds"];
    const auto& i_ds = tr["i_ds"];
    const auto& v_gs = tr["v_gs"];
    const auto& i_l = tr["i_l"];

    const TimeWindow off{cfg.pulse1_end(), cfg.pulse1_end() + 0.5 * cfg.gap};
    const TimeWindow on{cfg.pulse2_start(), cfg.pulse2_start() + 0.5 * cfg.pulse2};

    SwitchingMetrics m{};
    m.t_off = switching_time(v_ds, Edge::rising, off);
    m.t_on = switching_time(v_ds, Edge::falling, on);
    m.e_off = switching_energy(v_ds, i_ds, Edge::rising, off);
    m.e_on = switching_energy(v_ds, i_ds, Edge::falling, on);
    m.di_dt = fitted_slope(i_ds, {cfg.pulse1_start() + 1e-6, cfg.pulse1_end() - 0.5e-6});
    m.freewheel_di_dt = fitted_slope(i_l, {cfg.pulse1_end() + 1e-6, cfg.pulse2_start() - 0.5e-6});

    const double t_gate = transition_crossings(v_gs, Edge::rising, 0.1, 0.9, on).first;
    m.i_at_second_turn_on = i_l.at(t_gate);
    m.overshoot_current = std::max(0.0, max_in(i_ds, {t_gate, t_gate + 1e-6}) - m.i_at_second_turn_on);
    return m;
}

DptResult run_dpt(const DptConfig& cfg) {
    cfg.validate();
    const auto cmd = command_pulses({{cfg.pulse1_start(), cfg.pulse1_end()}, {cfg.pulse2_start(), cfg.pulse2_end()}},
                                    cfg.duration(), cfg.envelope_dt);
    auto dpt = build_dpt(cfg, chain_emf(cfg.chain(), cmd));
    const engine::Engine eng(dpt.circuit, cfg.solver);
    engine::RunOptions opt;
    opt.duration = cfg.duration();
    opt.dt_out = cfg.solver.dt_fast;
    opt.all_fast = true;
    opt.probes = dpt.probes();
    opt.meters = dpt.meters();
    DptResult r{eng.run(opt), {}};
    r.metrics = extract_switching_metrics(r.traces, cfg);
    return r;
}

// ------------------------------------------------------------------ buck

BuckResult run_buck(const BuckConfig& cfg) {
    cfg.validate();
    const double period = 1.0 / cfg.f_sw;
    PwmSpec pwm;
    pwm.freq = cfg.f_sw;
    pwm.duty = cfg.duty;

    engine::TimeFunction drive;
    double delay = 0.0;
    if (cfg.ideal) {
        const double v = cfg.ideal_gate_voltage, on = cfg.duty * period, edge = 5e-9;
        drive = [=](double t) {
            double x = std::fmod(t, period);
            if (x < 0.0) x += period;
            if (x < edge) return v * x / edge;
            if (x < on) return v;
            if (x < on + edge) return v * (1.0 - (x - on) / edge);
            return 0.0;
        };
    } else {
        drive = periodic_chain_emf(cfg.chain(), pwm);
        delay = SawDevice(cfg.saw).group_delay();
    }

    auto buck = build_buck(cfg, drive);
    const engine::Engine eng(buck.circuit, cfg.solver);
    engine::State s = eng.initial_state(0.0);

    engine::RunOptions opt;
    opt.duration = period;
    opt.dt_out = cfg.solver.dt_slow;
    opt.probes = buck.probes();
    opt.meters = buck.meters();

    BuckResult r{};
    double last_mean = 0.0, last_il = 0.0;
    for (int cycle = 0;; ++cycle) {
        const double t0 = cycle * period;
        opt.fast_windows.clear();
        for (double edge : {t0 + delay, t0 + cfg.duty * period + delay})
            opt.fast_windows.push_back({edge - 0.2e-6, edge + 1.5e-6});
        r.traces = eng.run_from(s, opt);
        const double mean = r.traces["v_out"].mean();
        const double il = r.traces["i_l"].samples().back();
        const double change = std::abs(mean - last_mean);
        const bool settled =
            cycle + 1 >= cfg.min_cycles && change < cfg.settle_tol && std::abs(il - last_il) < cfg.settle_tol;
        last_mean = mean;
        last_il = il;
        if (settled) {
            r.cycles = cycle + 1;
            break;
        }
        if (cycle + 1 >= cfg.max_cycles)
            fail(ErrorKind::solver, "buck: no periodic steady state within " + std::to_string(cfg.max_cycles) +
                                        " cycles (last change " + std::to_string(change) + " V)");
    }

    const auto& tr = r.traces;
    const auto& i_l = tr["i_l"].samples();
    const auto [lo, hi] = std::minmax_element(i_l.begin(), i_l.end());
    r.ripple = *hi - *lo;
    r.v_out = tr["v_out"].mean();
    r.avg_inductor_voltage = tr["v_sw"].mean() - r.v_out;

    auto per_cycle = [&](const char* name) { return tr[name].samples().back() / period; };
    r.p_in = -per_cycle("e_supply");
    r.p_out = per_cycle("e_load");
    r.loss_high = per_cycle("e_high");
    r.loss_low = per_cycle("e_low");
    r.loss_driver = per_cycle("e_driver");
    const double storage = per_cycle("e_inductor") + per_cycle("e_c_out");
    r.p_rf = cfg.ideal ? 0.0 : 1e-3 * std::pow(10.0, cfg.rf_power_dbm / 10.0);
    r.efficiency = r.p_out / r.p_in;
    r.efficiency_with_rf = r.p_out / (r.p_in + r.p_rf);
    r.audit_error = std::abs(r.p_in - r.p_out - r.loss_high - r.loss_low - r.loss_driver - storage) / r.p_in;
    return r;
}

}  // namespace sawsim
