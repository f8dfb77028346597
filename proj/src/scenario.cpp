#include "sawsim/scenario.hpp"

#include "sawsim/testbenches.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace sawsim {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::resolution:
        case ErrorKind::range: return 2;
        case ErrorKind::solver: return 3;
        case ErrorKind::metric: return 4;
        case ErrorKind::io: return 1;
    }
    return 1;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

// Writes one trace CSV and folds its bytes into the run hash.
struct TraceWriter {
    fs::path dir;
    std::uint64_t hash = fnv1a64("");

    void write(const std::string& file, std::span<const Waveform> traces) {
        std::ostringstream os;
        write_csv(os, traces);
        const std::string text = os.str();
        hash = fnv1a64(file, hash);
        hash = fnv1a64(text, hash);
        write_text(dir / file, text);
    }
};

std::string format_metrics(const Metrics& m) {
    std::string s;
    for (const auto& [k, v] : m) s += k + " = " + num(v) + "\n";
    return s;
}

Metrics run_characterize(const ScenarioConfig& cfg, TraceWriter& tw) {
    const auto cc = cfg.resolved_characterize();
    const auto r = run_characterization(cc);
    {
        std::ostringstream os;
        write_sweep_csv(os, r.sweep);
        write_text(tw.dir / "s21.csv", os.str());
    }
    {
        std::ostringstream os;
        write_touchstone(os, r.sweep);
        write_text(tw.dir / "s21.s2p", os.str());
    }
    {
        std::string s = "current_A,voltage_V\n";
        char buf[64];
        for (const auto& p : r.iv) {
            std::snprintf(buf, sizeof buf, "%.8e,%.8e\n", p.current, p.voltage);
            s += buf;
        }
        write_text(tw.dir / "iv.csv", s);
    }
    const Waveform traces[] = {r.edge.v_out};
    tw.write("traces.csv", traces);

    const SawDevice dev(cc.saw);
    return {{"peak_freq_hz", r.peak_freq},
            {"peak_db", r.peak_db},
            {"frac_bandwidth_3db", r.frac_bandwidth_3db},
            {"group_delay_s", dev.group_delay()},
            {"iv_open_circuit_v", r.iv.front().voltage},
            {"iv_short_circuit_a", r.iv.back().current},
            {"iv_midpoint_v", source_voltage_at_load(cc.source, 0.5 * cc.source.i_sc)},
            {"isolation_cap_pf", dev.isolation_capacitance(cc.saw.gap_mm)},
            {"output_peak_v", r.edge.peak},
            {"rise_time_s", r.edge.rise_time},
            {"fall_time_s", r.edge.fall_time}};
}

Metrics run_dpt_scenario(const ScenarioConfig& cfg, TraceWriter& tw) {
    const auto r = run_dpt(cfg.resolved_dpt());
    tw.write("traces.csv", r.traces.traces);
    const auto& m = r.metrics;
    return {{"t_on_s", m.t_on},
            {"t_off_s", m.t_off},
            {"e_on_j", m.e_on},
            {"e_off_j", m.e_off},
            {"di_dt_a_per_s", m.di_dt},
            {"freewheel_di_dt_a_per_s", m.freewheel_di_dt},
            {"i_at_second_turn_on_a", m.i_at_second_turn_on},
            {"overshoot_current_a", m.overshoot_current},
            {"steps", static_cast<double>(r.traces.steps)},
            {"events", static_cast<double>(r.traces.events)}};
}

Metrics run_buck_scenario(const ScenarioConfig& cfg, TraceWriter& tw) {
    const auto r = run_buck(cfg.resolved_buck());
    tw.write("traces.csv", r.traces.traces);
    return {{"v_out_v", r.v_out},
            {"efficiency", r.efficiency},
            {"efficiency_with_rf", r.efficiency_with_rf},
            {"ripple_a", r.ripple},
            {"avg_inductor_voltage_v", r.avg_inductor_voltage},
            {"p_in_w", r.p_in},
            {"p_out_w", r.p_out},
            {"p_rf_w", r.p_rf},
            {"loss_high_w", r.loss_high},
            {"loss_low_w", r.loss_low},
            {"loss_driver_w", r.loss_driver},
            {"audit_error", r.audit_error},
            {"cycles", static_cast<double>(r.cycles)}};
}

Metrics run_thermal_scenario(const ScenarioConfig& cfg, TraceWriter& tw) {
    const auto rows = run_thermal_sweep(cfg.resolved_characterize(), cfg.thermal.temps, cfg.thermal.anchors);
    std::vector<Waveform> traces;
    std::string csv = "kelvin,scale,peak_V,rise_time_s,fall_time_s\n";
    Metrics m;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        traces.push_back(r.v_out.renamed("v_out_" + num(r.kelvin) + "K"));
        csv += num(r.kelvin) + "," + num(r.scale) + "," + num(r.peak) + "," + num(r.rise_time) + "," +
               num(r.fall_time) + "\n";
        const std::string p = "t" + std::to_string(k) + ".";
        m.push_back({p + "kelvin", r.kelvin});
        m.push_back({p + "peak_v", r.peak});
        m.push_back({p + "rise_time_s", r.rise_time});
        m.push_back({p + "fall_time_s", r.fall_time});
    }
    write_text(tw.dir / "thermal.csv", csv);
    tw.write("traces.csv", traces);
    return m;
}

ScenarioReport run_single(const ScenarioConfig& cfg, const fs::path& dir) {
    TraceWriter tw{dir};
    Metrics m;
    switch (cfg.scenario) {
        case Scenario::characterize: m = run_characterize(cfg, tw); break;
        case Scenario::dpt: m = run_dpt_scenario(cfg, tw); break;
        case Scenario::buck: m = run_buck_scenario(cfg, tw); break;
        case Scenario::thermal: m = run_thermal_scenario(cfg, tw); break;
        case Scenario::sweep: fail(ErrorKind::config, "scenario: nested sweep");
    }
    write_text(dir / "metrics.txt", format_metrics(m));
    return {m, tw.hash};
}

ScenarioReport run_sweep(const ScenarioConfig& cfg, const fs::path& dir, int jobs) {
    const std::size_t n = cfg.sweep.values.size();
    std::vector<ScenarioReport> reports(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};

    auto point_dir = [&](std::size_t k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "point_%02zu", k);
        return dir / buf;
    };
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                ScenarioConfig pc = cfg;
                pc.scenario = cfg.sweep.base;
                set_value(pc, cfg.sweep.param, num(cfg.sweep.values[k]));
                pc.validate();
                const auto d = point_dir(k);
                fs::create_directories(d);
                reports[k] = run_scenario(pc, d, 1);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    // one row per point, columns from the first point's metric keys
    std::string csv = cfg.sweep.param;
    for (const auto& [k, v] : reports.front().metrics) csv += "," + k;
    csv += "\n";
    ScenarioReport out;
    out.trace_hash = fnv1a64("");
    for (std::size_t k = 0; k < n; ++k) {
        csv += num(cfg.sweep.values[k]);
        const std::string p = "point_" + std::to_string(k) + ".";
        out.metrics.push_back({p + cfg.sweep.param, cfg.sweep.values[k]});
        for (const auto& [key, v] : reports[k].metrics) {
            csv += "," + num(v);
            out.metrics.push_back({p + key, v});
        }
        csv += "\n";
        const auto h = reports[k].trace_hash;
        out.trace_hash = fnv1a64(std::string_view(reinterpret_cast<const char*>(&h), sizeof h), out.trace_hash);
    }
    write_text(dir / "sweep.csv", csv);
    write_text(dir / "metrics.txt", format_metrics(out.metrics));
    return out;
}

}  // namespace

ScenarioReport run_scenario(const ScenarioConfig& cfg, const fs::path& out_dir, int jobs) {
    cfg.validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create '" + out_dir.string() + "': " + ec.message());

    const auto report = cfg.scenario == Scenario::sweep ? run_sweep(cfg, out_dir, jobs) : run_single(cfg, out_dir);
    write_text(out_dir / "manifest.txt",
               "# sawsim run manifest\n" + format_config(cfg) + "# trace_hash = " + hash_hex(report.trace_hash) + "\n");
    return report;
}

}  // namespace sawsim
