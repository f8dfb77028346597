#include "sawsim/config.hpp"

#include "sawsim/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

namespace sawsim {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// shortest text that parses back to the same double
std::string fmt(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double to_double(const std::string& key, std::string_view text) {
    text = trim(text);
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto r = std::from_chars(text.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v))
        fail(ErrorKind::config, key + ": not a number: '" + std::string(text) + "'");
    return v;
}

long to_integer(const std::string& key, std::string_view text) {
    text = trim(text);
    long v = 0;
    const auto* end = text.data() + text.size();
    const auto r = std::from_chars(text.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end)
        fail(ErrorKind::config, key + ": not an integer: '" + std::string(text) + "'");
    return v;
}

bool to_bool(const std::string& key, std::string_view text) {
    text = trim(text);
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    fail(ErrorKind::config, key + ": expected true/false, got '" + std::string(text) + "'");
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        out.push_back(trim(s.substr(pos, next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

std::vector<double> to_list(const std::string& key, std::string_view text) {
    std::vector<double> out;
    if (trim(text).empty()) return out;
    for (auto item : split(text, ',')) out.push_back(to_double(key, item));
    return out;
}

std::vector<std::pair<double, double>> to_pairs(const std::string& key, std::string_view text) {
    std::vector<std::pair<double, double>> out;
    if (trim(text).empty()) return out;
    for (auto item : split(text, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos)
            fail(ErrorKind::config, key + ": table entries are 'x:y', got '" + std::string(item) + "'");
        out.emplace_back(to_double(key, item.substr(0, colon)), to_double(key, item.substr(colon + 1)));
    }
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(v[k]);
    return s;
}

std::string join_pairs(const std::vector<std::pair<double, double>>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(v[k].first) + ":" + fmt(v[k].second);
    return s;
}

struct Field {
    std::string key;
    std::function<void(ScenarioConfig&, std::string_view)> set;
    std::function<std::string(const ScenarioConfig&)> get;
    bool assumed;
    bool numeric;
};

// Accessor returning a mutable reference into the config; get() goes
// through a const_cast so one lambda serves both directions.
template <class T>
using Access = std::function<T&(ScenarioConfig&)>;

ScenarioConfig& mut(const ScenarioConfig& c) { return const_cast<ScenarioConfig&>(c); }

Field number(std::string key, Access<double> a, bool assumed = true) {
    return {key, [key, a](ScenarioConfig& c, std::string_view v) { a(c) = to_double(key, v); },
            [a](const ScenarioConfig& c) { return fmt(a(mut(c))); }, assumed, true};
}

template <class Int>
Field integer(std::string key, Access<Int> a, bool assumed = true) {
    return {key,
            [key, a](ScenarioConfig& c, std::string_view v) {
                const long x = to_integer(key, v);
                if (x < 0) fail(ErrorKind::config, key + ": must be >= 0");
                a(c) = static_cast<Int>(x);
            },
            [a](const ScenarioConfig& c) { return std::to_string(a(mut(c))); }, assumed, true};
}

Field boolean(std::string key, Access<bool> a, bool assumed = true) {
    return {key, [key, a](ScenarioConfig& c, std::string_view v) { a(c) = to_bool(key, v); },
            [a](const ScenarioConfig& c) { return std::string(a(mut(c)) ? "true" : "false"); }, assumed, false};
}

Field list(std::string key, Access<std::vector<double>> a, bool assumed = true) {
    return {key, [key, a](ScenarioConfig& c, std::string_view v) { a(c) = to_list(key, v); },
            [a](const ScenarioConfig& c) { return join(a(mut(c))); }, assumed, false};
}

void hemt_fields(std::vector<Field>& f, const std::string& p, std::function<HemtSpec&(ScenarioConfig&)> h) {
    f.push_back(number(p + ".v_th", [h](ScenarioConfig& c) -> double& { return h(c).v_th; }));
    f.push_back(number(p + ".g_m", [h](ScenarioConfig& c) -> double& { return h(c).g_m; }));
    f.push_back(number(p + ".r_on", [h](ScenarioConfig& c) -> double& { return h(c).r_on; }));
    f.push_back(number(p + ".c_gs", [h](ScenarioConfig& c) -> double& { return h(c).c_gs; }));
    f.push_back(number(p + ".c_gd_low_vds", [h](ScenarioConfig& c) -> double& { return h(c).c_gd_low_vds; }));
    f.push_back(number(p + ".c_gd_high_vds", [h](ScenarioConfig& c) -> double& { return h(c).c_gd_high_vds; }));
    f.push_back(number(p + ".c_gd_crossover", [h](ScenarioConfig& c) -> double& { return h(c).c_gd_crossover; }));
    f.push_back(number(p + ".c_gd_blend", [h](ScenarioConfig& c) -> double& { return h(c).c_gd_blend; }));
    f.push_back(number(p + ".c_ds", [h](ScenarioConfig& c) -> double& { return h(c).c_ds; }));
    f.push_back(number(p + ".reverse_offset", [h](ScenarioConfig& c) -> double& { return h(c).reverse_offset; }));
    f.push_back(number(p + ".reverse_slope", [h](ScenarioConfig& c) -> double& { return h(c).reverse_slope; }));
    f.push_back(number(p + ".knee", [h](ScenarioConfig& c) -> double& { return h(c).knee; }));
}

#define REF(expr) [](ScenarioConfig & c) -> auto& { return expr; }

std::vector<Field> build_fields() {
    std::vector<Field> f;
    const bool measured = false;

    f.push_back({"scenario",
                 [](ScenarioConfig& c, std::string_view v) { c.scenario = parse_scenario(trim(v)); },
                 [](const ScenarioConfig& c) { return scenario_name(c.scenario); }, false, false});

    f.push_back(number("saw.pitch_um", REF(c.saw.pitch_um), measured));
    f.push_back(integer<int>("saw.pairs", REF(c.saw.pairs), measured));
    f.push_back(number("saw.aperture_um", REF(c.saw.aperture_um), measured));
    f.push_back(number("saw.gap_mm", REF(c.saw.gap_mm), measured));
    f.push_back(number("saw.saw_velocity", REF(c.saw.saw_velocity)));
    f.push_back(number("saw.peak_transmission_db", REF(c.saw.peak_transmission_db), measured));
    f.push_back(number("saw.frac_bandwidth", REF(c.saw.frac_bandwidth), measured));
    f.push_back(number("saw.prop_loss_db_per_mm", REF(c.saw.prop_loss_db_per_mm)));
    f.push_back(number("saw.k2", REF(c.saw.k2), measured));
    f.push_back(number("saw.coercive_field_v_per_um", REF(c.saw.coercive_field_v_per_um), measured));
    f.push_back(number("saw.max_input_power_w", REF(c.saw.max_input_power_w), measured));
    auto table = [](std::string key, Access<std::vector<TablePoint>> a, bool assumed) {
        return Field{key,
                     [key, a](ScenarioConfig& c, std::string_view v) {
                         a(c).clear();
                         for (auto [x, y] : to_pairs(key, v)) a(c).push_back({x, y});
                     },
                     [a](const ScenarioConfig& c) {
                         std::vector<std::pair<double, double>> p;
                         for (auto t : a(mut(c))) p.emplace_back(t.gap_mm, t.value);
                         return join_pairs(p);
                     },
                     assumed, false};
    };
    f.push_back(table("saw.isolation_cap_pf", REF(c.saw.isolation_cap_pf), measured));
    f.push_back(table("saw.breakdown_kv", REF(c.saw.breakdown_kv), true));

    f.push_back(number("source.v_oc", REF(c.source.v_oc), measured));
    f.push_back(number("source.i_sc", REF(c.source.i_sc), measured));
    f.push_back(number("source.reference_load", REF(c.source.reference_load), measured));
    f.push_back({"source.power_table",
                 [](ScenarioConfig& c, std::string_view v) {
                     c.source.power_voltage_points.clear();
                     for (auto [x, y] : to_pairs("source.power_table", v))
                         c.source.power_voltage_points.push_back({x, y});
                 },
                 [](const ScenarioConfig& c) {
                     std::vector<std::pair<double, double>> p;
                     for (auto t : c.source.power_voltage_points) p.emplace_back(t.dbm, t.volts);
                     return join_pairs(p);
                 },
                 true, false});

    f.push_back(number("rectifier.diode_vf", REF(c.diode_vf)));

    f.push_back(boolean("pulldown.dpt_enabled", REF(c.dpt.pulldown.enabled)));
    f.push_back(boolean("pulldown.buck_enabled", REF(c.buck.pulldown.enabled)));
    f.push_back(number("pulldown.pnp_gain", REF(c.pulldown.pnp_gain)));
    f.push_back(number("pulldown.pnp_vbe_on", REF(c.pulldown.pnp_vbe_on)));
    f.push_back(number("pulldown.base_resistance", REF(c.pulldown.base_resistance)));
    f.push_back(number("pulldown.series_diode_vf", REF(c.pulldown.series_diode_vf)));
    f.push_back(number("pulldown.series_diode_rs", REF(c.pulldown.series_diode_rs)));
    f.push_back(number("pulldown.pulldown_resistance", REF(c.pulldown.pulldown_resistance)));

    f.push_back(number("solver.dt_fast", REF(c.solver.dt_fast)));
    f.push_back(number("solver.dt_slow", REF(c.solver.dt_slow)));
    f.push_back(number("solver.event_tol", REF(c.solver.event_tol)));
    f.push_back(integer<int>("solver.max_newton_iters", REF(c.solver.max_newton_iters)));
    f.push_back(number("solver.newton_tol", REF(c.solver.newton_tol)));

    f.push_back(number("dpt.v_dc", REF(c.dpt.v_dc), measured));
    f.push_back(number("dpt.l", REF(c.dpt.l), measured));
    f.push_back(number("dpt.c_link", REF(c.dpt.c_link), measured));
    f.push_back(number("dpt.r_g", REF(c.dpt.rectifier.r_bleed), measured));
    f.push_back(number("dpt.c_hold", REF(c.dpt.rectifier.c_hold), measured));
    f.push_back(number("dpt.pulse1", REF(c.dpt.pulse1), measured));
    f.push_back(number("dpt.gap", REF(c.dpt.gap), measured));
    f.push_back(number("dpt.pulse2", REF(c.dpt.pulse2), measured));
    f.push_back(number("dpt.rf_power", REF(c.dpt.rf_power_dbm), measured));
    f.push_back(number("dpt.r_supply", REF(c.dpt.r_supply)));
    f.push_back(number("dpt.lead", REF(c.dpt.lead)));
    f.push_back(number("dpt.tail", REF(c.dpt.tail)));
    f.push_back(number("dpt.envelope_dt", REF(c.dpt.envelope_dt)));
    f.push_back(number("fwd.v_f", REF(c.dpt.fwd.v_f)));
    f.push_back(number("fwd.r_s", REF(c.dpt.fwd.r_s)));
    f.push_back(number("fwd.c_j", REF(c.dpt.fwd.c_j)));
    hemt_fields(f, "hemt", REF(c.dpt.dut));

    f.push_back(number("buck.v_in", REF(c.buck.v_in), measured));
    f.push_back(number("buck.l", REF(c.buck.l), measured));
    f.push_back(number("buck.c_out", REF(c.buck.c_out), measured));
    f.push_back(number("buck.r_load", REF(c.buck.r_load), measured));
    f.push_back(number("buck.f_sw", REF(c.buck.f_sw), measured));
    f.push_back(number("buck.duty", REF(c.buck.duty), measured));
    f.push_back(number("buck.rf_power", REF(c.buck.rf_power_dbm), measured));
    f.push_back(number("buck.r_g", REF(c.buck.rectifier.r_bleed)));
    f.push_back(number("buck.c_hold", REF(c.buck.rectifier.c_hold)));
    f.push_back(number("buck.r_supply", REF(c.buck.r_supply)));
    f.push_back(number("buck.envelope_dt", REF(c.buck.envelope_dt)));
    f.push_back(integer<int>("buck.min_cycles", REF(c.buck.min_cycles)));
    f.push_back(integer<int>("buck.max_cycles", REF(c.buck.max_cycles)));
    f.push_back(number("buck.settle_tol", REF(c.buck.settle_tol)));
    f.push_back(boolean("buck.ideal", REF(c.buck.ideal)));
    f.push_back(number("buck.ideal_gate_voltage", REF(c.buck.ideal_gate_voltage)));
    hemt_fields(f, "buck.high_side", REF(c.buck.high_side));
    hemt_fields(f, "buck.low_side", REF(c.buck.low_side));

    f.push_back(number("characterize.peak_output", REF(c.characterize.peak_output), measured));
    f.push_back(number("characterize.c_hold", REF(c.characterize.rectifier.c_hold)));
    f.push_back(number("characterize.r_load", REF(c.characterize.rectifier.r_bleed)));
    f.push_back(number("characterize.f_lo", REF(c.characterize.f_lo)));
    f.push_back(number("characterize.f_hi", REF(c.characterize.f_hi)));
    f.push_back(integer<std::size_t>("characterize.sweep_points", REF(c.characterize.sweep_points)));
    f.push_back(integer<std::size_t>("characterize.iv_points", REF(c.characterize.iv_points)));
    f.push_back(number("characterize.pulse_start", REF(c.characterize.pulse_start)));
    f.push_back(number("characterize.pulse_width", REF(c.characterize.pulse_width)));
    f.push_back(number("characterize.duration", REF(c.characterize.duration)));
    f.push_back(number("characterize.envelope_dt", REF(c.characterize.envelope_dt)));
    f.push_back(number("characterize.rectifier_dt", REF(c.characterize.rectifier_dt)));

    f.push_back(list("thermal.temps", REF(c.thermal.temps)));
    f.push_back({"thermal.anchors",
                 [](ScenarioConfig& c, std::string_view v) {
                     c.thermal.anchors.clear();
                     for (auto [k, s] : to_pairs("thermal.anchors", v)) c.thermal.anchors.push_back({k, s});
                 },
                 [](const ScenarioConfig& c) {
                     std::vector<std::pair<double, double>> p;
                     for (auto a : c.thermal.anchors) p.emplace_back(a.kelvin, a.scale);
                     return join_pairs(p);
                 },
                 true, false});

    f.push_back({"sweep.scenario",
                 [](ScenarioConfig& c, std::string_view v) { c.sweep.base = parse_scenario(trim(v)); },
                 [](const ScenarioConfig& c) { return scenario_name(c.sweep.base); }, true, false});
    f.push_back({"sweep.param", [](ScenarioConfig& c, std::string_view v) { c.sweep.param = std::string(trim(v)); },
                 [](const ScenarioConfig& c) { return c.sweep.param; }, true, false});
    f.push_back(list("sweep.values", REF(c.sweep.values)));
    return f;
}

#undef REF

const std::vector<Field>& fields() {
    static const std::vector<Field> f = build_fields();
    return f;
}

const Field& find_field(const std::string& key) {
    static const std::map<std::string, const Field*> index = [] {
        std::map<std::string, const Field*> m;
        for (const auto& f : fields()) m[f.key] = &f;
        return m;
    }();
    const auto it = index.find(key);
    if (it == index.end()) fail(ErrorKind::config, "unknown key '" + key + "'");
    return *it->second;
}

}  // namespace

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::characterize: return "characterize";
        case Scenario::dpt: return "dpt";
        case Scenario::buck: return "buck";
        case Scenario::thermal: return "thermal";
        case Scenario::sweep: return "sweep";
    }
    return "?";
}

Scenario parse_scenario(std::string_view name) {
    for (auto s : {Scenario::characterize, Scenario::dpt, Scenario::buck, Scenario::thermal, Scenario::sweep})
        if (name == scenario_name(s)) return s;
    fail(ErrorKind::config, "scenario: unknown scenario '" + std::string(name) + "'");
}

DptConfig ScenarioConfig::resolved_dpt() const {
    DptConfig d = dpt;
    d.saw = saw;
    d.source = source;
    d.solver = solver;
    d.rectifier.diode_vf = diode_vf;
    const bool on = d.pulldown.enabled;
    d.pulldown = pulldown;
    d.pulldown.enabled = on;
    return d;
}

BuckConfig ScenarioConfig::resolved_buck() const {
    BuckConfig b = buck;
    b.saw = saw;
    b.source = source;
    b.solver = solver;
    b.rectifier.diode_vf = diode_vf;
    const bool on = b.pulldown.enabled;
    b.pulldown = pulldown;
    b.pulldown.enabled = on;
    return b;
}

CharacterizationConfig ScenarioConfig::resolved_characterize() const {
    CharacterizationConfig c = characterize;
    c.saw = saw;
    c.source = source;
    c.rectifier.diode_vf = diode_vf;
    return c;
}

void ScenarioConfig::validate() const {
    resolved_dpt().validate();
    resolved_buck().validate();
    resolved_characterize().validate();
    if (thermal.temps.empty()) fail(ErrorKind::config, "thermal.temps: need at least one temperature");
    if (thermal.anchors.size() < 2) fail(ErrorKind::config, "thermal.anchors: need at least two points");
    for (std::size_t k = 0; k < thermal.anchors.size(); ++k) {
        if (!(thermal.anchors[k].scale > 0.0)) fail(ErrorKind::config, "thermal.anchors: scales must be > 0");
        if (k > 0 && !(thermal.anchors[k].kelvin > thermal.anchors[k - 1].kelvin))
            fail(ErrorKind::config, "thermal.anchors: temperatures must increase");
    }
    for (double t : thermal.temps)
        if (t < thermal.anchors.front().kelvin || t > thermal.anchors.back().kelvin)
            fail(ErrorKind::config, "thermal.temps: " + fmt(t) + " K outside the anchor table");
    if (sweep.base == Scenario::sweep) fail(ErrorKind::config, "sweep.scenario: cannot sweep a sweep");
    if (!is_numeric_key(sweep.param))
        fail(ErrorKind::config, "sweep.param: '" + sweep.param + "' is not a numeric config key");
    if (sweep.values.empty()) fail(ErrorKind::config, "sweep.values: need at least one value");
}

void set_value(ScenarioConfig& cfg, const std::string& key, std::string_view value) {
    find_field(key).set(cfg, value);
}

void apply_setting(ScenarioConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        fail(ErrorKind::config, "expected key=value, got '" + std::string(assignment) + "'");
    set_value(cfg, std::string(trim(assignment.substr(0, eq))), assignment.substr(eq + 1));
}

ScenarioConfig parse_config(std::string_view text) {
    ScenarioConfig cfg;
    bool have_scenario = false;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto where = "line " + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(ErrorKind::config, where + "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) fail(ErrorKind::config, where + "missing key");
        if (!seen.insert(key).second) fail(ErrorKind::config, where + "duplicate key '" + key + "'");
        try {
            set_value(cfg, key, line.substr(eq + 1));
        } catch (const Error& e) {
            fail(e.kind(), where + e.what());
        }
        if (key == "scenario") have_scenario = true;
    }
    if (!have_scenario) fail(ErrorKind::config, "scenario required");
    cfg.validate();
    return cfg;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
}

bool is_numeric_key(const std::string& key) {
    for (const auto& f : fields())
        if (f.key == key) return f.numeric;
    return false;
}

std::string format_config(const ScenarioConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) {
        out += f.key + " = " + f.get(cfg);
        if (f.assumed) out += "  # assumed";
        out += '\n';
    }
    return out;
}

}  // namespace sawsim
