#include "sawsim/engine.hpp"

#include "sawsim/error.hpp"
#include "knee.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sawsim::engine {

namespace {

constexpr double kGmin = 1e-12;       // S, every node to ground
constexpr double kHysteresis = 1e-3;  // V, region-flag band
constexpr double kMaxNewtonDv = 10.0; // V, per-iteration update limit
constexpr int kMaxBacktracks = 8;
constexpr double kAbsTol = 1e-12;     // A, on the order of the gmin leakage at 1 V
constexpr int kMaxHalvings = 6;       // dt / 64

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 16, 16>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 16, 1>;

double vn(const std::vector<double>& v, Node n) { return n < 0 ? 0.0 : v[static_cast<std::size_t>(n)]; }
double vn(const Vector& v, Node n) { return n < 0 ? 0.0 : v[n]; }

struct Assembly {
    Vector f;       // KCL residual: current leaving each node
    Vector scale;   // sum of |current| terms per node
    Vector floor;   // roundoff floor of the charge-difference terms
    Matrix j;

    explicit Assembly(int n)
        : f(Vector::Zero(n)), scale(Vector::Zero(n)), floor(Vector::Zero(n)), j(Matrix::Zero(n, n)) {}

    void add_current(Node n, double i) {
        if (n < 0) return;
        f[n] += i;
        scale[n] += std::abs(i);
    }
    void add_jac(Node row, Node col, double g) {
        if (row < 0 || col < 0) return;
        j(row, col) += g;
    }
    // two-terminal: current i from a to b, conductance g = di/dv_ab
    void branch(Node a, Node b, double i, double g) {
        add_current(a, i);
        add_current(b, -i);
        add_jac(a, a, g);
        add_jac(a, b, -g);
        add_jac(b, a, -g);
        add_jac(b, b, g);
    }
};

double capacitor_charge(const Element& e, double v) {
    return e.two_level ? hemt_gd_charge(e.hemt, v) : e.value * v;
}
double capacitor_capacitance(const Element& e, double v) {
    return e.two_level ? hemt_gd_capacitance(e.hemt, v) : e.value;
}

struct PnpEval {
    double ib, ic;
    double dib_dveb;
    double dic_dveb, dic_dvec;
};

PnpEval pnp_eval(const PullDownSpec& p, double v_eb, double v_ec) {
    using detail::ramp;
    const auto b = ramp(v_eb - p.pnp_vbe_on, detail::knee_volts);
    const auto e = ramp(v_ec, detail::knee_volts);
    PnpEval r{};
    r.ib = b.y / p.base_resistance;
    r.dib_dveb = b.dy / p.base_resistance;
    // collector current: min(gain * ib, v_ec / R_pd)
    const double amp = p.pnp_gain * r.ib;
    const double cap = e.y / p.pulldown_resistance;
    const auto cut = ramp(amp - cap, detail::knee_amps);
    r.ic = amp - cut.y;
    r.dic_dveb = (1.0 - cut.dy) * p.pnp_gain * r.dib_dveb;
    r.dic_dvec = cut.dy * e.dy / p.pulldown_resistance;
    return r;
}

// Signed distance from the region boundary of each device, per flag bit.
void region_margins(const Element& e, const std::vector<double>& v, double t, double m[2]) {
    m[0] = m[1] = -1.0;
    switch (e.kind) {
        case ElementKind::diode:
            m[0] = vn(v, e.a) - vn(v, e.b) - e.value;
            break;
        case ElementKind::sourced_diode:
            m[0] = e.source(t) - e.value - (vn(v, e.a) - vn(v, e.b));
            break;
        case ElementKind::hemt_channel: {
            const double v_gs = vn(v, e.c) - vn(v, e.b);
            const double v_ds = vn(v, e.a) - vn(v, e.b);
            m[0] = v_gs - e.hemt.v_th;
            m[1] = -v_ds - std::max(0.0, e.hemt.reverse_offset - v_gs);
            break;
        }
        case ElementKind::pnp_pulldown:
            m[0] = vn(v, e.a) - vn(v, e.b) - e.pnp.pnp_vbe_on;
            break;
        default:
            break;
    }
}

std::uint8_t hysteretic_flags(const Element& e, const std::vector<double>& v, double t, std::uint8_t old) {
    double m[2];
    region_margins(e, v, t, m);
    std::uint8_t out = old;
    for (int bit = 0; bit < 2; ++bit) {
        const std::uint8_t mask = static_cast<std::uint8_t>(1u << bit);
        if (m[bit] > kHysteresis) out |= mask;
        else if (m[bit] < -kHysteresis) out &= static_cast<std::uint8_t>(~mask);
    }
    return out;
}

Element make_element(ElementKind kind, std::string name, Node a, Node b, Node c = ground) {
    Element e;
    e.kind = kind;
    e.name = std::move(name);
    e.a = a;
    e.b = b;
    e.c = c;
    return e;
}

}  // namespace

void SolverConfig::validate() const {
    if (!(dt_fast > 0.0)) fail(ErrorKind::config, "solver.dt_fast: must be > 0");
    if (!(dt_slow >= dt_fast)) fail(ErrorKind::config, "solver.dt_slow: must be >= dt_fast");
    if (!(event_tol > 0.0 && event_tol < dt_fast)) fail(ErrorKind::config, "solver.event_tol: must be in (0, dt_fast)");
    if (max_newton_iters < 2) fail(ErrorKind::config, "solver.max_newton_iters: must be >= 2");
    if (!(newton_tol > 0.0 && newton_tol < 1e-3)) fail(ErrorKind::config, "solver.newton_tol: must be in (0, 1e-3)");
}

// ---------------------------------------------------------------- Circuit

Node Circuit::add_node(std::string name) {
    node_names_.push_back(std::move(name));
    v0_.push_back(0.0);
    return static_cast<Node>(node_names_.size() - 1);
}

Node Circuit::node(const std::string& name) const {
    for (std::size_t i = 0; i < node_names_.size(); ++i)
        if (node_names_[i] == name) return static_cast<Node>(i);
    fail(ErrorKind::config, "unknown node '" + name + "'");
}

int Circuit::element_id(const std::string& name) const {
    for (std::size_t i = 0; i < elements_.size(); ++i)
        if (elements_[i].name == name) return static_cast<int>(i);
    fail(ErrorKind::config, "unknown element '" + name + "'");
}

void Circuit::set_initial_voltage(Node n, double v) { v0_.at(static_cast<std::size_t>(n)) = v; }

int Circuit::push(Element e) {
    elements_.push_back(std::move(e));
    return static_cast<int>(elements_.size() - 1);
}

int Circuit::resistor(std::string name, Node a, Node b, double r) {
    if (!(r > 0.0)) fail(ErrorKind::config, name + ": resistance must be > 0");
    Element e = make_element(ElementKind::resistor, std::move(name), a, b);
    e.value = r;
    return push(std::move(e));
}

int Circuit::capacitor(std::string name, Node a, Node b, double c, double v0) {
    if (!(c > 0.0)) fail(ErrorKind::config, name + ": capacitance must be > 0");
    Element e = make_element(ElementKind::capacitor, std::move(name), a, b);
    e.value = c;
    e.initial = v0;
    return push(std::move(e));
}

int Circuit::gd_capacitor(std::string name, Node drain, Node gate, const HemtSpec& spec) {
    Element e = make_element(ElementKind::capacitor, std::move(name), drain, gate);
    e.two_level = true;
    e.hemt = spec;
    return push(std::move(e));
}

int Circuit::inductor(std::string name, Node a, Node b, double l, double i0) {
    if (!(l > 0.0)) fail(ErrorKind::config, name + ": inductance must be > 0");
    Element e = make_element(ElementKind::inductor, std::move(name), a, b);
    e.value = l;
    e.initial = i0;
    return push(std::move(e));
}

int Circuit::norton_source(std::string name, Node a, Node b, double r, TimeFunction v) {
    if (!(r > 0.0)) fail(ErrorKind::config, name + ": source resistance must be > 0");
    Element e = make_element(ElementKind::norton_source, std::move(name), a, b);
    e.value = r;
    e.source = std::move(v);
    return push(std::move(e));
}

int Circuit::current_source(std::string name, Node into, Node from, TimeFunction i) {
    Element e = make_element(ElementKind::current_source, std::move(name), into, from);
    e.source = std::move(i);
    return push(std::move(e));
}

int Circuit::diode(std::string name, Node anode, Node cathode, const DiodeSpec& spec) {
    if (!(spec.r_s > 0.0)) fail(ErrorKind::config, name + ": engine diodes need r_s > 0");
    Element e = make_element(ElementKind::diode, std::move(name), anode, cathode);
    e.value = spec.v_f;
    e.value2 = spec.r_s;
    return push(std::move(e));
}

int Circuit::sourced_diode(std::string name, Node out, Node ret, double r, double drop, TimeFunction emf) {
    if (!(r > 0.0)) fail(ErrorKind::config, name + ": source resistance must be > 0");
    Element e = make_element(ElementKind::sourced_diode, std::move(name), out, ret);
    e.value = drop;
    e.value2 = r;
    e.source = std::move(emf);
    return push(std::move(e));
}

int Circuit::hemt_channel(std::string name, Node drain, Node gate, Node source, const HemtSpec& spec) {
    Element e = make_element(ElementKind::hemt_channel, std::move(name), drain, source, gate);
    e.hemt = spec;
    return push(std::move(e));
}

int Circuit::pnp_pulldown(std::string name, Node emitter, Node base, Node collector, const PullDownSpec& spec) {
    Element e = make_element(ElementKind::pnp_pulldown, std::move(name), emitter, base, collector);
    e.pnp = spec;
    return push(std::move(e));
}

// ------------------------------------------------------------------ Probes

Probe Probe::voltage(std::string name, Node plus, Node minus) {
    Probe p;
    p.name = std::move(name);
    p.unit = Unit::volt;
    p.plus = plus;
    p.minus = minus;
    return p;
}

Probe Probe::current(std::string name, std::vector<std::pair<int, double>> terms) {
    Probe p;
    p.name = std::move(name);
    p.unit = Unit::ampere;
    p.current_terms = std::move(terms);
    return p;
}

const Waveform& TraceSet::operator[](const std::string& name) const {
    for (const auto& w : traces)
        if (w.name() == name) return w;
    for (const auto& w : energies)
        if (w.name() == name) return w;
    fail(ErrorKind::metric, "no trace named '" + name + "'");
}

bool TraceSet::has(const std::string& name) const {
    for (const auto& w : traces)
        if (w.name() == name) return true;
    return false;
}

// ------------------------------------------------------------------ Engine

Engine::Engine(const Circuit& circuit, SolverConfig config) : circuit_(circuit), cfg_(config) {
    cfg_.validate();
    if (circuit_.node_count() == 0) fail(ErrorKind::config, "circuit has no nodes");
    if (circuit_.node_count() > 16) fail(ErrorKind::config, "circuit too large for the fixed-topology solver");
}

State Engine::initial_state(double t0) const {
    const auto& els = circuit_.elements();
    State s;
    s.time = t0;
    s.v = circuit_.initial_voltages();
    s.i.assign(els.size(), 0.0);
    s.q.assign(els.size(), 0.0);
    s.flags.assign(els.size(), 0);
    for (std::size_t k = 0; k < els.size(); ++k) {
        const auto& e = els[k];
        if (e.kind == ElementKind::capacitor) s.q[k] = capacitor_charge(e, vn(s.v, e.a) - vn(s.v, e.b));
        if (e.kind == ElementKind::inductor) s.i[k] = e.initial;
    }
    // A tiny backward-Euler step settles the algebraic currents (capacitor
    // currents in particular) consistently with the initial voltages.
    StepStats st;
    State settled = step_recursive(s, 1e-4 * cfg_.dt_fast, Integrator::backward_euler, 0, st);
    settled.time = t0;
    for (std::size_t k = 0; k < els.size(); ++k) {
        settled.flags[k] = 0;
        settled.flags[k] = hysteretic_flags(els[k], settled.v, t0, 0);
    }
    return settled;
}

bool Engine::try_step(const State& s, double h, Integrator method, State& out, StepStats& stats) const {
    const auto& els = circuit_.elements();
    const int n = circuit_.node_count();
    const double t = s.time + h;
    const bool trap = method == Integrator::trapezoidal;

    Vector v(n);
    for (int k = 0; k < n; ++k) v[k] = s.v[static_cast<std::size_t>(k)];

    std::vector<double> branch_i(els.size(), 0.0);
    std::vector<double> branch_q(els.size(), 0.0);
    std::vector<double> src(els.size(), 0.0);
    for (std::size_t k = 0; k < els.size(); ++k)
        if (els[k].source) src[k] = els[k].source(t);

    // Newton with backtracking on the residual norm; backtracks do not
    // count against max_newton_iters.
    Vector v_base = v, dv_last = Vector::Zero(n);
    double last_norm = std::numeric_limits<double>::infinity();
    int backtracks = 0;
    for (int it = 0; it < cfg_.max_newton_iters;) {
        Assembly as(n);
        for (int k = 0; k < n; ++k) {
            as.add_current(k, kGmin * v[k]);
            as.add_jac(k, k, kGmin);
        }
        for (std::size_t k = 0; k < els.size(); ++k) {
            const Element& e = els[k];
            const double vab = vn(v, e.a) - vn(v, e.b);
            switch (e.kind) {
                case ElementKind::resistor:
                    branch_i[k] = vab / e.value;
                    as.branch(e.a, e.b, branch_i[k], 1.0 / e.value);
                    break;
                case ElementKind::capacitor: {
                    const double q = capacitor_charge(e, vab);
                    const double c = capacitor_capacitance(e, vab);
                    branch_q[k] = q;
                    const double fl = 64.0 * std::numeric_limits<double>::epsilon() *
                                      (std::abs(q) + std::abs(s.q[k])) / h;
                    if (e.a >= 0) as.floor[e.a] += fl;
                    if (e.b >= 0) as.floor[e.b] += fl;
                    if (trap) {
                        branch_i[k] = 2.0 / h * (q - s.q[k]) - s.i[k];
                        as.branch(e.a, e.b, branch_i[k], 2.0 / h * c);
                    } else {
                        branch_i[k] = (q - s.q[k]) / h;
                        as.branch(e.a, e.b, branch_i[k], c / h);
                    }
                    break;
                }
                case ElementKind::inductor: {
                    const double vab_prev = vn(s.v, e.a) - vn(s.v, e.b);
                    if (trap) {
                        branch_i[k] = s.i[k] + h / (2.0 * e.value) * (vab_prev + vab);
                        as.branch(e.a, e.b, branch_i[k], h / (2.0 * e.value));
                    } else {
                        branch_i[k] = s.i[k] + h / e.value * vab;
                        as.branch(e.a, e.b, branch_i[k], h / e.value);
                    }
                    break;
                }
                case ElementKind::norton_source:
                    branch_i[k] = (vab - src[k]) / e.value;
                    as.branch(e.a, e.b, branch_i[k], 1.0 / e.value);
                    break;
                case ElementKind::current_source:
                    branch_i[k] = -src[k];
                    as.branch(e.a, e.b, branch_i[k], 0.0);
                    break;
                case ElementKind::diode: {
                    const auto r = detail::ramp(vab - e.value, detail::knee_volts);
                    branch_i[k] = r.y / e.value2;
                    as.branch(e.a, e.b, branch_i[k], r.dy / e.value2);
                    break;
                }
                case ElementKind::sourced_diode: {
                    const auto r = detail::ramp(src[k] - e.value - vab, detail::knee_volts);
                    branch_i[k] = -r.y / e.value2;
                    as.branch(e.a, e.b, branch_i[k], r.dy / e.value2);
                    break;
                }
                case ElementKind::hemt_channel: {
                    // a = drain, b = source, c = gate
                    const double v_gs = vn(v, e.c) - vn(v, e.b);
                    const auto ch = hemt_channel_eval(e.hemt, v_gs, vab);
                    branch_i[k] = ch.current;
                    as.add_current(e.a, ch.current);
                    as.add_current(e.b, -ch.current);
                    const double d_a = ch.d_vds, d_c = ch.d_vgs, d_b = -ch.d_vds - ch.d_vgs;
                    as.add_jac(e.a, e.a, d_a);
                    as.add_jac(e.a, e.b, d_b);
                    as.add_jac(e.a, e.c, d_c);
                    as.add_jac(e.b, e.a, -d_a);
                    as.add_jac(e.b, e.b, -d_b);
                    as.add_jac(e.b, e.c, -d_c);
                    break;
                }
                case ElementKind::pnp_pulldown: {
                    // a = emitter, b = base, c = collector
                    if (!e.pnp.enabled) break;
                    const double v_ec = vn(v, e.a) - vn(v, e.c);
                    const auto p = pnp_eval(e.pnp, vab, v_ec);
                    branch_i[k] = p.ic;
                    as.add_current(e.a, p.ib + p.ic);
                    as.add_current(e.b, -p.ib);
                    as.add_current(e.c, -p.ic);
                    // d ib
                    as.add_jac(e.a, e.a, p.dib_dveb);
                    as.add_jac(e.a, e.b, -p.dib_dveb);
                    as.add_jac(e.b, e.a, -p.dib_dveb);
                    as.add_jac(e.b, e.b, p.dib_dveb);
                    // d ic, ic = f(v_eb, v_ec)
                    const double ge = p.dic_dveb, gc = p.dic_dvec;
                    as.add_jac(e.a, e.a, ge + gc);
                    as.add_jac(e.a, e.b, -ge);
                    as.add_jac(e.a, e.c, -gc);
                    as.add_jac(e.c, e.a, -(ge + gc));
                    as.add_jac(e.c, e.b, ge);
                    as.add_jac(e.c, e.c, gc);
                    break;
                }
            }
        }

        // residual test at the current iterate
        double worst = 0.0;
        double worst_scale = 0.0;
        double worst_floor = 0.0;
        bool ok = it > 0;
        for (int k = 0; k < n; ++k) {
            const double r = std::abs(as.f[k]);
            const double lim = cfg_.newton_tol * as.scale[k] + as.floor[k] + kAbsTol;
            if (r > lim) ok = false;
            if (r > worst) {
                worst = r;
                worst_scale = as.scale[k];
                worst_floor = as.floor[k] + kAbsTol;
            }
        }
        if (!std::isfinite(worst)) return false;
        if (ok) {
            out.time = t;
            out.v.assign(static_cast<std::size_t>(n), 0.0);
            for (int k = 0; k < n; ++k) out.v[static_cast<std::size_t>(k)] = v[k];
            out.i = branch_i;
            out.q = s.q;
            for (std::size_t k = 0; k < els.size(); ++k)
                if (els[k].kind == ElementKind::capacitor) out.q[k] = branch_q[k];
            out.flags = s.flags;
            stats.newton_iterations += it;
            if (worst >= stats.max_residual) {
                stats.residual_scale = worst_scale;
                stats.residual_floor = worst_floor;
            }
            stats.max_residual = std::max(stats.max_residual, worst);
            return true;
        }

        const double norm = as.f.norm();
        if (norm > last_norm && backtracks < kMaxBacktracks) {
            dv_last *= 0.5;
            v = v_base + dv_last;
            ++backtracks;
            continue;
        }
        backtracks = 0;
        last_norm = norm;

        Eigen::PartialPivLU<Matrix> lu(as.j);
        Vector dv = lu.solve(-as.f);
        if (!dv.allFinite()) return false;
        const double big = dv.cwiseAbs().maxCoeff();
        if (big > kMaxNewtonDv) dv *= kMaxNewtonDv / big;
        v_base = v;
        dv_last = dv;
        v += dv;
        ++it;
    }
    return false;
}

State Engine::step_recursive(const State& s, double h, Integrator method, int depth, StepStats& stats) const {
    State out;
    if (try_step(s, h, method, out, stats)) return out;
    if (depth >= kMaxHalvings) {
        std::ostringstream os;
        os << "Newton failed to converge at t=" << s.time << " s (dt=" << h << ") after " << depth
           << " halvings; state:";
        for (int k = 0; k < circuit_.node_count(); ++k)
            os << ' ' << circuit_.node_name(k) << '=' << s.v[static_cast<std::size_t>(k)];
        fail(ErrorKind::solver, os.str());
    }
    const State mid = step_recursive(s, 0.5 * h, method, depth + 1, stats);
    return step_recursive(mid, 0.5 * h, method, depth + 1, stats);
}

void Engine::update_flags(const State& prev, State& next) const {
    const auto& els = circuit_.elements();
    for (std::size_t k = 0; k < els.size(); ++k)
        next.flags[k] = hysteretic_flags(els[k], next.v, next.time, prev.flags[k]);
}

State Engine::step(const State& s, double dt, Integrator method, StepStats* stats) const {
    if (!(dt > 0.0)) fail(ErrorKind::solver, "step: dt must be > 0");
    StepStats local;
    State out = step_recursive(s, dt, method, 0, stats ? *stats : local);
    update_flags(s, out);
    return out;
}

double Engine::locate_event(const State& s, double dt, const std::function<double(const State&)>& predicate,
                            State* at_event) const {
    const double p0 = predicate(s);
    if (p0 == 0.0) {
        if (at_event) *at_event = s;
        return s.time;
    }
    State end = step(s, dt);
    const double p1 = predicate(end);
    if (p1 == 0.0) {
        if (at_event) *at_event = end;
        return end.time;
    }
    if ((p0 > 0.0) == (p1 > 0.0)) fail(ErrorKind::solver, "locate_event: predicate does not change sign");
    double lo = 0.0, hi = dt;
    State hi_state = end;
    while (hi - lo > cfg_.event_tol) {
        const double mid = 0.5 * (lo + hi);
        State m = step(s, mid);
        const double pm = predicate(m);
        if (pm == 0.0) {
            hi = mid;
            hi_state = m;
            break;
        }
        if ((pm > 0.0) == (p0 > 0.0)) {
            lo = mid;
        } else {
            hi = mid;
            hi_state = m;
        }
    }
    if (at_event) *at_event = hi_state;
    return s.time + hi;
}

double Engine::element_power(int id, const State& s) const {
    const Element& e = circuit_.element(id);
    const auto k = static_cast<std::size_t>(id);
    const double vab = vn(s.v, e.a) - vn(s.v, e.b);
    if (e.kind == ElementKind::pnp_pulldown) {
        if (!e.pnp.enabled) return 0.0;
        const double v_ec = vn(s.v, e.a) - vn(s.v, e.c);
        const auto p = pnp_eval(e.pnp, vab, v_ec);
        return vab * p.ib + v_ec * p.ic;
    }
    return vab * s.i[k];
}

double Engine::probe_value(const Probe& p, const State& s) const {
    if (p.current_terms.empty()) return vn(s.v, p.plus) - vn(s.v, p.minus);
    double acc = 0.0;
    for (const auto& [id, sign] : p.current_terms) acc += sign * s.i[static_cast<std::size_t>(id)];
    return acc;
}

TraceSet Engine::run(const RunOptions& options) const {
    State s = initial_state(options.t0);
    return run_from(s, options);
}

TraceSet Engine::run_from(State& s, const RunOptions& opt) const {
    const double dt_out = opt.dt_out > 0.0 ? opt.dt_out : (opt.all_fast ? cfg_.dt_fast : cfg_.dt_slow);
    const TimeGrid grid = TimeGrid::covering(s.time, opt.duration, dt_out);
    const std::size_t n_out = grid.n;

    std::vector<std::vector<double>> rec(opt.probes.size(), std::vector<double>(n_out));
    std::vector<std::vector<double>> erec(opt.meters.size(), std::vector<double>(n_out));
    std::vector<double> energy(opt.meters.size(), 0.0);

    auto meter_power = [&](const EnergyMeter& m, const State& st) {
        double p = 0.0;
        for (int id : m.elements) p += element_power(id, st);
        return p;
    };
    std::vector<double> p_prev(opt.meters.size());
    for (std::size_t m = 0; m < opt.meters.size(); ++m) p_prev[m] = meter_power(opt.meters[m], s);

    auto record = [&](std::size_t k) {
        for (std::size_t p = 0; p < opt.probes.size(); ++p) rec[p][k] = probe_value(opt.probes[p], s);
        for (std::size_t m = 0; m < opt.meters.size(); ++m) erec[m][k] = energy[m];
    };

    auto in_fast = [&](double t) {
        if (opt.all_fast) return true;
        for (const auto& w : opt.fast_windows)
            if (t >= w.start && t < w.stop) return true;
        return false;
    };

    TraceSet out;
    StepStats stats;
    record(0);
    const double snap = 1e-6 * cfg_.dt_fast;
    for (std::size_t k = 1; k < n_out; ++k) {
        const double target = grid.time(k);
        while (s.time < target - snap) {
            double h = in_fast(s.time) ? cfg_.dt_fast : dt_out;
            h = std::min(h, target - s.time);
            State next = step(s, h, Integrator::trapezoidal, &stats);
            if (opt.locate_events && next.flags != s.flags && h > cfg_.event_tol) {
                double lo = 0.0, hi = h;
                while (hi - lo > cfg_.event_tol) {
                    const double mid = 0.5 * (lo + hi);
                    State m = step(s, mid, Integrator::trapezoidal, &stats);
                    if (m.flags != s.flags) {
                        hi = mid;
                        next = std::move(m);
                    } else {
                        lo = mid;
                    }
                }
                ++out.events;
            }
            for (std::size_t m = 0; m < opt.meters.size(); ++m) {
                const double p = meter_power(opt.meters[m], next);
                energy[m] += 0.5 * (p_prev[m] + p) * (next.time - s.time);
                p_prev[m] = p;
            }
            s = std::move(next);
            ++out.steps;
        }
        s.time = target;
        record(k);
    }
    out.newton_iterations = static_cast<std::size_t>(stats.newton_iterations);

    for (std::size_t p = 0; p < opt.probes.size(); ++p)
        out.traces.emplace_back(grid, std::move(rec[p]), opt.probes[p].unit, opt.probes[p].name);
    for (std::size_t m = 0; m < opt.meters.size(); ++m)
        out.energies.emplace_back(grid, std::move(erec[m]), Unit::joule, opt.meters[m].name);
    return out;
}

}  // namespace sawsim::engine
