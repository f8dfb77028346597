#pragma once

// Fixed-topology companion-model transient solver.
//
// A Circuit is a short element list assembled by one of the testbench
// builders (see topologies.hpp). Each step applies the implicit trapezoidal
// rule to capacitors (charge form) and inductors and solves the resulting
// nodal equations with Newton iteration over the piecewise-linear devices.
// Device region changes (diode knees, HEMT threshold, third-quadrant
// conduction, PNP activation) are located by bisection of the step.

#include "sawsim/driver_output.hpp"
#include "sawsim/power_devices.hpp"
#include "sawsim/signals.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sawsim::engine {

struct SolverConfig {
    double dt_fast = 0.1e-9;
    double dt_slow = 1e-9;
    double event_tol = 1e-12;
    int max_newton_iters = 50;
    double newton_tol = 1e-9;

    void validate() const;
};

using Node = int;
inline constexpr Node ground = -1;

using TimeFunction = std::function<double(double)>;

enum class ElementKind {
    resistor,
    capacitor,        // linear or two-level charge model
    inductor,
    norton_source,    // V(t) behind R, between a (+) and b (-)
    current_source,   // I(t) injected into a, drawn from b
    diode,            // piecewise linear, anode a, cathode b
    sourced_diode,    // rectifier charging path: (emf(t) - drop - v_ab)+ / R into a
    hemt_channel,     // drain a, source b, gate c
    pnp_pulldown      // emitter a, base b, collector c
};

struct Element {
    ElementKind kind = ElementKind::resistor;
    std::string name;
    Node a = ground;
    Node b = ground;
    Node c = ground;
    double value = 0.0;   // R, C, L, or drop depending on kind
    double value2 = 0.0;  // diode r_s, sourced_diode R
    bool two_level = false;
    HemtSpec hemt;        // hemt_channel, two-level capacitor charge model
    PullDownSpec pnp;
    TimeFunction source;
    double initial = 0.0; // inductor current / capacitor voltage at t0
};

class Circuit {
public:
    Node add_node(std::string name);
    int node_count() const { return static_cast<int>(node_names_.size()); }
    const std::string& node_name(Node n) const { return node_names_.at(static_cast<std::size_t>(n)); }
    Node node(const std::string& name) const;

    int resistor(std::string name, Node a, Node b, double r);
    int capacitor(std::string name, Node a, Node b, double c, double v0 = 0.0);
    /// Gate-drain capacitor of `spec`, with v_ab = v_dg.
    int gd_capacitor(std::string name, Node drain, Node gate, const HemtSpec& spec);
    int inductor(std::string name, Node a, Node b, double l, double i0 = 0.0);
    int norton_source(std::string name, Node a, Node b, double r, TimeFunction v);
    int current_source(std::string name, Node into, Node from, TimeFunction i);
    int diode(std::string name, Node anode, Node cathode, const DiodeSpec& spec);
    int sourced_diode(std::string name, Node out, Node ret, double r, double drop, TimeFunction emf);
    int hemt_channel(std::string name, Node drain, Node gate, Node source, const HemtSpec& spec);
    int pnp_pulldown(std::string name, Node emitter, Node base, Node collector, const PullDownSpec& spec);

    /// Initial node voltage guess/value used at t0.
    void set_initial_voltage(Node n, double v);

    const std::vector<Element>& elements() const { return elements_; }
    const Element& element(int id) const { return elements_.at(static_cast<std::size_t>(id)); }
    int element_id(const std::string& name) const;
    const std::vector<double>& initial_voltages() const { return v0_; }

private:
    int push(Element e);
    std::vector<std::string> node_names_;
    std::vector<double> v0_;
    std::vector<Element> elements_;
};

enum class Integrator { trapezoidal, backward_euler };

struct State {
    double time = 0.0;
    std::vector<double> v;         // node voltages
    std::vector<double> i;         // per-element branch current a -> b at `time`
    std::vector<double> q;         // per-element charge (capacitors)
    std::vector<std::uint8_t> flags;  // device region bits, with 1 mV hysteresis
};

/// What to record. A probe is either a node-voltage difference or a signed
/// sum of element branch currents.
struct Probe {
    std::string name;
    Unit unit;
    Node plus = ground;
    Node minus = ground;
    std::vector<std::pair<int, double>> current_terms;

    static Probe voltage(std::string name, Node plus, Node minus = ground);
    static Probe current(std::string name, std::vector<std::pair<int, double>> terms);
};

/// Cumulative energy absorbed by a set of elements (v_ab * i_ab), recorded
/// as a running integral. Negative values mean net delivery.
struct EnergyMeter {
    std::string name;
    std::vector<int> elements;
};

struct FastWindow {
    double start;
    double stop;
};

struct RunOptions {
    double t0 = 0.0;
    double duration = 1e-6;
    double dt_out = 0.0;  // output grid spacing; 0 = dt_slow
    std::vector<FastWindow> fast_windows;  // dt_fast inside, dt_out outside
    bool all_fast = false;                 // use dt_fast everywhere
    bool locate_events = true;
    std::vector<Probe> probes;
    std::vector<EnergyMeter> meters;
};

struct TraceSet {
    std::vector<Waveform> traces;
    std::vector<Waveform> energies;  // one per meter, joules, cumulative
    std::size_t steps = 0;
    std::size_t events = 0;
    std::size_t newton_iterations = 0;

    const Waveform& operator[](const std::string& name) const;
    bool has(const std::string& name) const;
};

struct StepStats {
    int newton_iterations = 0;
    double max_residual = 0.0;   // worst KCL residual at convergence
    double residual_scale = 0.0; // current scale used for the tolerance
    double residual_floor = 0.0; // absolute roundoff allowance at that node
};

class Engine {
public:
    Engine(const Circuit& circuit, SolverConfig config);

    const Circuit& circuit() const { return circuit_; }
    const SolverConfig& config() const { return cfg_; }

    /// Consistent initial state: capacitor voltages from initial node
    /// voltages, inductor currents from their initial values.
    State initial_state(double t0) const;

    /// One integration step of size dt. Non-convergence halves the step
    /// (down to dt/64); beyond that throws ErrorKind::solver with a dump.
    State step(const State& s, double dt, Integrator method = Integrator::trapezoidal,
               StepStats* stats = nullptr) const;

    /// Bisects the interval [s.time, s.time + dt] for the first point where
    /// predicate changes sign, to within event_tol. Returns the event time;
    /// if `at_event` is given, it receives the state stepped to that time.
    double locate_event(const State& s, double dt, const std::function<double(const State&)>& predicate,
                        State* at_event = nullptr) const;

    /// Instantaneous absorbed power of an element.
    double element_power(int id, const State& s) const;
    double probe_value(const Probe& p, const State& s) const;

    TraceSet run(const RunOptions& options) const;
    /// Continues from a given state (used by periodic-steady-state drivers).
    TraceSet run_from(State& state, const RunOptions& options) const;

private:
    bool try_step(const State& s, double dt, Integrator method, State& out, StepStats& stats) const;
    State step_recursive(const State& s, double dt, Integrator method, int depth, StepStats& stats) const;
    void update_flags(const State& prev, State& next) const;

    Circuit circuit_;
    SolverConfig cfg_;
};

}  // namespace sawsim::engine
