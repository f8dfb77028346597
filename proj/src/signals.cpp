#include "sawsim/signals.hpp"

#include "sawsim/error.hpp"
#include "sawsim/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace sawsim {

TimeGrid::TimeGrid(double t0_, double dt_, std::size_t n_) : t0(t0_), dt(dt_), n(n_) {
    if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorKind::config, "TimeGrid: dt must be > 0");
    if (n < 2) fail(ErrorKind::config, "TimeGrid: need at least 2 samples");
}

TimeGrid TimeGrid::covering(double t0, double duration, double dt) {
    if (!(duration > 0.0)) fail(ErrorKind::config, "TimeGrid: duration must be > 0");
    const auto steps = static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
    return TimeGrid(t0, dt, steps + 1);
}

bool TimeGrid::same_as(const TimeGrid& o) const {
    return n == o.n && std::abs(dt - o.dt) <= 1e-12 * dt && std::abs(t0 - o.t0) <= 1e-9 * dt;
}

const char* unit_symbol(Unit u) {
    switch (u) {
        case Unit::volt: return "V";
        case Unit::ampere: return "A";
        case Unit::watt: return "W";
        case Unit::joule: return "J";
        case Unit::dimensionless: return "1";
    }
    return "1";
}

Waveform::Waveform(TimeGrid grid, std::vector<double> samples, Unit unit, std::string name)
    : grid_(grid), samples_(std::move(samples)), unit_(unit), name_(std::move(name)) {
    if (samples_.size() != grid_.n)
        fail(ErrorKind::config, "Waveform '" + name_ + "': sample count does not match grid");
    for (double s : samples_)
        if (!std::isfinite(s)) fail(ErrorKind::solver, "Waveform '" + name_ + "': non-finite sample");
}

double Waveform::at(double t) const {
    const double u = (t - grid_.t0) / grid_.dt;
    if (u <= 0.0) return samples_.front();
    const auto k = static_cast<std::size_t>(u);
    if (k >= samples_.size() - 1) return samples_.back();
    const double f = u - static_cast<double>(k);
    return samples_[k] + f * (samples_[k + 1] - samples_[k]);
}

double Waveform::mean() const {
    return std::accumulate(samples_.begin(), samples_.end(), 0.0) /
           static_cast<double>(samples_.size());
}

Waveform Waveform::renamed(std::string name) const {
    Waveform w = *this;
    w.name_ = std::move(name);
    return w;
}

ComplexEnvelope::ComplexEnvelope(TimeGrid grid, double carrier_freq, std::vector<Complex> samples)
    : grid_(grid), carrier_(carrier_freq), samples_(std::move(samples)) {
    if (!(carrier_ > 0.0)) fail(ErrorKind::config, "ComplexEnvelope: carrier frequency must be > 0");
    if (samples_.size() != grid_.n)
        fail(ErrorKind::config, "ComplexEnvelope: sample count does not match grid");
}

std::vector<double> ComplexEnvelope::magnitude() const {
    std::vector<double> re(samples_.size()), im(samples_.size()), out(samples_.size());
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        re[k] = samples_[k].real();
        im[k] = samples_[k].imag();
    }
    kernels::magnitude({re, im}, out);
    return out;
}

ComplexEnvelope ComplexEnvelope::scaled(double k) const {
    std::vector<Complex> s(samples_);
    for (auto& z : s) z *= k;
    return ComplexEnvelope(grid_, carrier_, std::move(s));
}

namespace {

// Fraction of time within [a, b] (relative to period start) that a
// trapezoidal pulse is high, evaluated at one instant.
double pulse_level(double t, double on, double off, double edge) {
    if (edge <= 0.0) return (t >= on && t < off) ? 1.0 : 0.0;
    if (t < on || t >= off + edge) return 0.0;
    if (t < on + edge) return (t - on) / edge;
    if (t < off) return 1.0;
    return 1.0 - (t - off) / edge;
}

}  // namespace

Waveform make_pwm(const PwmSpec& spec, const TimeGrid& grid) {
    if (!(spec.freq > 0.0)) fail(ErrorKind::config, "make_pwm: freq must be > 0");
    if (!(spec.duty > 0.0 && spec.duty < 1.0)) fail(ErrorKind::config, "make_pwm: duty must be in (0,1)");
    const double period = 1.0 / spec.freq;
    if (period / grid.dt < 100.0)
        fail(ErrorKind::resolution, "make_pwm: grid too coarse, need >= 100 samples per period");
    if (spec.edge_time < 0.0 || spec.edge_time * 2.0 >= period * std::min(spec.duty, 1 - spec.duty) * 2.0)
        fail(ErrorKind::config, "make_pwm: edge_time must be >= 0 and shorter than the pulse");

    std::vector<double> s(grid.n);
    const double high_time = spec.duty * period;
    for (std::size_t k = 0; k < grid.n; ++k) {
        const double rel = grid.time(k) - grid.t0 - spec.phase;
        // position within the current period, in [0, period)
        double pos = std::fmod(rel, period);
        if (pos < 0.0) pos += period;
        // guard against fmod rounding just below a period boundary
        if (period - pos < 1e-9 * grid.dt) pos = 0.0;
        if (std::abs(pos - high_time) < 1e-9 * grid.dt) pos = high_time;
        double level = pulse_level(pos, 0.0, high_time, spec.edge_time);
        // tail of the previous period's falling ramp wraps around
        if (spec.edge_time > 0.0 && pos + period < high_time + spec.edge_time)
            level = std::max(level, pulse_level(pos + period, 0.0, high_time, spec.edge_time));
        s[k] = spec.low_level + level * (spec.high_level - spec.low_level);
    }
    return Waveform(grid, std::move(s), Unit::dimensionless, "pwm");
}

Waveform make_pulse_train(const std::vector<std::pair<double, double>>& pulses,
                          const TimeGrid& grid, double edge_time) {
    std::vector<double> s(grid.n, 0.0);
    for (const auto& [on, off] : pulses) {
        if (!(off > on)) fail(ErrorKind::config, "make_pulse_train: pulse stop must follow start");
        for (std::size_t k = 0; k < grid.n; ++k)
            s[k] = std::max(s[k], pulse_level(grid.time(k), on, off, edge_time));
    }
    return Waveform(grid, std::move(s), Unit::dimensionless, "command");
}

ComplexEnvelope am_modulate(const Waveform& command, double carrier_freq, double amplitude_at_high) {
    if (!(carrier_freq > 0.0)) fail(ErrorKind::config, "am_modulate: carrier must be > 0");
    std::vector<Complex> env(command.size());
    for (std::size_t k = 0; k < command.size(); ++k) {
        const double c = command[k];
        if (c < 0.0) fail(ErrorKind::config, "am_modulate: negative command sample (over-modulation)");
        if (c > 1.0 + 1e-12) fail(ErrorKind::config, "am_modulate: command sample above 1");
        env[k] = Complex(amplitude_at_high * c, 0.0);
    }
    return ComplexEnvelope(command.grid(), carrier_freq, std::move(env));
}

namespace {

struct Span {
    std::size_t first;
    std::size_t last;  // inclusive
};

Span window_span(const TimeGrid& g, std::optional<TimeWindow> window) {
    if (!window) return {0, g.n - 1};
    if (!(window->stop > window->start)) fail(ErrorKind::metric, "analysis window is empty");
    const double a = std::clamp((window->start - g.t0) / g.dt, 0.0, double(g.n - 1));
    const double b = std::clamp((window->stop - g.t0) / g.dt, 0.0, double(g.n - 1));
    Span s{static_cast<std::size_t>(std::ceil(a - 1e-9)), static_cast<std::size_t>(std::floor(b + 1e-9))};
    if (s.last <= s.first + 1) fail(ErrorKind::metric, "analysis window holds fewer than 3 samples");
    return s;
}

double plateau_of(std::span<const double> x, Span s) {
    const std::size_t len = s.last - s.first + 1;
    const std::size_t tail = std::max<std::size_t>(1, len / 20);
    std::vector<double> v(x.begin() + static_cast<long>(s.last + 1 - tail),
                          x.begin() + static_cast<long>(s.last + 1));
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
}

}  // namespace

std::optional<double> first_crossing(const Waveform& w, double level, Edge direction, double from) {
    const auto& g = w.grid();
    const auto x = w.samples();
    std::size_t k0 = 0;
    if (from > g.t0) k0 = std::min(g.n - 1, static_cast<std::size_t>(std::floor((from - g.t0) / g.dt)));
    for (std::size_t k = k0; k + 1 < x.size(); ++k) {
        const double a = x[k] - level;
        const double b = x[k + 1] - level;
        const bool hit = direction == Edge::rising ? (a < 0.0 && b >= 0.0) : (a > 0.0 && b <= 0.0);
        if (hit) {
            const double f = a / (a - b);
            const double t = g.time(k) + f * g.dt;
            if (t >= from) return t;
        }
    }
    return std::nullopt;
}

std::pair<double, double> transition_crossings(const Waveform& w, Edge direction, double lo,
                                               double hi, std::optional<TimeWindow> window) {
    const auto& g = w.grid();
    const Span s = window_span(g, window);
    const auto x = w.samples();
    const double base = x[s.first];
    const double plateau = plateau_of(x, s);
    const double excursion = plateau - base;
    if (direction == Edge::rising ? !(excursion > 0.0) : !(excursion < 0.0))
        fail(ErrorKind::metric, "no " + std::string(direction == Edge::rising ? "rising" : "falling") +
                                    " transition in '" + w.name() + "'");

    auto crossing = [&](double frac, std::size_t from) -> std::optional<std::pair<double, std::size_t>> {
        const double level = base + frac * excursion;
        for (std::size_t k = from; k < s.last; ++k) {
            const double a = (x[k] - level) * (excursion > 0 ? 1.0 : -1.0);
            const double b = (x[k + 1] - level) * (excursion > 0 ? 1.0 : -1.0);
            if (a < 0.0 && b >= 0.0) return std::pair{g.time(k) + a / (a - b) * g.dt, k};
        }
        return std::nullopt;
    };
    const auto c_lo = crossing(lo, s.first);
    if (!c_lo) fail(ErrorKind::metric, "no lower-threshold crossing in '" + w.name() + "'");
    const auto c_hi = crossing(hi, c_lo->second);
    if (!c_hi) fail(ErrorKind::metric, "no upper-threshold crossing in '" + w.name() + "'");
    return {c_lo->first, c_hi->first};
}

double rise_time_10_90(const Waveform& w, Edge direction, std::optional<TimeWindow> window) {
    const auto [t10, t90] = transition_crossings(w, direction, 0.1, 0.9, window);
    return t90 - t10;
}

namespace {

// Integral over [ta, tb] inside sample interval [k, k+1] of the linear
// interpolant of the product a*b, so partial and whole intervals agree with
// the trapezoidal rule and windows add exactly.
double partial_product(std::span<const double> a, std::span<const double> b, const TimeGrid& g,
                       std::size_t k, double ta, double tb) {
    const double p0 = a[k] * b[k], p1 = a[k + 1] * b[k + 1];
    auto lerp = [&](double t) { return p0 + (t - g.time(k)) / g.dt * (p1 - p0); };
    return 0.5 * (lerp(ta) + lerp(tb)) * (tb - ta);
}

double integrate_impl(std::span<const double> a, std::span<const double> b, const TimeGrid& g,
                      TimeWindow window) {
    const double ta = std::max(window.start, g.t0);
    const double tb = std::min(window.stop, g.end());
    if (!(tb > ta)) return 0.0;
    const double ua = (ta - g.t0) / g.dt;
    const double ub = (tb - g.t0) / g.dt;
    auto ka = static_cast<std::size_t>(std::ceil(ua - 1e-9));
    auto kb = static_cast<std::size_t>(std::floor(ub + 1e-9));
    if (ka > kb) {
        const auto k = static_cast<std::size_t>(std::floor(ua));
        return partial_product(a, b, g, std::min(k, g.n - 2), ta, tb);
    }
    double acc = 0.0;
    if (kb > ka) acc += kernels::trapezoid_product(a.subspan(ka, kb - ka + 1), b.subspan(ka, kb - ka + 1), g.dt);
    if (g.time(ka) > ta) acc += partial_product(a, b, g, ka - 1, ta, g.time(ka));
    if (g.time(kb) < tb) acc += partial_product(a, b, g, kb, g.time(kb), tb);
    return acc;
}

}  // namespace

double integrate_product(const Waveform& v, const Waveform& i, TimeWindow window) {
    if (!v.grid().same_as(i.grid())) fail(ErrorKind::config, "integrate_product: mismatched grids");
    return integrate_impl(v.samples(), i.samples(), v.grid(), window);
}

double integrate(const Waveform& w, TimeWindow window) {
    const std::vector<double> ones(w.size(), 1.0);
    return integrate_impl(w.samples(), ones, w.grid(), window);
}

void write_csv(std::ostream& os, std::span<const Waveform> traces) {
    if (traces.empty()) fail(ErrorKind::io, "write_csv: no traces");
    const TimeGrid& g = traces.front().grid();
    for (const auto& w : traces)
        if (!w.grid().same_as(g)) fail(ErrorKind::io, "write_csv: traces on different grids");
    os << "t_s";
    for (const auto& w : traces) os << ',' << w.name() << '_' << unit_symbol(w.unit());
    os << '\n';
    char buf[32];
    std::string line;
    for (std::size_t k = 0; k < g.n; ++k) {
        line.clear();
        std::snprintf(buf, sizeof buf, "%.8e", g.time(k));
        line += buf;
        for (const auto& w : traces) {
            std::snprintf(buf, sizeof buf, ",%.8e", w[k]);
            line += buf;
        }
        line += '\n';
        os << line;
    }
}

void write_csv(const std::string& path, std::span<const Waveform> traces) {
    std::ofstream f(path);
    if (!f) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    write_csv(f, traces);
    if (!f) fail(ErrorKind::io, "write failed for '" + path + "'");
}

}  // namespace sawsim
