#pragma once

// C1 one-sided ramp: exactly 0 for x <= 0, exactly x beyond d, cubic
// 2x^2/d - x^3/d^2 in between (monotone, never above x). Newton cycles on
// hard piecewise-linear corners; this keeps every device exactly off below
// its knee and exactly on its linear law above it.

namespace sawsim::detail {

struct Ramp {
    double y;
    double dy;
};

inline Ramp ramp(double x, double d) {
    if (x <= 0.0) return {0.0, 0.0};
    if (x >= d) return {x, 1.0};
    const double u = x / d;
    return {x * u * (2.0 - u), u * (4.0 - 3.0 * u)};
}

inline constexpr double knee_volts = 1e-3;
inline constexpr double knee_amps = 1e-4;

}  // namespace sawsim::detail
