#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and,
// on x86-64 builds, an AVX2/FMA version; the dispatcher picks one at runtime
// from CPUID. Results of the two paths agree to rounding (FMA contraction and
// summation order differ), never bit-for-bit.

#include <cstddef>
#include <span>

namespace sawsim::kernels {

enum class Isa { scalar, avx2 };

/// Best ISA supported by both the build and the running CPU.
Isa detected_isa();
/// ISA currently used by the dispatching entry points.
Isa active_isa();
/// Forces an ISA (tests, benchmarks). Requesting avx2 on a machine without it
/// falls back to scalar. Returns the ISA actually selected.
Isa set_isa(Isa isa);
const char* isa_name(Isa isa);

/// Full linear convolution of a complex signal with a complex kernel, in
/// split (real/imag) layout: y[n] = sum_k h[k] * x[n-k].
/// y must have x.size() + h.size() - 1 elements.
struct SplitComplexView {
    std::span<const double> re;
    std::span<const double> im;
};
struct SplitComplexOut {
    std::span<double> re;
    std::span<double> im;
};

void convolve_complex(SplitComplexView h, SplitComplexView x, SplitComplexOut y);

/// Trapezoid-weighted inner product: dt * (sum a[k]b[k] - (a0 b0 + aN bN)/2).
double trapezoid_product(std::span<const double> a, std::span<const double> b, double dt);

/// out[k] = sqrt(re[k]^2 + im[k]^2)
void magnitude(SplitComplexView z, std::span<double> out);

namespace scalar {
void convolve_complex(SplitComplexView h, SplitComplexView x, SplitComplexOut y);
double trapezoid_product(std::span<const double> a, std::span<const double> b, double dt);
void magnitude(SplitComplexView z, std::span<double> out);
}  // namespace scalar

namespace avx2 {
bool available();
void convolve_complex(SplitComplexView h, SplitComplexView x, SplitComplexOut y);
double trapezoid_product(std::span<const double> a, std::span<const double> b, double dt);
void magnitude(SplitComplexView z, std::span<double> out);
}  // namespace avx2

}  // namespace sawsim::kernels
