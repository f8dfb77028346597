#include "sawsim/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace sawsim::kernels {

#if !defined(SAWSIM_BUILD_AVX2)
namespace avx2 {
bool available() { return false; }
void convolve_complex(SplitComplexView h, SplitComplexView x, SplitComplexOut y) {
    scalar::convolve_complex(h, x, y);
}
double trapezoid_product(std::span<const double> a, std::span<const double> b, double dt) {
    return scalar::trapezoid_product(a, b, dt);
}
void magnitude(SplitComplexView z, std::span<double> out) { scalar::magnitude(z, out); }
}  // namespace avx2
#endif

namespace {

bool cpu_has_avx2() {
#if defined(SAWSIM_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa initial_isa() {
    const char* force = std::getenv("SAWSIM_ISA");
    if (force != nullptr && std::strcmp(force, "scalar") == 0) return Isa::scalar;
    return detected_isa();
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

Isa detected_isa() {
    static const bool has = cpu_has_avx2() && avx2::available();
    return has ? Isa::avx2 : Isa::scalar;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

Isa set_isa(Isa isa) {
    if (isa == Isa::avx2 && detected_isa() != Isa::avx2) isa = Isa::scalar;
    current().store(isa, std::memory_order_relaxed);
    return isa;
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void convolve_complex(SplitComplexView h, SplitComplexView x, SplitComplexOut y) {
    if (active_isa() == Isa::avx2)
        avx2::convolve_complex(h, x, y);
    else
        scalar::convolve_complex(h, x, y);
}

double trapezoid_product(std::span<const double> a, std::span<const double> b, double dt) {
    return active_isa() == Isa::avx2 ? avx2::trapezoid_product(a, b, dt)
                                     : scalar::trapezoid_product(a, b, dt);
}

void magnitude(SplitComplexView z, std::span<double> out) {
    if (active_isa() == Isa::avx2)
        avx2::magnitude(z, out);
    else
        scalar::magnitude(z, out);
}

}  // namespace sawsim::kernels
