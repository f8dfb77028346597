#include "sawsim/kernels.hpp"

#include <cmath>

namespace sawsim::kernels::scalar {

void convolve_complex(SplitComplexView h, SplitComplexView x, SplitComplexOut y) {
    const std::size_t nh = h.re.size();
    const std::size_t nx = x.re.size();
    const std::size_t ny = y.re.size();
    for (std::size_t n = 0; n < ny; ++n) {
        // k ranges over taps with 0 <= n-k < nx
        const std::size_t k_lo = n >= nx ? n - nx + 1 : 0;
        const std::size_t k_hi = n < nh ? n + 1 : nh;
        double acc_re = 0.0;
        double acc_im = 0.0;
        for (std::size_t k = k_lo; k < k_hi; ++k) {
            const double xr = x.re[n - k];
            const double xi = x.im[n - k];
            acc_re += h.re[k] * xr - h.im[k] * xi;
            acc_im += h.re[k] * xi + h.im[k] * xr;
        }
        y.re[n] = acc_re;
        y.im[n] = acc_im;
    }
}

double trapezoid_product(std::span<const double> a, std::span<const double> b, double dt) {
    const std::size_t n = a.size();
    if (n < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
    acc -= 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
    return acc * dt;
}

void magnitude(SplitComplexView z, std::span<double> out) {
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = std::sqrt(z.re[k] * z.re[k] + z.im[k] * z.im[k]);
}

}  // namespace sawsim::kernels::scalar
