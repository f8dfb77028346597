#include "sawsim/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace sawsim::kernels::avx2 {

namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

}  // namespace

bool available() { return true; }

// Vectorized over four consecutive outputs: for a block n..n+3 fully inside
// the region where every tap sees valid input, broadcast h[k] and FMA
// against x[n-k .. n-k+3]. Edges fall back to the scalar recurrence.
void convolve_complex(SplitComplexView h, SplitComplexView x, SplitComplexOut y) {
    const std::size_t nh = h.re.size();
    const std::size_t nx = x.re.size();
    const std::size_t ny = y.re.size();
    if (nh == 0 || nx == 0) return;

    // interior outputs n in [nh-1, nx-1] use all taps
    const std::size_t in_lo = nh - 1;
    const std::size_t in_hi = nx >= nh ? nx : 0;  // exclusive

    auto scalar_at = [&](std::size_t n) {
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
    };

    std::size_t n = 0;
    for (; n < ny && n < in_lo; ++n) scalar_at(n);
    for (; n + 4 <= in_hi; n += 4) {
        __m256d acc_re = _mm256_setzero_pd();
        __m256d acc_im = _mm256_setzero_pd();
        for (std::size_t k = 0; k < nh; ++k) {
            const __m256d hr = _mm256_broadcast_sd(&h.re[k]);
            const __m256d hi = _mm256_broadcast_sd(&h.im[k]);
            const __m256d xr = _mm256_loadu_pd(&x.re[n - k]);
            const __m256d xi = _mm256_loadu_pd(&x.im[n - k]);
            acc_re = _mm256_fmadd_pd(hr, xr, acc_re);
            acc_re = _mm256_fnmadd_pd(hi, xi, acc_re);
            acc_im = _mm256_fmadd_pd(hr, xi, acc_im);
            acc_im = _mm256_fmadd_pd(hi, xr, acc_im);
        }
        _mm256_storeu_pd(&y.re[n], acc_re);
        _mm256_storeu_pd(&y.im[n], acc_im);
    }
    for (; n < ny; ++n) scalar_at(n);
}

double trapezoid_product(std::span<const double> a, std::span<const double> b, double dt) {
    const std::size_t n = a.size();
    if (n < 2) return 0.0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[k]), _mm256_loadu_pd(&b[k]), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[k + 4]), _mm256_loadu_pd(&b[k + 4]), acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) acc += a[k] * b[k];
    acc -= 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]);
    return acc * dt;
}

void magnitude(SplitComplexView z, std::span<double> out) {
    const std::size_t n = out.size();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d r = _mm256_loadu_pd(&z.re[k]);
        const __m256d i = _mm256_loadu_pd(&z.im[k]);
        const __m256d m2 = _mm256_fmadd_pd(r, r, _mm256_mul_pd(i, i));
        _mm256_storeu_pd(&out[k], _mm256_sqrt_pd(m2));
    }
    for (; k < n; ++k) out[k] = std::sqrt(z.re[k] * z.re[k] + z.im[k] * z.im[k]);
}

}  // namespace sawsim::kernels::avx2
