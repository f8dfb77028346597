#include "sawsim/kernels.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace sawsim::kernels;

namespace {

std::vector<double> noise(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

bool has_avx2() { return detected_isa() == Isa::avx2; }

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_CASE("convolution: avx2 agrees with scalar reference on odd lengths") {
    if (!has_avx2()) SKIP("no AVX2 on this machine/build");
    std::mt19937_64 rng(11);
    for (std::size_t nh : {1u, 3u, 4u, 7u, 33u, 260u}) {
        for (std::size_t nx : {1u, 2u, 5u, 64u, 1001u}) {
            auto hr = noise(rng, nh), hi = noise(rng, nh), xr = noise(rng, nx), xi = noise(rng, nx);
            const std::size_t ny = nh + nx - 1;
            std::vector<double> ar(ny), ai(ny), br(ny), bi(ny);
            scalar::convolve_complex({hr, hi}, {xr, xi}, {ar, ai});
            avx2::convolve_complex({hr, hi}, {xr, xi}, {br, bi});
            const double scale = std::max(1.0, max_abs(ar));
            for (std::size_t k = 0; k < ny; ++k) {
                REQUIRE(std::abs(ar[k] - br[k]) <= 1e-12 * scale * std::sqrt(double(nh)));
                REQUIRE(std::abs(ai[k] - bi[k]) <= 1e-12 * scale * std::sqrt(double(nh)));
            }
        }
    }
}

TEST_CASE("convolution with a unit impulse is the identity") {
    std::vector<double> hr{1.0}, hi{0.0};
    std::vector<double> xr{1, 2, 3, 4, 5}, xi{-1, 0, 1, 0, -1};
    std::vector<double> yr(5), yi(5);
    convolve_complex({hr, hi}, {xr, xi}, {yr, yi});
    CHECK(yr == xr);
    CHECK(yi == xi);
}

TEST_CASE("trapezoid product: avx2 agrees with scalar; exact on a line") {
    std::mt19937_64 rng(5);
    for (std::size_t n : {2u, 3u, 5u, 8u, 17u, 1000u, 4099u}) {
        auto a = noise(rng, n), b = noise(rng, n);
        const double s = scalar::trapezoid_product(a, b, 0.1);
        if (has_avx2()) {
            const double v = avx2::trapezoid_product(a, b, 0.1);
            REQUIRE(std::abs(s - v) <= 1e-12 * (1.0 + std::abs(s)) * std::sqrt(double(n)));
        }
    }
    // integral of t * 1 over [0, 1] is 1/2, exact for trapezoids
    std::vector<double> t(101), one(101, 1.0);
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = k * 0.01;
    CHECK(trapezoid_product(t, one, 0.01) == Catch::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("magnitude: both paths match hypot") {
    std::mt19937_64 rng(9);
    for (std::size_t n : {1u, 3u, 4u, 9u, 1025u}) {
        auto re = noise(rng, n), im = noise(rng, n);
        std::vector<double> a(n), b(n);
        scalar::magnitude({re, im}, a);
        for (std::size_t k = 0; k < n; ++k) REQUIRE(a[k] == Catch::Approx(std::hypot(re[k], im[k])).epsilon(1e-15));
        if (has_avx2()) {
            avx2::magnitude({re, im}, b);
            for (std::size_t k = 0; k < n; ++k) REQUIRE(std::abs(a[k] - b[k]) <= 4e-16 * a[k] + 1e-300);
        }
    }
}

TEST_CASE("dispatch honours set_isa and falls back without AVX2") {
    const Isa before = active_isa();
    CHECK(set_isa(Isa::scalar) == Isa::scalar);
    CHECK(active_isa() == Isa::scalar);
    const Isa got = set_isa(Isa::avx2);
    CHECK(got == detected_isa());
    set_isa(before);
    CHECK(std::string(isa_name(Isa::scalar)) == "scalar");
}
