#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "oneshot/kernels.hpp"

using namespace oneshot;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

// a few ulps of slack for FMA contraction differences
constexpr double kUlps = 1e-13;

}  // namespace

TEST_CASE("scalar and AVX2 kernels agree on every operation") {
    if (!kernels::avx2_supported()) return;
    // Sizes around the vector width exercise the remainder loops.
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 33u, 1000u}) {
        auto x = random_vec(n, 100 + n), y0 = random_vec(n, 200 + n);

        auto y1 = y0, y2 = y0;
        kernels::scalar::axpy(n, 1.7, x.data(), y1.data());
        kernels::avx2::axpy(n, 1.7, x.data(), y2.data());
        for (std::size_t i = 0; i < n; ++i)
            CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(kUlps));

        CHECK(kernels::avx2::dot(n, x.data(), y0.data()) ==
              doctest::Approx(kernels::scalar::dot(n, x.data(), y0.data())).epsilon(kUlps));
        CHECK(kernels::avx2::sum(n, x.data()) ==
              doctest::Approx(kernels::scalar::sum(n, x.data())).epsilon(kUlps));
        CHECK(kernels::avx2::max_abs_diff(n, x.data(), y0.data()) ==
              kernels::scalar::max_abs_diff(n, x.data(), y0.data()));

        std::vector<double> a1(n), a2(n);
        kernels::scalar::affine(n, 2.5, -0.3, x.data(), a1.data());
        kernels::avx2::affine(n, 2.5, -0.3, x.data(), a2.data());
        for (std::size_t i = 0; i < n; ++i)
            CHECK(a2[i] == doctest::Approx(a1[i]).epsilon(kUlps));

        std::vector<double> t1(n), t2(n);
        kernels::scalar::tanh_vec(n, x.data(), t1.data());
        kernels::avx2::tanh_vec(n, x.data(), t2.data());
        for (std::size_t i = 0; i < n; ++i)
            CHECK(t2[i] == doctest::Approx(t1[i]).epsilon(1e-12));

        std::vector<double> d1(n), d2(n);
        kernels::scalar::tanh_backward(n, t1.data(), y0.data(), d1.data());
        kernels::avx2::tanh_backward(n, t1.data(), y0.data(), d2.data());
        for (std::size_t i = 0; i < n; ++i)
            CHECK(d2[i] == doctest::Approx(d1[i]).epsilon(kUlps));
    }
}

TEST_CASE("vectorized tanh matches std::tanh over the active range") {
    for (std::size_t n : {64u}) {
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = -20.0 + 40.0 * i / (n - 1);
        kernels::active().tanh_vec(n, x.data(), y.data());
        for (std::size_t i = 0; i < n; ++i) {
            double ref = std::tanh(x[i]);
            CHECK(std::abs(y[i] - ref) <= 4e-16 + 4e-16 * std::abs(ref));
        }
    }
}

TEST_CASE("adam_step variants agree and move parameters downhill") {
    const std::size_t n = 37;
    auto g = random_vec(n, 5);
    auto p0 = random_vec(n, 6);
    auto m0 = random_vec(n, 7, 0.1), v0 = random_vec(n, 8, 0.1);
    for (auto& x : v0) x = std::abs(x);

    auto p1 = p0, m1 = m0, v1 = v0;
    kernels::scalar::adam_step(n, p1.data(), g.data(), m1.data(), v1.data(), 1e-3, 0.9, 0.999,
                               1e-8, 0.1, 0.001);
    if (kernels::avx2_supported()) {
        auto p2 = p0, m2 = m0, v2 = v0;
        kernels::avx2::adam_step(n, p2.data(), g.data(), m2.data(), v2.data(), 1e-3, 0.9, 0.999,
                                 1e-8, 0.1, 0.001);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(p2[i] == doctest::Approx(p1[i]).epsilon(kUlps));
            CHECK(m2[i] == doctest::Approx(m1[i]).epsilon(kUlps));
            CHECK(v2[i] == doctest::Approx(v1[i]).epsilon(kUlps));
        }
    }
    // fresh moments, positive gradient -> parameter decreases
    std::vector<double> p(1, 1.0), gr(1, 2.0), m(1, 0.0), v(1, 0.0);
    kernels::scalar::adam_step(1, p.data(), gr.data(), m.data(), v.data(), 1e-3, 0.9, 0.999, 1e-8,
                               0.1, 0.001);
    CHECK(p[0] < 1.0);
}

TEST_CASE("backend dispatch can be forced and restored") {
    kernels::Backend original = kernels::active_backend();
    kernels::force_backend(kernels::Backend::Scalar);
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    CHECK(kernels::backend_name(kernels::Backend::Scalar) == "scalar");
    if (kernels::avx2_supported()) {
        kernels::force_backend(kernels::Backend::Avx2);
        CHECK(kernels::active_backend() == kernels::Backend::Avx2);
    }
    kernels::force_backend(original);
}
