#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "it2ml/kernels.hpp"
#include "it2ml/rng.hpp"

using namespace it2ml;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

// reassociation/FMA differences only; tolerance scales with magnitude
void check_close(double a, double b, double scale) {
    CHECK(std::fabs(a - b) <= 1e-12 * std::max(1.0, scale));
}

}  // namespace

TEST_CASE("scalar reference kernels: hand-checked values") {
    const std::vector<double> a{1, 2, 3}, b{4, -5, 6};
    CHECK(kernels::scalar::dot(a.data(), b.data(), 3) == doctest::Approx(12.0));
    CHECK(kernels::scalar::sum(a.data(), 3) == doctest::Approx(6.0));
    CHECK(kernels::scalar::sq_diff_sum(a.data(), b.data(), 3) == doctest::Approx(9 + 49 + 9));

    std::vector<double> y{1, 1, 1};
    kernels::scalar::axpy(2.0, a.data(), y.data(), 3);
    CHECK(y == std::vector<double>{3, 5, 7});

    const std::vector<double> pre{-1, 0, 2};
    std::vector<double> out(3), dx(3);
    kernels::scalar::relu(pre.data(), out.data(), 3);
    CHECK(out == std::vector<double>{0, 0, 2});
    const std::vector<double> dy{5, 5, 5};
    kernels::scalar::relu_mask(pre.data(), dy.data(), dx.data(), 3);
    CHECK(dx == std::vector<double>{0, 0, 5});
}

#if defined(IT2ML_HAVE_AVX2)
TEST_CASE("avx2 kernels agree with the scalar reference") {
    if (!kernels::cpu_supports_avx2()) return;
    Rng rng(1234);
    // deliberately awkward sizes: empty, tails, unrolled blocks
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 63u, 257u, 1000u}) {
        const auto a = random_vec(rng, n);
        const auto b = random_vec(rng, n);

        check_close(kernels::avx2::dot(a.data(), b.data(), n),
                    kernels::scalar::dot(a.data(), b.data(), n), static_cast<double>(n) * 4);
        check_close(kernels::avx2::sum(a.data(), n), kernels::scalar::sum(a.data(), n),
                    static_cast<double>(n) * 2);
        check_close(kernels::avx2::sq_diff_sum(a.data(), b.data(), n),
                    kernels::scalar::sq_diff_sum(a.data(), b.data(), n),
                    static_cast<double>(n) * 16);

        auto y1 = random_vec(rng, n);
        auto y2 = y1;
        kernels::avx2::axpy(1.7, a.data(), y1.data(), n);
        kernels::scalar::axpy(1.7, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) check_close(y1[i], y2[i], 8);

        std::vector<double> r1(n), r2(n), m1(n), m2(n);
        kernels::avx2::relu(a.data(), r1.data(), n);
        kernels::scalar::relu(a.data(), r2.data(), n);
        CHECK(r1 == r2);  // bit-exact: max against 0
        kernels::avx2::relu_mask(a.data(), b.data(), m1.data(), n);
        kernels::scalar::relu_mask(a.data(), b.data(), m2.data(), n);
        CHECK(m1 == m2);
    }
}
#endif

TEST_CASE("backend dispatch is switchable and sticky") {
    const auto original = kernels::active_backend();
    kernels::set_backend(kernels::Backend::scalar);
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
    const std::vector<double> a{1, 2}, b{3, 4};
    CHECK(kernels::dot(a.data(), b.data(), 2) == doctest::Approx(11));
    kernels::set_backend(original);
}
