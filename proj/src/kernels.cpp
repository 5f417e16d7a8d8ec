#include "it2ml/kernels.hpp"

#include <atomic>

#include "it2ml/errors.hpp"

namespace it2ml::kernels {

namespace {

struct Vtable {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sq_diff_sum)(const double*, const double*, std::size_t);
    void (*relu)(const double*, double*, std::size_t);
    void (*relu_mask)(const double*, const double*, double*, std::size_t);
};

constexpr Vtable kScalar{scalar::dot,         scalar::axpy, scalar::sum,
                         scalar::sq_diff_sum, scalar::relu, scalar::relu_mask};

#if defined(IT2ML_HAVE_AVX2)
constexpr Vtable kAvx2{avx2::dot,         avx2::axpy, avx2::sum,
                       avx2::sq_diff_sum, avx2::relu, avx2::relu_mask};
#endif

Backend pick_default() {
#if defined(IT2ML_HAVE_AVX2)
    if (cpu_supports_avx2()) return Backend::avx2;
#endif
    return Backend::scalar;
}

std::atomic<Backend> g_backend{pick_default()};

const Vtable& table() {
#if defined(IT2ML_HAVE_AVX2)
    if (g_backend.load(std::memory_order_relaxed) == Backend::avx2) return kAvx2;
#endif
    return kScalar;
}

}  // namespace

bool cpu_supports_avx2() {
#if defined(IT2ML_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (b == Backend::avx2) {
#if defined(IT2ML_HAVE_AVX2)
        if (!cpu_supports_avx2()) throw InputError("avx2 backend not supported on this CPU");
#else
        throw InputError("avx2 backend not compiled in");
#endif
    }
    g_backend.store(b, std::memory_order_relaxed);
}

std::string backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { table().axpy(alpha, x, y, n); }
double sum(const double* x, std::size_t n) { return table().sum(x, n); }
double sq_diff_sum(const double* a, const double* b, std::size_t n) {
    return table().sq_diff_sum(a, b, n);
}
void relu(const double* x, double* y, std::size_t n) { table().relu(x, y, n); }
void relu_mask(const double* pre, const double* dy, double* dx, std::size_t n) {
    table().relu_mask(pre, dy, dx, n);
}

}  // namespace it2ml::kernels
