#pragma once

#include <cstddef>
#include <string>

// Hot inner loops of the training engine: dot products, rank-1 updates and
// reductions over contiguous double arrays. Scalar reference implementations
// are the ground truth; an AVX2/FMA variant is selected at runtime when the
// CPU supports it. The two backends are equivalence-tested against each other
// (they may differ by reassociation rounding, never more).
//
// Backend selection is process-global and must not change mid-run: a run is
// bit-reproducible for a fixed seed *and* a fixed backend.

namespace it2ml::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
void set_backend(Backend b);  // throws InputError if unsupported on this CPU
bool cpu_supports_avx2();
std::string backend_name(Backend b);

// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// sum_i x[i]
double sum(const double* x, std::size_t n);

// sum_i (a[i]-b[i])^2
double sq_diff_sum(const double* a, const double* b, std::size_t n);

// y[i] = max(0, x[i])
void relu(const double* x, double* y, std::size_t n);

// dx[i] = pre[i] > 0 ? dy[i] : 0
void relu_mask(const double* pre, const double* dy, double* dx, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sq_diff_sum(const double* a, const double* b, std::size_t n);
void relu(const double* x, double* y, std::size_t n);
void relu_mask(const double* pre, const double* dy, double* dx, std::size_t n);
}  // namespace scalar

#if defined(IT2ML_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sq_diff_sum(const double* a, const double* b, std::size_t n);
void relu(const double* x, double* y, std::size_t n);
void relu_mask(const double* pre, const double* dy, double* dx, std::size_t n);
}  // namespace avx2
#endif

}  // namespace it2ml::kernels
