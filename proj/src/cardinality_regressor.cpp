#include "it2ml/cardinality_regressor.hpp"

#include <algorithm>
#include <cmath>

#include "it2ml/errors.hpp"
#include "it2ml/kernels.hpp"

namespace it2ml {

double CardinalityRegressor::predict(std::span<const double> code) const {
    if (code.size() != coefficients.size())
        throw ShapeError("regressor: code dimension mismatch");
    const double raw = intercept + kernels::dot(coefficients.data(), code.data(), code.size());
    return std::clamp(raw, clamp_lo, clamp_hi);
}

namespace {

// Cholesky solve of the (b+1)x(b+1) SPD system; A is row-major, overwritten.
std::vector<double> cholesky_solve(std::vector<double>& a, std::vector<double> rhs,
                                   std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0) || !std::isfinite(d))
            throw NumericError("normal equations are singular; use ridge > 0");
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
    }
    // forward: L y = rhs
    for (std::size_t i = 0; i < n; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * rhs[k];
        rhs[i] = s / a[i * n + i];
    }
    // backward: L^T x = y
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * rhs[k];
        rhs[i] = s / a[i * n + i];
    }
    return rhs;
}

}  // namespace

CardinalityRegressor fit_regressor(const Matrix& codes, std::span<const double> counts,
                                   double clamp_hi, double ridge) {
    const std::size_t n = codes.rows, b = codes.cols;
    if (n == 0) throw InputError("regressor: empty design matrix");
    if (counts.size() != n) throw ShapeError("regressor: counts length mismatch");
    if (ridge <= 0.0 && n < b + 1)
        throw NumericError("underdetermined system without ridge regularization");

    // Augmented design [1 | Z]; penalty on every column except the intercept.
    const std::size_t m = b + 1;
    std::vector<double> ata(m * m, 0.0);
    std::vector<double> aty(m, 0.0);
    std::vector<double> g(m);
    for (std::size_t i = 0; i < n; ++i) {
        g[0] = 1.0;
        std::copy_n(codes.row_ptr(i), b, g.begin() + 1);
        for (std::size_t r = 0; r < m; ++r) {
            kernels::axpy(g[r], g.data(), ata.data() + r * m, m);
            aty[r] += g[r] * counts[i];
        }
    }
    for (std::size_t r = 1; r < m; ++r) ata[r * m + r] += ridge;

    const std::vector<double> beta = cholesky_solve(ata, aty, m);

    CardinalityRegressor reg;
    reg.intercept = beta[0];
    reg.coefficients.assign(beta.begin() + 1, beta.end());
    reg.clamp_lo = 1.0;
    reg.clamp_hi = clamp_hi;
    return reg;
}

double predict_mhat(const CardinalityRegressor& reg, const Autoencoder& ae,
                    std::span<const double> x) {
    return reg.predict(ae.encode_one(x));
}

}  // namespace it2ml
