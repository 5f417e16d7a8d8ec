#include "it2ml/membership_head.hpp"

#include <cmath>

#include "it2ml/kernels.hpp"

namespace it2ml {

namespace {
inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }
}

MembershipHead::MembershipHead(std::size_t labels, std::size_t input_dim, Rng& rng) {
    if (labels == 0 || input_dim == 0) throw ShapeError("membership head dims must be positive");
    W_ = Matrix(labels, input_dim);
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (auto& w : W_.data) w = rng.uniform(-bound, bound);
    alpha_.assign(labels, 1.0);
}

void MembershipHead::score_row(std::span<const double> h, double* g_out, double* z_out) const {
    const std::size_t d = input_dim();
    const double mean_h = kernels::sum(h.data(), d) / static_cast<double>(d);
    for (std::size_t j = 0; j < labels(); ++j) {
        const double wj_sum = kernels::sum(W_.row_ptr(j), d);
        const double z = kernels::dot(W_.row_ptr(j), h.data(), d) -
                         (mean_h + wj_sum / static_cast<double>(d));
        if (z_out) z_out[j] = z;
        g_out[j] = 0.5 + alpha_[j] * z;
    }
}

const Matrix& MembershipHead::forward(const Matrix& h) {
    if (h.cols != input_dim()) throw ShapeError("membership head input dim mismatch");
    cache_h_ = h;
    cache_z_ = Matrix(h.rows, labels());
    cache_y_ = Matrix(h.rows, labels());
    std::vector<double> g(labels());
    for (std::size_t i = 0; i < h.rows; ++i) {
        score_row(h.row(i), g.data(), cache_z_.row_ptr(i));
        for (std::size_t j = 0; j < labels(); ++j) cache_y_(i, j) = clamp01(g[j]);
    }
    has_cache_ = true;
    return cache_y_;
}

Matrix MembershipHead::predict(const Matrix& h) const {
    if (h.cols != input_dim()) throw ShapeError("membership head input dim mismatch");
    Matrix out(h.rows, labels());
    std::vector<double> g(labels());
    for (std::size_t i = 0; i < h.rows; ++i) {
        score_row(h.row(i), g.data(), nullptr);
        for (std::size_t j = 0; j < labels(); ++j) out(i, j) = clamp01(g[j]);
    }
    return out;
}

std::vector<double> MembershipHead::apply(std::span<const double> h) const {
    Matrix out = predict(Matrix::from_row(h));
    return out.data;
}

MembershipHead::Grads MembershipHead::backward(const Matrix& upstream) {
    if (!has_cache_) throw StateError("membership head backward called before forward");
    if (upstream.rows != cache_h_.rows || upstream.cols != labels())
        throw ShapeError("membership head upstream shape mismatch");

    const std::size_t n = cache_h_.rows, d = input_dim(), L = labels();
    const double inv_d = 1.0 / static_cast<double>(d);

    Grads g;
    g.w = Matrix(L, d);
    g.alpha.assign(L, 0.0);
    g.h = Matrix(n, d);

    for (std::size_t i = 0; i < n; ++i) {
        const double* h = cache_h_.row_ptr(i);
        double* dh = g.h.row_ptr(i);
        for (std::size_t j = 0; j < L; ++j) {
            const double z = cache_z_(i, j);
            const double gval = 0.5 + alpha_[j] * z;
            if (gval <= 0.0 || gval >= 1.0) continue;  // clamp region: zero gradient
            const double up = upstream(i, j);
            if (up == 0.0) continue;
            // dy/dw_j = alpha_j * (h - 1/d), dy/dalpha_j = z, dy/dh = alpha_j * (w_j - 1/d)
            const double c = up * alpha_[j];
            double* dwj = g.w.row_ptr(j);
            kernels::axpy(c, h, dwj, d);
            for (std::size_t t = 0; t < d; ++t) dwj[t] -= c * inv_d;
            g.alpha[j] += up * z;
            kernels::axpy(c, W_.row_ptr(j), dh, d);
            for (std::size_t t = 0; t < d; ++t) dh[t] -= c * inv_d;
        }
    }
    return g;
}

std::vector<std::span<double>> MembershipHead::param_views() {
    return {std::span<double>(W_.data), std::span<double>(alpha_)};
}

}  // namespace it2ml
