#pragma once

#include <span>
#include <vector>

#include "it2ml/matrix.hpp"
#include "it2ml/rng.hpp"

namespace it2ml {

// Output layer of the fuzziness initializer. Each label neuron j computes
//
//   g_j = 0.5 + alpha_j * (w_j.h - (sum(h) + sum(w_j)) / d)
//   y_j = clamp(g_j, 0, 1)
//
// i.e. a centered linear score shifted to 0.5 and hard-clamped to [0,1].
// The mean-subtraction acts as a data-dependent bias, so there is no separate
// bias parameter; alpha is a learned per-neuron scale starting at 1.
// Outside (0,1) the clamp gradient is exactly zero.
class MembershipHead {
  public:
    MembershipHead() = default;
    MembershipHead(std::size_t labels, std::size_t input_dim, Rng& rng);

    // Batch apply, n x d_in -> n x L in [0,1]. Caches for backward().
    const Matrix& forward(const Matrix& h);

    // Pure apply (no cache), safe for concurrent use.
    Matrix predict(const Matrix& h) const;
    std::vector<double> apply(std::span<const double> h) const;

    struct Grads {
        Matrix w;                   // L x d_in
        std::vector<double> alpha;  // L
        Matrix h;                   // n x d_in, for the backbone
    };
    // upstream = d(loss)/dy, n x L, at the batch passed to forward().
    Grads backward(const Matrix& upstream);

    std::size_t labels() const { return W_.rows; }
    std::size_t input_dim() const { return W_.cols; }
    std::size_t param_count() const { return W_.data.size() + alpha_.size(); }

    Matrix& weights() { return W_; }
    const Matrix& weights() const { return W_; }
    std::vector<double>& alpha() { return alpha_; }
    const std::vector<double>& alpha() const { return alpha_; }

    std::vector<std::span<double>> param_views();

  private:
    Matrix W_;                   // L x d_in
    std::vector<double> alpha_;  // L, initialized to 1

    Matrix cache_h_;  // n x d_in
    Matrix cache_z_;  // n x L, pre-alpha centered scores
    Matrix cache_y_;  // n x L, clamped outputs
    bool has_cache_ = false;

    void score_row(std::span<const double> h, double* g_out, double* z_out) const;
};

}  // namespace it2ml
