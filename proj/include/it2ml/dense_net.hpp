#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "it2ml/matrix.hpp"
#include "it2ml/rng.hpp"

namespace it2ml {

enum class Activation { linear, relu };

struct Layer {
    Matrix W;               // out x in
    std::vector<double> b;  // out
    Activation act = Activation::linear;

    std::size_t in_dim() const { return W.cols; }
    std::size_t out_dim() const { return W.rows; }
};

struct NetGradients {
    std::vector<Matrix> w;
    std::vector<std::vector<double>> b;
    Matrix input;  // d(loss)/d(batch), for chained heads
};

// Feedforward dense network with manual backprop. forward() caches the
// per-layer activations backward() consumes; predict() is the pure path and
// is safe to call concurrently on a const net.
class DenseNet {
  public:
    DenseNet() = default;

    // dims = {in, h1, ..., out}; acts has dims.size()-1 entries.
    // Weights are fan-in-scaled uniform: U(-1/sqrt(in), 1/sqrt(in)), biases 0.
    DenseNet(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts, Rng& rng);

    const Matrix& forward(const Matrix& batch);
    NetGradients backward(const Matrix& loss_grad);

    Matrix predict(const Matrix& batch) const;

    std::size_t param_count() const;
    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t depth() const { return layers_.size(); }

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    // Mutable views over every parameter tensor, in a stable order
    // (layer0.W, layer0.b, layer1.W, ...). Optimizers and the gradient
    // checker index segments by this order.
    std::vector<std::span<double>> param_views();
    static std::vector<std::span<const double>> grad_views(const NetGradients& g);

  private:
    std::vector<Layer> layers_;
    Matrix cache_input_;
    std::vector<Matrix> cache_pre_;   // pre-activation per layer
    std::vector<Matrix> cache_post_;  // post-activation per layer
    bool has_cache_ = false;

    void check_input(const Matrix& batch) const;
};

}  // namespace it2ml
