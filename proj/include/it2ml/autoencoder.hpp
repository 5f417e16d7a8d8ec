#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "it2ml/dense_net.hpp"
#include "it2ml/matrix.hpp"
#include "it2ml/optimizer.hpp"
#include "it2ml/rng.hpp"

namespace it2ml {

// Cardinality one-hot: l[i] = 1 iff the instance belongs to exactly i+1
// categories. Count 0 has no valid index; zero-label instances must be
// filtered out before estimator training.
struct CardinalityOneHot {
    std::size_t class_index = 0;  // |y*| - 1
    std::size_t classes = 0;      // L

    static CardinalityOneHot from_count(std::size_t count, std::size_t label_count);
};

// Autoencoder with a softmax cardinality head on the bottleneck. The
// objective is squared reconstruction error plus eta times the cross-entropy
// of the head against the cardinality one-hot.
struct Autoencoder {
    DenseNet encoder;         // d -> ... -> b
    DenseNet decoder;         // b -> ... -> d
    DenseNet card_head;       // b -> L (affine; softmax applied in the loss)
    double eta = 1.0;

    std::size_t input_dim() const { return encoder.input_dim(); }
    std::size_t bottleneck_dim() const { return encoder.output_dim(); }
    std::size_t classes() const { return card_head.output_dim(); }

    Matrix encode(const Matrix& x) const { return encoder.predict(x); }
    std::vector<double> encode_one(std::span<const double> x) const;
};

Autoencoder make_autoencoder(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                             std::size_t bottleneck, std::size_t classes, double eta, Rng& rng);

// Single-instance objective value (pure; used by tests and diagnostics).
double ae_loss(const Autoencoder& ae, std::span<const double> x, const CardinalityOneHot& l);

struct AeTrainConfig {
    std::size_t epochs = 40;
    std::size_t batch = 128;
    OptimizerConfig opt{};  // adam, lr 1e-3
};

struct AeTrainResult {
    double initial_loss = 0;  // mean objective over the split, at init
    double final_loss = 0;
    std::size_t epochs_run = 0;
};

// Deterministic minibatch training. counts[i] = |y*_i| and must be >= 1.
// Throws InputError on an empty split.
AeTrainResult train_autoencoder(Autoencoder& ae, const Matrix& x,
                                std::span<const std::size_t> counts, const AeTrainConfig& cfg,
                                Rng& rng);

}  // namespace it2ml
