#include "it2ml/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "it2ml/errors.hpp"
#include "it2ml/kernels.hpp"

namespace it2ml {

CardinalityOneHot CardinalityOneHot::from_count(std::size_t count, std::size_t label_count) {
    if (count == 0) throw InputError("cardinality one-hot undefined for zero-label instance");
    if (count > label_count) throw InputError("cardinality exceeds label count");
    return {count - 1, label_count};
}

std::vector<double> Autoencoder::encode_one(std::span<const double> x) const {
    return encoder.predict(Matrix::from_row(x)).data;
}

Autoencoder make_autoencoder(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                             std::size_t bottleneck, std::size_t classes, double eta, Rng& rng) {
    // Symmetric encoder/decoder: d -> hidden... -> b and b -> reversed hidden -> d.
    std::vector<std::size_t> enc_dims{input_dim};
    enc_dims.insert(enc_dims.end(), hidden.begin(), hidden.end());
    enc_dims.push_back(bottleneck);
    std::vector<Activation> enc_acts(enc_dims.size() - 1, Activation::relu);
    enc_acts.back() = Activation::linear;  // linear bottleneck

    std::vector<std::size_t> dec_dims{bottleneck};
    dec_dims.insert(dec_dims.end(), hidden.rbegin(), hidden.rend());
    dec_dims.push_back(input_dim);
    std::vector<Activation> dec_acts(dec_dims.size() - 1, Activation::relu);
    dec_acts.back() = Activation::linear;

    Autoencoder ae;
    ae.encoder = DenseNet(enc_dims, enc_acts, rng);
    ae.decoder = DenseNet(dec_dims, dec_acts, rng);
    ae.card_head = DenseNet({bottleneck, classes}, {Activation::linear}, rng);
    ae.eta = eta;
    return ae;
}

namespace {

// Returns log(sum(exp(logits))) and fills probs with softmax(logits).
double softmax_probs(std::span<const double> logits, std::vector<double>& probs) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    probs.resize(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) {
        probs[j] = std::exp(logits[j] - m);
        z += probs[j];
    }
    for (auto& p : probs) p /= z;
    return m + std::log(z);
}

}  // namespace

double ae_loss(const Autoencoder& ae, std::span<const double> x, const CardinalityOneHot& l) {
    if (l.classes != ae.classes()) throw ShapeError("cardinality one-hot class count mismatch");
    if (l.class_index >= l.classes) throw InputError("cardinality one-hot index out of range");
    const Matrix xm = Matrix::from_row(x);
    const Matrix z = ae.encoder.predict(xm);
    const Matrix xr = ae.decoder.predict(z);
    const double recon = kernels::sq_diff_sum(x.data(), xr.row_ptr(0), x.size());

    const Matrix logits = ae.card_head.predict(z);
    std::vector<double> probs;
    const double lse = softmax_probs(logits.row(0), probs);
    const double ce = lse - logits(0, l.class_index);
    return recon + ae.eta * ce;
}

namespace {

// Mean objective over all rows, pure (no caches touched).
double mean_loss(const Autoencoder& ae, const Matrix& x, std::span<const std::size_t> counts) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        acc += ae_loss(ae, x.row(i), CardinalityOneHot::from_count(counts[i], ae.classes()));
    }
    return acc / static_cast<double>(x.rows);
}

}  // namespace

AeTrainResult train_autoencoder(Autoencoder& ae, const Matrix& x,
                                std::span<const std::size_t> counts, const AeTrainConfig& cfg,
                                Rng& rng) {
    if (x.rows == 0) throw InputError("empty training split");
    if (counts.size() != x.rows) throw ShapeError("counts length must match row count");
    for (std::size_t c : counts) {
        if (c == 0 || c > ae.classes()) throw InputError("invalid cardinality in training split");
    }

    AeTrainResult result;
    result.initial_loss = mean_loss(ae, x, counts);

    Optimizer opt(cfg.opt);
    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), 0);

    auto params = ae.encoder.param_views();
    {
        auto dec = ae.decoder.param_views();
        auto head = ae.card_head.param_views();
        params.insert(params.end(), dec.begin(), dec.end());
        params.insert(params.end(), head.begin(), head.end());
    }

    std::vector<double> probs;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t bsz = std::min(cfg.batch, order.size() - start);
            Matrix xb(bsz, x.cols);
            for (std::size_t i = 0; i < bsz; ++i) {
                std::copy_n(x.row_ptr(order[start + i]), x.cols, xb.row_ptr(i));
            }

            const Matrix& z = ae.encoder.forward(xb);
            const Matrix& xr = ae.decoder.forward(z);
            const Matrix& logits = ae.card_head.forward(z);

            const double inv_b = 1.0 / static_cast<double>(bsz);
            Matrix d_xr(bsz, x.cols);
            Matrix d_logits(bsz, ae.classes());
            for (std::size_t i = 0; i < bsz; ++i) {
                for (std::size_t t = 0; t < x.cols; ++t) {
                    d_xr(i, t) = 2.0 * (xr(i, t) - xb(i, t)) * inv_b;
                }
                softmax_probs(logits.row(i), probs);
                const std::size_t cls = counts[order[start + i]] - 1;
                for (std::size_t j = 0; j < ae.classes(); ++j) {
                    d_logits(i, j) = ae.eta * (probs[j] - (j == cls ? 1.0 : 0.0)) * inv_b;
                }
            }

            NetGradients g_dec = ae.decoder.backward(d_xr);
            NetGradients g_head = ae.card_head.backward(d_logits);
            Matrix dz = std::move(g_dec.input);
            for (std::size_t i = 0; i < dz.data.size(); ++i) dz.data[i] += g_head.input.data[i];
            NetGradients g_enc = ae.encoder.backward(dz);

            auto grads = DenseNet::grad_views(g_enc);
            {
                auto gd = DenseNet::grad_views(g_dec);
                auto gh = DenseNet::grad_views(g_head);
                grads.insert(grads.end(), gd.begin(), gd.end());
                grads.insert(grads.end(), gh.begin(), gh.end());
            }
            opt.step(params, grads);
        }
        ++result.epochs_run;
    }

    result.final_loss = mean_loss(ae, x, counts);
    return result;
}

}  // namespace it2ml
