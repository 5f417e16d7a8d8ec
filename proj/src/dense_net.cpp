#include "it2ml/dense_net.hpp"

#include <cmath>

#include "it2ml/kernels.hpp"

namespace it2ml {

namespace {

void affine_forward(const Layer& layer, const Matrix& in, Matrix& pre) {
    const std::size_t n = in.rows, out = layer.out_dim();
    pre = Matrix(n, out);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = in.row_ptr(i);
        double* p = pre.row_ptr(i);
        for (std::size_t o = 0; o < out; ++o) {
            p[o] = kernels::dot(layer.W.row_ptr(o), x, layer.in_dim()) + layer.b[o];
        }
    }
}

void activate(Activation act, const Matrix& pre, Matrix& post) {
    post = Matrix(pre.rows, pre.cols);
    if (act == Activation::relu) {
        kernels::relu(pre.data.data(), post.data.data(), pre.data.size());
    } else {
        post.data = pre.data;
    }
}

}  // namespace

DenseNet::DenseNet(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                   Rng& rng) {
    if (dims.size() < 2) throw ShapeError("DenseNet needs at least input and output dims");
    if (acts.size() != dims.size() - 1)
        throw ShapeError("DenseNet activation count must match layer count");
    layers_.reserve(acts.size());
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        Layer layer;
        layer.W = Matrix(dims[k + 1], dims[k]);
        layer.b.assign(dims[k + 1], 0.0);
        layer.act = acts[k];
        const double bound = 1.0 / std::sqrt(static_cast<double>(dims[k]));
        for (auto& w : layer.W.data) w = rng.uniform(-bound, bound);
        layers_.push_back(std::move(layer));
    }
}

void DenseNet::check_input(const Matrix& batch) const {
    if (layers_.empty()) throw StateError("DenseNet has no layers");
    if (batch.cols != layers_.front().in_dim())
        throw ShapeError("batch has " + std::to_string(batch.cols) + " columns, net expects " +
                         std::to_string(layers_.front().in_dim()));
}

const Matrix& DenseNet::forward(const Matrix& batch) {
    check_input(batch);
    cache_input_ = batch;
    cache_pre_.assign(layers_.size(), Matrix{});
    cache_post_.assign(layers_.size(), Matrix{});
    const Matrix* in = &cache_input_;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        affine_forward(layers_[k], *in, cache_pre_[k]);
        activate(layers_[k].act, cache_pre_[k], cache_post_[k]);
        in = &cache_post_[k];
    }
    has_cache_ = true;
    return cache_post_.back();
}

Matrix DenseNet::predict(const Matrix& batch) const {
    check_input(batch);
    Matrix cur = batch, pre, post;
    for (const auto& layer : layers_) {
        affine_forward(layer, cur, pre);
        activate(layer.act, pre, post);
        cur = std::move(post);
    }
    return cur;
}

NetGradients DenseNet::backward(const Matrix& loss_grad) {
    if (!has_cache_) throw StateError("backward called before forward");
    const Matrix& out = cache_post_.back();
    if (!loss_grad.same_shape(out)) throw ShapeError("loss_grad shape does not match net output");

    NetGradients g;
    g.w.resize(layers_.size());
    g.b.resize(layers_.size());

    Matrix upstream = loss_grad;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        const Layer& layer = layers_[k];
        const Matrix& in = (k == 0) ? cache_input_ : cache_post_[k - 1];
        const std::size_t n = upstream.rows, out_dim = layer.out_dim(), in_dim = layer.in_dim();

        Matrix d_pre;
        if (layer.act == Activation::relu) {
            d_pre = Matrix(n, out_dim);
            kernels::relu_mask(cache_pre_[k].data.data(), upstream.data.data(),
                               d_pre.data.data(), d_pre.data.size());
        } else {
            d_pre = std::move(upstream);
        }

        g.w[k] = Matrix(out_dim, in_dim);
        g.b[k].assign(out_dim, 0.0);
        Matrix d_in(n, in_dim);
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = in.row_ptr(i);
            const double* dp = d_pre.row_ptr(i);
            double* dx = d_in.row_ptr(i);
            for (std::size_t o = 0; o < out_dim; ++o) {
                const double c = dp[o];
                if (c == 0.0) continue;
                kernels::axpy(c, x, g.w[k].row_ptr(o), in_dim);
                kernels::axpy(c, layer.W.row_ptr(o), dx, in_dim);
                g.b[k][o] += c;
            }
        }
        upstream = std::move(d_in);
    }
    g.input = std::move(upstream);
    return g;
}

std::size_t DenseNet::param_count() const {
    std::size_t c = 0;
    for (const auto& l : layers_) c += l.W.data.size() + l.b.size();
    return c;
}

std::size_t DenseNet::input_dim() const {
    return layers_.empty() ? 0 : layers_.front().in_dim();
}

std::size_t DenseNet::output_dim() const {
    return layers_.empty() ? 0 : layers_.back().out_dim();
}

std::vector<std::span<double>> DenseNet::param_views() {
    std::vector<std::span<double>> v;
    v.reserve(layers_.size() * 2);
    for (auto& l : layers_) {
        v.emplace_back(l.W.data);
        v.emplace_back(l.b);
    }
    return v;
}

std::vector<std::span<const double>> DenseNet::grad_views(const NetGradients& g) {
    std::vector<std::span<const double>> v;
    v.reserve(g.w.size() * 2);
    for (std::size_t k = 0; k < g.w.size(); ++k) {
        v.emplace_back(g.w[k].data);
        v.emplace_back(g.b[k]);
    }
    return v;
}

}  // namespace it2ml
