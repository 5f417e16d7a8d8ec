#include "it2ml/optimizer.hpp"

#include <cmath>
#include <string>

#include "it2ml/errors.hpp"
#include "it2ml/kernels.hpp"

namespace it2ml {

void Optimizer::step(const std::vector<std::span<double>>& params,
                     const std::vector<std::span<const double>>& grads) {
    if (params.size() != grads.size())
        throw ShapeError("optimizer: parameter/gradient segment count mismatch");

    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].size() != grads[k].size())
            throw ShapeError("optimizer: segment " + std::to_string(k) + " size mismatch");
        for (double gv : grads[k]) {
            if (!std::isfinite(gv))
                throw NumericError("non-finite gradient in segment " + std::to_string(k));
        }
    }

    if (cfg_.kind == OptimizerConfig::Kind::adam && m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t k = 0; k < params.size(); ++k) {
            m_[k].assign(params[k].size(), 0.0);
            v_[k].assign(params[k].size(), 0.0);
        }
    }
    if (cfg_.kind == OptimizerConfig::Kind::adam && m_.size() != params.size())
        throw ShapeError("optimizer: segment count changed between steps");

    ++step_;
    if (cfg_.kind == OptimizerConfig::Kind::sgd) {
        for (std::size_t k = 0; k < params.size(); ++k) {
            kernels::axpy(-cfg_.lr, grads[k].data(), params[k].data(), params[k].size());
        }
        return;
    }

    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (m_[k].size() != params[k].size())
            throw ShapeError("optimizer: segment " + std::to_string(k) + " shape changed");
        double* th = params[k].data();
        const double* g = grads[k].data();
        double* m = m_[k].data();
        double* v = v_[k].data();
        for (std::size_t i = 0; i < params[k].size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            th[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace it2ml
