#include "it2ml/it2.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace it2ml {

int round_cardinality(double m_hat, std::size_t label_count) {
    const int k = static_cast<int>(std::floor(m_hat + 0.5));
    return std::clamp(k, 1, static_cast<int>(label_count));
}

FuzzifierPair derive_fuzzifiers(double m_hat, std::size_t card, std::size_t label_count) {
    if (card == 0)
        throw InputError("zero-label instance reached fuzzifier derivation");
    if (card > label_count) throw InputError("cardinality exceeds label count");
    if (!(m_hat > 0.0) || !std::isfinite(m_hat)) throw InputError("m_hat must be finite positive");
    return {m_hat / static_cast<double>(card), m_hat / static_cast<double>(label_count)};
}

It2Label build_interval(std::span<const double> y, FuzzifierPair pair, double floor) {
    It2Label out;
    out.pair = pair;
    out.y.assign(y.begin(), y.end());
    out.lower.resize(y.size());
    out.upper.resize(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) {
        const double yf = std::max(y[j], floor);
        out.lower[j] = std::pow(yf, pair.m_lower);
        out.upper[j] = std::pow(yf, pair.m_upper);
    }
    return out;
}

namespace {

// One term of the surrogate: -2 v.y* / (1'(v + y*) + eps), plus its gradient
// w.r.t. v when grad != nullptr.
double f1_term(std::span<const double> v, std::span<const std::uint8_t> y_star, double eps,
               std::vector<double>* grad) {
    double inter = 0.0, denom = eps;
    for (std::size_t j = 0; j < v.size(); ++j) {
        inter += v[j] * y_star[j];
        denom += v[j] + y_star[j];
    }
    const double value = -2.0 * inter / denom;
    if (grad) {
        grad->resize(v.size());
        for (std::size_t j = 0; j < v.size(); ++j) {
            (*grad)[j] = -2.0 * y_star[j] / denom + 2.0 * inter / (denom * denom);
        }
    }
    return value;
}

}  // namespace

double it2_loss(const It2Label& it2, std::span<const std::uint8_t> y_star, double eps) {
    if (y_star.size() != it2.size()) throw ShapeError("it2_loss: label length mismatch");
    return f1_term(it2.lower, y_star, eps, nullptr) + f1_term(it2.upper, y_star, eps, nullptr);
}

std::vector<double> it2_loss_grad(const It2Label& it2, std::span<const std::uint8_t> y_star,
                                  double eps, double floor) {
    if (y_star.size() != it2.size()) throw ShapeError("it2_loss_grad: label length mismatch");
    std::vector<double> d_lower, d_upper;
    f1_term(it2.lower, y_star, eps, &d_lower);
    f1_term(it2.upper, y_star, eps, &d_upper);

    std::vector<double> grad(it2.size(), 0.0);
    for (std::size_t j = 0; j < it2.size(); ++j) {
        const double yj = it2.y[j];
        if (yj < floor) continue;  // floored: d(max(y,floor))/dy = 0
        const double yf = std::max(yj, floor);
        const double dl = it2.pair.m_lower * std::pow(yf, it2.pair.m_lower - 1.0);
        const double du = it2.pair.m_upper * std::pow(yf, it2.pair.m_upper - 1.0);
        grad[j] = d_lower[j] * dl + d_upper[j] * du;
    }
    return grad;
}

double type1_loss(std::span<const double> y, std::span<const std::uint8_t> y_star, double eps) {
    if (y_star.size() != y.size()) throw ShapeError("type1_loss: label length mismatch");
    return f1_term(y, y_star, eps, nullptr);
}

std::vector<double> type1_loss_grad(std::span<const double> y,
                                    std::span<const std::uint8_t> y_star, double eps) {
    if (y_star.size() != y.size()) throw ShapeError("type1_loss_grad: label length mismatch");
    std::vector<double> grad;
    f1_term(y, y_star, eps, &grad);
    return grad;
}

Prediction defuzzify(const It2Label& it2, double m_hat, double lambda) {
    if (lambda < 0.0) throw InputError("lambda must be >= 0");
    const std::size_t L = it2.size();
    Prediction pred;
    pred.bar_y.resize(L);
    for (std::size_t j = 0; j < L; ++j) {
        const double mid = 0.5 * (it2.upper[j] + it2.lower[j]);
        const double width = it2.upper[j] - it2.lower[j];
        pred.bar_y[j] = mid - 0.5 * lambda * width;
    }
    pred.k = round_cardinality(m_hat, L);

    std::vector<std::size_t> order(L);
    std::iota(order.begin(), order.end(), 0);
    // stable sort keeps ascending label index among equal scores
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pred.bar_y[a] > pred.bar_y[b]; });

    pred.y_hat.assign(L, 0);
    for (int r = 0; r < pred.k && r < static_cast<int>(L); ++r) pred.y_hat[order[r]] = 1;
    return pred;
}

Prediction type1_binarize(std::span<const double> y, double m_hat,
                          bool threshold_by_label_count) {
    const std::size_t L = y.size();
    Prediction pred;
    pred.k = round_cardinality(m_hat, L);
    const double denom =
        threshold_by_label_count ? static_cast<double>(L) : static_cast<double>(pred.k);
    const double threshold = 1.0 / denom;
    pred.bar_y.assign(y.begin(), y.end());
    pred.y_hat.assign(L, 0);
    for (std::size_t j = 0; j < L; ++j) pred.y_hat[j] = y[j] >= threshold ? 1 : 0;
    return pred;
}

}  // namespace it2ml
