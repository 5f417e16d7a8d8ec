#pragma once

#include <span>
#include <vector>

#include "it2ml/autoencoder.hpp"
#include "it2ml/matrix.hpp"

namespace it2ml {

// Linear regression from bottleneck codes to label cardinality, with the
// output clamped to [1, L]. The fit is ridge-regularized least squares
// (intercept unpenalized); the clamp is what keeps m_hat a usable exponent
// numerator. The regressor never sees label vectors, only codes and counts.
struct CardinalityRegressor {
    std::vector<double> coefficients;
    double intercept = 0.0;
    double clamp_lo = 1.0;
    double clamp_hi = 1.0;

    double predict(std::span<const double> code) const;
};

// codes: n x b design matrix; counts: n targets (|y*| per instance).
// ridge = 0 solves plain least squares and throws NumericError when the
// normal equations are singular.
CardinalityRegressor fit_regressor(const Matrix& codes, std::span<const double> counts,
                                   double clamp_hi, double ridge = 1e-6);

// m_hat for a raw feature vector: clamp(intercept + coef . encode(x), 1, L).
double predict_mhat(const CardinalityRegressor& reg, const Autoencoder& ae,
                    std::span<const double> x);

}  // namespace it2ml
