#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "it2ml/errors.hpp"

namespace it2ml {

// Interval type-2 machinery. A type-1 membership vector y in [0,1]^L is
// widened into per-label intervals [y^m_lower, y^m_upper] by a pair of
// fuzzifier exponents shared across the instance's labels:
//
//   m_lower = m_hat / card     (card = |y*| when training, [m_hat] at inference)
//   m_upper = m_hat / L
//
// Since card <= L, m_lower >= m_upper and y^m_lower <= y^m_upper on [0,1].

// Floor applied to y before exponentiation; d(y^m)/dy is unbounded at 0 for
// m < 1.
inline constexpr double kMembershipFloor = 1e-6;
// Guard added to the F1-surrogate denominators (all-zero y and y*).
inline constexpr double kLossEps = 1e-8;

struct FuzzifierPair {
    double m_lower = 1.0;
    double m_upper = 1.0;
};

struct It2Label {
    std::vector<double> lower;  // y^m_lower
    std::vector<double> upper;  // y^m_upper
    std::vector<double> y;      // source memberships
    FuzzifierPair pair;

    std::size_t size() const { return y.size(); }
};

struct Prediction {
    std::vector<std::uint8_t> y_hat;
    std::vector<double> bar_y;  // defuzzification scores
    int k = 0;                  // rounded cardinality used for top-k
};

// Round-half-up, clamped to [1, L].
int round_cardinality(double m_hat, std::size_t label_count);

// card must be in [1, L]; card == 0 means a zero-label instance leaked in.
FuzzifierPair derive_fuzzifiers(double m_hat, std::size_t card, std::size_t label_count);

It2Label build_interval(std::span<const double> y, FuzzifierPair pair,
                        double floor = kMembershipFloor);

// Dual-interval continuous-F1 loss in [-2, 0]:
//   E = -2 lower.y* / (1'(lower + y*) + eps) - 2 upper.y* / (1'(upper + y*) + eps)
double it2_loss(const It2Label& it2, std::span<const std::uint8_t> y_star, double eps = kLossEps);

// dE/dy, chained through both interval bounds. Zero where the membership
// floor is active.
std::vector<double> it2_loss_grad(const It2Label& it2, std::span<const std::uint8_t> y_star,
                                  double eps = kLossEps, double floor = kMembershipFloor);

// Single-interval (type-1) analogue: E = -2 y.y* / (1'(y + y*) + eps).
double type1_loss(std::span<const double> y, std::span<const std::uint8_t> y_star,
                  double eps = kLossEps);
std::vector<double> type1_loss_grad(std::span<const double> y,
                                    std::span<const std::uint8_t> y_star, double eps = kLossEps);

// Score each interval by midpoint minus lambda/2 * width, then set the top
// [m_hat] labels. Ties break toward the lower label index.
Prediction defuzzify(const It2Label& it2, double m_hat, double lambda);

// Type-1 ablation rule: y_hat_j = 1[y_j >= 1/L_hat]. By default L_hat is the
// rounded predicted cardinality; with threshold_by_label_count it is the
// total label count L.
Prediction type1_binarize(std::span<const double> y, double m_hat,
                          bool threshold_by_label_count = false);

}  // namespace it2ml
