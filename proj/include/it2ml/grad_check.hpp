#pragma once

#include <functional>
#include <span>
#include <vector>

#include "it2ml/rng.hpp"

namespace it2ml {

struct GradCheckIssue {
    std::size_t segment = 0;
    std::size_t index = 0;
    double analytic = 0;
    double numeric = 0;
    double rel_err = 0;
};

struct GradCheckReport {
    std::size_t checked = 0;
    double max_rel_err = 0;
    std::vector<GradCheckIssue> failures;
    bool ok() const { return failures.empty(); }
};

// Central-difference verification of analytic gradients.
//
//   params    mutable views of every parameter segment
//   loss_fn   evaluates the loss at the current parameter values (pure)
//   analytic  gradients per segment, evaluated once at the base point
//   h         perturbation step
//   tol       relative-error threshold for flagging
//   max_checks  if >0 and the net has more parameters, check a random
//               subsample (deterministic under rng)
//
// Relative error uses max(|a|,|n|, 1e-6) as denominator so near-zero
// gradients are compared absolutely. Throws NumericError if the loss is
// non-finite at the base point.
GradCheckReport grad_check(const std::vector<std::span<double>>& params,
                           const std::function<double()>& loss_fn,
                           const std::vector<std::vector<double>>& analytic,
                           double h = 1e-5, double tol = 1e-4,
                           std::size_t max_checks = 0, Rng* rng = nullptr);

}  // namespace it2ml
