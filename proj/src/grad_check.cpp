#include "it2ml/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "it2ml/errors.hpp"

namespace it2ml {

GradCheckReport grad_check(const std::vector<std::span<double>>& params,
                           const std::function<double()>& loss_fn,
                           const std::vector<std::vector<double>>& analytic, double h, double tol,
                           std::size_t max_checks, Rng* rng) {
    if (analytic.size() != params.size())
        throw ShapeError("grad_check: analytic gradient segment count mismatch");
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (analytic[k].size() != params[k].size())
            throw ShapeError("grad_check: analytic segment size mismatch");
    }
    if (!std::isfinite(loss_fn())) throw NumericError("loss is non-finite at the base point");

    // Flat index list, optionally subsampled.
    std::vector<std::pair<std::size_t, std::size_t>> todo;
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k].size(); ++i) todo.emplace_back(k, i);
    }
    if (max_checks > 0 && todo.size() > max_checks) {
        Rng fallback(0x67c0de);
        Rng& r = rng ? *rng : fallback;
        r.shuffle(todo);
        todo.resize(max_checks);
    }

    GradCheckReport report;
    for (auto [k, i] : todo) {
        double& p = params[k][i];
        const double saved = p;
        p = saved + h;
        const double fp = loss_fn();
        p = saved - h;
        const double fm = loss_fn();
        p = saved;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[k][i];
        const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
        const double rel = std::fabs(a - numeric) / denom;
        report.max_rel_err = std::max(report.max_rel_err, rel);
        ++report.checked;
        if (rel > tol) report.failures.push_back({k, i, a, numeric, rel});
    }
    return report;
}

}  // namespace it2ml
