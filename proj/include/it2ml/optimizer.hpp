#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace it2ml {

struct OptimizerConfig {
    enum class Kind { sgd, adam };
    Kind kind = Kind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Applies SGD or Adam updates to a list of parameter segments. Moment buffers
// are allocated on the first step and must keep their shapes afterwards.
class Optimizer {
  public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    // params[k] and grads[k] must have identical length. Throws NumericError
    // (naming the offending segment) on non-finite gradients.
    void step(const std::vector<std::span<double>>& params,
              const std::vector<std::span<const double>>& grads);

    std::int64_t step_count() const { return step_; }
    const OptimizerConfig& config() const { return cfg_; }

    // Learning-rate schedules adjust this between steps; moments are kept.
    void set_lr(double lr) { cfg_.lr = lr; }

  private:
    OptimizerConfig cfg_;
    std::int64_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace it2ml
