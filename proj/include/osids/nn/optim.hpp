#pragma once

#include <cstdint>
#include <vector>

#include "osids/nn/graph.hpp"

namespace osids::nn {

enum class OptMethod { SGD, Adam };

struct OptimizerConfig {
    OptMethod method = OptMethod::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// In-place parameter updates from the accumulated gradients. Adam moment
// state is kept in double precision and indexed by registration order, so
// identical call sequences give bit-identical trajectories.
class Optimizer {
public:
    Optimizer(std::vector<Parameter*> params, OptimizerConfig config);

    void step();
    void zero_grad();

private:
    std::vector<Parameter*> params_;
    OptimizerConfig config_;
    std::vector<std::vector<double>> m_, v_;
    std::int64_t t_ = 0;
};

} // namespace osids::nn
