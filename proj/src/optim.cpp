#include "osids/nn/optim.hpp"

#include <cmath>

namespace osids::nn {

Optimizer::Optimizer(std::vector<Parameter*> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
    if (config_.method == OptMethod::Adam) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(static_cast<std::size_t>(params_[i]->value.size()), 0.0);
            v_[i].assign(static_cast<std::size_t>(params_[i]->value.size()), 0.0);
        }
    }
}

void Optimizer::step() {
    if (config_.method == OptMethod::SGD) {
        for (Parameter* p : params_)
            for (int i = 0; i < p->value.size(); ++i)
                p->value[i] = static_cast<float>(
                    p->value[i] - config_.learning_rate * p->grad[i]);
        return;
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Parameter* p = params_[pi];
        for (int i = 0; i < p->value.size(); ++i) {
            const double g = p->grad[i];
            auto& m = m_[pi][static_cast<std::size_t>(i)];
            auto& v = v_[pi][static_cast<std::size_t>(i)];
            m = config_.beta1 * m + (1.0 - config_.beta1) * g;
            v = config_.beta2 * v + (1.0 - config_.beta2) * g * g;
            const double m_hat = m / bc1;
            const double v_hat = v / bc2;
            p->value[i] = static_cast<float>(
                p->value[i] - config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon));
        }
    }
}

void Optimizer::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

} // namespace osids::nn
