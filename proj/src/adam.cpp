#include "varitab/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace varitab {

Tensor init_parameter(Shape shape, InitScheme scheme, int64_t fan_in, Rng& rng) {
    switch (scheme) {
        case InitScheme::zeros:
            return Tensor::zeros(std::move(shape), true);
        case InitScheme::ones:
            return Tensor::full(std::move(shape), 1.0, true);
        case InitScheme::uniform_fan: {
            if (fan_in <= 0) throw std::invalid_argument("init_parameter: fan_in must be positive");
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            const int64_t n = shape_numel(shape);
            std::vector<double> v(static_cast<size_t>(n));
            for (double& x : v) x = rng.uniform(-bound, bound);
            return Tensor::from(std::move(shape), std::move(v), true);
        }
    }
    throw std::invalid_argument("init_parameter: unknown scheme");
}

void AdamOptimizer::step(const std::vector<std::pair<std::string, Tensor>>& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (const auto& [name, param] : params) {
        Tensor p = param;
        if (!p.has_grad()) continue;
        auto& mom = state_[name];
        const size_t n = p.values().size();
        if (mom.m.size() != n) mom.m.resize(n, 0.0);  // grown parameters keep prefix moments
        if (mom.v.size() != n) mom.v.resize(n, 0.0);
        auto& theta = p.values();
        const auto& g = p.grad();
        for (size_t i = 0; i < n; ++i) {
            mom.m[i] = config_.beta1 * mom.m[i] + (1.0 - config_.beta1) * g[i];
            mom.v[i] = config_.beta2 * mom.v[i] + (1.0 - config_.beta2) * g[i] * g[i];
            const double m_hat = mom.m[i] / bc1;
            const double v_hat = mom.v[i] / bc2;
            theta[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

void AdamOptimizer::reset() {
    t_ = 0;
    state_.clear();
}

}  // namespace varitab
