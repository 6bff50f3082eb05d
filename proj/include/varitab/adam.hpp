#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "varitab/rng.hpp"
#include "varitab/tensor.hpp"

namespace varitab {

enum class InitScheme { uniform_fan, zeros, ones };

// uniform_fan draws i.i.d. from [-1/sqrt(fan_in), +1/sqrt(fan_in)].
Tensor init_parameter(Shape shape, InitScheme scheme, int64_t fan_in, Rng& rng);

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // no weight decay
};

// Moments are keyed by parameter name so they survive embedding-table growth:
// a grown parameter keeps its prefix moments and new entries start at zero.
class AdamOptimizer {
public:
    explicit AdamOptimizer(AdamConfig config) : config_(config) {}

    void step(const std::vector<std::pair<std::string, Tensor>>& params);
    void reset();

    int64_t step_count() const { return t_; }
    const AdamConfig& config() const { return config_; }

private:
    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
    };
    AdamConfig config_;
    int64_t t_ = 0;
    std::map<std::string, Moments> state_;
};

}  // namespace varitab
