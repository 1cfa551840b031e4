#pragma once

// Single-hidden-layer tanh network over a flat parameter vector.
//
// Layout for hidden width H (inputs = 3):
//   [0, 3H)    input weights, row-major by hidden unit
//   [3H, 4H)   hidden biases
//   [4H, 5H)   output weights
//   5H         output bias

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "distro_eval/rl/pendulum.hpp"
#include "distro_eval/rng.hpp"

namespace distro_eval::rl {

inline constexpr std::size_t kInputs = 3;

using Features = std::array<double, kInputs>;

inline constexpr std::size_t mlp_param_count(std::size_t hidden) { return kInputs * hidden + hidden + hidden + 1; }

inline Features features(const PendulumState& s, const PendulumParams& p)
{
    return {std::cos(s.theta), std::sin(s.theta), s.theta_dot / p.max_speed};
}

struct MlpCache {
    Features input{};
    std::vector<double> hidden;  ///< tanh activations
};

inline double mlp_forward(std::span<const double> params, std::size_t hidden, const Features& x, MlpCache& cache)
{
    const double* w1 = params.data();
    const double* b1 = w1 + kInputs * hidden;
    const double* w2 = b1 + hidden;
    const double b2 = w2[hidden];
    cache.input = x;
    cache.hidden.resize(hidden);
    double out = b2;
    for (std::size_t j = 0; j < hidden; ++j) {
        const double* row = w1 + kInputs * j;
        const double z = row[0] * x[0] + row[1] * x[1] + row[2] * x[2] + b1[j];
        const double h = std::tanh(z);
        cache.hidden[j] = h;
        out += w2[j] * h;
    }
    return out;
}

inline double mlp_forward(std::span<const double> params, std::size_t hidden, const Features& x)
{
    MlpCache cache;
    return mlp_forward(params, hidden, x, cache);
}

/// Accumulates output_grad * d(output)/d(params) into `grad`.
inline void mlp_backward(std::span<const double> params, std::size_t hidden, const MlpCache& cache,
                         double output_grad, std::span<double> grad)
{
    const double* w2 = params.data() + kInputs * hidden + hidden;
    double* gw1 = grad.data();
    double* gb1 = gw1 + kInputs * hidden;
    double* gw2 = gb1 + hidden;
    gw2[hidden] += output_grad;
    for (std::size_t j = 0; j < hidden; ++j) {
        const double h = cache.hidden[j];
        gw2[j] += output_grad * h;
        const double dz = output_grad * w2[j] * (1.0 - h * h);
        gb1[j] += dz;
        double* row = gw1 + kInputs * j;
        row[0] += dz * cache.input[0];
        row[1] += dz * cache.input[1];
        row[2] += dz * cache.input[2];
    }
}

/// Fan-in scaled uniform weights, zero biases.
inline void mlp_init(std::span<double> params, std::size_t hidden, Rng& rng)
{
    const double in_bound = 1.0 / std::sqrt(static_cast<double>(kInputs));
    const double out_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (std::size_t i = 0; i < mlp_param_count(hidden); ++i) {
        params[i] = 0.0;
    }
    for (std::size_t i = 0; i < kInputs * hidden; ++i) {
        params[i] = rng.uniform(-in_bound, in_bound);
    }
    double* w2 = params.data() + kInputs * hidden + hidden;
    for (std::size_t j = 0; j < hidden; ++j) {
        w2[j] = rng.uniform(-out_bound, out_bound);
    }
}

}  // namespace distro_eval::rl
