#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "distro_eval/rl/mlp.hpp"

namespace distro_eval::rl {

inline constexpr double kMinLogStd = -5.0;
inline constexpr double kMaxLogStd = 2.0;

/// Gaussian policy: the MLP output is the action mean, the final parameter
/// is a state-independent log standard deviation.
class PolicyNet {
public:
    explicit PolicyNet(std::size_t hidden) : hidden_(hidden), params_(mlp_param_count(hidden) + 1, 0.0)
    {
        if (hidden == 0) {
            throw std::invalid_argument("hidden width must be positive");
        }
    }

    PolicyNet(std::size_t hidden, Rng& rng, double initial_log_std = 0.0) : PolicyNet(hidden)
    {
        mlp_init(params_, hidden_, rng);
        params_.back() = std::clamp(initial_log_std, kMinLogStd, kMaxLogStd);
    }

    std::size_t hidden() const noexcept { return hidden_; }
    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }
    std::span<const double> mlp_params() const noexcept { return std::span(params_).first(params_.size() - 1); }
    double log_std() const noexcept { return params_.back(); }
    std::size_t log_std_index() const noexcept { return params_.size() - 1; }

    double mean(const Features& x, MlpCache& cache) const { return mlp_forward(mlp_params(), hidden_, x, cache); }
    double mean(const Features& x) const { return mlp_forward(mlp_params(), hidden_, x); }

    /// params += step * direction, then re-clamp the log-std.
    void apply(std::span<const double> direction, double step)
    {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            params_[i] += step * direction[i];
        }
        clamp_log_std();
    }

    void clamp_log_std() { params_.back() = std::clamp(params_.back(), kMinLogStd, kMaxLogStd); }

    bool finite() const
    {
        return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
    }

private:
    std::size_t hidden_;
    std::vector<double> params_;
};

class ValueNet {
public:
    explicit ValueNet(std::size_t hidden) : hidden_(hidden), params_(mlp_param_count(hidden), 0.0)
    {
        if (hidden == 0) {
            throw std::invalid_argument("hidden width must be positive");
        }
    }

    ValueNet(std::size_t hidden, Rng& rng) : ValueNet(hidden) { mlp_init(params_, hidden_, rng); }

    std::size_t hidden() const noexcept { return hidden_; }
    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }

    double value(const Features& x, MlpCache& cache) const { return mlp_forward(params_, hidden_, x, cache); }
    double value(const Features& x) const { return mlp_forward(params_, hidden_, x); }

    /// Accumulates scale * dV/dparams.
    void accumulate_gradient(const Features& x, double scale, std::span<double> grad) const
    {
        MlpCache cache;
        mlp_forward(params_, hidden_, x, cache);
        mlp_backward(params_, hidden_, cache, scale, grad);
    }

    void apply(std::span<const double> direction, double step)
    {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            params_[i] += step * direction[i];
        }
    }

    bool finite() const
    {
        return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
    }

private:
    std::size_t hidden_;
    std::vector<double> params_;
};

inline double gaussian_log_density(double action, double mean, double log_std)
{
    const double z = (action - mean) * std::exp(-log_std);
    return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double policy_log_prob(const PolicyNet& policy, const Features& x, double action)
{
    return gaussian_log_density(action, policy.mean(x), policy.log_std());
}

/// Accumulates scale * d(log pi(action | x))/d(params), log-std included.
inline void accumulate_log_prob_gradient(const PolicyNet& policy, const Features& x, double action, double scale,
                                         std::span<double> grad)
{
    MlpCache cache;
    const double mu = policy.mean(x, cache);
    const double inv_var = std::exp(-2.0 * policy.log_std());
    const double diff = action - mu;
    mlp_backward(policy.mlp_params(), policy.hidden(), cache, scale * diff * inv_var, grad);
    grad[policy.log_std_index()] += scale * (diff * diff * inv_var - 1.0);
}

struct ActionSample {
    double action = 0.0;  ///< unclipped; the environment clips
    double log_prob = 0.0;
};

inline ActionSample policy_sample(const PolicyNet& policy, const Features& x, Rng& rng)
{
    const double mu = policy.mean(x);
    const double a = mu + std::exp(policy.log_std()) * rng.normal();
    return {a, gaussian_log_density(a, mu, policy.log_std())};
}

inline ActionSample policy_sample(const PolicyNet& policy, const PendulumParams& env, const PendulumState& state,
                                  Rng& rng)
{
    return policy_sample(policy, features(state, env), rng);
}

}  // namespace distro_eval::rl
