#pragma once

// REINFORCE, one-step actor-critic and clipped-surrogate PPO on the
// Gaussian policy / value networks.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "distro_eval/rl/networks.hpp"

namespace distro_eval::rl {

struct Transition {
    Features obs{};
    double action = 0.0;
    double log_prob = 0.0;  ///< under the policy that collected it
    double reward = 0.0;
    Features next_obs{};
    bool terminal = false;
};

using Trajectory = std::vector<Transition>;

/// G_t = sum_{k >= t} gamma^(k-t) r_k.
inline std::vector<double> discounted_returns(const Trajectory& traj, double discount)
{
    std::vector<double> g(traj.size());
    double acc = 0.0;
    for (std::size_t t = traj.size(); t-- > 0;) {
        acc = traj[t].reward + discount * acc;
        g[t] = acc;
    }
    return g;
}

/// sum_t gamma^t G_t grad log pi(a_t | s_t).
inline std::vector<double> reinforce_gradient(const PolicyNet& policy, const Trajectory& traj, double discount)
{
    std::vector<double> grad(policy.params().size(), 0.0);
    const auto returns = discounted_returns(traj, discount);
    double weight = 1.0;
    for (std::size_t t = 0; t < traj.size(); ++t) {
        const double scale = weight * returns[t];
        if (scale != 0.0) {
            accumulate_log_prob_gradient(policy, traj[t].obs, traj[t].action, scale, grad);
        }
        weight *= discount;
    }
    return grad;
}

inline void reinforce_update(PolicyNet& policy, const Trajectory& traj, double step_size, double discount)
{
    if (step_size == 0.0 || traj.empty()) {
        return;
    }
    policy.apply(reinforce_gradient(policy, traj, discount), step_size);
}

/// TD error r + gamma V(s') [non-terminal] - V(s).
inline double td_error(const ValueNet& value, const Transition& tr, double discount)
{
    const double bootstrap = tr.terminal ? 0.0 : discount * value.value(tr.next_obs);
    return tr.reward + bootstrap - value.value(tr.obs);
}

/// Online one-step actor-critic; the TD error is computed before either
/// network moves.
inline void actor_critic_update(PolicyNet& policy, ValueNet& value, const Transition& tr, double policy_step,
                                double value_step, double discount)
{
    const double delta = td_error(value, tr, discount);
    if (delta == 0.0) {
        return;
    }
    std::vector<double> vgrad(value.params().size(), 0.0);
    value.accumulate_gradient(tr.obs, 1.0, vgrad);
    std::vector<double> pgrad(policy.params().size(), 0.0);
    accumulate_log_prob_gradient(policy, tr.obs, tr.action, 1.0, pgrad);
    value.apply(vgrad, value_step * delta);
    policy.apply(pgrad, policy_step * delta);
}

struct PpoConfig {
    double clip = 0.2;
    int epochs = 4;
    double policy_step = 1e-3;
    double value_step = 1e-3;
    double discount = 0.99;
    std::size_t minibatch_size = 64;  ///< 0 means one full-batch step per epoch
};

/// Flattened batch entry for the surrogate.
struct PpoSample {
    Features obs{};
    double action = 0.0;
    double old_log_prob = 0.0;
    double ret = 0.0;
    double advantage = 0.0;
};

/// Monte-Carlo advantages G_t - V(s_t), normalized over the batch.
inline std::vector<PpoSample> ppo_samples(const ValueNet& value, const std::vector<Trajectory>& batch,
                                          double discount)
{
    std::vector<PpoSample> out;
    for (const auto& traj : batch) {
        const auto returns = discounted_returns(traj, discount);
        for (std::size_t t = 0; t < traj.size(); ++t) {
            out.push_back({traj[t].obs, traj[t].action, traj[t].log_prob, returns[t],
                           returns[t] - value.value(traj[t].obs)});
        }
    }
    if (out.empty()) {
        return out;
    }
    double mean = 0.0;
    for (const auto& s : out) {
        mean += s.advantage;
    }
    mean /= static_cast<double>(out.size());
    double var = 0.0;
    for (const auto& s : out) {
        var += (s.advantage - mean) * (s.advantage - mean);
    }
    const double sd = std::max(std::sqrt(var / static_cast<double>(out.size())), 1e-8);
    for (auto& s : out) {
        s.advantage = (s.advantage - mean) / sd;
    }
    return out;
}

/// mean_t min(rho_t A_t, clip(rho_t, 1 - eps, 1 + eps) A_t).
inline double ppo_surrogate(const PolicyNet& policy, std::span<const PpoSample> samples, double clip)
{
    double acc = 0.0;
    for (const auto& s : samples) {
        const double ratio = std::exp(policy_log_prob(policy, s.obs, s.action) - s.old_log_prob);
        const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
        acc += std::min(ratio * s.advantage, clipped * s.advantage);
    }
    return acc / static_cast<double>(samples.size());
}

inline std::vector<double> ppo_surrogate_gradient(const PolicyNet& policy, std::span<const PpoSample> samples,
                                                  double clip)
{
    std::vector<double> grad(policy.params().size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    for (const auto& s : samples) {
        const double ratio = std::exp(policy_log_prob(policy, s.obs, s.action) - s.old_log_prob);
        // The clipped branch is the active minimum, and flat, exactly here.
        const bool clipped = (s.advantage > 0.0 && ratio > 1.0 + clip) || (s.advantage < 0.0 && ratio < 1.0 - clip);
        if (!clipped && s.advantage != 0.0) {
            accumulate_log_prob_gradient(policy, s.obs, s.action, ratio * s.advantage * inv_n, grad);
        }
    }
    return grad;
}

/// mean_t 1/2 (V(s_t) - G_t)^2.
inline double value_loss(const ValueNet& value, std::span<const PpoSample> samples)
{
    double acc = 0.0;
    for (const auto& s : samples) {
        const double err = value.value(s.obs) - s.ret;
        acc += 0.5 * err * err;
    }
    return acc / static_cast<double>(samples.size());
}

inline std::vector<double> value_loss_gradient(const ValueNet& value, std::span<const PpoSample> samples)
{
    std::vector<double> grad(value.params().size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    for (const auto& s : samples) {
        value.accumulate_gradient(s.obs, (value.value(s.obs) - s.ret) * inv_n, grad);
    }
    return grad;
}

/// Each epoch sweeps the batch in consecutive minibatches, taking one ascent
/// step on the surrogate and one descent step on the value loss per
/// minibatch.
inline void ppo_update(PolicyNet& policy, ValueNet& value, const std::vector<Trajectory>& batch,
                       const PpoConfig& cfg)
{
    if (!(cfg.clip > 0.0 && cfg.clip < 1.0)) {
        throw std::invalid_argument("PPO clip must lie in (0, 1)");
    }
    if (cfg.epochs <= 0) {
        return;
    }
    const auto samples = ppo_samples(value, batch, cfg.discount);
    if (samples.empty()) {
        throw std::invalid_argument("PPO batch is empty");
    }
    const std::size_t chunk = cfg.minibatch_size == 0 ? samples.size() : cfg.minibatch_size;
    const std::span<const PpoSample> all(samples);
    for (int e = 0; e < cfg.epochs; ++e) {
        for (std::size_t start = 0; start < all.size(); start += chunk) {
            const auto mb = all.subspan(start, std::min(chunk, all.size() - start));
            const auto pgrad = ppo_surrogate_gradient(policy, mb, cfg.clip);
            const auto vgrad = value_loss_gradient(value, mb);
            policy.apply(pgrad, cfg.policy_step);
            value.apply(vgrad, -cfg.value_step);
        }
    }
}

}  // namespace distro_eval::rl
