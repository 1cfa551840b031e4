#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "distro_eval/experiment.hpp"
#include "distro_eval/hyperparams.hpp"
#include "distro_eval/rl/algorithms.hpp"
#include "distro_eval/rl/pendulum.hpp"

namespace distro_eval::rl {

enum class Algorithm { reinforce, actor_critic, ppo };

inline const char* to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::reinforce: return "reinforce";
    case Algorithm::actor_critic: return "actor-critic";
    case Algorithm::ppo: return "ppo";
    }
    return "?";
}

inline Algorithm parse_algorithm(const std::string& name)
{
    if (name == "reinforce") return Algorithm::reinforce;
    if (name == "actor-critic") return Algorithm::actor_critic;
    if (name == "ppo") return Algorithm::ppo;
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::reinforce, Algorithm::actor_critic, Algorithm::ppo};

/// Sweep box per algorithm.
inline HyperParamSpace declared_space(Algorithm a)
{
    std::vector<Dim> dims{
        {"policy_step_size", 1e-5, 1e-1, Scale::log, Kind::continuous},
        {"discount", 0.9, 0.999, Scale::linear, Kind::continuous},
        {"hidden_width", 8, 64, Scale::linear, Kind::integer},
    };
    if (a == Algorithm::actor_critic || a == Algorithm::ppo) {
        dims.push_back({"value_step_size", 1e-5, 1e-1, Scale::log, Kind::continuous});
    }
    if (a == Algorithm::ppo) {
        dims.push_back({"clip_epsilon", 0.05, 0.4, Scale::linear, Kind::continuous});
        dims.push_back({"epochs", 1, 10, Scale::linear, Kind::integer});
    }
    return HyperParamSpace(std::move(dims));
}

inline HyperParamSpace declared_space(const std::string& algorithm) { return declared_space(parse_algorithm(algorithm)); }

struct TrainOptions {
    PendulumParams env{};
    int episodes = 100;
    int ppo_batch_episodes = 5;
    double initial_log_std = 0.0;
    /// Report the mean reward of greedy post-training episodes instead of
    /// the lifetime average.
    bool evaluate_after_training = false;
    int evaluation_episodes = 10;
    /// false runs the same episodes with every update skipped: the untrained
    /// random-policy baseline.
    bool learning = true;
};

class DivergedError : public std::runtime_error {
public:
    DivergedError() : std::runtime_error("diverged") {}
};

namespace detail {

inline void check_finite(const PolicyNet& policy)
{
    if (!policy.finite()) {
        throw DivergedError();
    }
}

inline void check_finite(const ValueNet& value)
{
    if (!value.finite()) {
        throw DivergedError();
    }
}

struct Agent {
    PolicyNet policy;
    ValueNet value;
};

/// Runs one episode with the stochastic policy. `on_step` sees each
/// transition as it happens (used by the online actor-critic).
template <class OnStep>
Trajectory rollout(const PendulumParams& env, const PolicyNet& policy, Rng& rng, double& reward_sum, OnStep&& on_step)
{
    Trajectory traj;
    traj.reserve(static_cast<std::size_t>(env.steps_per_episode));
    PendulumState s = pendulum_reset(env, rng);
    for (int t = 0; t < env.steps_per_episode; ++t) {
        Transition tr;
        tr.obs = features(s, env);
        const ActionSample a = policy_sample(policy, tr.obs, rng);
        if (!std::isfinite(a.action) || !std::isfinite(a.log_prob)) {
            throw DivergedError();
        }
        const StepResult step = pendulum_step(env, s, a.action);
        tr.action = a.action;
        tr.log_prob = a.log_prob;
        tr.reward = step.reward;
        tr.next_obs = features(step.next, env);
        // The episode ends on a time limit, not a terminal state.
        tr.terminal = false;
        reward_sum += step.reward;
        on_step(tr);
        traj.push_back(tr);
        s = step.next;
    }
    return traj;
}

inline double greedy_evaluation(const PendulumParams& env, const PolicyNet& policy, Rng& rng, int episodes)
{
    double sum = 0.0;
    for (int e = 0; e < episodes; ++e) {
        PendulumState s = pendulum_reset(env, rng);
        for (int t = 0; t < env.steps_per_episode; ++t) {
            const StepResult step = pendulum_step(env, s, policy.mean(features(s, env)));
            sum += step.reward;
            s = step.next;
        }
    }
    return sum / (static_cast<double>(episodes) * env.steps_per_episode);
}

}  // namespace detail

/// Trains from a seed-determined initialization and returns the mean of all
/// per-step rewards seen during training (or the greedy evaluation average
/// when requested). Throws DivergedError on non-finite parameters.
inline double train_agent(Algorithm algorithm, const HyperParamPoint& point, std::uint64_t seed,
                          const TrainOptions& opts = {})
{
    const HyperParamSpace space = declared_space(algorithm);
    space.validate(point);
    opts.env.validate();
    if (opts.episodes <= 0) {
        throw std::invalid_argument("episodes must be positive");
    }

    const double policy_step = point.at("policy_step_size");
    const double discount = point.at("discount");
    const auto hidden = static_cast<std::size_t>(point.at("hidden_width"));

    Rng rng(seed);
    PolicyNet policy(hidden, rng, opts.initial_log_std);
    ValueNet value(hidden, rng);

    double reward_sum = 0.0;
    const auto noop = [](const Transition&) {};

    switch (algorithm) {
    case Algorithm::reinforce:
        for (int e = 0; e < opts.episodes; ++e) {
            const Trajectory traj = detail::rollout(opts.env, policy, rng, reward_sum, noop);
            reinforce_update(policy, traj, opts.learning ? policy_step : 0.0, discount);
            detail::check_finite(policy);
        }
        break;
    case Algorithm::actor_critic: {
        const double value_step = point.at("value_step_size");
        for (int e = 0; e < opts.episodes; ++e) {
            detail::rollout(opts.env, policy, rng, reward_sum, [&](const Transition& tr) {
                if (!opts.learning) {
                    return;
                }
                actor_critic_update(policy, value, tr, policy_step, value_step, discount);
                detail::check_finite(policy);
                detail::check_finite(value);
            });
        }
        break;
    }
    case Algorithm::ppo: {
        PpoConfig cfg;
        cfg.clip = point.at("clip_epsilon");
        cfg.epochs = static_cast<int>(point.at("epochs"));
        cfg.policy_step = policy_step;
        cfg.value_step = point.at("value_step_size");
        cfg.discount = discount;
        std::vector<Trajectory> batch;
        for (int e = 0; e < opts.episodes; ++e) {
            batch.push_back(detail::rollout(opts.env, policy, rng, reward_sum, noop));
            if (static_cast<int>(batch.size()) == opts.ppo_batch_episodes || e + 1 == opts.episodes) {
                if (opts.learning) {
                    ppo_update(policy, value, batch, cfg);
                }
                detail::check_finite(policy);
                detail::check_finite(value);
                batch.clear();
            }
        }
        break;
    }
    }

    if (opts.evaluate_after_training) {
        return detail::greedy_evaluation(opts.env, policy, rng, opts.evaluation_episodes);
    }
    return reward_sum / (static_cast<double>(opts.episodes) * opts.env.steps_per_episode);
}

inline Experiment pendulum_experiment(Algorithm algorithm, TrainOptions opts = {})
{
    return Experiment{std::string("pendulum-") + (algorithm == Algorithm::actor_critic ? "ac" : to_string(algorithm)),
                      declared_space(algorithm), true,
                      [algorithm, opts](const HyperParamPoint& p, std::uint64_t seed) {
                          return train_agent(algorithm, p, seed, opts);
                      }};
}

}  // namespace distro_eval::rl
