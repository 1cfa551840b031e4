#pragma once

// Built-in experiments: analytic surrogates for exercising the harness, the
// pendulum agents, a name registry, and the multi-seed sensitivity report.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "distro_eval/experiment.hpp"
#include "distro_eval/rl/train.hpp"
#include "distro_eval/rng.hpp"
#include "distro_eval/score_stats.hpp"

namespace distro_eval {

/// 1 - x^2 + noise_scale * g, with g a standard normal drawn from the seed.
inline double noisy_quadratic_trial(double x, double noise_scale, std::uint64_t seed)
{
    if (!(x >= -2.0 && x <= 2.0) || !(noise_scale >= 0.0 && noise_scale <= 1.0)) {
        throw std::invalid_argument("noisy_quadratic: x must lie in [-2, 2] and noise_scale in [0, 1]");
    }
    const double base = 1.0 - x * x;
    if (noise_scale == 0.0) {
        return base;
    }
    Rng rng(seed);
    return base + noise_scale * rng.normal();
}

/// Trains a two-armed softmax policy with REINFORCE. Arm 0 pays N(1, 1),
/// arm 1 pays N(0, 1). Returns the final probability of arm 0.
inline double bandit_trial(double step_size, int episodes, std::uint64_t seed)
{
    if (!(step_size > 0.0) || episodes < 1) {
        throw std::invalid_argument("bandit: step_size must be positive and episodes >= 1");
    }
    Rng rng(seed);
    // Only the logit difference matters for a two-arm softmax.
    double logit_gap = 0.0;  // logit(arm 0) - logit(arm 1)
    auto p_best = [&] { return 1.0 / (1.0 + std::exp(-logit_gap)); };
    for (int e = 0; e < episodes; ++e) {
        const double p0 = p_best();
        const bool pulled_best = rng.uniform() < p0;
        const double reward = rng.normal(pulled_best ? 1.0 : 0.0, 1.0);
        // d log pi(a) / d logit_0 = 1{a=0} - p0; the arm-1 logit moves opposite.
        const double score = (pulled_best ? 1.0 : 0.0) - p0;
        logit_gap += 2.0 * step_size * reward * score;
        if (!std::isfinite(logit_gap)) {
            throw rl::DivergedError();
        }
    }
    // Keep the result inside (0, 1) when the logistic rounds to an endpoint.
    return std::clamp(p_best(), 0x1.0p-1022, 1.0 - 0x1.0p-53);
}

inline Experiment noisy_quadratic_experiment()
{
    return {"noisy-quadratic",
            HyperParamSpace({{"x", -2.0, 2.0, Scale::linear, Kind::continuous},
                             {"noise_scale", 0.0, 1.0, Scale::linear, Kind::continuous}}),
            true,
            [](const HyperParamPoint& p, std::uint64_t seed) {
                return noisy_quadratic_trial(p.at("x"), p.at("noise_scale"), seed);
            }};
}

inline Experiment bandit_experiment()
{
    return {"bandit",
            HyperParamSpace({{"step_size", 1e-9, 1.0, Scale::log, Kind::continuous},
                             {"episodes", 1, 5000, Scale::linear, Kind::integer}}),
            true,
            [](const HyperParamPoint& p, std::uint64_t seed) {
                return bandit_trial(p.at("step_size"), static_cast<int>(p.at("episodes")), seed);
            }};
}

inline std::vector<std::string> registered_experiments()
{
    return {"noisy-quadratic", "bandit", "pendulum-reinforce", "pendulum-ac", "pendulum-ppo"};
}

inline Experiment make_experiment(const std::string& name)
{
    if (name == "noisy-quadratic") return noisy_quadratic_experiment();
    if (name == "bandit") return bandit_experiment();
    if (name == "pendulum-reinforce") return rl::pendulum_experiment(rl::Algorithm::reinforce);
    if (name == "pendulum-ac") return rl::pendulum_experiment(rl::Algorithm::actor_critic);
    if (name == "pendulum-ppo") return rl::pendulum_experiment(rl::Algorithm::ppo);
    std::string known;
    for (const auto& n : registered_experiments()) {
        known += (known.empty() ? "" : ", ") + n;
    }
    throw std::invalid_argument("unknown experiment '" + name + "' (registered: " + known + ")");
}

struct Regime {
    std::string label;
    HyperParamPoint point;
};

struct RegimeResult {
    std::string label;
    std::optional<ScoreSample> sample;  ///< absent when every seed failed
    std::optional<SummaryStats> summary;
    std::vector<std::string> failures;
};

struct SensitivityReport {
    std::size_t seed_count = 0;
    std::vector<RegimeResult> regimes;
};

/// Runs each regime's point over the same seed_count derived seeds.
inline SensitivityReport seed_sensitivity_report(const Experiment& experiment, const std::vector<Regime>& regimes,
                                                 std::size_t seed_count, std::uint64_t master_seed)
{
    if (seed_count < 2) {
        throw std::invalid_argument("seed_count must be >= 2");
    }
    if (regimes.empty()) {
        throw std::invalid_argument("at least one regime is required");
    }
    SensitivityReport report;
    report.seed_count = seed_count;
    for (const Regime& regime : regimes) {
        experiment.space.validate(regime.point);
        RegimeResult res;
        res.label = regime.label;
        std::vector<double> scores;
        for (std::size_t i = 0; i < seed_count; ++i) {
            const std::uint64_t seed = derive_trial_seed(master_seed, i);
            try {
                const double m = experiment.run_trial(regime.point, seed);
                if (!std::isfinite(m)) {
                    throw std::runtime_error("non-finite metric");
                }
                scores.push_back(m);
            } catch (const std::exception& e) {
                res.failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
            }
        }
        if (!scores.empty()) {
            res.sample.emplace(std::move(scores), regime.label);
            res.summary = summarize(*res.sample, default_report_quantiles());
        }
        report.regimes.push_back(std::move(res));
    }
    return report;
}

}  // namespace distro_eval
