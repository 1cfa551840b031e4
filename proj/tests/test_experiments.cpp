#include <cmath>

#include <gtest/gtest.h>

#include "distro_eval/experiments.hpp"

using namespace distro_eval;

TEST(NoisyQuadratic, NoiselessValues)
{
    EXPECT_EQ(noisy_quadratic_trial(0.0, 0.0, 123), 1.0);
    EXPECT_EQ(noisy_quadratic_trial(1.0, 0.0, 9), 0.0);
    for (int i = 0; i <= 400; ++i) {
        const double x = -2.0 + 0.01 * i;
        EXPECT_NEAR(noisy_quadratic_trial(x, 0.0, static_cast<std::uint64_t>(i)), 1.0 - x * x, 1e-15);
    }
    EXPECT_THROW(noisy_quadratic_trial(3.0, 0.0, 1), std::invalid_argument);
}

TEST(NoisyQuadratic, NoiseStdOverSeeds)
{
    std::vector<double> v;
    for (std::uint64_t i = 0; i < 10000; ++i) {
        v.push_back(noisy_quadratic_trial(0.0, 0.1, derive_trial_seed(1, i)));
    }
    const double sd = sample_std(ScoreSample(v));
    EXPECT_GE(sd, 0.095);
    EXPECT_LE(sd, 0.105);
}

TEST(Bandit, TinyStepStaysUniform)
{
    EXPECT_NEAR(bandit_trial(1e-9, 1, 4), 0.5, 1e-3);
}

TEST(Bandit, LearnsBetterArm)
{
    double sum = 0.0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        sum += bandit_trial(0.1, 2000, derive_trial_seed(8, i));
    }
    EXPECT_GT(sum / 50.0, 0.9);
}

TEST(Bandit, MetricInOpenUnitInterval)
{
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const double step = std::exp(rng.uniform(std::log(1e-6), 0.0));
        const int episodes = 1 + static_cast<int>(rng.uniform() * 3000);
        const double m = bandit_trial(step, episodes, rng());
        EXPECT_GT(m, 0.0);
        EXPECT_LT(m, 1.0);
    }
}

TEST(Experiments, PureInPointAndSeed)
{
    for (const auto& name : {"noisy-quadratic", "bandit"}) {
        const Experiment ex = make_experiment(name);
        Rng rng(5);
        for (const auto& p : sample_uniform(ex.space, 20, rng)) {
            EXPECT_EQ(ex.run_trial(p, 99), ex.run_trial(p, 99)) << name;
        }
    }
}

TEST(Experiments, RegistryKnowsAllNames)
{
    for (const auto& name : registered_experiments()) {
        EXPECT_EQ(make_experiment(name).name, name);
    }
    try {
        make_experiment("lstm-wikiqa");
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("pendulum-ppo"), std::string::npos);
    }
}

TEST(SeedSensitivity, ZeroNoiseHasZeroStd)
{
    const auto r = seed_sensitivity_report(noisy_quadratic_experiment(),
                                           {{"flat", HyperParamPoint{{{"x", 0.5}, {"noise_scale", 0.0}}}}}, 7, 3);
    ASSERT_TRUE(r.regimes[0].summary);
    EXPECT_EQ(r.regimes[0].summary->std, 0.0);
    EXPECT_EQ(r.regimes[0].summary->n, 7u);
}

TEST(SeedSensitivity, NoisierRegimeHasLargerStd)
{
    const auto r = seed_sensitivity_report(
        noisy_quadratic_experiment(),
        {{"high-data", HyperParamPoint{{{"x", 0.0}, {"noise_scale", 0.01}}}},
         {"low-data", HyperParamPoint{{{"x", 0.0}, {"noise_scale", 0.1}}}}},
        20, 2018);
    ASSERT_EQ(r.regimes.size(), 2u);
    EXPECT_EQ(r.regimes[0].sample->size(), 20u);
    EXPECT_EQ(r.regimes[1].sample->size(), 20u);
    EXPECT_GT(r.regimes[1].summary->std, r.regimes[0].summary->std);
}

TEST(SeedSensitivity, FailuresShrinkSampleAndAreListed)
{
    Experiment ex = noisy_quadratic_experiment();
    ex.run_trial = [](const HyperParamPoint&, std::uint64_t seed) {
        if (seed % 2 == 0) throw std::runtime_error("even seed");
        return 1.0;
    };
    const auto r = seed_sensitivity_report(ex, {{"r", HyperParamPoint{{{"x", 0.0}, {"noise_scale", 0.0}}}}}, 40, 1);
    const auto& reg = r.regimes[0];
    EXPECT_EQ(reg.failures.size() + reg.sample->size(), 40u);
    EXPECT_FALSE(reg.failures.empty());
    EXPECT_THROW(seed_sensitivity_report(ex, {}, 5, 1), std::invalid_argument);
    EXPECT_THROW(seed_sensitivity_report(ex, {{"r", HyperParamPoint{{{"x", 0.0}, {"noise_scale", 0.0}}}}}, 1, 1),
                 std::invalid_argument);
}
