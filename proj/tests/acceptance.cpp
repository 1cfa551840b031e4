// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Usage: acceptance <work-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "distro_eval/cli.hpp"
#include "distro_eval/rl/algorithms.hpp"
#include "oracles.hpp"
#include "svg_check.hpp"

using namespace distro_eval;
namespace fs = std::filesystem;

namespace {

// Pilot run (50 seeds per algorithm, learning disabled, sampled settings):
// every lifetime average fell in [-0.99507, -0.99015].
constexpr double kFrozenRandomBandLo = -0.996;
constexpr double kFrozenRandomBandHi = -0.989;
constexpr double kRequiredMargin = 0.3;

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Clock {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<double> normal_draws(double mean, double sd, std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) {
        x = rng.normal(mean, sd);
    }
    return v;
}

Outcome kl_oracle()
{
    const Clock clock;
    const ScoreSample p(normal_draws(0.0, 1.0, 10000, 101));
    const ScoreSample q_shift(normal_draws(1.0, 1.0, 10000, 202));
    const ScoreSample q_wide(normal_draws(0.0, 2.0, 10000, 303));
    const double shift = kl_divergence(p, q_shift);
    const double wide = kl_divergence(p, q_wide);
    const double elapsed = clock.seconds();
    const double shift_oracle = oracle::gaussian_kl(0.0, 1.0, 1.0, 1.0);
    const double wide_oracle = oracle::gaussian_kl(0.0, 1.0, 0.0, 2.0);
    Outcome o;
    o.pass = std::abs(shift - shift_oracle) <= 0.1 && std::abs(wide - wide_oracle) <= 0.1 && elapsed < 5.0;
    o.detail = fmt("KL vs N(1,1) = %.4f (oracle %.4f), vs N(0,4) = %.4f (oracle %.4f), %.2fs", shift, shift_oracle,
                   wide, wide_oracle, elapsed);
    return o;
}

std::vector<double> random_sample(Rng& rng)
{
    const auto n = static_cast<std::size_t>(std::exp(rng.uniform(0.0, std::log(10000.0))));
    const int family = static_cast<int>(rng.uniform() * 5);
    const double loc = rng.uniform(-100.0, 100.0);
    const double scale = std::exp(rng.uniform(std::log(1e-3), std::log(1e3)));
    std::vector<double> v(std::max<std::size_t>(n, 1));
    for (double& x : v) {
        switch (family) {
        case 0: x = rng.normal(loc, scale); break;
        case 1: x = rng.uniform(loc, loc + scale); break;
        case 2: x = loc - scale * std::log(1.0 - rng.uniform()); break;
        case 3: x = rng.normal(rng.uniform() < 0.3 ? loc : loc + 10.0 * scale, scale); break;
        default: x = loc + std::round(rng.normal(0.0, 3.0)) * scale; break;
        }
    }
    return v;
}

/// Trapezoid integral of an independently evaluated Gaussian KDE.
double oracle_mass(const std::vector<double>& centers, double h, double lo, double hi, std::size_t grid)
{
    const double inv = 1.0 / (static_cast<double>(centers.size()) * h);
    const double dx = (hi - lo) / static_cast<double>(grid - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < grid; ++i) {
        const double x = i + 1 == grid ? hi : lo + dx * static_cast<double>(i);
        double f = 0.0;
        for (double c : centers) {
            f += oracle::normal_pdf((x - c) / h);
        }
        sum += (i == 0 || i + 1 == grid ? 0.5 : 1.0) * f * inv;
    }
    return sum * dx;
}

Outcome kde_normalization()
{
    Rng rng(404);
    double worst = 0.0;
    double worst_library = 0.0;
    std::size_t largest = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const ScoreSample sample(random_sample(rng));
        const Density d = fit_density(sample);
        largest = std::max(largest, d.centers.size());
        worst = std::max(worst, std::abs(oracle_mass(d.centers, d.bandwidth, d.lo, d.hi, 2048) - 1.0));
        worst_library = std::max(worst_library, std::abs(density_mass(d) - 1.0));
    }
    Outcome o;
    o.pass = worst <= 1e-3 && worst_library <= 1e-3;
    o.detail = fmt("200 densities (n up to %zu): worst |mass-1| = %.2e (library quadrature %.2e)", largest, worst,
                   worst_library);
    return o;
}

rl::Features random_features(Rng& rng)
{
    const double th = rng.uniform(-std::numbers::pi, std::numbers::pi);
    return {std::cos(th), std::sin(th), rng.uniform(-1, 1)};
}

std::vector<double> copy_params(std::span<const double> p) { return {p.begin(), p.end()}; }

rl::Trajectory random_trajectory(const rl::PolicyNet& policy, Rng& rng, std::size_t length)
{
    rl::Trajectory traj;
    const rl::PendulumParams env;
    rl::PendulumState s{rng.uniform(-3, 3), rng.uniform(-5, 5)};
    for (std::size_t t = 0; t < length; ++t) {
        rl::Transition tr;
        tr.obs = rl::features(s, env);
        const auto a = rl::policy_sample(policy, tr.obs, rng);
        const auto step = rl::pendulum_step(env, s, a.action);
        tr.action = a.action;
        tr.log_prob = a.log_prob;
        tr.reward = step.reward;
        tr.next_obs = rl::features(step.next, env);
        traj.push_back(tr);
        s = step.next;
    }
    return traj;
}

/// Central differences are only a valid oracle when no ratio crosses a
/// clip boundary within the finite-difference step.
bool near_clip_kink(const rl::PolicyNet& policy, std::span<const rl::PpoSample> samples, double clip)
{
    for (const auto& s : samples) {
        const double ratio = std::exp(rl::policy_log_prob(policy, s.obs, s.action) - s.old_log_prob);
        if (std::abs(ratio - (1.0 + clip)) < 1e-3 || std::abs(ratio - (1.0 - clip)) < 1e-3) {
            return true;
        }
    }
    return false;
}

Outcome gradient_suite()
{
    const Clock clock;
    double worst_policy = 0.0, worst_value = 0.0, worst_ppo = 0.0;
    Rng rng(505);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t hidden = 1 + static_cast<std::size_t>(rng.uniform() * 12);
        rl::PolicyNet policy(hidden, rng, rng.uniform(-1.5, 1.0));
        const rl::Features x = random_features(rng);
        const double action = policy.mean(x) + rng.normal() * 2.0;
        std::vector<double> analytic(policy.params().size(), 0.0);
        rl::accumulate_log_prob_gradient(policy, x, action, 1.0, analytic);
        const auto numeric = oracle::finite_difference(
            [&](const std::vector<double>& p) {
                rl::PolicyNet probe(hidden);
                std::copy(p.begin(), p.end(), probe.params().begin());
                return rl::policy_log_prob(probe, x, action);
            },
            copy_params(policy.params()));
        worst_policy = std::max(worst_policy, oracle::max_relative_error(analytic, numeric));
    }
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t hidden = 1 + static_cast<std::size_t>(rng.uniform() * 12);
        rl::ValueNet value(hidden, rng);
        const rl::Features x = random_features(rng);
        std::vector<double> analytic(value.params().size(), 0.0);
        value.accumulate_gradient(x, 1.0, analytic);
        const auto numeric = oracle::finite_difference(
            [&](const std::vector<double>& p) { return rl::mlp_forward(p, hidden, x); }, copy_params(value.params()));
        worst_value = std::max(worst_value, oracle::max_relative_error(analytic, numeric));
    }
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t hidden = 1 + static_cast<std::size_t>(rng.uniform() * 10);
        rl::PolicyNet behaviour(hidden, rng, rng.uniform(-1.0, 0.5));
        rl::ValueNet value(hidden, rng);
        const std::vector<rl::Trajectory> batch{
            random_trajectory(behaviour, rng, 10 + static_cast<std::size_t>(rng.uniform() * 20))};
        const auto samples = rl::ppo_samples(value, batch, rng.uniform(0.9, 0.999));
        rl::PolicyNet policy = behaviour;
        double clip = 0.0;
        do {
            policy = behaviour;
            for (double& p : policy.params()) {
                p += rng.normal() * 0.05;
            }
            clip = rng.uniform(0.05, 0.4);
        } while (near_clip_kink(policy, samples, clip));
        const auto analytic = rl::ppo_surrogate_gradient(policy, samples, clip);
        const auto numeric = oracle::finite_difference(
            [&](const std::vector<double>& p) {
                rl::PolicyNet probe(hidden);
                std::copy(p.begin(), p.end(), probe.params().begin());
                return rl::ppo_surrogate(probe, samples, clip);
            },
            copy_params(policy.params()));
        worst_ppo = std::max(worst_ppo, oracle::max_relative_error(analytic, numeric));
    }
    const double elapsed = clock.seconds();
    Outcome o;
    o.pass = worst_policy < 1e-4 && worst_value < 1e-4 && worst_ppo < 1e-4 && elapsed < 10.0;
    o.detail = fmt("worst relative error: log-prob %.1e, value %.1e, PPO surrogate %.1e over 3x100 instances, %.2fs",
                   worst_policy, worst_value, worst_ppo, elapsed);
    return o;
}

std::string without_wall_time(const fs::path& p)
{
    std::string out;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);) {
        const auto pos = line.find(",\"wall_time\":");
        out += (pos == std::string::npos ? line : line.substr(0, pos) + "}") + "\n";
    }
    return out;
}

Outcome sweep_determinism(const fs::path& work)
{
    const std::vector<std::pair<std::string, std::string>> sweeps = {
        {"quadratic", R"("experiment":"noisy-quadratic","n_points":60,"seeds_per_point":3,"master_seed":9)"},
        {"bandit-ball",
         R"("experiment":"bandit","mode":"epsilon_ball","center":{"step_size":0.1,"episodes":300},)"
         R"("epsilon":0.2,"n_points":40,"seeds_per_point":2,"master_seed":10)"},
        {"pendulum", R"("experiment":"pendulum-reinforce","n_points":16,"master_seed":11)"},
    };
    const fs::path dir = work / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    Outcome o;
    std::size_t records = 0;
    for (const auto& [name, body] : sweeps) {
        std::vector<std::string> stores;
        for (int workers : {1, 8, 1, 8}) {
            const std::string stem = name + "_" + std::to_string(stores.size());
            std::ofstream(dir / (stem + ".json"))
                << "{" << body << ",\"worker_count\":" << workers << ",\"store\":\"" << stem << ".jsonl\"}";
            std::ostringstream out, err;
            if (cli::cmd_sweep(dir / (stem + ".json"), out, err) != cli::kExitOk) {
                o.pass = false;
                o.detail = name + ": sweep failed: " + err.str();
                return o;
            }
            stores.push_back(without_wall_time(dir / (stem + ".jsonl")));
        }
        for (const auto& s : stores) {
            o.pass = o.pass && s == stores.front();
        }
        records += static_cast<std::size_t>(std::count(stores.front().begin(), stores.front().end(), '\n')) - 1;
    }
    o.detail = fmt("3 sweeps x 4 runs (workers 1,8,1,8), %zu records each round: %s", records,
                   o.pass ? "stores identical" : "stores differ");
    return o;
}

Outcome pendulum_physics()
{
    const rl::PendulumParams defaults;
    const auto up = rl::pendulum_step(defaults, {0.0, 0.0}, 0.0);
    const bool upright = up.next.theta == 0.0 && up.next.theta_dot == 0.0 && up.reward == 1.0;
    const auto down = rl::pendulum_step(defaults, {std::numbers::pi, 0.0}, 0.0);
    const bool hanging =
        down.next.theta == std::numbers::pi && std::abs(down.next.theta_dot) <= 1e-15 && down.reward == -1.0;

    rl::PendulumParams p;
    p.friction = 0.0;
    p.dt = 0.01;
    rl::PendulumState s{std::numbers::pi / 2, 0.0};
    const auto energy = [&](const rl::PendulumState& st) {
        return 0.5 * p.mass * p.length * p.length * st.theta_dot * st.theta_dot +
               p.mass * p.gravity * p.length * std::cos(st.theta);
    };
    const double e0 = energy(s);
    double drift = 0.0;
    for (int i = 0; i < 1000; ++i) {
        s = rl::pendulum_step(p, s, 0.0).next;
        drift = std::max(drift, std::abs(energy(s) - e0));
    }
    const double limit = 0.05 * p.mass * p.gravity * p.length;
    Outcome o;
    o.pass = upright && hanging && drift < limit;
    o.detail = fmt("upright fixed point %s, hanging fixed point %s (|theta_dot| = %.1e), energy drift %.4f < %.4f",
                   upright ? "exact" : "broken", hanging ? "held" : "broken", std::abs(down.next.theta_dot), drift,
                   limit);
    return o;
}

double parse_std(const std::string& text, const std::string& label)
{
    const auto pos = text.find(label + ": ");
    if (pos == std::string::npos) {
        return std::nan("");
    }
    const auto pm = text.find("±", pos);
    return std::stod(text.substr(pm + std::string("±").size()));
}

Outcome seeds_table(const fs::path& work)
{
    const fs::path dir = work / "seeds";
    fs::create_directories(dir);
    const fs::path config = dir / "seeds.json";
    std::ofstream(config) << R"({"experiment":"noisy-quadratic","regimes":[)"
                          << R"({"label":"high-data","point":{"x":0.0,"noise_scale":0.01}},)"
                          << R"({"label":"low-data","point":{"x":0.0,"noise_scale":0.1}}],)"
                          << R"("seed_count":20,"master_seed":2018})";
    const Clock clock;
    std::ostringstream out, err;
    const int rc = cli::cmd_seeds(config, out, err);
    const double elapsed = clock.seconds();
    const double high = parse_std(out.str(), "high-data");
    const double low = parse_std(out.str(), "low-data");
    Outcome o;
    o.pass = rc == cli::kExitOk && low > high && out.str().find("n=20") != std::string::npos && elapsed < 1.0;
    o.detail = fmt("std high-data %.3f vs low-data %.3f over 20 seeds, %.3fs", high, low, elapsed);
    return o;
}

Outcome figure1_desk(const fs::path& work)
{
    const fs::path dir = work / "figure1_desk";
    fs::remove_all(dir);
    const Clock clock;
    std::ostringstream out, err;
    const int rc = cli::cmd_figure1("desk", dir, out, err);
    const double elapsed = clock.seconds();
    Outcome o;
    if (rc != cli::kExitOk) {
        o.pass = false;
        o.detail = "figure1 exited " + std::to_string(rc) + ": " + err.str();
        return o;
    }
    std::ofstream(dir / "figure1_log.txt") << out.str();

    const auto fig = svg_check::parse(slurp(dir / "figure1.svg"));
    bool curves_ok = fig.well_formed && fig.polylines.size() == 3;
    for (const auto& p : fig.polylines) {
        curves_ok = curves_ok && svg_check::monotone(p) && !p.values.empty();
        for (double v : p.values) {
            curves_ok = curves_ok && v >= -1.0 - 1e-3 && v <= 1.0 + 1e-3;
        }
    }

    rl::TrainOptions frozen;
    frozen.learning = false;
    double live_lo = 0.0, live_hi = -1.0;
    Rng rng(2018);
    for (rl::Algorithm a : rl::kAllAlgorithms) {
        const auto space = rl::declared_space(a);
        for (std::uint64_t i = 0; i < 50; ++i) {
            const double m = rl::train_agent(a, sample_uniform(space, 1, rng)[0], derive_trial_seed(2018, i), frozen);
            live_lo = std::min(live_lo, m);
            live_hi = std::max(live_hi, m);
        }
    }
    const bool band_ok = live_lo >= kFrozenRandomBandLo && live_hi <= kFrozenRandomBandHi;
    const double band_hi = std::max(kFrozenRandomBandHi, live_hi);

    std::vector<std::pair<std::string, std::vector<double>>> samples;
    std::string decile_text;
    double best_decile = -1.0;
    for (rl::Algorithm a : rl::kAllAlgorithms) {
        const auto s = cli::load_store(cli::figure1_store_path(dir, a));
        const ScoreSample sample(s.ok);
        const double q90 = quantile(sample, 0.9);
        best_decile = std::max(best_decile, q90);
        decile_text += fmt(" %s q0.9=%.3f max=%.3f;", rl::to_string(a), q90, sample.sorted().back());
        samples.emplace_back(rl::to_string(a), s.ok);
    }
    const bool margin_ok = best_decile >= band_hi + kRequiredMargin;

    bool kl_ok = true;
    std::string kl_text;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const auto r = compare(ScoreSample(samples[i].second), ScoreSample(samples[j].second));
            const bool finite = std::isfinite(r.kl_pq) && std::isfinite(r.kl_qp);
            const double hi = std::max(r.kl_pq, r.kl_qp), lo = std::min(r.kl_pq, r.kl_qp);
            const bool same_order = hi < 1e-12 || (lo > 0.0 && hi / lo <= 10.0);
            kl_ok = kl_ok && finite && same_order;
            kl_text += fmt(" %s/%s %.3f|%.3f;", samples[i].first.c_str(), samples[j].first.c_str(), r.kl_pq, r.kl_qp);
        }
    }

    const bool time_ok = elapsed < 1800.0;
    o.pass = time_ok && curves_ok && band_ok && margin_ok && kl_ok;
    o.detail = fmt("%.0fs (%s); svg %s; random band [%.4f, %.4f] %s; best top decile %.3f vs required %.3f (%s);",
                   elapsed, time_ok ? "ok" : "too slow", curves_ok ? "valid, 3 monotone curves in [-1,1]" : "INVALID",
                   live_lo, live_hi, band_ok ? "within frozen band" : "OUTSIDE frozen band", best_decile,
                   band_hi + kRequiredMargin, margin_ok ? "ok" : "margin not reached") +
               decile_text + " KL" + kl_text + (kl_ok ? " ok" : " DISAGREE");
    return o;
}

Outcome bandit_sanity()
{
    double sum = 0.0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        sum += bandit_trial(0.1, 2000, derive_trial_seed(8, i));
    }
    Outcome o;
    o.pass = sum / 50.0 > 0.9;
    o.detail = fmt("mean probability of the better arm %.4f over 50 seeds", sum / 50.0);
    return o;
}

HyperParamSpace random_space(Rng& rng)
{
    const int d = 1 + static_cast<int>(rng.uniform() * 6);
    std::vector<Dim> dims;
    for (int i = 0; i < d; ++i) {
        Dim dim;
        dim.name = "d" + std::to_string(i);
        const int flavour = static_cast<int>(rng.uniform() * 4);
        if (flavour == 0) {
            dim.lo = rng.uniform(-50.0, 50.0);
            dim.hi = dim.lo + std::exp(rng.uniform(-5.0, 5.0));
        } else if (flavour == 1) {
            dim.scale = Scale::log;
            dim.lo = std::exp(rng.uniform(-20.0, 0.0));
            dim.hi = dim.lo * std::exp(rng.uniform(0.1, 15.0));
        } else if (flavour == 2) {
            dim.kind = Kind::integer;
            dim.lo = std::round(rng.uniform(-20.0, 20.0));
            dim.hi = dim.lo + 1.0 + std::round(rng.uniform(0.0, 100.0));
        } else {
            dim.kind = Kind::integer;
            dim.scale = Scale::log;
            dim.lo = 1.0 + std::round(rng.uniform(0.0, 10.0));
            dim.hi = dim.lo + 1.0 + std::round(rng.uniform(0.0, 1000.0));
        }
        dims.push_back(dim);
    }
    return HyperParamSpace(dims);
}

Outcome epsilon_ball_containment()
{
    Rng rng(909);
    std::size_t checked = 0, outside_ball = 0, outside_box = 0;
    double worst = 0.0;
    while (checked < 100000) {
        const HyperParamSpace space = random_space(rng);
        const HyperParamPoint center = sample_uniform(space, 1, rng)[0];
        const double eps = std::max(1e-6, rng.uniform());
        const auto c = normalize(space, center);
        Rng a = rng, b = rng;
        const auto raw = sample_epsilon_ball_unclipped(space, center, eps, 100, a);
        const auto clipped = sample_epsilon_ball(space, center, eps, 100, b);
        rng = a;
        for (std::size_t k = 0; k < raw.size(); ++k) {
            double dist = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) {
                dist = std::max(dist, std::abs(raw[k][i] - c[i]));
            }
            worst = std::max(worst, dist / eps);
            outside_ball += dist > eps * (1.0 + 1e-12) + 1e-15 ? 1 : 0;
            outside_box += space.contains(clipped[k]) ? 0 : 1;
            ++checked;
        }
    }
    Outcome o;
    o.pass = outside_ball == 0 && outside_box == 0;
    o.detail = fmt("%zu points: %zu outside the normalized ball (worst dist/eps %.6f), %zu outside the box", checked,
                   outside_ball, worst, outside_box);
    return o;
}

}  // namespace

int main(int argc, char** argv)
{
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "distro_eval_acceptance";
    fs::create_directories(work);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"KL oracle", kl_oracle},
        {"KDE normalization", kde_normalization},
        {"gradient suite", gradient_suite},
        {"sweep determinism", [&] { return sweep_determinism(work); }},
        {"pendulum physics", pendulum_physics},
        {"seed sensitivity table", [&] { return seeds_table(work); }},
        {"figure1 at desk scale", [&] { return figure1_desk(work); }},
        {"bandit sanity", bandit_sanity},
        {"epsilon-ball containment", epsilon_ball_containment},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
                  << "): " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
              << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
