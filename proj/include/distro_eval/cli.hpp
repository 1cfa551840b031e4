#pragma once

// Command implementations behind the distro_eval tool. Each returns the
// process exit code: 0 success, 1 data problem (too few or only failed
// trials), 2 usage, config or I/O error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "distro_eval/config.hpp"
#include "distro_eval/experiments.hpp"
#include "distro_eval/score_stats.hpp"
#include "distro_eval/svg.hpp"
#include "distro_eval/sweep.hpp"

namespace distro_eval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

inline std::string fmt3(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::string fmt_g(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct LoadedStore {
    StoreContents contents;
    std::vector<double> ok;
    std::size_t failed = 0;
};

/// Throws ConfigError when the file is missing, StoreError when malformed.
inline LoadedStore load_store(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) {
        throw ConfigError("store '" + path.string() + "' does not exist");
    }
    LoadedStore s;
    s.contents = RunStore(path).load();
    for (const auto& r : s.contents.records) {
        if (r.ok()) {
            s.ok.push_back(*r.metric);
        } else {
            ++s.failed;
        }
    }
    return s;
}

inline void print_summary(std::ostream& out, const SummaryStats& s, const std::string& indent = "")
{
    out << indent << "mean±std: " << format_mean_std(s.mean, s.std) << "\n";
    out << indent << "min: " << fmt3(s.min) << "  max: " << fmt3(s.max) << "\n";
    out << indent << "deciles:";
    for (const auto& [q, v] : s.quantiles) {
        out << " " << fmt_g(q) << "=" << fmt3(v);
    }
    out << "\n";
}

/// Report body shared by `report` and `figure1`.
inline int write_report(std::ostream& out, const std::string& name, const LoadedStore& s)
{
    const std::size_t total = s.ok.size() + s.failed;
    out << "store: " << name << "\n";
    if (s.contents.header) {
        out << "experiment: " << s.contents.header->experiment << "\n";
    }
    out << "n: " << s.ok.size() << "  failures: " << s.failed << "  total: " << total << "\n";
    if (s.ok.empty()) {
        out << "no successful trials\n";
        std::size_t shown = 0;
        for (const auto& r : s.contents.records) {
            if (!r.ok() && shown++ < 10) {
                out << "  trial " << r.spec.trial_index << ": " << r.message << "\n";
            }
        }
        return kExitData;
    }
    print_summary(out, summarize(ScoreSample(s.ok, name), default_report_quantiles()));
    return kExitOk;
}

inline int cmd_report(const std::filesystem::path& store_path, const std::optional<std::filesystem::path>& csv_path,
                      std::ostream& out, std::ostream& err)
{
    try {
        const LoadedStore s = load_store(store_path);
        const int rc = write_report(out, store_path.string(), s);
        if (csv_path) {
            std::ofstream csv(*csv_path);
            csv << "trial_index,metric\n";
            for (const auto& r : s.contents.records) {
                if (r.ok()) {
                    csv << r.spec.trial_index << "," << detail::fmt_real(*r.metric) << "\n";
                }
            }
            if (!csv) {
                err << "error: cannot write '" << csv_path->string() << "'\n";
                return kExitUsage;
            }
        }
        return rc;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

inline void print_comparison(std::ostream& out, const std::string& name_a, const std::string& name_b,
                             const ComparisonReport& r)
{
    out << "A: " << name_a << " (n=" << r.summary_p.n << ")\n";
    print_summary(out, r.summary_p, "  ");
    out << "B: " << name_b << " (n=" << r.summary_q.n << ")\n";
    print_summary(out, r.summary_q, "  ");
    out << "KL(A||B): " << fmt3(r.kl_pq) << "\n";
    out << "KL(B||A): " << fmt3(r.kl_qp) << "\n";
    out << "bandwidth A: " << fmt_g(r.bandwidth_p) << "  bandwidth B: " << fmt_g(r.bandwidth_q)
        << "  grid points: " << r.grid_points << "\n";
}

inline constexpr std::size_t kMinCompareTrials = 2;

inline int cmd_compare(const std::filesystem::path& store_a, const std::filesystem::path& store_b, std::ostream& out,
                       std::ostream& err)
{
    LoadedStore a, b;
    try {
        a = load_store(store_a);
        b = load_store(store_b);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (a.ok.size() < kMinCompareTrials || b.ok.size() < kMinCompareTrials) {
        err << "error: compare needs at least " << kMinCompareTrials << " ok trials per store (have " << a.ok.size()
            << " and " << b.ok.size() << ")\n";
        return kExitData;
    }
    const ComparisonReport r = compare(ScoreSample(a.ok, store_a.string()), ScoreSample(b.ok, store_b.string()));
    print_comparison(out, store_a.string(), store_b.string(), r);
    return kExitOk;
}

inline PlotSeries icdf_series(const std::vector<double>& ok, const std::string& label, const std::string& color)
{
    const std::size_t n_points = std::min<std::size_t>(ok.size(), 512);
    return {label, color, inverse_cdf_curve(ScoreSample(ok, label), n_points)};
}

inline bool write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << content;
    return static_cast<bool>(f);
}

inline int cmd_plot_icdf(const std::filesystem::path& spec_path, std::ostream& out, std::ostream& err)
{
    PlotSpec spec;
    std::vector<LoadedStore> stores;
    try {
        spec = parse_plot_spec(read_json_file(spec_path), spec_path);
        for (const auto& s : spec.series) {
            stores.push_back(load_store(s.store));
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    std::vector<PlotSeries> series;
    for (std::size_t i = 0; i < spec.series.size(); ++i) {
        if (stores[i].ok.size() < 2) {
            err << "error: series '" << spec.series[i].label << "' needs at least 2 ok trials\n";
            return kExitData;
        }
        series.push_back(icdf_series(stores[i].ok, spec.series[i].label, spec.series[i].color));
    }
    const std::string svg = render_icdf_svg({spec.width, spec.height, spec.x_label, spec.y_label}, series);
    if (!write_file(spec.output, svg)) {
        err << "error: cannot write '" << spec.output.string() << "'\n";
        return kExitUsage;
    }
    out << "wrote " << spec.output.string() << " (" << series.size() << " series)\n";
    return kExitOk;
}

/// Progress lines roughly every tenth of the plan, plus the last trial.
inline ProgressFn progress_printer(std::ostream& out)
{
    return [&out](const SweepProgress& p) {
        const std::size_t every = std::max<std::size_t>(1, p.total / 10);
        if (p.completed % every == 0 || p.completed == p.total) {
            out << "progress: " << p.completed << "/" << p.total << " completed, " << p.failures << " failed\n";
        }
    };
}

inline int run_or_resume(const Experiment& ex, const SweepPlan& plan, const std::filesystem::path& store_path,
                         std::size_t workers, std::ostream& out, std::ostream& err)
{
    try {
        RunStore store(store_path);
        const auto specs = enumerate_trials(plan);
        const std::size_t done = store.empty() ? 0 : store.load().records.size();
        out << (specs.size() > done ? specs.size() - done : 0) << " trials remaining\n";
        const ResumeResult res = resume_sweep(plan, ex, store, workers, progress_printer(out));
        std::size_t failures = 0;
        for (const auto& r : res.records) {
            failures += r.ok() ? 0 : 1;
        }
        out << "done: " << res.records.size() << "/" << specs.size() << " trials, " << failures << " failed, "
            << res.executed << " executed this run\n";
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

inline int cmd_sweep(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err)
{
    RunConfig cfg;
    std::size_t workers = 1;
    try {
        cfg = parse_run_config(read_json_file(config_path), config_path);
        workers = effective_workers(cfg.worker_count);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    out << "experiment: " << cfg.experiment << "  store: " << cfg.store.string() << "  workers: " << workers << "\n";
    return run_or_resume(make_experiment(cfg.experiment), cfg.plan, cfg.store, workers, out, err);
}

inline int cmd_seeds(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err)
{
    SeedsConfig cfg;
    try {
        cfg = parse_seeds_config(read_json_file(config_path));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    const SensitivityReport report =
        seed_sensitivity_report(make_experiment(cfg.experiment), cfg.regimes, cfg.seed_count, cfg.master_seed);
    out << "experiment: " << cfg.experiment << "  seeds: " << report.seed_count << "\n";
    int rc = kExitOk;
    for (const auto& r : report.regimes) {
        if (r.summary) {
            out << r.label << ": " << format_mean_std(r.summary->mean, r.summary->std) << "  (n=" << r.summary->n
                << ", failures=" << r.failures.size() << ")\n";
        } else {
            out << r.label << ": all " << r.failures.size() << " seeds failed\n";
            rc = kExitData;
        }
        for (const auto& f : r.failures) {
            out << "  failed " << f << "\n";
        }
    }
    return rc;
}

struct Figure1Scale {
    std::string name;
    std::size_t settings;
};

inline std::optional<Figure1Scale> parse_figure1_scale(const std::string& s)
{
    if (s == "smoke") return Figure1Scale{s, 50};
    if (s == "desk") return Figure1Scale{s, 300};
    if (s == "large" || s == "full-ish") return Figure1Scale{"large", 2000};
    return std::nullopt;
}

inline constexpr std::uint64_t kFigure1RootSeed = 20180708;

inline SweepPlan figure1_plan(rl::Algorithm alg, std::size_t settings, std::uint64_t root_seed)
{
    SweepPlan plan;
    plan.space = rl::declared_space(alg);
    plan.mode = SamplingMode::uniform;
    plan.n_points = settings;
    plan.seeds_per_point = 1;
    plan.master_seed = derive_trial_seed(root_seed, static_cast<std::uint64_t>(alg));
    return plan;
}

inline std::filesystem::path figure1_store_path(const std::filesystem::path& out_dir, rl::Algorithm alg)
{
    return out_dir / (std::string(rl::to_string(alg)) + ".jsonl");
}

/// Sweeps all three agents, then writes figure1.svg, report_<alg>.txt and
/// comparisons.txt into out_dir.
inline int cmd_figure1(const std::string& scale_name, const std::filesystem::path& out_dir, std::ostream& out,
                       std::ostream& err, std::uint64_t root_seed = kFigure1RootSeed, std::size_t workers = 0)
{
    const auto scale = parse_figure1_scale(scale_name);
    if (!scale) {
        err << "error: unknown scale '" << scale_name << "' (expected smoke, desk or large)\n";
        return kExitUsage;
    }
    try {
        std::filesystem::create_directories(out_dir);
        if (workers == 0) {
            workers = effective_workers(std::max(1u, std::thread::hardware_concurrency()));
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::vector<PlotSeries> series;
    std::vector<std::pair<std::string, std::vector<double>>> samples;
    std::size_t color = 0;
    for (rl::Algorithm alg : rl::kAllAlgorithms) {
        const std::string name = rl::to_string(alg);
        out << "== " << name << " (" << scale->settings << " settings)\n";
        const auto store_path = figure1_store_path(out_dir, alg);
        const int rc = run_or_resume(rl::pendulum_experiment(alg), figure1_plan(alg, scale->settings, root_seed),
                                     store_path, workers, out, err);
        if (rc != kExitOk) {
            return rc;
        }
        LoadedStore s = load_store(store_path);
        std::ofstream report(out_dir / ("report_" + name + ".txt"));
        write_report(report, store_path.string(), s);
        write_report(out, store_path.string(), s);
        if (s.ok.size() < 2) {
            err << "error: " << name << " has fewer than 2 ok trials\n";
            return kExitData;
        }
        out << "top-decile (q0.9): " << fmt3(quantile(ScoreSample(s.ok), 0.9)) << "\n";
        series.push_back(icdf_series(s.ok, name, palette_color(color++)));
        samples.emplace_back(name, std::move(s.ok));
    }

    const std::string svg =
        render_icdf_svg({800, 500, "quantile", "lifetime average reward"}, series);
    if (!write_file(out_dir / "figure1.svg", svg)) {
        err << "error: cannot write figure\n";
        return kExitUsage;
    }

    std::ofstream cmp(out_dir / "comparisons.txt");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const ComparisonReport r = compare(ScoreSample(samples[i].second, samples[i].first),
                                               ScoreSample(samples[j].second, samples[j].first));
            out << "== compare " << samples[i].first << " vs " << samples[j].first << "\n";
            print_comparison(out, samples[i].first, samples[j].first, r);
            cmp << "[" << samples[i].first << " vs " << samples[j].first << "]\n" << to_text(r) << "\n";
        }
    }
    if (!cmp) {
        err << "error: cannot write comparisons\n";
        return kExitUsage;
    }
    out << "wrote " << (out_dir / "figure1.svg").string() << "\n";
    return kExitOk;
}

}  // namespace distro_eval::cli
