#pragma once

// Config files for the command-line tool. All are JSON objects; unknown
// keys are rejected.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "distro_eval/experiments.hpp"
#include "distro_eval/svg.hpp"
#include "distro_eval/sweep.hpp"

namespace distro_eval {

/// Bad config content or an unreadable config file. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read '" + path.string() + "'");
    }
    try {
        return Json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// Relative paths inside a config resolve against the config's directory.
inline std::filesystem::path resolve_relative(const std::filesystem::path& config_path, const std::string& p)
{
    std::filesystem::path path(p);
    if (path.is_absolute()) {
        return path;
    }
    return config_path.parent_path() / path;
}

struct RunConfig {
    std::string experiment;
    SweepPlan plan;
    std::size_t worker_count = 1;
    std::filesystem::path store;
};

inline RunConfig parse_run_config(const Json& j, const std::filesystem::path& config_path = {})
{
    try {
        detail::check_keys(j,
                           {"experiment", "space", "mode", "n_points", "center", "epsilon", "points",
                            "seeds_per_point", "master_seed", "worker_count", "store"},
                           "run config");
        RunConfig cfg;
        cfg.experiment = j.at("experiment").get<std::string>();
        const Experiment ex = make_experiment(cfg.experiment);
        Json plan_json = j;
        if (!j.contains("space")) {
            plan_json["space"] = to_json(ex.space);
        }
        if (!j.contains("mode")) {
            plan_json["mode"] = "uniform";
        }
        cfg.plan = plan_from_json(plan_json);
        if (!(cfg.plan.space == ex.space)) {
            // A narrower box is fine as long as every point it yields is valid
            // for the experiment; check the bounds now.
            for (const Dim& d : cfg.plan.space.dims()) {
                const Dim& full = ex.space.dim(d.name);
                if (d.lo < full.lo || d.hi > full.hi || d.kind != full.kind) {
                    throw std::invalid_argument("dimension '" + d.name + "' exceeds the experiment's space");
                }
            }
            if (cfg.plan.space.size() != ex.space.size()) {
                throw std::invalid_argument("space must list every dimension of the experiment");
            }
        }
        validate(cfg.plan);
        if (j.contains("worker_count")) {
            const auto w = j.at("worker_count").get<std::int64_t>();
            if (w < 1) {
                throw std::invalid_argument("worker_count must be >= 1");
            }
            cfg.worker_count = static_cast<std::size_t>(w);
        }
        cfg.store = resolve_relative(config_path, j.at("store").get<std::string>());
        return cfg;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid run config: ") + e.what());
    }
}

/// DISTRO_EVAL_WORKERS, when set to a positive integer, wins over configs.
inline std::size_t effective_workers(std::size_t configured)
{
    if (const char* env = std::getenv("DISTRO_EVAL_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) {
            return static_cast<std::size_t>(v);
        }
        throw ConfigError("DISTRO_EVAL_WORKERS must be a positive integer");
    }
    return configured;
}

struct PlotSeriesSpec {
    std::filesystem::path store;
    std::string label;
    std::string color;
};

struct PlotSpec {
    std::vector<PlotSeriesSpec> series;
    std::string x_label = "quantile";
    std::string y_label = "metric";
    std::filesystem::path output;
    int width = 800;
    int height = 500;
};

inline PlotSpec parse_plot_spec(const Json& j, const std::filesystem::path& spec_path = {})
{
    try {
        detail::check_keys(j, {"series", "x_label", "y_label", "output", "width", "height"}, "plot spec");
        PlotSpec spec;
        std::set<std::string> labels;
        std::size_t i = 0;
        for (const Json& s : j.at("series")) {
            detail::check_keys(s, {"store", "label", "color"}, "plot series");
            PlotSeriesSpec ps;
            ps.store = resolve_relative(spec_path, s.at("store").get<std::string>());
            ps.label = s.at("label").get<std::string>();
            ps.color = s.contains("color") ? s.at("color").get<std::string>() : palette_color(i);
            if (!labels.insert(ps.label).second) {
                throw std::invalid_argument("duplicate series label '" + ps.label + "'");
            }
            spec.series.push_back(std::move(ps));
            ++i;
        }
        if (spec.series.empty()) {
            throw std::invalid_argument("plot spec needs at least one series");
        }
        spec.x_label = j.value("x_label", spec.x_label);
        spec.y_label = j.value("y_label", spec.y_label);
        spec.output = resolve_relative(spec_path, j.at("output").get<std::string>());
        spec.width = j.value("width", spec.width);
        spec.height = j.value("height", spec.height);
        if (spec.width < 300 || spec.height < 200) {
            throw std::invalid_argument("plot must be at least 300x200 pixels");
        }
        return spec;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid plot spec: ") + e.what());
    }
}

struct SeedsConfig {
    std::string experiment;
    std::vector<Regime> regimes;
    std::size_t seed_count = 20;
    std::uint64_t master_seed = 0;
};

inline SeedsConfig parse_seeds_config(const Json& j)
{
    try {
        detail::check_keys(j, {"experiment", "regimes", "seed_count", "master_seed"}, "seeds config");
        SeedsConfig cfg;
        cfg.experiment = j.at("experiment").get<std::string>();
        const Experiment ex = make_experiment(cfg.experiment);
        for (const Json& r : j.at("regimes")) {
            detail::check_keys(r, {"label", "point"}, "regime");
            Regime regime{r.at("label").get<std::string>(), point_from_json(r.at("point"))};
            ex.space.validate(regime.point);
            cfg.regimes.push_back(std::move(regime));
        }
        if (cfg.regimes.empty()) {
            throw std::invalid_argument("at least one regime is required");
        }
        if (j.contains("seed_count")) {
            const auto n = j.at("seed_count").get<std::int64_t>();
            if (n < 2) {
                throw std::invalid_argument("seed_count must be >= 2");
            }
            cfg.seed_count = static_cast<std::size_t>(n);
        }
        if (j.contains("master_seed")) {
            cfg.master_seed = seed_from_json(j.at("master_seed"));
        }
        return cfg;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid seeds config: ") + e.what());
    }
}

}  // namespace distro_eval
