#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "distro_eval/cli.hpp"

int main(int argc, char** argv)
{
    namespace cli = distro_eval::cli;

    CLI::App app{"Distribution-level evaluation of stochastic learners"};
    app.require_subcommand(1);

    std::string sweep_config;
    auto* sweep = app.add_subcommand("sweep", "run or resume a sweep from a config file");
    sweep->add_option("config", sweep_config)->required();

    std::string report_store;
    std::string report_csv;
    auto* report = app.add_subcommand("report", "summarize the metric in a run store");
    report->add_option("store", report_store)->required();
    report->add_option("--csv", report_csv, "write ok-trial scores as CSV");

    std::string store_a, store_b;
    auto* cmp = app.add_subcommand("compare", "summaries and KL divergence in both directions");
    cmp->add_option("store_a", store_a)->required();
    cmp->add_option("store_b", store_b)->required();

    std::string plot_spec;
    auto* plot = app.add_subcommand("plot-icdf", "render inverse-CDF curves to SVG");
    plot->add_option("plotspec", plot_spec)->required();

    std::string scale = "smoke";
    std::string out_dir = "figure1";
    std::uint64_t root_seed = cli::kFigure1RootSeed;
    auto* fig = app.add_subcommand("figure1", "pendulum agents over random hyperparameter settings");
    fig->add_option("--scale", scale, "smoke | desk | large")->capture_default_str();
    fig->add_option("--out", out_dir, "output directory")->capture_default_str();
    fig->add_option("--seed", root_seed, "root seed")->capture_default_str();

    std::string seeds_config;
    auto* seeds = app.add_subcommand("seeds", "multi-seed sensitivity report for fixed configurations");
    seeds->add_option("config", seeds_config)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kExitUsage;
    }

    if (*sweep) {
        return cli::cmd_sweep(sweep_config, std::cout, std::cerr);
    }
    if (*report) {
        std::optional<std::filesystem::path> csv;
        if (!report_csv.empty()) {
            csv = report_csv;
        }
        return cli::cmd_report(report_store, csv, std::cout, std::cerr);
    }
    if (*cmp) {
        return cli::cmd_compare(store_a, store_b, std::cout, std::cerr);
    }
    if (*plot) {
        return cli::cmd_plot_icdf(plot_spec, std::cout, std::cerr);
    }
    if (*fig) {
        return cli::cmd_figure1(scale, out_dir, std::cout, std::cerr, root_seed);
    }
    if (*seeds) {
        return cli::cmd_seeds(seeds_config, std::cout, std::cerr);
    }
    return cli::kExitUsage;
}
