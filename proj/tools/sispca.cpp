// Command-line front end: fit / tune / simulate / metrics.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

#include "sispca/commands.hpp"
#include "sispca/version.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

unsigned worker_count(unsigned cli_value) {
    if (const char* env = std::getenv("SISPCA_WORKERS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed > 0) return static_cast<unsigned>(parsed);
    }
    return cli_value;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sisPCA: supervised independent subspace principal component analysis"};
    app.set_version_flag("--version", std::string(sispca::kVersion));
    app.require_subcommand(1);

    // fit
    std::string fit_config, fit_out;
    std::optional<std::uint64_t> fit_seed;
    auto* fit = app.add_subcommand("fit", "Fit the configured model and write artifacts");
    fit->add_option("-c,--config", fit_config, "Experiment config (JSON)")->required();
    fit->add_option("-o,--out", fit_out, "Output directory")->required();
    fit->add_option("--seed", fit_seed, "Override the config seed");

    // tune
    std::string tune_config, tune_out;
    unsigned tune_workers = 1;
    auto* tune = app.add_subcommand("tune", "Scan the lambda grid and cluster the models");
    tune->add_option("-c,--config", tune_config, "Experiment config (JSON)")->required();
    tune->add_option("-o,--out", tune_out, "Output directory")->required();
    tune->add_option("--workers", tune_workers, "Parallel fit workers");

    // simulate
    long long sim_n = 1000;
    std::uint64_t sim_seed = 0;
    std::string sim_out;
    sispca::simulate::SimulationOptions sim_options;
    auto* sim = app.add_subcommand("simulate", "Generate the synthetic three-subspace dataset");
    sim->add_option("--n", sim_n, "Number of observations");
    sim->add_option("--seed", sim_seed, "Random seed");
    sim->add_option("-o,--out", sim_out, "Output directory")->required();
    sim->add_option("--grid-half-span", sim_options.grid_half_span, "Half-extent of the S2 grid");
    sim->add_option("--ring-radius", sim_options.ring_radius, "Radius of the S3 ring");
    sim->add_option("--gaussian-mean", sim_options.gaussian_mean_x, "S1 cluster center offset");
    sim->add_option("--grid-jitter", sim_options.grid_jitter, "S2 jitter std dev");
    sim->add_option("--ring-jitter", sim_options.ring_jitter, "S3 radial jitter std dev");
    sim->add_option("--noise", sim_options.observation_noise,
                    "Observation noise std dev applied after mixing");

    // metrics
    sispca::io::MetricsRequest req;
    std::string metrics_out;
    auto* metrics = app.add_subcommand("metrics", "Score written artifacts against labels/targets");
    metrics->add_option("--scores", req.scores_paths, "Score CSV files")->required();
    metrics->add_option("--labels", req.labels_path, "CSV file holding categorical labels");
    metrics->add_option("--labels-column", req.labels_column, "Labels column name");
    metrics->add_option("--target", req.target_path, "CSV file holding a numeric target");
    metrics->add_option("--target-column", req.target_column, "Target column name");
    metrics->add_option("--against", req.against_path, "Score CSV to compare subspaces against");
    metrics->add_option("-o,--out", metrics_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit) {
            const auto artifacts = sispca::io::cmd_fit(fit_config, fit_out, fit_seed);
            std::cout << "wrote " << artifacts.files.size() << " files to "
                      << artifacts.out_dir.string() << "\n";
        } else if (*tune) {
            const auto artifacts =
                sispca::io::cmd_tune(tune_config, tune_out, worker_count(tune_workers));
            std::cout << "wrote " << artifacts.files.size() << " files to "
                      << artifacts.out_dir.string() << "\n";
        } else if (*sim) {
            const auto artifacts = sispca::io::cmd_simulate(
                static_cast<sispca::Index>(sim_n), sim_seed, sim_out, sim_options);
            std::cout << "wrote " << artifacts.files.size() << " files to "
                      << artifacts.out_dir.string() << "\n";
        } else if (*metrics) {
            const auto artifacts = sispca::io::cmd_metrics_to_dir(req, metrics_out);
            std::cout << "wrote " << artifacts.files.size() << " files to "
                      << artifacts.out_dir.string() << "\n";
        }
    } catch (const sispca::NumericalError& err) {
        std::cerr << "numerical error: " << err.what() << "\n";
        return 3;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
