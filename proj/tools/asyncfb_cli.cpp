#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "asyncfb/errors.hpp"
#include "asyncfb/experiment.hpp"

using namespace asyncfb;

namespace {

ExperimentConfig configure(const std::string& path, const std::optional<std::uint64_t>& seed, bool dense)
{
    ExperimentConfig cfg = load_config(path);
    if (seed) cfg.seed = *seed;
    if (dense) cfg.dense_trace = true;
    return cfg;
}

void print_summary(const RunSummary& s)
{
    std::printf("%-18s %12s %10s %8s  updates per agent\n", "algorithm", "accuracy", "iters", "status");
    for (const auto& a : s.algorithms) {
        std::printf("%-18s %12.4e %10ld %8s ", a.name.c_str(), a.final_accuracy, a.iterations,
                    a.guaranteed ? "ok" : "unguar.");
        for (long u : a.updates) std::printf(" %ld", u);
        std::printf("\n");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Asynchronous inertial forward-backward experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", trace_dir;
    std::optional<std::uint64_t> seed;
    bool dense = false;

    auto* run = app.add_subcommand("run", "run the configured algorithms and write traces");
    run->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "override the config seed");
    run->add_flag("--dense-trace", dense, "keep every iterate");

    auto* theory = app.add_subcommand("theory", "print the convergence constants for the configured instance");
    theory->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    theory->add_option("--seed", seed, "override the config seed");

    auto* validate = app.add_subcommand("validate", "check a saved trace against the error identity and delay bounds");
    validate->add_option("--trace", trace_dir, "directory holding trace.csv and iterates.bin")
        ->required()
        ->check(CLI::ExistingDirectory);
    validate->add_option("--config", config_path, "config the trace was produced with")
        ->required()
        ->check(CLI::ExistingFile);
    validate->add_option("--seed", seed, "override the config seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto cfg = configure(config_path, seed, dense);
            const auto summary = cmd_run(cfg, out_dir);
            print_summary(summary);
            std::printf("wrote %s\n", (std::filesystem::path(out_dir) / "summary.json").c_str());
        } else if (*theory) {
            std::cout << cmd_theory(configure(config_path, seed, false));
        } else if (*validate) {
            const auto rep = cmd_validate(trace_dir, configure(config_path, seed, false));
            std::cout << rep.to_text();
            return rep.pass() ? 0 : 1;
        }
    } catch (const FormatError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 3;
    }
    return 0;
}
