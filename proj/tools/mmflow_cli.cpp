// Batch experiment runner: `mmflow run <config>` executes one experiment
// and writes its artifacts, `mmflow report <dir>` summarizes them.

#include <CLI11.hpp>
#include <iostream>

#include "mmflow/mmflow.hpp"

int main(int argc, char** argv) {
    CLI::App app{"minimizing-movement flow experiments"};
    app.require_subcommand(1);

    std::string config_path, report_dir, outdir;
    std::uint64_t seed = 0;
    bool strict = false;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "config file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", outdir, "output directory (default: config out or ./out)");
    run->add_flag("--strict", strict, "tighten all tolerances by 0.1");

    auto* report = app.add_subcommand("report", "summarize an artifact directory");
    report->add_option("dir", report_dir, "artifact directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto cfg = mmflow::ExperimentConfig::from_file(config_path);
            mmflow::RunOptions opts;
            opts.outdir = !outdir.empty() ? outdir : (!cfg.out.empty() ? cfg.out : "out");
            opts.strict = strict;
            if (*seed_opt) {
                opts.seed_override = true;
                opts.seed = seed;
            }
            const auto result = mmflow::run_experiment(cfg, opts);
            for (const auto& a : result.artifacts)
                std::cout << "wrote " << opts.outdir << "/" << a << "\n";
            for (const auto& f : result.failures)
                std::cout << "FAIL," << f.artifact << "," << f.property << ","
                          << mmflow::fmt(f.value) << "," << mmflow::fmt(f.bound) << "\n";
            return result.exit_code;
        }
        std::cout << mmflow::report_directory(report_dir);
        return 0;
    } catch (const mmflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mmflow::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
