#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stn/config.hpp"
#include "stn/log.hpp"
#include "stn/runner.hpp"

namespace {

struct CommonFlags {
    std::string out;
    long long seed = -1;
    std::size_t workers = 0;
    bool fixed_scale = false;
    double tau = -1.0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--out", flags.out, "output directory override");
    cmd->add_option("--seed", flags.seed, "seed override");
    cmd->add_option("--workers", flags.workers, "parallel trial workers");
    cmd->add_flag("--fixed-scale", flags.fixed_scale, "freeze perturbation scales");
    cmd->add_option("--tau", flags.tau, "entropy weight override");
}

stn::ExperimentConfig load_with_overrides(const std::string& path, const CommonFlags& flags) {
    stn::ExperimentConfig cfg = stn::load_config(path);
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    if (flags.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(flags.seed);
        cfg.trainer.seed = cfg.seed;
    }
    if (flags.workers > 0) cfg.search.workers = flags.workers;
    if (flags.tau >= 0) cfg.tau = flags.tau;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-tuning training runs and hyperparameter search baselines"};
    app.require_subcommand(1);

    std::string config_path, schedule_path, run_dir;
    CommonFlags flags;

    auto* run_stn_cmd = app.add_subcommand("run-stn", "alternating hyperparameter training run");
    run_stn_cmd->add_option("config", config_path, "JSON config file")->required();
    add_common(run_stn_cmd, flags);

    auto* grid_cmd = app.add_subcommand("run-grid", "grid search over fixed hyperparameters");
    grid_cmd->add_option("config", config_path, "JSON config file")->required();
    add_common(grid_cmd, flags);

    auto* random_cmd = app.add_subcommand("run-random", "random search over fixed hyperparameters");
    random_cmd->add_option("config", config_path, "JSON config file")->required();
    add_common(random_cmd, flags);

    auto* verify_cmd = app.add_subcommand("verify-oracles", "closed-form identity suite");

    auto* replay_cmd = app.add_subcommand("replay-schedule", "re-train with a recorded schedule");
    replay_cmd->add_option("config", config_path, "JSON config file")->required();
    replay_cmd->add_option("schedule", schedule_path, "schedule.csv to replay")->required();
    add_common(replay_cmd, flags);

    auto* export_cmd = app.add_subcommand("export", "re-emit artifacts from a run directory");
    export_cmd->add_option("run_dir", run_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (verify_cmd->parsed()) {
            return stn::print_oracle_table(stn::oracle_checks()) ? 0 : 2;
        }
        if (export_cmd->parsed()) {
            stn::export_run(run_dir);
            return 0;
        }
        stn::ExperimentConfig cfg = load_with_overrides(config_path, flags);
        if (run_stn_cmd->parsed())
            stn::run_stn(cfg, flags.fixed_scale);
        else if (grid_cmd->parsed())
            stn::run_search(cfg, true);
        else if (random_cmd->parsed())
            stn::run_search(cfg, false);
        else if (replay_cmd->parsed())
            stn::replay_schedule(cfg, schedule_path);
        return 0;
    } catch (const stn::ConfigError& e) {
        stn::log_error(e.what());
        return 1;
    } catch (const std::exception& e) {
        stn::log_error(e.what());
        return 2;
    }
}
