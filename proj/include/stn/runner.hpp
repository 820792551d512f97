#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "stn/config.hpp"
#include "stn/data.hpp"
#include "stn/io.hpp"
#include "stn/log.hpp"
#include "stn/oracles.hpp"
#include "stn/runner_oracles.hpp"
#include "stn/search.hpp"
#include "stn/tasks.hpp"
#include "stn/trainer.hpp"

namespace stn {

struct BuiltExperiment {
    SplitDataset data;
    HyperSpace space;
    std::unique_ptr<StnModel> model;
};

namespace detail {

inline int binding_index(const ExperimentConfig& cfg, const std::string& binding) {
    for (std::size_t j = 0; j < cfg.hypers.size(); ++j)
        if (cfg.hypers[j].binding == binding) return static_cast<int>(j);
    return -1;
}

inline std::vector<double> default_spectrum(std::size_t d) {
    std::vector<double> s(d);
    for (std::size_t i = 0; i < d; ++i) s[i] = std::pow(10.0, 1.0 - 2.0 * static_cast<double>(i) /
                                                                  std::max<std::size_t>(1, d - 1));
    return s;
}

inline Dataset dummy_dataset(std::size_t n) {
    Dataset ds;
    ds.inputs = Tensor::zeros({n, 1});
    ds.targets = Tensor::zeros({n});
    ds.generator = "none";
    return ds;
}

/// An unconstrained lambda whose transform hits `value`; for discretized
/// kinds any pre-image of the rounded integer works.
inline double raw_for_value(const HyperParam& hp, double value) {
    if (hp.kind != TransformKind::discretized) return inverse_transform(hp, value);
    if (hp.hi == hp.lo) return 0.0;
    double p = (value - hp.lo) / (hp.hi - hp.lo);
    p = std::min(0.999, std::max(0.001, p));
    double raw = std::log(p / (1.0 - p));
    if (apply_transform(hp, raw) != value)
        throw std::invalid_argument("value " + std::to_string(value) + " not representable for '" +
                                    hp.name + "'");
    return raw;
}

}  // namespace detail

inline BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
    BuiltExperiment built;
    built.space = build_hyperspace(cfg);
    std::size_t n = built.space.size();
    Rng base(cfg.seed);
    Rng init_rng = base.split(1);

    switch (cfg.task) {
        case TaskKind::quad_oracle: {
            Rng data_rng(cfg.data.seed);
            auto prob = random_quadratic_bilevel(n, cfg.data.dim, data_rng);
            built.model = std::make_unique<QuadraticAffineModel>(prob, init_rng);
            built.data.train = detail::dummy_dataset(std::max<std::size_t>(cfg.data.n_train, 1));
            built.data.valid = detail::dummy_dataset(std::max<std::size_t>(cfg.data.n_valid, 1));
            built.data.test = detail::dummy_dataset(std::max<std::size_t>(cfg.data.n_test, 1));
            break;
        }
        case TaskKind::linear_jacobian: {
            auto spectrum = cfg.data.spectrum.empty() ? detail::default_spectrum(cfg.data.dim)
                                                      : cfg.data.spectrum;
            Dataset full = make_regression(cfg.data.dim, cfg.data.n_total, spectrum,
                                           cfg.data.noise_std, cfg.data.seed);
            built.data = split_dataset(full, cfg.data.n_train, cfg.data.n_valid, cfg.data.n_test);
            la::Mat x(cfg.data.n_train, cfg.data.dim);
            x.a = built.data.train.inputs.data();
            la::Vec t = built.data.train.targets.data();
            auto rp = RidgeProblem::from_data(std::move(x), std::move(t));
            auto params = gated_response_params(rp);
            Tensor q0 = Tensor::from({cfg.data.dim, cfg.data.dim}, params.q0.a);
            Tensor s0 = Tensor::from({cfg.data.dim}, params.s0);
            auto net = GatedLinearNet::random_init(std::move(q0), std::move(s0), init_rng);
            int pen = detail::binding_index(cfg, "jacobian_penalty");
            if (pen < 0) throw ConfigError("linear_jacobian needs a jacobian_penalty binding at: hyperparameters");
            built.model = std::make_unique<GatedModel>(std::move(net), cfg.data.n_train, pen);
            break;
        }
        case TaskKind::synthetic_regression:
        case TaskKind::synthetic_classification: {
            bool classify = cfg.task == TaskKind::synthetic_classification;
            Dataset full;
            if (classify) {
                full = make_classification(cfg.data.dim, cfg.data.n_total, cfg.data.n_classes,
                                           cfg.data.label_noise, cfg.data.seed,
                                           cfg.data.separation);
            } else {
                auto spectrum = cfg.data.spectrum.empty() ? detail::default_spectrum(cfg.data.dim)
                                                          : cfg.data.spectrum;
                full = make_regression(cfg.data.dim, cfg.data.n_total, spectrum, cfg.data.noise_std,
                                       cfg.data.seed);
            }
            built.data = split_dataset(full, cfg.data.n_train, cfg.data.n_valid, cfg.data.n_test);
            std::vector<std::size_t> dims;
            dims.push_back(cfg.data.dim);
            for (std::size_t h : cfg.model.hidden) dims.push_back(h);
            dims.push_back(classify ? cfg.data.n_classes : 1);
            std::vector<HyperDense> layers;
            for (std::size_t i = 0; i + 1 < dims.size(); ++i)
                layers.emplace_back(dims[i], dims[i + 1], n, init_rng);
            MlpBindings bindings;
            bindings.l2 = detail::binding_index(cfg, "l2");
            bindings.input_dropout = detail::binding_index(cfg, "input_dropout");
            bindings.input_noise = detail::binding_index(cfg, "input_noise");
            built.model = std::make_unique<MlpModel>(std::move(layers),
                                                     classify ? LossKind::softmax_ce : LossKind::mse,
                                                     cfg.data.n_train, bindings);
            break;
        }
        case TaskKind::tiny_images: {
            Dataset full = make_tiny_images(cfg.data.image_side, cfg.data.n_total, cfg.data.seed);
            built.data = split_dataset(full, cfg.data.n_train, cfg.data.n_valid, cfg.data.n_test);
            std::size_t side = cfg.data.image_side, k = cfg.model.conv_kernel;
            if (k > side) throw ConfigError("conv kernel exceeds image at: model.conv_kernel");
            std::size_t out_side = side - k + 1;
            HyperConv conv(1, cfg.model.conv_channels, k, n, init_rng);
            HyperDense head(cfg.model.conv_channels * out_side * out_side, 2, n, init_rng);
            built.model = std::make_unique<ConvModel>(std::move(conv), std::move(head), side,
                                                      detail::binding_index(cfg, "cutout_holes"),
                                                      detail::binding_index(cfg, "cutout_length"));
            break;
        }
    }
    return built;
}

inline void persist_run(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                        const FitResult& result, StnModel& model, const HyperSpace& space) {
    std::filesystem::create_directories(dir);
    write_schedule_csv(dir / "schedule.csv", result.schedule);
    write_metrics_jsonl(dir / "metrics.jsonl", result.metrics);
    {
        std::ofstream out(dir / "config.json");
        if (!out) throw std::runtime_error("cannot write " + (dir / "config.json").string());
        out << config_to_json(cfg).dump(2) << '\n';
    }
    auto tensors = model.named_tensors();
    tensors.emplace_back("hyper.lambda", space.lambda());
    tensors.emplace_back("hyper.log_sigma", space.log_sigma());
    write_checkpoint(dir / "checkpoint.stn", tensors);
}

inline FitResult run_stn(const ExperimentConfig& cfg, bool fixed_scale = false,
                         bool persist = true) {
    BuiltExperiment built = build_experiment(cfg);
    TrainConfig tc = cfg.trainer;
    tc.fixed_scale_mode = fixed_scale;
    StnTrainer trainer(*built.model, built.space, built.data.train, built.data.valid, tc);
    FitResult result = trainer.fit(built.data.test.size() ? &built.data.test : nullptr);
    log_info("run-stn finished: valid_loss=" + fmt_double(result.final_valid_loss));
    if (persist) persist_run(cfg.out_dir, cfg, result, *built.model, built.space);
    return result;
}

/// One fixed-hyperparameter run: lambda pinned to the trial assignment,
/// sigma at the floor, no hyper/scale updates (all epochs are warm-up).
inline TrialRunner make_fixed_trial_runner(const ExperimentConfig& base) {
    return [base](const TrialSpec& spec) {
        ExperimentConfig cfg = base;
        cfg.seed = spec.seed;
        cfg.trainer.seed = spec.seed;
        cfg.trainer.max_epochs = spec.budget_epochs;
        cfg.trainer.warmup_epochs = spec.budget_epochs;  // hypers frozen throughout
        cfg.trainer.patience = 0;
        for (auto& d : cfg.hypers) d.init_sigma = 1e-4;
        BuiltExperiment built = build_experiment(cfg);
        for (const auto& [name, value] : spec.assignment) {
            std::size_t j = built.space.index_of(name);
            built.space.lambda().at(j) = detail::raw_for_value(built.space.descriptor(j), value);
        }
        StnTrainer trainer(*built.model, built.space, built.data.train, built.data.valid, cfg.trainer);
        auto t0 = std::chrono::steady_clock::now();
        FitResult fit = trainer.fit(built.data.test.size() ? &built.data.test : nullptr);
        TrialRecord rec;
        rec.spec = spec;
        rec.valid_loss = fit.final_valid_loss;
        rec.test_loss = fit.final_test_loss;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (const auto& m : fit.metrics) rec.epoch_valid.push_back(m.valid_loss);
        return rec;
    };
}

inline SearchResult run_search(const ExperimentConfig& cfg, bool grid, bool persist = true) {
    std::vector<HyperParam> axes;
    for (const auto& d : cfg.hypers) axes.push_back(d.param);
    TrialRunner runner = make_fixed_trial_runner(cfg);
    SearchResult result =
        grid ? grid_search(axes, cfg.search.points_per_axis, runner, cfg.seed,
                           cfg.search.budget_epochs, cfg.search.cap, cfg.search.workers)
             : random_search(axes, cfg.search.n_trials, runner, cfg.seed, cfg.search.budget_epochs,
                             cfg.search.workers);
    log_info(std::string(grid ? "run-grid" : "run-random") + " finished: best_valid=" +
             fmt_double(result.best_so_far.empty() ? 0.0 : result.best_so_far.back()));
    if (persist) {
        std::filesystem::create_directories(cfg.out_dir);
        std::vector<std::string> names;
        for (const auto& a : axes) names.push_back(a.name);
        write_search_csv(std::filesystem::path(cfg.out_dir) / "search.csv", result, names);
        std::ofstream out(std::filesystem::path(cfg.out_dir) / "config.json");
        out << config_to_json(cfg).dump(2) << '\n';
    }
    return result;
}

/// Re-trains a fixed model, setting lambda at each epoch boundary from the
/// recorded schedule (last logged row of that epoch).
inline FitResult replay_schedule(const ExperimentConfig& cfg, const std::filesystem::path& csv) {
    ScheduleLog log = read_schedule_csv(csv);
    if (log.rows.empty()) throw std::runtime_error("schedule " + csv.string() + " has no rows");
    ExperimentConfig fixed = cfg;
    fixed.trainer.warmup_epochs = fixed.trainer.max_epochs;  // no hyper updates
    BuiltExperiment built = build_experiment(fixed);
    if (log.names.size() != built.space.size())
        throw std::runtime_error("schedule hyperparameter count does not match config");
    std::vector<std::vector<double>> per_epoch(fixed.trainer.max_epochs);
    for (const auto& row : log.rows)
        if (row.epoch < per_epoch.size()) per_epoch[row.epoch] = row.raw;
    for (std::size_t e = 1; e < per_epoch.size(); ++e)  // carry forward gaps (warm-up epochs)
        if (per_epoch[e].empty()) per_epoch[e] = per_epoch[e - 1];
    StnTrainer trainer(*built.model, built.space, built.data.train, built.data.valid, fixed.trainer);
    FitResult result = trainer.fit(built.data.test.size() ? &built.data.test : nullptr,
                                   [&](std::size_t epoch) {
                                       if (per_epoch[epoch].empty()) return;
                                       for (std::size_t j = 0; j < built.space.size(); ++j)
                                           built.space.lambda().at(j) = per_epoch[epoch][j];
                                   });
    log_info("replay-schedule finished: valid_loss=" + fmt_double(result.final_valid_loss));
    if (!fixed.out_dir.empty()) {
        std::filesystem::create_directories(fixed.out_dir);
        write_metrics_jsonl(std::filesystem::path(fixed.out_dir) / "replay_metrics.jsonl",
                            result.metrics);
    }
    return result;
}

/// Reads a run directory back and re-emits its artifacts (self-consistency
/// check for persisted files).
inline void export_run(const std::filesystem::path& run_dir) {
    ScheduleLog schedule = read_schedule_csv(run_dir / "schedule.csv");
    auto metrics = read_metrics_jsonl(run_dir / "metrics.jsonl");
    write_schedule_csv(run_dir / "schedule.export.csv", schedule);
    write_metrics_jsonl(run_dir / "metrics.export.jsonl", metrics);
    if (std::filesystem::exists(run_dir / "checkpoint.stn")) {
        auto tensors = read_checkpoint(run_dir / "checkpoint.stn");
        log_info("checkpoint holds " + std::to_string(tensors.size()) + " tensors");
    }
    log_info("exported " + std::to_string(schedule.rows.size()) + " schedule rows, " +
             std::to_string(metrics.size()) + " epochs");
}

inline int run_cli(int argc, const char* const* argv);

}  // namespace stn
