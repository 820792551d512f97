#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stn/hyperspace.hpp"
#include "stn/regularizers.hpp"
#include "stn/trainer.hpp"

namespace stn {

/// Raised on any malformed config; what() names the offending key path.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class TaskKind {
    quad_oracle,
    linear_jacobian,
    synthetic_regression,
    synthetic_classification,
    tiny_images
};

struct HyperDecl {
    HyperParam param;
    double init = 0.0;          // constrained for continuous kinds, raw lambda for discretized
    double init_sigma = 0.05;
    std::string binding;        // "", "l2", "input_dropout", "input_noise",
                                // "cutout_holes", "cutout_length", "jacobian_penalty"
};

struct DataConfig {
    std::size_t dim = 8;
    std::size_t n_total = 512;
    std::size_t n_train = 200, n_valid = 200, n_test = 100;
    std::size_t n_classes = 2;
    double label_noise = 0.1;
    double separation = 1.6;
    double noise_std = 0.1;
    std::size_t image_side = 8;
    std::vector<double> spectrum;
    std::uint64_t seed = 1;
};

struct SearchConfig {
    std::size_t points_per_axis = 20;
    std::size_t n_trials = 20;
    std::size_t budget_epochs = 15;
    std::size_t cap = 4096;
    std::size_t workers = 1;
};

struct ModelConfig {
    std::vector<std::size_t> hidden;  // hidden layer widths for the MLP
    std::size_t conv_channels = 4;
    std::size_t conv_kernel = 3;
};

struct ExperimentConfig {
    TaskKind task = TaskKind::synthetic_classification;
    ModelConfig model;
    std::vector<HyperDecl> hypers;
    TrainConfig trainer;
    SearchConfig search;
    DataConfig data;
    std::string out_dir = "run";
    double tau = 0.001;
    std::uint64_t seed = 0;
};

namespace detail {

template <typename T>
T require(const nlohmann::json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing key: " + path + "." + key);
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("wrong type at: " + path + "." + key);
    }
}

template <typename T>
T optional(const nlohmann::json& j, const std::string& path, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("wrong type at: " + path + "." + key);
    }
}

inline TaskKind parse_task(const std::string& s) {
    if (s == "quad_oracle") return TaskKind::quad_oracle;
    if (s == "linear_jacobian") return TaskKind::linear_jacobian;
    if (s == "synthetic_regression") return TaskKind::synthetic_regression;
    if (s == "synthetic_classification") return TaskKind::synthetic_classification;
    if (s == "tiny_images") return TaskKind::tiny_images;
    throw ConfigError("unknown task '" + s + "' at: model.task");
}

inline TransformKind parse_kind(const std::string& s, const std::string& path) {
    if (s == "sigmoid_bounded") return TransformKind::sigmoid_bounded;
    if (s == "exp_positive") return TransformKind::exp_positive;
    if (s == "identity") return TransformKind::identity;
    if (s == "discretized") return TransformKind::discretized;
    throw ConfigError("unknown transform kind '" + s + "' at: " + path + ".kind");
}

inline OptimizerConfig parse_optimizer(const nlohmann::json& j, const std::string& path,
                                       OptimizerConfig fallback) {
    OptimizerConfig cfg = fallback;
    std::string kind = optional<std::string>(j, path, "kind",
                                             fallback.kind == OptKind::sgd ? "sgd" : "adam");
    if (kind == "sgd")
        cfg.kind = OptKind::sgd;
    else if (kind == "adam")
        cfg.kind = OptKind::adam;
    else
        throw ConfigError("unknown optimizer kind '" + kind + "' at: " + path + ".kind");
    cfg.lr = optional<double>(j, path, "lr", fallback.lr);
    cfg.momentum = optional<double>(j, path, "momentum", fallback.momentum);
    if (!(cfg.lr > 0)) throw ConfigError("lr must be > 0 at: " + path + ".lr");
    return cfg;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig cfg;

    const auto& model = j.contains("model") ? j.at("model") : nlohmann::json::object();
    cfg.task = detail::parse_task(detail::optional<std::string>(model, "model", "task",
                                                               "synthetic_classification"));
    cfg.model.hidden = detail::optional<std::vector<std::size_t>>(model, "model", "hidden", {});
    cfg.model.conv_channels = detail::optional<std::size_t>(model, "model", "conv_channels", 4);
    cfg.model.conv_kernel = detail::optional<std::size_t>(model, "model", "conv_kernel", 3);

    if (j.contains("hyperparameters")) {
        if (!j.at("hyperparameters").is_array())
            throw ConfigError("wrong type at: hyperparameters");
        std::size_t i = 0;
        for (const auto& h : j.at("hyperparameters")) {
            std::string path = "hyperparameters[" + std::to_string(i++) + "]";
            HyperDecl d;
            d.param.name = detail::require<std::string>(h, path, "name");
            d.param.kind = detail::parse_kind(detail::require<std::string>(h, path, "kind"), path);
            d.param.lo = detail::optional<double>(h, path, "lo", 0.0);
            d.param.hi = detail::optional<double>(h, path, "hi", 1.0);
            d.param.per_example = detail::optional<bool>(h, path, "per_example", true);
            d.init = detail::require<double>(h, path, "init");
            d.init_sigma = detail::optional<double>(h, path, "init_sigma", 0.05);
            d.binding = detail::optional<std::string>(h, path, "binding", "");
            if (d.param.kind != TransformKind::exp_positive && !(d.param.lo <= d.param.hi))
                throw ConfigError("lo must be <= hi at: " + path);
            if (!(d.init_sigma > 0)) throw ConfigError("init_sigma must be > 0 at: " + path);
            static const char* known[] = {"",           "l2",           "input_dropout",
                                          "input_noise", "cutout_holes", "cutout_length",
                                          "jacobian_penalty"};
            bool ok = false;
            for (const char* k : known) ok = ok || d.binding == k;
            if (!ok) throw ConfigError("unknown binding '" + d.binding + "' at: " + path + ".binding");
            cfg.hypers.push_back(std::move(d));
        }
    }

    const auto& tr = j.contains("trainer") ? j.at("trainer") : nlohmann::json::object();
    cfg.trainer.t_train = detail::optional<std::size_t>(tr, "trainer", "t_train", 2);
    cfg.trainer.t_valid = detail::optional<std::size_t>(tr, "trainer", "t_valid", 1);
    cfg.trainer.warmup_epochs = detail::optional<std::size_t>(tr, "trainer", "warmup_epochs", 1);
    cfg.trainer.batch_size = detail::optional<std::size_t>(tr, "trainer", "batch_size", 32);
    cfg.trainer.max_epochs = detail::optional<std::size_t>(tr, "trainer", "max_epochs", 10);
    cfg.trainer.grad_clip = detail::optional<double>(tr, "trainer", "grad_clip", 0.0);
    cfg.trainer.hyper_lr_decay = detail::optional<double>(tr, "trainer", "hyper_lr_decay", 1.0);
    cfg.trainer.hyper_decay_epoch =
        detail::optional<std::size_t>(tr, "trainer", "hyper_decay_epoch", 0);
    cfg.trainer.patience = detail::optional<std::size_t>(tr, "trainer", "patience", 0);
    if (tr.contains("optimizer_elem"))
        cfg.trainer.optimizer_elem = detail::parse_optimizer(tr.at("optimizer_elem"),
                                                             "trainer.optimizer_elem",
                                                             cfg.trainer.optimizer_elem);
    if (tr.contains("optimizer_hyper"))
        cfg.trainer.optimizer_hyper = detail::parse_optimizer(tr.at("optimizer_hyper"),
                                                              "trainer.optimizer_hyper",
                                                              cfg.trainer.optimizer_hyper);
    if (tr.contains("optimizer_scale"))
        cfg.trainer.optimizer_scale = detail::parse_optimizer(tr.at("optimizer_scale"),
                                                              "trainer.optimizer_scale",
                                                              cfg.trainer.optimizer_scale);
    try {
        cfg.trainer.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid value at: trainer (") + e.what() + ")");
    }

    const auto& se = j.contains("search") ? j.at("search") : nlohmann::json::object();
    cfg.search.points_per_axis = detail::optional<std::size_t>(se, "search", "points_per_axis", 20);
    cfg.search.n_trials = detail::optional<std::size_t>(se, "search", "n_trials", 20);
    cfg.search.budget_epochs = detail::optional<std::size_t>(se, "search", "budget_epochs", 15);
    cfg.search.cap = detail::optional<std::size_t>(se, "search", "cap", 4096);
    cfg.search.workers = detail::optional<std::size_t>(se, "search", "workers", 1);

    const auto& da = j.contains("data") ? j.at("data") : nlohmann::json::object();
    cfg.data.dim = detail::optional<std::size_t>(da, "data", "dim", 8);
    cfg.data.n_total = detail::optional<std::size_t>(da, "data", "n_total", 512);
    cfg.data.n_train = detail::optional<std::size_t>(da, "data", "n_train", 200);
    cfg.data.n_valid = detail::optional<std::size_t>(da, "data", "n_valid", 200);
    cfg.data.n_test = detail::optional<std::size_t>(da, "data", "n_test", 100);
    cfg.data.n_classes = detail::optional<std::size_t>(da, "data", "n_classes", 2);
    cfg.data.label_noise = detail::optional<double>(da, "data", "label_noise", 0.1);
    cfg.data.separation = detail::optional<double>(da, "data", "separation", 1.6);
    cfg.data.noise_std = detail::optional<double>(da, "data", "noise_std", 0.1);
    cfg.data.image_side = detail::optional<std::size_t>(da, "data", "image_side", 8);
    cfg.data.spectrum = detail::optional<std::vector<double>>(da, "data", "spectrum", {});
    cfg.data.seed = detail::optional<std::uint64_t>(da, "data", "seed", 1);
    if (cfg.data.n_train + cfg.data.n_valid + cfg.data.n_test > cfg.data.n_total)
        throw ConfigError("splits exceed n_total at: data.n_total");
    if (!(cfg.data.label_noise >= 0 && cfg.data.label_noise < 0.5))
        throw ConfigError("must be in [0, 0.5) at: data.label_noise");
    if (cfg.data.image_side > 16) throw ConfigError("must be <= 16 at: data.image_side");

    const auto& out = j.contains("output") ? j.at("output") : nlohmann::json::object();
    cfg.out_dir = detail::optional<std::string>(out, "output", "dir", "run");

    cfg.tau = detail::optional<double>(j, "", "tau", 0.001);
    cfg.seed = detail::optional<std::uint64_t>(j, "", "seed", 0);
    cfg.trainer.seed = cfg.seed;
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(j);
}

/// Resolved-config echo for the run directory; parsing it back reproduces
/// the same ExperimentConfig.
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    const char* task_names[] = {"quad_oracle", "linear_jacobian", "synthetic_regression",
                                "synthetic_classification", "tiny_images"};
    j["model"] = {{"task", task_names[static_cast<int>(cfg.task)]},
                  {"hidden", cfg.model.hidden},
                  {"conv_channels", cfg.model.conv_channels},
                  {"conv_kernel", cfg.model.conv_kernel}};
    j["hyperparameters"] = nlohmann::json::array();
    const char* kind_names[] = {"sigmoid_bounded", "exp_positive", "identity", "discretized"};
    for (const auto& d : cfg.hypers) {
        j["hyperparameters"].push_back({{"name", d.param.name},
                                        {"kind", kind_names[static_cast<int>(d.param.kind)]},
                                        {"lo", d.param.lo},
                                        {"hi", d.param.hi},
                                        {"per_example", d.param.per_example},
                                        {"init", d.init},
                                        {"init_sigma", d.init_sigma},
                                        {"binding", d.binding}});
    }
    auto opt_json = [](const OptimizerConfig& o) {
        return nlohmann::json{{"kind", o.kind == OptKind::sgd ? "sgd" : "adam"},
                              {"lr", o.lr},
                              {"momentum", o.momentum}};
    };
    j["trainer"] = {{"t_train", cfg.trainer.t_train},
                    {"t_valid", cfg.trainer.t_valid},
                    {"warmup_epochs", cfg.trainer.warmup_epochs},
                    {"batch_size", cfg.trainer.batch_size},
                    {"max_epochs", cfg.trainer.max_epochs},
                    {"grad_clip", cfg.trainer.grad_clip},
                    {"hyper_lr_decay", cfg.trainer.hyper_lr_decay},
                    {"hyper_decay_epoch", cfg.trainer.hyper_decay_epoch},
                    {"patience", cfg.trainer.patience},
                    {"optimizer_elem", opt_json(cfg.trainer.optimizer_elem)},
                    {"optimizer_hyper", opt_json(cfg.trainer.optimizer_hyper)},
                    {"optimizer_scale", opt_json(cfg.trainer.optimizer_scale)}};
    j["search"] = {{"points_per_axis", cfg.search.points_per_axis},
                   {"n_trials", cfg.search.n_trials},
                   {"budget_epochs", cfg.search.budget_epochs},
                   {"cap", cfg.search.cap},
                   {"workers", cfg.search.workers}};
    j["data"] = {{"dim", cfg.data.dim},
                 {"n_total", cfg.data.n_total},
                 {"n_train", cfg.data.n_train},
                 {"n_valid", cfg.data.n_valid},
                 {"n_test", cfg.data.n_test},
                 {"n_classes", cfg.data.n_classes},
                 {"label_noise", cfg.data.label_noise},
                 {"separation", cfg.data.separation},
                 {"noise_std", cfg.data.noise_std},
                 {"image_side", cfg.data.image_side},
                 {"spectrum", cfg.data.spectrum},
                 {"seed", cfg.data.seed}};
    j["output"] = {{"dir", cfg.out_dir}};
    j["tau"] = cfg.tau;
    j["seed"] = cfg.seed;
    return j;
}

/// Builds the HyperSpace and checks binding consistency before any training.
inline HyperSpace build_hyperspace(const ExperimentConfig& cfg) {
    HyperSpace space;
    for (const auto& d : cfg.hypers) space.add(d.param, d.init, d.init_sigma);
    space.set_tau(cfg.tau);
    for (const auto& d : cfg.hypers) {
        if (d.binding.empty()) continue;
        RegularizerBinding binding;
        if (d.binding == "l2")
            binding.kind = RegKind::l2_penalty;
        else if (d.binding == "input_dropout")
            binding.kind = RegKind::dropout;
        else if (d.binding == "input_noise")
            binding.kind = RegKind::input_noise;
        else if (d.binding == "cutout_holes" || d.binding == "cutout_length")
            binding.kind = RegKind::cutout;
        else
            binding.kind = RegKind::jacobian_penalty;
        binding.hyperparams = {d.param.name};
        try {
            binding.validate(space);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid binding at: hyperparameters (") + e.what() + ")");
        }
    }
    return space;
}

}  // namespace stn
