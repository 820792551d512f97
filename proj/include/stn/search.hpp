#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "stn/hyperspace.hpp"
#include "stn/rng.hpp"

namespace stn {

/// One fixed-hyperparameter training run to execute.
struct TrialSpec {
    std::map<std::string, double> assignment;  // name -> constrained value
    std::uint64_t seed = 0;
    std::size_t budget_epochs = 0;
};

struct TrialRecord {
    TrialSpec spec;
    double valid_loss = 0.0;
    double test_loss = 0.0;
    double wall_seconds = 0.0;
    std::vector<double> epoch_valid;  // per-epoch validation losses
};

struct SearchResult {
    std::vector<TrialRecord> trials;     // in spec order, regardless of worker scheduling
    std::vector<double> best_so_far;     // min valid_loss over trials[0..i]

    void finalize() {
        best_so_far.clear();
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : trials) {
            best = std::min(best, t.valid_loss);
            best_so_far.push_back(best);
        }
    }
};

/// Runs one trial end to end; must be safe to call from worker threads
/// (each call owns its model, rng, and tape).
using TrialRunner = std::function<TrialRecord(const TrialSpec&)>;

namespace detail {

inline SearchResult run_trials(const std::vector<TrialSpec>& specs, const TrialRunner& runner,
                               std::size_t workers) {
    SearchResult result;
    result.trials.resize(specs.size());
    if (workers <= 1 || specs.size() <= 1) {
        for (std::size_t i = 0; i < specs.size(); ++i) result.trials[i] = runner(specs[i]);
    } else {
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= specs.size()) return;
                result.trials[i] = runner(specs[i]);
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, specs.size()); ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    result.finalize();
    return result;
}

}  // namespace detail

/// Lexicographic full-factorial grid over the constrained ranges; discretized
/// axes enumerate integers. Every grid point is one plain training run.
inline SearchResult grid_search(const std::vector<HyperParam>& axes, std::size_t points_per_axis,
                                const TrialRunner& runner, std::uint64_t seed,
                                std::size_t budget_epochs, std::size_t cap = 4096,
                                std::size_t workers = 1) {
    if (points_per_axis < 1) throw std::invalid_argument("points_per_axis must be >= 1");
    std::vector<std::vector<double>> values(axes.size());
    for (std::size_t j = 0; j < axes.size(); ++j) {
        const auto& hp = axes[j];
        if (hp.kind == TransformKind::discretized) {
            for (double v = hp.lo; v <= hp.hi + 1e-9; v += 1.0) values[j].push_back(std::round(v));
        } else if (hp.lo == hp.hi || points_per_axis == 1) {
            values[j].push_back(hp.lo);
        } else if (hp.kind == TransformKind::exp_positive) {
            if (!(hp.lo > 0)) throw std::invalid_argument("exp_positive axis needs lo > 0");
            for (std::size_t k = 0; k < points_per_axis; ++k)  // log-spaced
                values[j].push_back(std::exp(std::log(hp.lo) +
                                             (std::log(hp.hi) - std::log(hp.lo)) *
                                                 static_cast<double>(k) /
                                                 static_cast<double>(points_per_axis - 1)));
        } else {
            for (std::size_t k = 0; k < points_per_axis; ++k)
                values[j].push_back(hp.lo + (hp.hi - hp.lo) * static_cast<double>(k) /
                                                 static_cast<double>(points_per_axis - 1));
        }
    }
    std::size_t total = 1;
    for (const auto& v : values) {
        total *= v.size();
        if (total > cap) throw std::invalid_argument("grid size exceeds cap of " + std::to_string(cap));
    }
    std::vector<TrialSpec> specs;
    std::vector<std::size_t> idx(axes.size(), 0);
    for (std::size_t t = 0; t < total; ++t) {
        TrialSpec spec;
        for (std::size_t j = 0; j < axes.size(); ++j) spec.assignment[axes[j].name] = values[j][idx[j]];
        spec.seed = seed;
        spec.budget_epochs = budget_epochs;
        specs.push_back(std::move(spec));
        for (std::size_t j = axes.size(); j-- > 0;) {  // last axis fastest
            if (++idx[j] < values[j].size()) break;
            idx[j] = 0;
        }
    }
    return detail::run_trials(specs, runner, workers);
}

/// Uniform sampling over the constrained ranges (discretized: uniform over
/// the integer set); trial i uses seed + i so trials stay independent.
inline SearchResult random_search(const std::vector<HyperParam>& axes, std::size_t n_trials,
                                  const TrialRunner& runner, std::uint64_t seed,
                                  std::size_t budget_epochs, std::size_t workers = 1) {
    if (n_trials < 1) throw std::invalid_argument("random_search needs n_trials >= 1");
    Rng rng(seed);
    std::vector<TrialSpec> specs;
    for (std::size_t t = 0; t < n_trials; ++t) {
        TrialSpec spec;
        for (const auto& hp : axes) {
            double v;
            if (hp.kind == TransformKind::discretized)
                v = static_cast<double>(rng.uniform_int(static_cast<long>(hp.lo), static_cast<long>(hp.hi)));
            else if (hp.kind == TransformKind::exp_positive)
                v = std::exp(rng.uniform(std::log(std::max(hp.lo, 1e-12)), std::log(hp.hi)));
            else
                v = rng.uniform(hp.lo, hp.hi);
            spec.assignment[hp.name] = v;
        }
        spec.seed = seed + t;
        spec.budget_epochs = budget_epochs;
        specs.push_back(std::move(spec));
    }
    return detail::run_trials(specs, runner, workers);
}

/// Per-epoch winner over a family of fixed-value trials; ties break toward
/// the smaller constrained value. epoch_valid logs must all share a length.
inline std::vector<double> greedy_schedule_from_grid(const std::vector<TrialRecord>& trials,
                                                     const std::string& hyper_name) {
    if (trials.empty()) throw std::invalid_argument("greedy schedule needs at least one trial");
    std::size_t epochs = trials.front().epoch_valid.size();
    for (const auto& t : trials)
        if (t.epoch_valid.size() != epochs)
            throw std::invalid_argument("ragged per-epoch logs in greedy schedule input");
    std::vector<double> schedule(epochs);
    for (std::size_t e = 0; e < epochs; ++e) {
        double best_loss = std::numeric_limits<double>::infinity();
        double best_value = 0.0;
        for (const auto& t : trials) {
            double v = t.spec.assignment.at(hyper_name);
            double l = t.epoch_valid[e];
            if (l < best_loss || (l == best_loss && v < best_value)) {
                best_loss = l;
                best_value = v;
            }
        }
        schedule[e] = best_value;
    }
    return schedule;
}

}  // namespace stn
