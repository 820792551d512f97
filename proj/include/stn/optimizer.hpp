#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stn/tensor.hpp"

namespace stn {

enum class OptKind { sgd, adam };

struct OptimizerConfig {
    OptKind kind = OptKind::sgd;
    double lr = 0.01;
    double momentum = 0.0;          // sgd
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;  // adam

    void validate() const {
        if (!(lr > 0)) throw std::invalid_argument("optimizer learning rate must be > 0");
    }
};

/// SGD-with-momentum / Adam over a fixed parameter list. Deterministic: the
/// update is a pure function of the accumulated state and current grads.
class Optimizer {
public:
    Optimizer() = default;

    Optimizer(OptimizerConfig cfg, std::vector<Tensor> params) : cfg_(cfg), params_(std::move(params)) {
        cfg_.validate();
        state1_.resize(params_.size());
        state2_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            state1_[i].assign(params_[i].size(), 0.0);
            state2_[i].assign(params_[i].size(), 0.0);
        }
    }

    const std::vector<Tensor>& params() const { return params_; }
    double lr() const { return cfg_.lr; }
    void set_lr(double lr) { cfg_.lr = lr; }

    void step() {
        ++t_;
        for (std::size_t i = 0; i < params_.size(); ++i) {
            Tensor& p = params_[i];
            if (!p.has_grad()) continue;  // zero grad: parameter unchanged
            auto& g = p.grad();
            auto& m = state1_[i];
            auto& v = state2_[i];
            if (cfg_.kind == OptKind::sgd) {
                for (std::size_t j = 0; j < p.size(); ++j) {
                    m[j] = cfg_.momentum * m[j] + g[j];
                    p.at(j) -= cfg_.lr * m[j];
                }
            } else {
                double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
                double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
                for (std::size_t j = 0; j < p.size(); ++j) {
                    m[j] = cfg_.beta1 * m[j] + (1 - cfg_.beta1) * g[j];
                    v[j] = cfg_.beta2 * v[j] + (1 - cfg_.beta2) * g[j] * g[j];
                    double mh = m[j] / bc1;
                    double vh = v[j] / bc2;
                    p.at(j) -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
                }
            }
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

private:
    OptimizerConfig cfg_;
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> state1_, state2_;
    std::size_t t_ = 0;
};

/// Scales grads in place so their global L2 norm is at most `bound`.
inline void clip_global_norm(std::vector<Tensor>& params, double bound) {
    if (bound <= 0) return;
    double sq = 0;
    for (auto& p : params)
        if (p.has_grad())
            for (double g : p.grad()) sq += g * g;
    double norm = std::sqrt(sq);
    if (norm <= bound) return;
    double s = bound / norm;
    for (auto& p : params)
        if (p.has_grad())
            for (auto& g : p.grad()) g *= s;
}

}  // namespace stn
