#pragma once

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "stn/rng.hpp"
#include "stn/tensor.hpp"

namespace stn {

enum class TransformKind { sigmoid_bounded, exp_positive, identity, discretized };

inline double stable_sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

/// Descriptor for one tunable hyperparameter: its reparametrization r from
/// unconstrained space and whether its perturbation is drawn per example or
/// once per mini-batch.
struct HyperParam {
    std::string name;
    TransformKind kind = TransformKind::identity;
    double lo = 0.0, hi = 1.0;  // bounds for sigmoid_bounded / discretized
    bool per_example = true;
};

inline double apply_transform(const HyperParam& hp, double lambda) {
    switch (hp.kind) {
        case TransformKind::sigmoid_bounded:
            return hp.lo + (hp.hi - hp.lo) * stable_sigmoid(lambda);
        case TransformKind::exp_positive:
            return std::exp(lambda);
        case TransformKind::identity:
            return lambda;
        case TransformKind::discretized:
            return std::round(hp.lo + (hp.hi - hp.lo) * stable_sigmoid(lambda));
    }
    throw std::logic_error("unreachable transform kind");
}

inline double inverse_transform(const HyperParam& hp, double value) {
    switch (hp.kind) {
        case TransformKind::sigmoid_bounded: {
            if (!(value > hp.lo && value < hp.hi))
                throw std::invalid_argument("value " + std::to_string(value) + " for '" + hp.name +
                                            "' must lie strictly inside (" + std::to_string(hp.lo) +
                                            "," + std::to_string(hp.hi) + ")");
            double p = (value - hp.lo) / (hp.hi - hp.lo);
            return std::log(p / (1.0 - p));
        }
        case TransformKind::exp_positive:
            if (!(value > 0.0))
                throw std::invalid_argument("value for '" + hp.name + "' must be positive");
            return std::log(value);
        case TransformKind::identity:
            return value;
        case TransformKind::discretized:
            throw std::invalid_argument("inverse of discretized transform for '" + hp.name +
                                        "' is ambiguous");
    }
    throw std::logic_error("unreachable transform kind");
}

/// Ordered set of hyperparameter descriptors plus the shared unconstrained
/// state: lambda and log(sigma) live in two n-vector leaf tensors so the
/// valid-phase gradients reach them directly.
class HyperSpace {
public:
    static constexpr double kLogSigmaFloor = -9.210340371976182;  // log(1e-4)
    static constexpr double kLogSigmaCeil = 2.302585092994046;    // log(10)

    HyperSpace() : tau_(0.001) {
        lambda_ = Tensor::zeros({0}, true);
        log_sigma_ = Tensor::zeros({0}, true);
    }

    /// init_value is in the constrained space for continuous kinds and an
    /// unconstrained lambda for discretized ones.
    void add(HyperParam hp, double init_constrained, double init_sigma,
             bool init_is_unconstrained = false) {
        for (const auto& p : params_)
            if (p.name == hp.name) throw std::invalid_argument("duplicate hyperparameter '" + hp.name + "'");
        double lam0 = init_is_unconstrained || hp.kind == TransformKind::discretized
                          ? init_constrained
                          : inverse_transform(hp, init_constrained);
        params_.push_back(std::move(hp));
        append(lambda_, lam0);
        append(log_sigma_, clamp_log_sigma(std::log(init_sigma)));
    }

    std::size_t size() const { return params_.size(); }
    const std::vector<HyperParam>& descriptors() const { return params_; }
    const HyperParam& descriptor(std::size_t j) const { return params_.at(j); }

    std::size_t index_of(const std::string& name) const {
        for (std::size_t j = 0; j < params_.size(); ++j)
            if (params_[j].name == name) return j;
        throw std::invalid_argument("unknown hyperparameter '" + name + "'");
    }

    Tensor& lambda() { return lambda_; }
    Tensor& log_sigma() { return log_sigma_; }
    const Tensor& lambda() const { return lambda_; }
    const Tensor& log_sigma() const { return log_sigma_; }

    double tau() const { return tau_; }
    void set_tau(double t) { tau_ = t; }

    double sigma(std::size_t j) const { return std::exp(log_sigma_.at(j)); }

    static double clamp_log_sigma(double ls) {
        return std::min(kLogSigmaCeil, std::max(kLogSigmaFloor, ls));
    }

    void clamp_scales() {
        for (auto& v : log_sigma_.data()) v = clamp_log_sigma(v);
    }

    /// (B, n) matrix of lambda + eps, eps = sigma * z with z ~ N(0,1); the
    /// result is differentiable w.r.t. lambda and log_sigma through the
    /// reparametrization. Columns with per_example = false share one draw.
    Tensor sample_perturbed(std::size_t batch, Rng& rng) const {
        std::size_t n = params_.size();
        Tensor z = Tensor::zeros({batch, n});
        for (std::size_t j = 0; j < n; ++j) {
            if (params_[j].per_example) {
                for (std::size_t b = 0; b < batch; ++b) z.at(b * n + j) = rng.normal();
            } else {
                double shared = rng.normal();
                for (std::size_t b = 0; b < batch; ++b) z.at(b * n + j) = shared;
            }
        }
        Tensor eps = mul(z, exp_t(log_sigma_));  // (B,n) * (n) broadcast
        return stn::add(eps, lambda_);
    }

    /// Deterministic (B, n) matrix repeating the current lambda.
    Tensor tile_lambda(std::size_t batch) const {
        std::size_t n = params_.size();
        Tensor z = Tensor::zeros({batch, n});
        return stn::add(z, lambda_);
    }

    /// H[p(eps|sigma)] = sum_j (0.5 log(2 pi e) + log sigma_j), built on the
    /// tape so d(entropy)/d(log sigma_j) = 1 reaches the scale update.
    Tensor entropy() const {
        double c = 0.5 * std::log(2.0 * M_PI * M_E);
        return stn::add(Tensor::scalar(c * static_cast<double>(params_.size())), sum(log_sigma_));
    }

    /// Constrained values at eps = 0.
    std::map<std::string, double> constrained_snapshot() const {
        std::map<std::string, double> out;
        for (std::size_t j = 0; j < params_.size(); ++j)
            out[params_[j].name] = apply_transform(params_[j], lambda_.at(j));
        return out;
    }

    double constrained_value(std::size_t j) const {
        return apply_transform(params_[j], lambda_.at(j));
    }

    /// Applies r columnwise to a numeric (B, n) lambda matrix.
    std::vector<double> constrain_batch(const Tensor& lam_batch) const {
        std::size_t n = params_.size();
        std::size_t B = lam_batch.dim(0);
        std::vector<double> out(B * n);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t j = 0; j < n; ++j)
                out[b * n + j] = apply_transform(params_[j], lam_batch.at(b * n + j));
        return out;
    }

private:
    static void append(Tensor& t, double v) {
        Tensor grown = Tensor::zeros({t.size() + 1}, true);
        for (std::size_t i = 0; i < t.size(); ++i) grown.at(i) = t.at(i);
        grown.at(t.size()) = v;
        t = grown;
    }

    std::vector<HyperParam> params_;
    Tensor lambda_;     // (n), unconstrained
    Tensor log_sigma_;  // (n)
    double tau_;
};

}  // namespace stn
