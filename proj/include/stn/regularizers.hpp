#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "stn/hyperspace.hpp"
#include "stn/rng.hpp"
#include "stn/tensor.hpp"

namespace stn {

/// Inverted dropout: units are zeroed with probability rate_b (one rate per
/// batch row) and survivors scaled by 1/(1-rate); evaluation is the identity.
inline Tensor dropout_apply(const Tensor& x, const std::vector<double>& rates, Rng& rng,
                            bool training) {
    if (!training) return x;
    if (x.rank() != 2 || rates.size() != x.dim(0))
        throw std::invalid_argument("dropout rates size " + std::to_string(rates.size()) +
                                    " does not match batch of " + shape_str(x.shape()));
    std::size_t B = x.dim(0), D = x.dim(1);
    Tensor mask = Tensor::zeros({B, D});
    for (std::size_t b = 0; b < B; ++b) {
        double rate = rates[b];
        if (rate >= 1.0) throw std::invalid_argument("dropout rate " + std::to_string(rate) + " >= 1");
        double keep = 1.0 - rate;
        for (std::size_t d = 0; d < D; ++d)
            mask.at(b * D + d) = rng.bernoulli(rate) ? 0.0 : 1.0 / keep;
    }
    return mul(x, mask);
}

/// mean_b exp_weight_b * ||params||^2 / |D|. The weights are constants in the
/// graph; hyperparameter gradients reach the loss only through the
/// best-response layers.
inline Tensor l2_penalty(const std::vector<Tensor>& params, const std::vector<double>& exp_weights,
                         std::size_t dataset_size) {
    double wsum = 0.0;
    for (double w : exp_weights) wsum += w;
    double factor = wsum / static_cast<double>(exp_weights.size()) / static_cast<double>(dataset_size);
    Tensor acc = Tensor::scalar(0.0);
    for (const auto& p : params) acc = add(acc, sum(square(p)));
    return mul(Tensor::scalar(factor), acc);
}

/// Two-layer network y = s^T Q x. The flag exists so callers cannot route a
/// nonlinear model through the closed-form Jacobian penalty.
struct TwoLayerLinear {
    Tensor Q;  // (D, D)
    Tensor s;  // (D)
    bool linear = true;
};

/// exp(lambda) * ||Q^T s||^2 / |D|; exact for linear nets where the input
/// Jacobian is the constant Q^T s.
inline Tensor jacobian_penalty_linear(const TwoLayerLinear& net, double lambda,
                                      std::size_t dataset_size) {
    if (!net.linear)
        throw std::invalid_argument("jacobian_penalty_linear requires a linear network");
    std::size_t d = net.s.size();
    Tensor u = matmul(reshape(net.s, {1, d}), net.Q);  // (1, D) = (Q^T s)^T
    double factor = std::exp(lambda) / static_cast<double>(dataset_size);
    return mul(Tensor::scalar(factor), sum(square(u)));
}

/// Zeroes `holes` axis-aligned length x length squares centered at uniform
/// random pixels; squares are clipped at the image border.
inline Tensor cutout_apply(const Tensor& img, long holes, long length, Rng& rng) {
    if (img.rank() != 3)
        throw std::invalid_argument("cutout expects a CxHxW image, got " + shape_str(img.shape()));
    if (holes < 0 || length < 0) throw std::invalid_argument("cutout holes/length must be >= 0");
    std::size_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
    Tensor out = Tensor::from(img.shape(), img.data());
    for (long h = 0; h < holes; ++h) {
        long ci = rng.uniform_int(0, static_cast<long>(H) - 1);
        long cj = rng.uniform_int(0, static_cast<long>(W) - 1);
        long half = length / 2;
        long i0 = std::max(0L, ci - half), i1 = std::min<long>(H, ci - half + length);
        long j0 = std::max(0L, cj - half), j1 = std::min<long>(W, cj - half + length);
        for (std::size_t c = 0; c < C; ++c)
            for (long i = i0; i < i1; ++i)
                for (long j = j0; j < j1; ++j) out.at((c * H + i) * W + j) = 0.0;
    }
    return out;
}

/// x + scale_b * z with fresh z ~ N(0, I) per entry; identity in eval mode.
inline Tensor input_noise_apply(const Tensor& x, const std::vector<double>& scales, Rng& rng,
                                bool training) {
    if (!training) return x;
    if (x.rank() != 2 || scales.size() != x.dim(0))
        throw std::invalid_argument("noise scales size " + std::to_string(scales.size()) +
                                    " does not match batch of " + shape_str(x.shape()));
    std::size_t B = x.dim(0), D = x.dim(1);
    Tensor noise = Tensor::zeros({B, D});
    for (std::size_t b = 0; b < B; ++b) {
        if (scales[b] < 0) throw std::invalid_argument("noise scale must be >= 0");
        for (std::size_t d = 0; d < D; ++d) noise.at(b * D + d) = scales[b] * rng.normal();
    }
    return add(x, noise);
}

enum class RegKind { dropout, l2_penalty, jacobian_penalty, cutout, input_noise };

/// Links a regularizer to the hyperparameters that drive it.
struct RegularizerBinding {
    RegKind kind = RegKind::l2_penalty;
    std::vector<std::string> hyperparams;  // names into the HyperSpace

    void validate(const HyperSpace& space) const {
        for (const auto& name : hyperparams) {
            std::size_t j = space.index_of(name);  // throws for unknown names
            const auto& hp = space.descriptor(j);
            if (kind == RegKind::dropout && hp.kind != TransformKind::sigmoid_bounded)
                throw std::invalid_argument("dropout binding '" + name +
                                            "' must use a sigmoid_bounded hyperparameter");
            if (kind == RegKind::cutout && hp.kind != TransformKind::discretized)
                throw std::invalid_argument("cutout binding '" + name +
                                            "' must use a discretized hyperparameter");
        }
    }
};

}  // namespace stn
