#pragma once

#include <cmath>
#include <stdexcept>

#include "stn/tensor.hpp"

namespace stn {

/// Mean cross-entropy from logits (B, K) against integer class ids (B).
/// Row maxima are detached constants, so the softmax stays stable without
/// touching the gradient.
inline Tensor softmax_cross_entropy(const Tensor& logits, const Tensor& targets) {
    if (logits.rank() != 2 || targets.size() != logits.dim(0))
        throw std::invalid_argument("cross-entropy shapes mismatch: " + shape_str(logits.shape()) +
                                    " vs " + shape_str(targets.shape()));
    std::size_t b = logits.dim(0), k = logits.dim(1);
    Tensor rowmax = Tensor::zeros({b, 1});
    for (std::size_t i = 0; i < b; ++i) {
        double m = logits.at(i * k);
        for (std::size_t j = 1; j < k; ++j) m = std::max(m, logits.at(i * k + j));
        rowmax.at(i) = m;
    }
    Tensor shifted = sub(logits, rowmax);
    Tensor logsum = log_t(sum(exp_t(shifted), 1, true));  // (B,1)
    Tensor logp = sub(shifted, logsum);
    Tensor onehot = Tensor::zeros({b, k});
    for (std::size_t i = 0; i < b; ++i) {
        auto cls = static_cast<std::size_t>(targets.at(i));
        if (cls >= k) throw std::invalid_argument("target class out of range");
        onehot.at(i * k + cls) = 1.0;
    }
    return neg(mean(sum(mul(logp, onehot), 1)));
}

/// Mean squared error between a (B) prediction vector and (B) targets.
inline Tensor mse_loss(const Tensor& pred, const Tensor& targets) {
    if (pred.size() != targets.size())
        throw std::invalid_argument("mse shapes mismatch: " + shape_str(pred.shape()) + " vs " +
                                    shape_str(targets.shape()));
    return mean(square(sub(pred, targets)));
}

}  // namespace stn
