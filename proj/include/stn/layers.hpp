#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stn/conv.hpp"
#include "stn/rng.hpp"
#include "stn/tensor.hpp"

namespace stn {

/// Dense layer whose effective weights are affine in the hyperparameter
/// vector: W(lam) = W_elem + (V lam) row-scaling W_hyper, and likewise for
/// the bias. With V = C_b = 0 it degenerates to an ordinary dense layer.
struct HyperDense {
    std::size_t d_in = 0, d_out = 0, n_hparams = 0;
    Tensor W_elem;   // (d_out, d_in)
    Tensor W_hyper;  // (d_out, d_in)
    Tensor V;        // (d_out, n)
    Tensor b_elem;   // (d_out)
    Tensor b_hyper;  // (d_out)
    Tensor C_b;      // (d_out, n)

    HyperDense() = default;

    HyperDense(std::size_t din, std::size_t dout, std::size_t n, Rng& rng)
        : d_in(din), d_out(dout), n_hparams(n) {
        double stdv = 1.0 / std::sqrt(static_cast<double>(din));
        auto uni = [&](Shape s) {
            Tensor t = Tensor::zeros(s, true);
            for (auto& v : t.data()) v = rng.uniform(-stdv, stdv);
            return t;
        };
        auto gauss = [&](Shape s) {
            Tensor t = Tensor::zeros(s, true);
            for (auto& v : t.data()) v = rng.normal(0.0, 0.01);
            return t;
        };
        W_elem = uni({dout, din});
        W_hyper = uni({dout, din});
        b_elem = uni({dout});
        b_hyper = uni({dout});
        V = gauss({dout, n});
        C_b = gauss({dout, n});
    }

    std::vector<Tensor> params() { return {W_elem, W_hyper, V, b_elem, b_hyper, C_b}; }

    std::size_t param_count() const {
        return d_out * (2 * d_in + n_hparams) + d_out * (2 + n_hparams);
    }

    /// x: (B, d_in), lam: (B, n) -> (B, d_out). Row i uses lam row i, so
    /// per-example perturbed hyperparameters share one forward pass.
    Tensor forward(const Tensor& x, const Tensor& lam) const {
        if (x.rank() != 2 || x.dim(1) != d_in)
            throw std::invalid_argument("HyperDense input shape " + shape_str(x.shape()) +
                                        " incompatible with d_in=" + std::to_string(d_in));
        if (lam.rank() != 2 || lam.dim(1) != n_hparams)
            throw std::invalid_argument("HyperDense lambda shape " + shape_str(lam.shape()) +
                                        " incompatible with n=" + std::to_string(n_hparams));
        if (lam.dim(0) != x.dim(0))
            throw std::invalid_argument("batch mismatch: x " + shape_str(x.shape()) + " vs lambda " +
                                        shape_str(lam.shape()));
        Tensor base = add(matmul(x, transpose(W_elem)), b_elem);
        Tensor wscale = matmul(lam, transpose(V));        // (B, d_out)
        Tensor hx = matmul(x, transpose(W_hyper));        // (B, d_out)
        Tensor bscale = matmul(lam, transpose(C_b));      // (B, d_out)
        return add(base, add(mul(wscale, hx), mul(bscale, b_hyper)));
    }
};

/// Convolutional analog: per output channel, a hyper kernel and bias scaled
/// by lam^T u_c and lam^T a_c, plus a global elem_scalar on the elementary
/// convolution path.
struct HyperConv {
    std::size_t c_in = 0, c_out = 0, ksize = 0, n_hparams = 0;
    std::size_t stride = 1, pad = 0;
    Tensor kernel_elem;   // (c_out, c_in, K, K)
    Tensor kernel_hyper;  // (c_out, c_in, K, K)
    Tensor bias_elem;     // (c_out)
    Tensor bias_hyper;    // (c_out)
    Tensor U;             // (c_out, n), rows u_c
    Tensor A;             // (c_out, n), rows a_c
    Tensor elem_scalar;   // scalar, initialized to 1

    HyperConv() = default;

    HyperConv(std::size_t cin, std::size_t cout, std::size_t k, std::size_t n, Rng& rng,
              std::size_t stride_ = 1, std::size_t pad_ = 0)
        : c_in(cin), c_out(cout), ksize(k), n_hparams(n), stride(stride_), pad(pad_) {
        double stdv = 1.0 / std::sqrt(static_cast<double>(cin * k * k));
        auto uni = [&](Shape s) {
            Tensor t = Tensor::zeros(s, true);
            for (auto& v : t.data()) v = rng.uniform(-stdv, stdv);
            return t;
        };
        auto gauss = [&](Shape s) {
            Tensor t = Tensor::zeros(s, true);
            for (auto& v : t.data()) v = rng.normal(0.0, 0.01);
            return t;
        };
        kernel_elem = uni({cout, cin, k, k});
        kernel_hyper = uni({cout, cin, k, k});
        bias_elem = uni({cout});
        bias_hyper = uni({cout});
        U = gauss({cout, n});
        A = gauss({cout, n});
        elem_scalar = Tensor::scalar(1.0, true);
    }

    std::vector<Tensor> params() {
        return {kernel_elem, kernel_hyper, bias_elem, bias_hyper, U, A, elem_scalar};
    }

    std::size_t param_count() const {
        std::size_t plain = c_out * (c_in * ksize * ksize + 1);
        return 2 * plain + 2 * n_hparams * c_out + 1;
    }

    /// x: (B, c_in, H, W), lam: (B, n) -> (B, c_out, H', W').
    Tensor forward(const Tensor& x, const Tensor& lam) const {
        if (lam.rank() != 2 || lam.dim(1) != n_hparams || lam.dim(0) != x.dim(0))
            throw std::invalid_argument("HyperConv lambda shape " + shape_str(lam.shape()) +
                                        " incompatible with input " + shape_str(x.shape()));
        std::size_t B = x.dim(0);
        Tensor base = conv2d(x, kernel_elem, stride, pad);
        std::size_t Ho = base.dim(2), Wo = base.dim(3);
        (void)Ho;
        (void)Wo;
        Tensor out = add(mul(elem_scalar, base), reshape(bias_elem, {c_out, 1, 1}));
        Tensor hconv = conv2d(x, kernel_hyper, stride, pad);
        Tensor wscal = reshape(matmul(lam, transpose(U)), {B, c_out, 1, 1});
        Tensor bscal = mul(matmul(lam, transpose(A)), bias_hyper);  // (B, c_out)
        out = add(out, mul(wscal, hconv));
        out = add(out, reshape(bscal, {B, c_out, 1, 1}));
        return out;
    }
};

/// Two-layer linear net with sigmoid-gated hidden units: the prediction is
/// s0^T (sigmoid(lam*v + c) o (Q0 x)). Q0 and s0 are fixed, v and c train.
struct GatedLinearNet {
    std::size_t dim = 0;
    Tensor Q0;  // (D, D), fixed
    Tensor s0;  // (D), fixed
    Tensor v;   // (D)
    Tensor c;   // (D)

    GatedLinearNet() = default;

    GatedLinearNet(Tensor q0, Tensor s0_, Tensor v_, Tensor c_)
        : dim(s0_.size()), Q0(std::move(q0)), s0(std::move(s0_)), v(std::move(v_)), c(std::move(c_)) {}

    static GatedLinearNet random_init(Tensor q0, Tensor s0_, Rng& rng) {
        std::size_t d = s0_.size();
        Tensor v = Tensor::zeros({d}, true);
        Tensor c = Tensor::zeros({d}, true);
        for (auto& x : v.data()) x = rng.normal(0.0, 0.1);
        for (auto& x : c.data()) x = rng.normal(0.0, 0.1);
        return GatedLinearNet(std::move(q0), std::move(s0_), std::move(v), std::move(c));
    }

    std::vector<Tensor> params() { return {v, c}; }

    /// Batched prediction; x: (B, D), lam: (B, 1) -> (B).
    Tensor forward(const Tensor& x, const Tensor& lam) const {
        Tensor gates = sigmoid(add(matmul(lam, reshape(v, {1, dim})), c));  // (B, D)
        Tensor h = matmul(x, transpose(Q0));                                // (B, D)
        return sum(mul(mul(gates, h), s0), 1);
    }

    /// Effective linear map x -> u(lam)^T x; rows of the result are u(lam_i).
    Tensor input_jacobian(const Tensor& lam) const {
        Tensor gates = sigmoid(add(matmul(lam, reshape(v, {1, dim})), c));  // (B, D)
        return matmul(mul(gates, s0), Q0);                                  // (B, D)
    }
};

inline double gated_forward(const GatedLinearNet& net, const std::vector<double>& x, double lambda) {
    Tensor xb = Tensor::from({1, net.dim}, x);
    Tensor lb = Tensor::from({1, 1}, {lambda});
    return net.forward(xb, lb).at(0);
}

}  // namespace stn
