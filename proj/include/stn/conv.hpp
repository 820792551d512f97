#pragma once

#include "stn/tensor.hpp"

namespace stn {

/// Direct 2-D convolution (cross-correlation), x: (B,Cin,H,W),
/// kernel: (Cout,Cin,K,K) -> (B,Cout,H',W'). No implicit bias.
inline Tensor conv2d(const Tensor& x, const Tensor& kernel, std::size_t stride = 1,
                     std::size_t pad = 0) {
    if (x.rank() != 4 || kernel.rank() != 4)
        throw std::invalid_argument("conv2d expects rank-4 input and kernel, got " +
                                    shape_str(x.shape()) + " and " + shape_str(kernel.shape()));
    std::size_t B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    std::size_t Cout = kernel.dim(0), K = kernel.dim(2);
    if (kernel.dim(1) != Cin)
        throw std::invalid_argument("conv2d channel mismatch: input " + shape_str(x.shape()) +
                                    " vs kernel " + shape_str(kernel.shape()));
    if (kernel.dim(2) != kernel.dim(3))
        throw std::invalid_argument("conv2d requires square kernels, got " + shape_str(kernel.shape()));
    if (K > H + 2 * pad || K > W + 2 * pad)
        throw std::invalid_argument("kernel size " + std::to_string(K) +
                                    " exceeds padded input " + shape_str(x.shape()));
    std::size_t Ho = (H + 2 * pad - K) / stride + 1;
    std::size_t Wo = (W + 2 * pad - K) / stride + 1;

    Tensor out = Tensor::zeros({B, Cout, Ho, Wo});
    auto xat = [&](const std::vector<double>& d, std::size_t b, std::size_t c, long i, long j) {
        if (i < 0 || j < 0 || i >= static_cast<long>(H) || j >= static_cast<long>(W)) return 0.0;
        return d[((b * Cin + c) * H + i) * W + j];
    };
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t co = 0; co < Cout; ++co)
            for (std::size_t oi = 0; oi < Ho; ++oi)
                for (std::size_t oj = 0; oj < Wo; ++oj) {
                    double acc = 0;
                    for (std::size_t ci = 0; ci < Cin; ++ci)
                        for (std::size_t ki = 0; ki < K; ++ki)
                            for (std::size_t kj = 0; kj < K; ++kj) {
                                long ii = static_cast<long>(oi * stride + ki) - static_cast<long>(pad);
                                long jj = static_cast<long>(oj * stride + kj) - static_cast<long>(pad);
                                acc += xat(x.data(), b, ci, ii, jj) *
                                       kernel.at(((co * Cin + ci) * K + ki) * K + kj);
                            }
                    out.at(((b * Cout + co) * Ho + oi) * Wo + oj) = acc;
                }

    bool rg = x.requires_grad() || kernel.requires_grad();
    out.set_requires_grad(rg);
    if (detail::should_record(rg)) {
        Tape::active()->record([xi = x.impl(), ki = kernel.impl(), oi2 = out.impl(), B, Cin, H, W,
                                Cout, K, Ho, Wo, stride, pad]() {
            if (oi2->grad.empty()) return;
            const auto& g = oi2->grad;
            bool gx = xi->requires_grad, gk = ki->requires_grad;
            if (gx) xi->ensure_grad();
            if (gk) ki->ensure_grad();
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t co = 0; co < Cout; ++co)
                    for (std::size_t oi = 0; oi < Ho; ++oi)
                        for (std::size_t oj = 0; oj < Wo; ++oj) {
                            double go = g[((b * Cout + co) * Ho + oi) * Wo + oj];
                            if (go == 0.0) continue;
                            for (std::size_t ci = 0; ci < Cin; ++ci)
                                for (std::size_t kidx = 0; kidx < K; ++kidx)
                                    for (std::size_t kj = 0; kj < K; ++kj) {
                                        long ii = static_cast<long>(oi * stride + kidx) -
                                                  static_cast<long>(pad);
                                        long jj = static_cast<long>(oj * stride + kj) -
                                                  static_cast<long>(pad);
                                        if (ii < 0 || jj < 0 || ii >= static_cast<long>(H) ||
                                            jj >= static_cast<long>(W))
                                            continue;
                                        std::size_t xoff = ((b * Cin + ci) * H + ii) * W + jj;
                                        std::size_t koff = ((co * Cin + ci) * K + kidx) * K + kj;
                                        if (gx) xi->grad[xoff] += go * ki->data[koff];
                                        if (gk) ki->grad[koff] += go * xi->data[xoff];
                                    }
                        }
        });
    }
    return out;
}

}  // namespace stn
