#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "stn/linalg.hpp"
#include "stn/rng.hpp"
#include "stn/tensor.hpp"

namespace stn {

/// In-memory dataset; inputs are (N, ...) and targets are (N) (class ids or
/// regression values). Regenerating from (generator id, seed) is bitwise
/// identical because all draws flow through one seeded Rng.
struct Dataset {
    Tensor inputs;   // (N, D) or (N, C, H, W)
    Tensor targets;  // (N)
    std::string generator;
    std::uint64_t seed = 0;
    std::vector<double> spectrum;  // singular values used for regression designs

    std::size_t size() const { return inputs.rank() ? inputs.dim(0) : 0; }

    Tensor input_rows(const std::vector<std::size_t>& idx) const {
        Shape row_shape(inputs.shape().begin() + 1, inputs.shape().end());
        std::size_t row = shape_size(row_shape);
        Shape out_shape;
        out_shape.push_back(idx.size());
        out_shape.insert(out_shape.end(), row_shape.begin(), row_shape.end());
        Tensor out = Tensor::zeros(out_shape);
        for (std::size_t i = 0; i < idx.size(); ++i)
            std::copy_n(inputs.data().begin() + idx[i] * row, row, out.data().begin() + i * row);
        return out;
    }

    Tensor target_rows(const std::vector<std::size_t>& idx) const {
        Tensor out = Tensor::zeros({idx.size()});
        for (std::size_t i = 0; i < idx.size(); ++i) out.at(i) = targets.at(idx[i]);
        return out;
    }
};

struct SplitDataset {
    Dataset train, valid, test;
};

/// Random orthogonal factor via Gram-Schmidt on a Gaussian matrix.
inline la::Mat random_orthogonal(std::size_t n, std::size_t d, Rng& rng) {
    la::Mat q(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        la::Vec col(n);
        for (auto& v : col) v = rng.normal();
        for (std::size_t k = 0; k < j; ++k) {
            double proj = 0;
            for (std::size_t i = 0; i < n; ++i) proj += q(i, k) * col[i];
            for (std::size_t i = 0; i < n; ++i) col[i] -= proj * q(i, k);
        }
        double nrm = std::sqrt(la::dot(col, col));
        if (nrm < 1e-12) throw std::runtime_error("degenerate random orthogonal draw");
        for (std::size_t i = 0; i < n; ++i) q(i, j) = col[i] / nrm;
    }
    return q;
}

/// Linear-regression data with a prescribed singular-value spectrum:
/// X = U diag(spectrum) V^T with random orthogonal U, V; t = X w_true + noise.
inline Dataset make_regression(std::size_t d, std::size_t n, const std::vector<double>& spectrum,
                               double noise_std, std::uint64_t seed) {
    if (spectrum.size() != d) throw std::invalid_argument("spectrum length must equal D");
    for (double s : spectrum)
        if (!(s > 0)) throw std::invalid_argument("spectrum entries must be > 0");
    if (n < d) throw std::invalid_argument("make_regression requires N >= D");
    Rng rng(seed);
    la::Mat u = random_orthogonal(n, d, rng);
    la::Mat v = random_orthogonal(d, d, rng);
    la::Mat x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0;
            for (std::size_t k = 0; k < d; ++k) acc += u(i, k) * spectrum[k] * v(j, k);
            x(i, j) = acc;
        }
    la::Vec w(d);
    for (auto& wi : w) wi = rng.normal();
    la::Vec t = la::matvec(x, w);
    for (auto& ti : t) ti += noise_std * rng.normal();

    Dataset ds;
    ds.inputs = Tensor::from({n, d}, x.a);
    ds.targets = Tensor::from({n}, t);
    ds.generator = "regression";
    ds.seed = seed;
    ds.spectrum = spectrum;
    return ds;
}

/// Gaussian class blobs with a fraction of labels flipped; the small train
/// split in configs makes the task overfit-prone.
inline Dataset make_classification(std::size_t d, std::size_t n, std::size_t n_classes,
                                   double label_noise, std::uint64_t seed, double separation = 1.6) {
    if (!(label_noise >= 0 && label_noise < 0.5))
        throw std::invalid_argument("label_noise must be in [0, 0.5)");
    Rng rng(seed);
    la::Mat centers(n_classes, d);
    for (auto& v : centers.a) v = separation * rng.normal();
    Dataset ds;
    ds.inputs = Tensor::zeros({n, d});
    ds.targets = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t cls = i % n_classes;  // class-balanced
        for (std::size_t j = 0; j < d; ++j)
            ds.inputs.at(i * d + j) = centers(cls, j) + rng.normal();
        ds.targets.at(i) = static_cast<double>(cls);
    }
    std::size_t flips = static_cast<std::size_t>(std::llround(label_noise * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t k = 0; k < flips; ++k) {
        std::size_t i = order[k];
        auto cur = static_cast<std::size_t>(ds.targets.at(i));
        std::size_t offset = static_cast<std::size_t>(rng.uniform_int(1, static_cast<long>(n_classes) - 1));
        ds.targets.at(i) = static_cast<double>((cur + offset) % n_classes);
    }
    ds.generator = "classification";
    ds.seed = seed;
    return ds;
}

/// Procedural single-channel shape classification: class 0 draws an axis
/// bar, class 1 a round blob. Pixels lie in [0, 1].
inline Dataset make_tiny_images(std::size_t side, std::size_t n, std::uint64_t seed) {
    if (side > 16) throw std::invalid_argument("tiny image side must be <= 16");
    Rng rng(seed);
    Dataset ds;
    ds.inputs = Tensor::zeros({n, 1, side, side});
    ds.targets = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t cls = i % 2;  // balanced within +-1
        double* img = ds.inputs.data().data() + i * side * side;
        if (cls == 0) {
            bool horizontal = rng.bernoulli(0.5);
            std::size_t pos = static_cast<std::size_t>(rng.uniform_int(1, static_cast<long>(side) - 2));
            for (std::size_t k = 0; k < side; ++k) {
                std::size_t off = horizontal ? pos * side + k : k * side + pos;
                img[off] = 0.7 + 0.3 * rng.uniform(0.0, 1.0);
            }
        } else {
            double ci = rng.uniform(2.0, side - 3.0), cj = rng.uniform(2.0, side - 3.0);
            double rad = rng.uniform(1.2, 2.4);
            for (std::size_t a = 0; a < side; ++a)
                for (std::size_t b = 0; b < side; ++b) {
                    double dist = std::hypot(a - ci, b - cj);
                    if (dist < rad) img[a * side + b] = std::min(1.0, 0.6 + 0.4 * (1.0 - dist / rad));
                }
        }
        for (std::size_t p = 0; p < side * side; ++p)
            img[p] = std::clamp(img[p] + 0.05 * rng.uniform(0.0, 1.0), 0.0, 1.0);
        ds.targets.at(i) = static_cast<double>(cls);
    }
    ds.generator = "tiny_images";
    ds.seed = seed;
    return ds;
}

inline SplitDataset split_dataset(const Dataset& full, std::size_t n_train, std::size_t n_valid,
                                  std::size_t n_test) {
    if (n_train + n_valid + n_test > full.size())
        throw std::invalid_argument("split sizes exceed dataset size");
    auto take = [&](std::size_t from, std::size_t count) {
        std::vector<std::size_t> idx(count);
        std::iota(idx.begin(), idx.end(), from);
        Dataset d;
        d.inputs = full.input_rows(idx);
        d.targets = full.target_rows(idx);
        d.generator = full.generator;
        d.seed = full.seed;
        d.spectrum = full.spectrum;
        return d;
    };
    return {take(0, n_train), take(n_train, n_valid), take(n_train + n_valid, n_test)};
}

}  // namespace stn
