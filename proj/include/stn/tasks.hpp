#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "stn/layers.hpp"
#include "stn/losses.hpp"
#include "stn/oracles.hpp"
#include "stn/regularizers.hpp"
#include "stn/trainer.hpp"

namespace stn {

namespace detail {

struct QuadTensors {
    Tensor A, B, C, d_col, e_col;

    static QuadTensors from(const QuadraticCoeffs& q) {
        QuadTensors t;
        t.A = Tensor::from({q.A.rows, q.A.cols}, q.A.a);
        t.B = Tensor::from({q.B.rows, q.B.cols}, q.B.a);
        t.C = Tensor::from({q.C.rows, q.C.cols}, q.C.a);
        t.d_col = Tensor::from({q.d.size(), 1}, q.d);
        t.e_col = Tensor::from({q.e.size(), 1}, q.e);
        return t;
    }

    /// Batched quadratic value, lam: (B,n), th: (B,m) -> mean over rows.
    Tensor eval(const Tensor& lam, const Tensor& th) const {
        Tensor half = Tensor::scalar(0.5);
        Tensor t1 = mul(half, sum(mul(lam, matmul(lam, A)), 1));       // A symmetric
        Tensor t2 = sum(mul(lam, matmul(th, transpose(B))), 1);
        Tensor t3 = mul(half, sum(mul(th, matmul(th, C)), 1));
        std::size_t b = lam.dim(0);
        Tensor t4 = reshape(matmul(lam, d_col), {b});
        Tensor t5 = reshape(matmul(th, e_col), {b});
        return mean(add(add(add(t1, t2), add(t3, t4)), t5));
    }
};

}  // namespace detail

/// Affine best-response surrogate theta(lam) = U lam + b on a quadratic
/// bilevel instance; train_loss is the lower-level f, valid_loss the
/// upper-level F, both evaluated at the surrogate.
class QuadraticAffineModel : public StnModel {
public:
    QuadraticAffineModel(const QuadraticBilevel& prob, Rng& rng)
        : n_(prob.n), m_(prob.m), lower_(detail::QuadTensors::from(prob.lower)),
          upper_(detail::QuadTensors::from(prob.upper)) {
        U_ = Tensor::zeros({m_, n_}, true);
        b_ = Tensor::zeros({m_}, true);
        for (auto& v : U_.data()) v = 0.01 * rng.normal();
        for (auto& v : b_.data()) v = 0.01 * rng.normal();
    }

    Tensor response(const Tensor& lam) const { return add(matmul(lam, transpose(U_)), b_); }

    Tensor train_loss(const DataBatch&, const Tensor& lam, const HyperValues&, Rng&, bool) override {
        return lower_.eval(lam, response(lam));
    }

    Tensor valid_loss(const DataBatch&, const Tensor& lam, const HyperValues&, Rng&, bool) override {
        return upper_.eval(lam, response(lam));
    }

    std::vector<Tensor> params() override { return {U_, b_}; }

    std::vector<std::pair<std::string, Tensor>> named_tensors() override {
        return {{"U", U_}, {"b", b_}};
    }

    Tensor& slope() { return U_; }
    Tensor& offset() { return b_; }

private:
    std::size_t n_, m_;
    detail::QuadTensors lower_, upper_;
    Tensor U_, b_;
};

enum class LossKind { softmax_ce, mse };

/// Bindings from hyperspace columns (or fixed baseline values) to the
/// regularizers of an MLP task. Index -1 means unbound.
struct MlpBindings {
    int l2 = -1;
    int input_dropout = -1;
    int input_noise = -1;
    double fixed_l2 = -1.0;       // plain-model substitutes for search trials
    double fixed_dropout = -1.0;
};

/// Stack of HyperDense layers with ReLU between; covers both the STN model
/// (n > 0) and the plain fixed-hyperparameter baselines (n = 0).
class MlpModel : public StnModel {
public:
    MlpModel(std::vector<HyperDense> layers, LossKind loss, std::size_t dataset_size,
             MlpBindings bindings)
        : layers_(std::move(layers)), loss_(loss), dataset_size_(dataset_size), bind_(bindings) {}

    Tensor forward(const Tensor& x, const Tensor& lam) const {
        Tensor h = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            h = layers_[i].forward(h, lam);
            if (i + 1 < layers_.size()) h = relu(h);
        }
        return h;
    }

    Tensor train_loss(const DataBatch& batch, const Tensor& lam, const HyperValues& hv, Rng& rng,
                      bool training) override {
        Tensor x = apply_input_regularizers(batch.x, hv, rng, training);
        Tensor loss = data_loss(forward(x, lam), batch.y);
        std::vector<double> weights;
        if (bind_.l2 >= 0)
            weights = hv.column(static_cast<std::size_t>(bind_.l2));
        else if (bind_.fixed_l2 >= 0)
            weights.assign(1, bind_.fixed_l2);
        if (!weights.empty())
            loss = add(loss, l2_penalty(effective_weight_group(lam), weights, dataset_size_));
        return loss;
    }

    Tensor valid_loss(const DataBatch& batch, const Tensor& lam, const HyperValues& hv, Rng& rng,
                      bool training) override {
        Tensor x = apply_input_regularizers(batch.x, hv, rng, training);
        return data_loss(forward(x, lam), batch.y);
    }

    std::vector<Tensor> params() override {
        std::vector<Tensor> out;
        for (auto& l : layers_) {
            auto p = l.params();
            out.insert(out.end(), p.begin(), p.end());
        }
        return out;
    }

    std::vector<std::pair<std::string, Tensor>> named_tensors() override {
        std::vector<std::pair<std::string, Tensor>> out;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            std::string p = "layer" + std::to_string(i) + ".";
            out.emplace_back(p + "W_elem", layers_[i].W_elem);
            out.emplace_back(p + "W_hyper", layers_[i].W_hyper);
            out.emplace_back(p + "V", layers_[i].V);
            out.emplace_back(p + "b_elem", layers_[i].b_elem);
            out.emplace_back(p + "b_hyper", layers_[i].b_hyper);
            out.emplace_back(p + "C_b", layers_[i].C_b);
        }
        return out;
    }

    std::vector<HyperDense>& layers() { return layers_; }

private:
    Tensor apply_input_regularizers(const Tensor& x0, const HyperValues& hv, Rng& rng,
                                    bool training) const {
        Tensor x = x0;
        std::size_t b = x.dim(0);
        if (bind_.input_dropout >= 0) {
            x = dropout_apply(x, hv.column(static_cast<std::size_t>(bind_.input_dropout)), rng, training);
        } else if (bind_.fixed_dropout >= 0 && training) {
            x = dropout_apply(x, std::vector<double>(b, bind_.fixed_dropout), rng, training);
        }
        if (bind_.input_noise >= 0)
            x = input_noise_apply(x, hv.column(static_cast<std::size_t>(bind_.input_noise)), rng, training);
        return x;
    }

    Tensor data_loss(const Tensor& out, const Tensor& y) const {
        if (loss_ == LossKind::softmax_ce) return softmax_cross_entropy(out, y);
        return mse_loss(reshape(out, {out.dim(0)}), y);
    }

    /// Penalized group: the response weights W_elem + (V lam)⊙W_hyper at the
    /// batch-mean lambda, so the decay acts on the weights the forward pass
    /// uses while the generator path stays free to shape the response. With a
    /// shared per-batch lambda the mean is exact.
    std::vector<Tensor> effective_weight_group(const Tensor& lam) {
        std::vector<Tensor> group;
        Tensor lam_row = mean(lam, 0, true);  // (1, n)
        for (auto& l : layers_) {
            Tensor wscale = reshape(matmul(lam_row, transpose(l.V)), {l.d_out, 1});
            group.push_back(add(l.W_elem, mul(wscale, l.W_hyper)));
        }
        return group;
    }

    std::vector<HyperDense> layers_;
    LossKind loss_;
    std::size_t dataset_size_;
    MlpBindings bind_;
};

/// HyperConv -> ReLU -> HyperDense classifier on single-channel images, with
/// cutout driven by discretized hyperparameters on the training inputs only.
class ConvModel : public StnModel {
public:
    ConvModel(HyperConv conv, HyperDense head, std::size_t side, int holes_idx, int length_idx,
              long fixed_length = 3)
        : conv_(std::move(conv)), head_(std::move(head)), side_(side), holes_idx_(holes_idx),
          length_idx_(length_idx), fixed_length_(fixed_length) {}

    Tensor train_loss(const DataBatch& batch, const Tensor& lam, const HyperValues& hv, Rng& rng,
                      bool training) override {
        Tensor x = batch.x;
        if (training && holes_idx_ >= 0) x = apply_cutout(x, hv, rng);
        return softmax_cross_entropy(forward(x, lam), batch.y);
    }

    Tensor valid_loss(const DataBatch& batch, const Tensor& lam, const HyperValues&, Rng&,
                      bool) override {
        return softmax_cross_entropy(forward(batch.x, lam), batch.y);
    }

    std::vector<Tensor> params() override {
        auto out = conv_.params();
        auto hp = head_.params();
        out.insert(out.end(), hp.begin(), hp.end());
        return out;
    }

    std::vector<std::pair<std::string, Tensor>> named_tensors() override {
        std::vector<std::pair<std::string, Tensor>> out;
        const char* conv_names[] = {"conv.kernel_elem", "conv.kernel_hyper", "conv.bias_elem",
                                    "conv.bias_hyper", "conv.U", "conv.A", "conv.elem_scalar"};
        auto cp = conv_.params();
        for (std::size_t i = 0; i < cp.size(); ++i) out.emplace_back(conv_names[i], cp[i]);
        out.emplace_back("head.W_elem", head_.W_elem);
        out.emplace_back("head.W_hyper", head_.W_hyper);
        out.emplace_back("head.V", head_.V);
        out.emplace_back("head.b_elem", head_.b_elem);
        out.emplace_back("head.b_hyper", head_.b_hyper);
        out.emplace_back("head.C_b", head_.C_b);
        return out;
    }

private:
    Tensor forward(const Tensor& x, const Tensor& lam) const {
        Tensor h = relu(conv_.forward(x, lam));
        std::size_t b = h.dim(0);
        Tensor flat = reshape(h, {b, h.size() / b});
        return head_.forward(flat, lam);
    }

    Tensor apply_cutout(const Tensor& x, const HyperValues& hv, Rng& rng) const {
        std::size_t b = x.dim(0), c = x.dim(1);
        Tensor out = Tensor::from(x.shape(), x.data());
        std::size_t img = c * side_ * side_;
        for (std::size_t i = 0; i < b; ++i) {
            long holes = static_cast<long>(hv.at(i, static_cast<std::size_t>(holes_idx_)));
            long length = length_idx_ >= 0
                              ? static_cast<long>(hv.at(i, static_cast<std::size_t>(length_idx_)))
                              : fixed_length_;
            Tensor one = Tensor::from({c, side_, side_},
                                      std::vector<double>(out.data().begin() + i * img,
                                                          out.data().begin() + (i + 1) * img));
            Tensor cut = cutout_apply(one, holes, length, rng);
            std::copy(cut.data().begin(), cut.data().end(), out.data().begin() + i * img);
        }
        return out;
    }

    HyperConv conv_;
    HyperDense head_;
    std::size_t side_;
    int holes_idx_, length_idx_;
    long fixed_length_;
};

/// Two-layer linear net with sigmoid gates on squared error plus the
/// exp-weighted penalty on the input Jacobian; the penalty weight column is
/// the exp-transformed hyperparameter.
class GatedModel : public StnModel {
public:
    GatedModel(GatedLinearNet net, std::size_t dataset_size, int penalty_idx = 0)
        : net_(std::move(net)), dataset_size_(dataset_size), penalty_idx_(penalty_idx) {}

    Tensor train_loss(const DataBatch& batch, const Tensor& lam, const HyperValues& hv, Rng&,
                      bool) override {
        Tensor pred = net_.forward(batch.x, lam);
        Tensor se = square(sub(pred, batch.y));  // (B)
        Tensor jac = net_.input_jacobian(lam);   // (B, D)
        Tensor pen_unit = sum(square(jac), 1);   // ||u(lam_b)||^2 per row
        std::size_t b = batch.x.dim(0);
        Tensor w = Tensor::zeros({b});
        for (std::size_t i = 0; i < b; ++i)
            w.at(i) = hv.at(i, static_cast<std::size_t>(penalty_idx_)) /
                      static_cast<double>(dataset_size_);
        return sum(add(se, mul(w, pen_unit)));
    }

    Tensor valid_loss(const DataBatch& batch, const Tensor& lam, const HyperValues&, Rng&,
                      bool) override {
        return mse_loss(net_.forward(batch.x, lam), batch.y);
    }

    std::vector<Tensor> params() override { return net_.params(); }

    std::vector<std::pair<std::string, Tensor>> named_tensors() override {
        return {{"gate.v", net_.v}, {"gate.c", net_.c}};
    }

    GatedLinearNet& net() { return net_; }

private:
    GatedLinearNet net_;
    std::size_t dataset_size_;
    int penalty_idx_;
};

}  // namespace stn
