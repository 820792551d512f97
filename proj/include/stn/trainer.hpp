#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stn/data.hpp"
#include "stn/hyperspace.hpp"
#include "stn/optimizer.hpp"
#include "stn/rng.hpp"
#include "stn/tensor.hpp"

namespace stn {

struct DataBatch {
    Tensor x;
    Tensor y;
};

/// Constrained r(lambda + eps) values for one batch, row-major (B x n).
struct HyperValues {
    std::size_t batch = 0, n = 0;
    std::vector<double> vals;

    double at(std::size_t b, std::size_t j) const { return vals[b * n + j]; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(batch);
        for (std::size_t b = 0; b < batch; ++b) out[b] = vals[b * n + j];
        return out;
    }

    static HyperValues from(const HyperSpace& space, const Tensor& lam_batch) {
        HyperValues hv;
        hv.batch = lam_batch.rank() ? lam_batch.dim(0) : 0;
        hv.n = space.size();
        hv.vals = space.constrain_batch(lam_batch);
        return hv;
    }
};

/// A model trained by the alternating scheme: train_loss is the lower-level
/// objective (with regularizers), valid_loss the upper-level one. lam_batch
/// carries the unconstrained hyperparameters through the graph; hv carries
/// the constrained values for regularizers outside the differentiable path.
class StnModel {
public:
    virtual ~StnModel() = default;
    virtual Tensor train_loss(const DataBatch& batch, const Tensor& lam_batch,
                              const HyperValues& hv, Rng& rng, bool training) = 0;
    virtual Tensor valid_loss(const DataBatch& batch, const Tensor& lam_batch,
                              const HyperValues& hv, Rng& rng, bool training) = 0;
    virtual std::vector<Tensor> params() = 0;
    virtual std::vector<std::pair<std::string, Tensor>> named_tensors() {
        std::vector<std::pair<std::string, Tensor>> out;
        auto ps = params();
        for (std::size_t i = 0; i < ps.size(); ++i) out.emplace_back("param" + std::to_string(i), ps[i]);
        return out;
    }
};

struct TrainConfig {
    std::size_t t_train = 2;
    std::size_t t_valid = 1;
    std::size_t warmup_epochs = 1;
    OptimizerConfig optimizer_elem{OptKind::sgd, 0.1, 0.9};
    OptimizerConfig optimizer_hyper{OptKind::adam, 0.01};
    OptimizerConfig optimizer_scale{OptKind::adam, 0.01};
    std::size_t batch_size = 32;
    std::size_t max_epochs = 10;
    double grad_clip = 0.0;  // 0 disables
    double hyper_lr_decay = 1.0;        // factor applied to the hyper/scale lr
    std::size_t hyper_decay_epoch = 0;  // 0 disables the decay
    std::uint64_t seed = 0;
    bool fixed_scale_mode = false;
    std::size_t patience = 0;  // 0 disables early stopping

    void validate() const {
        if (t_train < 1 || t_valid < 1) throw std::invalid_argument("t_train and t_valid must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        optimizer_elem.validate();
        optimizer_hyper.validate();
        optimizer_scale.validate();
    }
};

struct ScheduleRow {
    std::size_t step = 0;
    std::size_t epoch = 0;
    std::vector<double> raw;          // unconstrained lambda per hyperparameter
    std::vector<double> constrained;  // r(lambda)
    std::vector<double> sigma;
    double train_loss = 0.0;
    double valid_obj = 0.0;
};

struct ScheduleLog {
    std::vector<std::string> names;
    std::vector<ScheduleRow> rows;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    double test_loss = 0.0;
    double wall_seconds = 0.0;
};

struct FitResult {
    ScheduleLog schedule;
    std::vector<EpochMetrics> metrics;
    double final_valid_loss = 0.0;
    double final_test_loss = 0.0;
};

/// Raised when a step produces a non-finite objective; carries the state
/// needed to diagnose the run.
struct NonFiniteLoss : std::runtime_error {
    explicit NonFiniteLoss(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic cycling batch source; reshuffles at the end of each pass.
class BatchCycler {
public:
    BatchCycler(const Dataset& ds, std::size_t batch_size, Rng& rng, bool shuffle = true)
        : ds_(&ds), batch_size_(std::min(batch_size, ds.size())), rng_(&rng), shuffle_(shuffle) {
        if (ds.size() == 0) throw std::invalid_argument("empty dataset");
        order_.resize(ds.size());
        std::iota(order_.begin(), order_.end(), 0);
        if (shuffle_) std::shuffle(order_.begin(), order_.end(), rng_->engine());
    }

    DataBatch next() {
        std::vector<std::size_t> idx;
        idx.reserve(batch_size_);
        for (std::size_t k = 0; k < batch_size_; ++k) {
            if (cursor_ == order_.size()) {
                cursor_ = 0;
                if (shuffle_) std::shuffle(order_.begin(), order_.end(), rng_->engine());
            }
            idx.push_back(order_[cursor_++]);
        }
        return {ds_->input_rows(idx), ds_->target_rows(idx)};
    }

    std::size_t batches_per_epoch() const { return (ds_->size() + batch_size_ - 1) / batch_size_; }

private:
    const Dataset* ds_;
    std::size_t batch_size_;
    Rng* rng_;
    bool shuffle_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

/// Alternating optimization: best-response parameters on training batches,
/// hyperparameters and perturbation scales on validation batches.
class StnTrainer {
public:
    StnTrainer(StnModel& model, HyperSpace& space, const Dataset& train, const Dataset& valid,
               TrainConfig cfg)
        : model_(&model),
          space_(&space),
          train_(&train),
          valid_(&valid),
          cfg_(cfg),
          rng_(cfg.seed),
          opt_elem_(cfg.optimizer_elem, model.params()),
          opt_hyper_(cfg.optimizer_hyper, {space.lambda()}),
          opt_scale_(cfg.optimizer_scale, {space.log_sigma()}) {
        cfg_.validate();
        if (train.size() == 0 || valid.size() == 0) throw std::invalid_argument("empty dataset");
    }

    Rng& rng() { return rng_; }

    /// One lower-level step: phi <- phi - a1 df/dphi at a perturbed lambda.
    double train_step(const DataBatch& batch) {
        zero_all_grads();
        double loss_val;
        {
            Tape tape;
            std::size_t b = batch.x.dim(0);
            Tensor lam = space_->sample_perturbed(b, rng_);
            HyperValues hv = HyperValues::from(*space_, lam);
            Tensor loss = model_->train_loss(batch, lam, hv, rng_, true);
            loss_val = loss.value();
            if (!std::isfinite(loss_val))
                throw NonFiniteLoss("non-finite training loss at step " + std::to_string(global_step_));
            tape.backward(loss);
        }
        auto ps = opt_elem_.params();
        std::vector<Tensor> mut(ps.begin(), ps.end());
        if (cfg_.grad_clip > 0) clip_global_norm(mut, cfg_.grad_clip);
        opt_elem_.step();
        ++global_step_;
        last_train_loss_ = loss_val;
        return loss_val;
    }

    /// One upper-level step: lambda and log sigma move on F - tau H; a single
    /// perturbation sample is shared by both updates.
    double valid_step(const DataBatch& batch) {
        zero_all_grads();
        double obj_val;
        {
            Tape tape;
            std::size_t b = batch.x.dim(0);
            Tensor lam = space_->sample_perturbed(b, rng_);
            HyperValues hv = HyperValues::from(*space_, lam);
            Tensor f_upper = model_->valid_loss(batch, lam, hv, rng_, true);
            Tensor obj = cfg_.fixed_scale_mode
                             ? f_upper
                             : sub(f_upper, mul(Tensor::scalar(space_->tau()), space_->entropy()));
            obj_val = obj.value();
            if (!std::isfinite(obj_val))
                throw NonFiniteLoss("non-finite validation objective at step " +
                                    std::to_string(global_step_));
            tape.backward(obj);
        }
        opt_hyper_.step();
        if (!cfg_.fixed_scale_mode) {
            opt_scale_.step();
            space_->clamp_scales();
        }
        ++global_step_;
        last_valid_obj_ = obj_val;
        return obj_val;
    }

    /// Deterministic evaluation at the current lambda with regularizers off.
    double evaluate(const Dataset& ds, bool use_valid_loss = true) {
        double total = 0.0;
        std::size_t n = ds.size();
        std::size_t bs = std::min<std::size_t>(256, n);
        std::size_t done = 0;
        while (done < n) {
            std::size_t take = std::min(bs, n - done);
            std::vector<std::size_t> idx(take);
            std::iota(idx.begin(), idx.end(), done);
            DataBatch batch{ds.input_rows(idx), ds.target_rows(idx)};
            Tensor lam = space_->tile_lambda(take);
            HyperValues hv = HyperValues::from(*space_, lam);
            Tensor loss = use_valid_loss ? model_->valid_loss(batch, lam, hv, rng_, false)
                                         : model_->train_loss(batch, lam, hv, rng_, false);
            total += loss.value() * static_cast<double>(take);
            done += take;
        }
        return total / static_cast<double>(n);
    }

    /// Full Algorithm-1 run: warm-up epochs of train steps only, then
    /// T_train/T_valid alternation with one schedule row per cycle.
    /// on_epoch_start (if set) runs before each epoch, e.g. to replay a
    /// hyperparameter schedule at epoch granularity.
    FitResult fit(const Dataset* test = nullptr,
                  const std::function<void(std::size_t)>& on_epoch_start = nullptr) {
        FitResult result;
        for (const auto& hp : space_->descriptors()) result.schedule.names.push_back(hp.name);
        BatchCycler train_cycler(*train_, cfg_.batch_size, rng_);
        BatchCycler valid_cycler(*valid_, cfg_.batch_size, rng_);
        std::size_t steps_per_epoch = train_cycler.batches_per_epoch();

        double best_valid = std::numeric_limits<double>::infinity();
        std::size_t since_best = 0;
        auto t0 = std::chrono::steady_clock::now();

        for (std::size_t epoch = 0; epoch < cfg_.max_epochs; ++epoch) {
            if (on_epoch_start) on_epoch_start(epoch);
            if (cfg_.hyper_decay_epoch > 0 && epoch == cfg_.hyper_decay_epoch) {
                opt_hyper_.set_lr(opt_hyper_.lr() * cfg_.hyper_lr_decay);
                opt_scale_.set_lr(opt_scale_.lr() * cfg_.hyper_lr_decay);
            }
            bool warmup = epoch < cfg_.warmup_epochs;
            std::size_t step_in_epoch = 0;
            while (step_in_epoch < steps_per_epoch) {
                for (std::size_t t = 0; t < cfg_.t_train && step_in_epoch < steps_per_epoch; ++t) {
                    train_step(train_cycler.next());
                    ++step_in_epoch;
                }
                if (!warmup) {
                    for (std::size_t t = 0; t < cfg_.t_valid; ++t) valid_step(valid_cycler.next());
                    result.schedule.rows.push_back(snapshot_row(epoch));
                }
            }
            EpochMetrics m;
            m.epoch = epoch;
            m.train_loss = evaluate(*train_, false);
            m.valid_loss = evaluate(*valid_);
            m.test_loss = test ? evaluate(*test) : 0.0;
            m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            result.metrics.push_back(m);

            if (cfg_.patience > 0) {
                if (m.valid_loss < best_valid - 1e-12) {
                    best_valid = m.valid_loss;
                    since_best = 0;
                } else if (++since_best >= cfg_.patience) {
                    break;
                }
            }
        }
        result.final_valid_loss = result.metrics.empty() ? 0.0 : result.metrics.back().valid_loss;
        result.final_test_loss = result.metrics.empty() ? 0.0 : result.metrics.back().test_loss;
        return result;
    }

    std::size_t global_step() const { return global_step_; }

private:
    ScheduleRow snapshot_row(std::size_t epoch) const {
        ScheduleRow row;
        row.step = global_step_;
        row.epoch = epoch;
        for (std::size_t j = 0; j < space_->size(); ++j) {
            row.raw.push_back(space_->lambda().at(j));
            row.constrained.push_back(space_->constrained_value(j));
            row.sigma.push_back(space_->sigma(j));
        }
        row.train_loss = last_train_loss_;
        row.valid_obj = last_valid_obj_;
        return row;
    }

    void zero_all_grads() {
        opt_elem_.zero_grad();
        space_->lambda().zero_grad();
        space_->log_sigma().zero_grad();
    }

    StnModel* model_;
    HyperSpace* space_;
    const Dataset* train_;
    const Dataset* valid_;
    TrainConfig cfg_;
    Rng rng_;
    Optimizer opt_elem_, opt_hyper_, opt_scale_;
    std::size_t global_step_ = 0;
    double last_train_loss_ = 0.0;
    double last_valid_obj_ = 0.0;
};

/// Fixed-distribution fitting of the best-response parameters: lambda is
/// resampled from p per batch and never updated.
struct LambdaDist {
    enum class Kind { uniform, gaussian, point } kind = Kind::gaussian;
    std::vector<double> lo, hi;      // uniform
    std::vector<double> mean, sigma; // gaussian / point (sigma ignored for point)

    std::size_t dim() const {
        return kind == Kind::uniform ? lo.size() : mean.size();
    }

    void sample_row(Rng& rng, double* out) const {
        std::size_t n = dim();
        for (std::size_t j = 0; j < n; ++j) {
            switch (kind) {
                case Kind::uniform: out[j] = rng.uniform(lo[j], hi[j]); break;
                case Kind::gaussian: out[j] = mean[j] + sigma[j] * rng.normal(); break;
                case Kind::point: out[j] = mean[j]; break;
            }
        }
    }
};

struct GlobalFitConfig {
    std::size_t steps = 2000;
    std::size_t lambda_batch = 64;
    OptimizerConfig optimizer{OptKind::adam, 0.02};
    double lr_decay = 0.1;          // multiplier applied at decay_at
    std::size_t decay_at = 0;       // 0 disables
    std::uint64_t seed = 0;
};

inline void global_fit(StnModel& model, const HyperSpace& space, const LambdaDist& dist,
                       const Dataset* data, const GlobalFitConfig& cfg) {
    Rng rng(cfg.seed);
    Optimizer opt(cfg.optimizer, model.params());
    std::unique_ptr<BatchCycler> cycler;
    if (data && data->size() > 0)
        cycler = std::make_unique<BatchCycler>(*data, data->size(), rng, false);  // full batch
    std::size_t n = dist.dim();
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        if (cfg.decay_at > 0 && step == cfg.decay_at) opt.set_lr(opt.lr() * cfg.lr_decay);
        opt.zero_grad();
        DataBatch batch;
        std::size_t b = cfg.lambda_batch;
        if (cycler) {
            batch = cycler->next();
            b = batch.x.dim(0);
        }
        Tensor lam = Tensor::zeros({b, n});
        if (cycler && dist.dim() > 0) {
            // one lambda per data row
            for (std::size_t i = 0; i < b; ++i) dist.sample_row(rng, lam.data().data() + i * n);
        } else {
            for (std::size_t i = 0; i < b; ++i) dist.sample_row(rng, lam.data().data() + i * n);
        }
        Tape tape;
        HyperValues hv = HyperValues::from(space, lam);
        Tensor loss = model.train_loss(batch, lam, hv, rng, true);
        if (!std::isfinite(loss.value()))
            throw NonFiniteLoss("non-finite loss in global fit at step " + std::to_string(step));
        tape.backward(loss);
        opt.step();
    }
}

}  // namespace stn
