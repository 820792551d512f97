#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "stn/oracles.hpp"
#include "stn/tasks.hpp"
#include "stn/trainer.hpp"

using namespace stn;

namespace {

Dataset dummy_dataset(std::size_t n) {
    Dataset ds;
    ds.inputs = Tensor::zeros({n, 1});
    ds.targets = Tensor::zeros({n});
    ds.generator = "dummy";
    return ds;
}

QuadraticBilevel scalar_instance() {
    QuadraticBilevel p;
    p.n = 1;
    p.m = 1;
    p.lower.A = la::Mat(1, 1);
    p.lower.A(0, 0) = 1.0;
    p.lower.B = la::Mat(1, 1);
    p.lower.B(0, 0) = 1.0;
    p.lower.C = la::Mat(1, 1);
    p.lower.C(0, 0) = 2.0;
    p.lower.d = {0.0};
    p.lower.e = {0.8};
    p.upper = p.lower;
    p.upper.e = {-0.4};
    return p;
}

HyperSpace identity_space(const std::vector<double>& init, double sigma) {
    HyperSpace space;
    for (std::size_t j = 0; j < init.size(); ++j)
        space.add({"h" + std::to_string(j), TransformKind::identity}, init[j], sigma);
    return space;
}

}  // namespace

TEST_CASE("batch cycler", "[trainer]") {
    Dataset ds = dummy_dataset(10);
    for (std::size_t i = 0; i < 10; ++i) ds.targets.at(i) = static_cast<double>(i);
    Rng rng(1);
    BatchCycler cyc(ds, 3, rng);
    CHECK(cyc.batches_per_epoch() == 4);

    std::multiset<double> seen;
    for (int b = 0; b < 4; ++b) {
        DataBatch batch = cyc.next();
        CHECK(batch.x.dim(0) == 3);
        for (std::size_t i = 0; i < 3; ++i) seen.insert(batch.y.at(i));
    }
    // 12 draws over a 10-row set: every row at least once, overflow rows twice
    CHECK(seen.size() == 12);
    for (std::size_t i = 0; i < 10; ++i) CHECK(seen.count(static_cast<double>(i)) >= 1);

    CHECK_THROWS_AS(BatchCycler(dummy_dataset(0), 2, rng), std::invalid_argument);

    // no-shuffle mode is sequential
    Rng rng2(2);
    BatchCycler seq(ds, 5, rng2, false);
    DataBatch first = seq.next();
    for (std::size_t i = 0; i < 5; ++i) CHECK(first.y.at(i) == static_cast<double>(i));
}

TEST_CASE("train steps fit the affine best response", "[trainer]") {
    auto p = scalar_instance();
    Rng init_rng(3);
    QuadraticAffineModel model(p, init_rng);
    HyperSpace space = identity_space({0.0}, 1.0);
    Dataset tr = dummy_dataset(8), va = dummy_dataset(8);

    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.seed = 4;
    StnTrainer trainer(model, space, tr, va, cfg);
    Rng batch_rng(5);
    BatchCycler cyc(tr, 8, batch_rng);
    for (int s = 0; s < 2000; ++s) trainer.train_step(cyc.next());

    // theta*(lam) = -(lam + 0.8)/2, so U -> -0.5 and b -> -0.4
    CHECK_THAT(model.slope().at(0), Catch::Matchers::WithinAbs(-0.5, 1e-3));
    CHECK_THAT(model.offset().at(0), Catch::Matchers::WithinAbs(-0.4, 1e-3));
    CHECK(trainer.global_step() == 2000);
}

TEST_CASE("update isolation between the two step kinds", "[trainer]") {
    auto p = scalar_instance();
    Rng init_rng(6);
    QuadraticAffineModel model(p, init_rng);
    HyperSpace space = identity_space({0.3}, 0.5);
    Dataset tr = dummy_dataset(4), va = dummy_dataset(4);
    TrainConfig cfg;
    cfg.batch_size = 4;
    StnTrainer trainer(model, space, tr, va, cfg);
    DataBatch batch{Tensor::zeros({4, 1}), Tensor::zeros({4})};

    SECTION("train_step leaves the hyperparameters untouched") {
        double lam0 = space.lambda().at(0), ls0 = space.log_sigma().at(0);
        double u0 = model.slope().at(0);
        trainer.train_step(batch);
        CHECK(space.lambda().at(0) == lam0);
        CHECK(space.log_sigma().at(0) == ls0);
        CHECK(model.slope().at(0) != u0);
    }

    SECTION("valid_step leaves the elementary parameters untouched") {
        double u0 = model.slope().at(0), b0 = model.offset().at(0);
        double lam0 = space.lambda().at(0);
        trainer.valid_step(batch);
        CHECK(model.slope().at(0) == u0);
        CHECK(model.offset().at(0) == b0);
        CHECK(space.lambda().at(0) != lam0);
    }

    SECTION("fixed-scale mode freezes the perturbation scales") {
        double ls0 = space.log_sigma().at(0);
        TrainConfig fcfg = cfg;
        fcfg.fixed_scale_mode = true;
        StnTrainer ftrainer(model, space, tr, va, fcfg);
        ftrainer.valid_step(batch);
        CHECK(space.log_sigma().at(0) == ls0);
    }

    SECTION("free-scale mode moves the scales") {
        double ls0 = space.log_sigma().at(0);
        trainer.valid_step(batch);
        CHECK(space.log_sigma().at(0) != ls0);
    }
}

TEST_CASE("warm-up freezes hyperparameters for whole epochs", "[trainer]") {
    auto p = scalar_instance();
    Rng init_rng(7);
    QuadraticAffineModel model(p, init_rng);
    HyperSpace space = identity_space({0.2}, 0.3);
    Dataset tr = dummy_dataset(8), va = dummy_dataset(8);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.max_epochs = 3;
    cfg.warmup_epochs = 3;
    StnTrainer trainer(model, space, tr, va, cfg);
    FitResult r = trainer.fit();
    CHECK(r.schedule.rows.empty());
    CHECK(space.lambda().at(0) == 0.2);
    CHECK(r.metrics.size() == 3);
}

TEST_CASE("schedule rows per epoch follow the alternation pattern", "[trainer]") {
    auto p = scalar_instance();
    Rng init_rng(8);
    QuadraticAffineModel model(p, init_rng);
    HyperSpace space = identity_space({0.0}, 0.2);
    Dataset tr = dummy_dataset(10), va = dummy_dataset(10);
    TrainConfig cfg;
    cfg.batch_size = 2;   // 5 train steps per epoch
    cfg.t_train = 2;      // -> ceil(5/2) = 3 cycles per non-warm-up epoch
    cfg.max_epochs = 4;
    cfg.warmup_epochs = 1;
    StnTrainer trainer(model, space, tr, va, cfg);
    FitResult r = trainer.fit();
    CHECK(r.schedule.rows.size() == 3 * 3);
    CHECK(r.schedule.names == std::vector<std::string>{"h0"});
    for (const auto& row : r.schedule.rows) {
        CHECK(row.epoch >= 1);
        CHECK(row.raw.size() == 1);
        CHECK(row.constrained.size() == 1);
        CHECK(row.sigma.size() == 1);
    }
}

TEST_CASE("fit is bitwise deterministic under a fixed seed", "[trainer]") {
    auto run = [&] {
        auto p = scalar_instance();
        Rng init_rng(9);
        QuadraticAffineModel model(p, init_rng);
        HyperSpace space = identity_space({0.1}, 0.4);
        Dataset tr = dummy_dataset(8), va = dummy_dataset(8);
        TrainConfig cfg;
        cfg.batch_size = 4;
        cfg.max_epochs = 3;
        cfg.seed = 17;
        StnTrainer trainer(model, space, tr, va, cfg);
        return trainer.fit();
    };
    FitResult a = run(), b = run();
    REQUIRE(a.schedule.rows.size() == b.schedule.rows.size());
    for (std::size_t i = 0; i < a.schedule.rows.size(); ++i) {
        CHECK(a.schedule.rows[i].raw == b.schedule.rows[i].raw);
        CHECK(a.schedule.rows[i].sigma == b.schedule.rows[i].sigma);
        CHECK(a.schedule.rows[i].train_loss == b.schedule.rows[i].train_loss);
        CHECK(a.schedule.rows[i].valid_obj == b.schedule.rows[i].valid_obj);
    }
}

TEST_CASE("diverging training raises a non-finite error", "[trainer]") {
    auto p = scalar_instance();
    Rng init_rng(10);
    QuadraticAffineModel model(p, init_rng);
    HyperSpace space = identity_space({0.0}, 1.0);
    Dataset tr = dummy_dataset(4), va = dummy_dataset(4);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.optimizer_elem = {OptKind::sgd, 1e8};
    StnTrainer trainer(model, space, tr, va, cfg);
    DataBatch batch{Tensor::zeros({4, 1}), Tensor::zeros({4})};
    CHECK_THROWS_AS(
        [&] {
            for (int s = 0; s < 500; ++s) trainer.train_step(batch);
        }(),
        NonFiniteLoss);
}

TEST_CASE("empty datasets are rejected", "[trainer]") {
    auto p = scalar_instance();
    Rng init_rng(11);
    QuadraticAffineModel model(p, init_rng);
    HyperSpace space = identity_space({0.0}, 0.5);
    Dataset tr = dummy_dataset(4), empty = dummy_dataset(0);
    CHECK_THROWS_AS(StnTrainer(model, space, empty, tr, TrainConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(StnTrainer(model, space, tr, empty, TrainConfig{}), std::invalid_argument);
}

TEST_CASE("global fit under a point mass matches the best response there", "[trainer]") {
    auto p = scalar_instance();
    Rng init_rng(12);
    QuadraticAffineModel model(p, init_rng);
    HyperSpace space = identity_space({0.7}, 0.1);
    LambdaDist dist;
    dist.kind = LambdaDist::Kind::point;
    dist.mean = {0.7};
    GlobalFitConfig cfg;
    cfg.steps = 2500;
    cfg.lambda_batch = 8;
    cfg.optimizer = {OptKind::adam, 0.02};
    cfg.seed = 13;
    global_fit(model, space, dist, nullptr, cfg);

    double want = quad_best_response(p, {0.7})[0];
    Tensor lam = Tensor::from({1, 1}, {0.7});
    CHECK_THAT(model.response(lam).at(0), Catch::Matchers::WithinAbs(want, 1e-3));
}

TEST_CASE("exact affine surrogate reproduces the analytic hypergradient", "[trainer]") {
    Rng rng(14);
    auto p = random_quadratic_bilevel(3, 4, rng);
    la::Vec lam0{0.2, -0.4, 0.9};
    auto [u, b] = quad_affine_fit_exact(p, lam0, 1.0);
    Rng init_rng(15);
    QuadraticAffineModel model(p, init_rng);
    model.slope().data() = u.a;
    model.offset().data() = b;

    Tensor lam = Tensor::from({1, 3}, lam0, true);
    DataBatch batch{Tensor::zeros({1, 1}), Tensor::zeros({1})};
    HyperValues hv;
    Rng step_rng(16);
    {
        Tape tape;
        tape.backward(model.valid_loss(batch, lam, hv, step_rng, false));
    }
    la::Vec want = quad_hypergradient(p, lam0);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK_THAT(lam.grad()[j], Catch::Matchers::WithinAbs(want[j], 1e-8));
}

TEST_CASE("early stopping on validation patience", "[trainer]") {
    auto p = scalar_instance();
    Rng init_rng(18);
    QuadraticAffineModel model(p, init_rng);
    HyperSpace space = identity_space({0.0}, 1e-3);
    Dataset tr = dummy_dataset(4), va = dummy_dataset(4);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.max_epochs = 50;
    cfg.warmup_epochs = 50;  // hypers frozen; the model converges, then stalls
    cfg.patience = 3;
    StnTrainer trainer(model, space, tr, va, cfg);
    FitResult r = trainer.fit();
    CHECK(r.metrics.size() < 50);
}
