// Acceptance suite: one criterion per function, each printing a single
// [PASS]/[FAIL] line with the measured quantity against its tolerance.
// Usage: acceptance_stn [N]  (N in 1..10 runs one criterion; no argument runs all)

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "stn/config.hpp"
#include "stn/io.hpp"
#include "stn/runner.hpp"
#include "stn/tasks.hpp"
#include "stn/trainer.hpp"

using namespace stn;
namespace fs = std::filesystem;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

HyperSpace identity_space(const la::Vec& init, double sigma) {
    HyperSpace space;
    for (std::size_t j = 0; j < init.size(); ++j)
        space.add({"h" + std::to_string(j), TransformKind::identity}, init[j], sigma);
    return space;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// --- criterion 1: affine global fit recovers the exact affine best response ---

bool criterion1(std::string& msg) {
    Timer timer;
    Rng rng(101);
    double worst_u = 0, worst_b = 0;
    for (int inst = 0; inst < 20; ++inst) {
        std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 5));
        std::size_t m = static_cast<std::size_t>(rng.uniform_int(1, 5));
        auto p = random_quadratic_bilevel(n, m, rng);
        la::Vec lam0(n);
        for (auto& v : lam0) v = 0.5 * rng.normal();
        double sigma = inst % 2 == 0 ? 0.1 : 1.0;
        auto [u_exact, b_exact] = quad_affine_fit_exact(p, lam0, sigma);

        Rng init_rng = rng.split(inst);
        QuadraticAffineModel model(p, init_rng);
        HyperSpace space = identity_space(lam0, sigma);
        LambdaDist dist;
        dist.kind = LambdaDist::Kind::gaussian;
        dist.mean = lam0;
        dist.sigma.assign(n, sigma);
        GlobalFitConfig gcfg;
        gcfg.steps = 12000;
        gcfg.lambda_batch = 256;
        gcfg.optimizer = {OptKind::adam, 0.1};
        gcfg.lr_decay = 0.01;
        gcfg.decay_at = 8000;
        gcfg.seed = 1000 + inst;
        global_fit(model, space, dist, nullptr, gcfg);

        double u_scale = std::max(max_abs(u_exact.a), 1e-9);
        double b_scale = std::max(max_abs(b_exact), 1e-9);
        double du = 0, db = 0;
        for (std::size_t i = 0; i < u_exact.a.size(); ++i)
            du = std::max(du, std::abs(model.slope().at(i) - u_exact.a[i]));
        for (std::size_t i = 0; i < b_exact.size(); ++i)
            db = std::max(db, std::abs(model.offset().at(i) - b_exact[i]));
        worst_u = std::max(worst_u, du / u_scale);
        worst_b = std::max(worst_b, db / b_scale);
    }
    double secs = timer.seconds();
    msg = "slope error " + fmt(worst_u) + ", offset error " + fmt(worst_b) +
          " (tol 1e-2), " + fmt(secs) + "s (limit 60)";
    return worst_u <= 1e-2 && worst_b <= 1e-2 && secs < 60.0;
}

// --- criterion 2: analytic hypergradient vs central differences ---

bool criterion2(std::string& msg) {
    Timer timer;
    Rng rng(202);
    double worst = 0;
    for (int inst = 0; inst < 20; ++inst) {
        std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 5));
        std::size_t m = static_cast<std::size_t>(rng.uniform_int(1, 5));
        auto p = random_quadratic_bilevel(n, m, rng);
        la::Vec lam(n);
        for (auto& v : lam) v = rng.normal();
        la::Vec g = quad_hypergradient(p, lam);
        double h = 1e-5;
        for (std::size_t j = 0; j < n; ++j) {
            la::Vec lp = lam, lm = lam;
            lp[j] += h;
            lm[j] -= h;
            double fd = (p.upper.eval(lp, quad_best_response(p, lp)) -
                         p.upper.eval(lm, quad_best_response(p, lm))) /
                        (2 * h);
            double denom = std::max(std::abs(fd), 1e-6);
            worst = std::max(worst, std::abs(g[j] - fd) / denom);
        }
    }
    double secs = timer.seconds();
    msg = "relative error " + fmt(worst) + " (tol 1e-6), " + fmt(secs) + "s (limit 5)";
    return worst <= 1e-6 && secs < 5.0;
}

// --- criterion 3: gated closed form and global fit of the gated net ---

bool criterion3(std::string& msg) {
    Timer timer;
    Rng rng(303);
    std::size_t d = 6, nrows = 48;
    std::vector<double> spectrum(d);
    for (std::size_t i = 0; i < d; ++i)
        spectrum[i] = std::pow(10.0, 1.0 - 2.0 * static_cast<double>(i) / (d - 1));
    Dataset data = make_regression(d, nrows, spectrum, 0.1, 77);
    la::Mat x(nrows, d);
    x.a = data.inputs.data();
    la::Vec t = data.targets.data();
    auto rp = RidgeProblem::from_data(x, t);

    // closed-form identity across the lambda path
    auto params = gated_response_params(rp);
    double id_err = 0;
    for (double lam : {-3.0, -1.0, 0.0, 1.0, 3.0}) {
        la::Vec want = ridge_solution(rp, lam);
        la::Vec gated(d);
        for (std::size_t i = 0; i < d; ++i) {
            double gate = 1.0 / (1.0 + std::exp(-(lam * params.v[i] + params.c[i])));
            gated[i] = gate * params.s0[i];
        }
        la::Vec u = la::matvec(la::transpose(params.q0), gated);
        for (std::size_t i = 0; i < d; ++i) id_err = std::max(id_err, std::abs(u[i] - want[i]));
    }

    // learned gates: fit v, c on the jacobian-penalized squared error
    Tensor q0 = Tensor::from({d, d}, params.q0.a);
    Tensor s0 = Tensor::from({d}, params.s0);
    Rng init_rng(11);
    auto net = GatedLinearNet::random_init(q0, s0, init_rng);
    GatedModel model(std::move(net), nrows);
    HyperSpace space;
    space.add({"pen", TransformKind::exp_positive}, 1.0, 1.0);
    LambdaDist dist;
    dist.kind = LambdaDist::Kind::uniform;
    dist.lo = {-3.0};
    dist.hi = {3.0};
    GlobalFitConfig gcfg;
    gcfg.steps = 30000;
    gcfg.lambda_batch = 256;
    gcfg.optimizer = {OptKind::adam, 0.05};
    gcfg.lr_decay = 0.02;
    gcfg.decay_at = 22000;
    gcfg.seed = 13;
    global_fit(model, space, dist, &data, gcfg);

    double pred_err = 0;
    for (double lam : {-3.0, -1.0, 0.0, 1.0, 3.0}) {
        la::Vec u = ridge_solution(rp, lam);
        la::Vec ridge_pred = la::matvec(x, u);
        Tensor lam_t = Tensor::full({nrows, 1}, lam);
        Tensor pred = model.net().forward(data.inputs, lam_t);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < nrows; ++i) {
            num += (pred.at(i) - ridge_pred[i]) * (pred.at(i) - ridge_pred[i]);
            den += ridge_pred[i] * ridge_pred[i];
        }
        pred_err = std::max(pred_err, std::sqrt(num / den));
    }
    double secs = timer.seconds();
    msg = "identity error " + fmt(id_err) + " (tol 1e-10), prediction error " + fmt(pred_err) +
          " (tol 1e-2), " + fmt(secs) + "s (limit 120)";
    return id_err <= 1e-10 && pred_err <= 1e-2 && secs < 120.0;
}

// --- criterion 4: gradient checks on ops and full hyper-layer graphs ---

bool criterion4(std::string& msg) {
    Timer timer;
    Rng rng(404);
    double worst = 0;

    auto rand_tensor = [&](Shape s, bool positive = false) {
        Tensor t = Tensor::zeros(std::move(s), true);
        for (auto& v : t.data()) v = positive ? rng.uniform(0.2, 2.0) : rng.normal();
        return t;
    };

    {  // elementwise, matmul, reductions, reshape/transpose
        Tensor a = rand_tensor({3, 4});
        Tensor b = rand_tensor({3, 4});
        Tensor p = rand_tensor({3, 4}, true);
        Tensor m1 = rand_tensor({3, 4});
        Tensor m2 = rand_tensor({4, 2});
        std::vector<std::function<Tensor()>> graphs = {
            [&] { return sum(add(a, b)); },
            [&] { return sum(sub(a, b)); },
            [&] { return sum(mul(a, b)); },
            [&] { return sum(div(a, p)); },
            [&] { return sum(neg(a)); },
            [&] { return sum(exp_t(a)); },
            [&] { return sum(log_t(p)); },
            [&] { return sum(sigmoid(a)); },
            [&] { return sum(relu(add(a, Tensor::scalar(0.1)))); },
            [&] { return sum(square(a)); },
            [&] { return sum(matmul(m1, m2)); },
            [&] { return mean(mul(a, b)); },
            [&] { return sum(sum(a, 1), 0); },
            [&] { return sum(mean(a, 0, true)); },
            [&] { return sum(reshape(a, {4, 3})); },
            [&] { return sum(square(transpose(a))); },
        };
        // h = 1e-4 balances central-difference truncation against roundoff
        for (auto& g : graphs) worst = std::max(worst, grad_check(g, {a, b, p, m1, m2}, 1e-4));
    }

    for (int rep = 0; rep < 10; ++rep) {  // dense forward + loss graphs
        std::size_t din = 2 + rep % 3, dout = 2 + rep % 2, n = 1 + rep % 3, batch = 2 + rep % 2;
        HyperDense layer(din, dout, n, rng);
        Tensor x = rand_tensor({batch, din});
        x.set_requires_grad(false);
        Tensor lam = Tensor::zeros({batch, n}, true);
        for (auto& v : lam.data()) v = 0.5 * rng.normal();
        Tensor y = Tensor::zeros({batch});
        for (std::size_t i = 0; i < batch; ++i) y.at(i) = rng.uniform_int(0, dout - 1);
        auto leaves = layer.params();
        leaves.push_back(lam);
        worst = std::max(
            worst,
            grad_check([&] { return softmax_cross_entropy(layer.forward(x, lam), y); }, leaves,
                       1e-4));
    }

    for (int rep = 0; rep < 10; ++rep) {  // conv forward + loss graphs
        std::size_t cin = 1 + rep % 2, cout = 1 + rep % 2, k = 2 + rep % 2, n = 1 + rep % 2;
        std::size_t side = k + 2, batch = 2;
        HyperConv conv(cin, cout, k, n, rng);
        Tensor x = rand_tensor({batch, cin, side, side});
        x.set_requires_grad(false);
        Tensor lam = Tensor::zeros({batch, n}, true);
        for (auto& v : lam.data()) v = 0.5 * rng.normal();
        auto leaves = conv.params();
        leaves.push_back(lam);
        worst = std::max(
            worst, grad_check([&] { return mean(square(conv.forward(x, lam))); }, leaves, 1e-4));
    }

    double secs = timer.seconds();
    msg = "worst grad_check error " + fmt(worst) + " (tol 1e-5), " + fmt(secs) + "s (limit 30)";
    return worst <= 1e-5 && secs < 30.0;
}

// --- criterion 5: parameter counts and per-example batching ---

bool criterion5(std::string& msg) {
    Rng rng(505);
    bool counts_ok = true;
    for (int rep = 0; rep < 10; ++rep) {
        std::size_t din = 1 + static_cast<std::size_t>(rng.uniform_int(0, 7));
        std::size_t dout = 1 + static_cast<std::size_t>(rng.uniform_int(0, 7));
        std::size_t n = static_cast<std::size_t>(rng.uniform_int(0, 4));
        HyperDense layer(din, dout, n, rng);
        std::size_t want = dout * (2 * din + n) + dout * (2 + n);
        counts_ok = counts_ok && layer.param_count() == want;
        std::size_t stored = 0;
        for (auto& p : layer.params()) stored += p.size();
        counts_ok = counts_ok && stored == want;
    }

    double batch_err = 0;
    for (int rep = 0; rep < 5; ++rep) {
        std::size_t din = 3, dout = 4, n = 2, batch = 6;
        HyperDense layer(din, dout, n, rng);
        Tensor x = Tensor::zeros({batch, din});
        Tensor lam = Tensor::zeros({batch, n});
        for (auto& v : x.data()) v = rng.normal();
        for (auto& v : lam.data()) v = rng.normal();
        Tensor batched = layer.forward(x, lam);
        for (std::size_t b = 0; b < batch; ++b) {
            Tensor xb = Tensor::zeros({1, din});
            Tensor lb = Tensor::zeros({1, n});
            for (std::size_t i = 0; i < din; ++i) xb.at(i) = x.at(b * din + i);
            for (std::size_t i = 0; i < n; ++i) lb.at(i) = lam.at(b * n + i);
            Tensor single = layer.forward(xb, lb);
            for (std::size_t o = 0; o < dout; ++o)
                batch_err = std::max(batch_err, std::abs(batched.at(b * dout + o) - single.at(o)));
        }
    }
    msg = std::string("param counts ") + (counts_ok ? "exact" : "WRONG") + ", batch-vs-loop error " +
          fmt(batch_err) + " (tol 1e-12)";
    return counts_ok && batch_err <= 1e-12;
}

// --- criterion 6: entropy weight drives sigma to floor / ceiling ---

bool run_scale_dynamics(double tau, bool to_ceiling, std::string& out_msg) {
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
    p.lower.e = {0.0};
    // Flat upper objective: its curvature along the response sets where the
    // perturbation cost balances the entropy bonus, so a small curvature puts
    // that balance point beyond the sigma ceiling for tau = 10 while tau = 0
    // still pulls sigma to the floor.
    p.upper.A = la::Mat(1, 1);
    p.upper.A(0, 0) = 0.01;
    p.upper.B = la::Mat(1, 1);
    p.upper.B(0, 0) = 0.0;
    p.upper.C = la::Mat(1, 1);
    p.upper.C(0, 0) = 0.01;
    p.upper.d = {0.0};
    p.upper.e = {0.0};
    Rng init_rng(606);
    QuadraticAffineModel model(p, init_rng);
    HyperSpace space = identity_space({0.0}, 0.3);
    space.set_tau(tau);
    Dataset tr = detail::dummy_dataset(64), va = detail::dummy_dataset(64);
    TrainConfig cfg;
    cfg.batch_size = 64;
    cfg.seed = 607;
    cfg.optimizer_scale = {OptKind::adam, 0.05};
    // Short second-moment memory: the scale gradient shrinks with sigma^2, so
    // a long beta2 window would keep the denominator inflated and throttle the
    // march toward the floor.
    cfg.optimizer_scale.beta2 = 0.9;
    // Adam for the response fit: the train-loss curvature grows with sigma^2,
    // which would destabilize a fixed-step SGD long before sigma reaches its
    // ceiling.
    cfg.optimizer_elem = {OptKind::adam, 0.1};
    StnTrainer trainer(model, space, tr, va, cfg);
    DataBatch batch{Tensor::zeros({64, 1}), Tensor::zeros({64})};

    std::vector<double> trace;
    for (int v = 0; v < 2000; ++v) {
        trainer.train_step(batch);
        trainer.train_step(batch);
        trainer.valid_step(batch);
        trace.push_back(space.log_sigma().at(0));
    }
    double target = to_ceiling ? HyperSpace::kLogSigmaCeil : HyperSpace::kLogSigmaFloor;
    bool reached = trace.back() == target;

    bool monotone = true;  // windowed trend over the last 500 valid steps
    for (int w = 0; w + 1 < 5; ++w) {
        double a = 0, b = 0;
        for (int i = 0; i < 100; ++i) {
            a += trace[1500 + w * 100 + i] / 100.0;
            b += trace[1600 + w * 100 + i] / 100.0;
        }
        // 1e-3 slack on the window means: a single stochastic bounce off the
        // clamp inside one window should not count as a trend reversal
        if (to_ceiling ? b < a - 1e-3 : b > a + 1e-3) monotone = false;
    }
    out_msg = "final log_sigma " + fmt(trace.back()) + " (target " + fmt(target) + "), trend " +
              (monotone ? "monotone" : "NON-MONOTONE");
    return reached && monotone;
}

bool criterion6(std::string& msg) {
    Timer timer;
    std::string low, high;
    bool ok0 = run_scale_dynamics(0.0, false, low);
    bool ok10 = run_scale_dynamics(10.0, true, high);
    double secs = timer.seconds();
    msg = "tau=0: " + low + "; tau=10: " + high + "; " + fmt(secs) + "s (limit 30)";
    return ok0 && ok10 && secs < 30.0;
}

// --- criteria 7 and 8 share the overfit classification task ---

ExperimentConfig overfit_config(double l2_init, std::size_t max_epochs) {
    nlohmann::json j = {
        {"model", {{"task", "synthetic_classification"}, {"hidden", {24}}}},
        {"hyperparameters",
         {{{"name", "l2"},
           {"kind", "exp_positive"},
           {"lo", 1e-4},
           {"hi", 10.0},
           {"init", l2_init},
           {"init_sigma", 0.3},
           {"binding", "l2"},
           {"per_example", false}}}},
        {"trainer",
         {{"max_epochs", max_epochs},
          {"warmup_epochs", 2},
          {"batch_size", 10},
          {"grad_clip", 5.0},
          {"optimizer_elem", {{"kind", "sgd"}, {"lr", 0.03}, {"momentum", 0.9}}},
          {"optimizer_hyper", {{"kind", "adam"}, {"lr", 0.15}}},
          {"hyper_lr_decay", 0.1},
          {"hyper_decay_epoch", 100}}},
        {"search", {{"points_per_axis", 20}, {"budget_epochs", 70}}},
        {"data",
         {{"dim", 10},
          {"n_total", 460},
          {"n_train", 60},
          {"n_valid", 300},
          {"n_test", 100},
          {"label_noise", 0.0},
          {"separation", 1.0},
          {"seed", 3}}},
        {"tau", 1e-4},
        {"seed", 7},
    };
    return parse_config(j);
}

bool criterion7(std::string& msg) {
    Timer timer;
    ExperimentConfig cfg = overfit_config(0.01, 140);
    FitResult stn = run_stn(cfg, false, false);
    SearchResult grid = run_search(cfg, true, false);

    double best_grid = grid.best_so_far.back();
    std::size_t stn_budget = cfg.trainer.max_epochs;
    std::size_t grid_budget = grid.trials.size() * cfg.search.budget_epochs;
    double secs = timer.seconds();
    msg = "stn valid " + fmt(stn.final_valid_loss) + " vs grid best " + fmt(best_grid) +
          " (limit x1.05 = " + fmt(best_grid * 1.05) + "), budgets " + fmt(grid_budget) + " vs " +
          fmt(stn_budget) + " epochs, " + fmt(secs) + "s (limit 600)";
    return stn.final_valid_loss <= best_grid * 1.05 && grid_budget >= 10 * stn_budget &&
           secs < 600.0;
}

bool criterion8(std::string& msg) {
    Timer timer;
    FitResult low = run_stn(overfit_config(1e-3, 140), false, false);
    FitResult high = run_stn(overfit_config(1.0, 140), false, false);
    if (low.schedule.rows.empty() || high.schedule.rows.empty()) {
        msg = "no schedule rows logged";
        return false;
    }
    double post_warmup = low.schedule.rows.front().constrained[0];
    double final_low = low.schedule.rows.back().constrained[0];
    double final_high = high.schedule.rows.back().constrained[0];
    bool grew = final_low > post_warmup;
    double gap = std::abs(final_low - final_high) / std::max(final_low, final_high);
    double secs = timer.seconds();
    msg = "low-init l2 " + fmt(post_warmup) + " -> " + fmt(final_low) +
          (grew ? " (grew)" : " (DID NOT GROW)") + "; high-init final " + fmt(final_high) +
          ", relative gap " + fmt(gap) + " (tol 0.25), " + fmt(secs) + "s";
    return grew && gap <= 0.25;
}

// --- criterion 9: bitwise-identical schedule.csv through the CLI ---

#ifndef STN_CLI_PATH
#error "STN_CLI_PATH must be defined by the build"
#endif

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool criterion9(std::string& msg) {
    fs::path dir = fs::temp_directory_path() / "stn_acceptance_c9";
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::path cfg_path = dir / "config.json";
    {
        ExperimentConfig cfg = overfit_config(0.01, 4);
        std::ofstream out(cfg_path);
        out << config_to_json(cfg).dump(2) << '\n';
    }
    auto invoke = [&](const std::string& out_dir, const std::string& log) {
        std::string cmd = std::string(STN_CLI_PATH) + " run-stn " + cfg_path.string() + " --out " +
                          (dir / out_dir).string() + " --seed 42 >" + (dir / log).string() +
                          " 2>&1";
        int rc = std::system(cmd.c_str());
        return WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
    };
    if (!invoke("a", "a.log") || !invoke("b", "b.log")) {
        msg = "run-stn invocation failed";
        return false;
    }
    std::string a = slurp(dir / "a" / "schedule.csv");
    std::string b = slurp(dir / "b" / "schedule.csv");
    bool same = !a.empty() && a == b;
    msg = std::string("schedule.csv bytes ") + (same ? "identical" : "DIFFER") + " (" +
          fmt(static_cast<double>(a.size())) + " bytes)";
    return same;
}

// --- criterion 10: discrete cutout path stays finite and integer-valued ---

bool criterion10(std::string& msg) {
    Timer timer;
    nlohmann::json j = {
        {"model", {{"task", "tiny_images"}, {"conv_channels", 3}, {"conv_kernel", 3}}},
        {"hyperparameters",
         {{{"name", "holes"},
           {"kind", "discretized"},
           {"lo", 0.0},
           {"hi", 4.0},
           {"init", 0.0},
           {"init_sigma", 1.0},
           {"binding", "cutout_holes"}}}},
        {"trainer", {{"max_epochs", 3}, {"warmup_epochs", 1}, {"batch_size", 16}}},
        {"data",
         {{"image_side", 8},
          {"n_total", 160},
          {"n_train", 96},
          {"n_valid", 32},
          {"n_test", 32},
          {"seed", 5}}},
        {"seed", 10},
    };
    ExperimentConfig cfg = parse_config(j);
    BuiltExperiment built = build_experiment(cfg);
    StnTrainer trainer(*built.model, built.space, built.data.train, built.data.valid, cfg.trainer);
    Rng batch_rng(11);
    BatchCycler tr(built.data.train, cfg.trainer.batch_size, batch_rng);
    BatchCycler va(built.data.valid, cfg.trainer.batch_size, batch_rng);

    bool finite = true, integer = true, grads_finite = true;
    std::size_t steps = 0;
    auto check_lambda_grad = [&] {
        if (!built.space.lambda().has_grad()) return;
        for (double g : built.space.lambda().grad())
            if (!std::isfinite(g)) grads_finite = false;
    };
    for (int cycle = 0; cycle < 60; ++cycle) {
        for (int t = 0; t < 2; ++t) {
            finite = finite && std::isfinite(trainer.train_step(tr.next()));
            check_lambda_grad();
            ++steps;
        }
        finite = finite && std::isfinite(trainer.valid_step(va.next()));
        check_lambda_grad();
        ++steps;
        double c = built.space.constrained_value(0);
        integer = integer && c == std::round(c) && c >= 0.0 && c <= 4.0;
    }
    double final_valid = trainer.evaluate(built.data.valid);
    finite = finite && std::isfinite(final_valid);
    double secs = timer.seconds();
    msg = fmt(static_cast<double>(steps)) + " steps: losses " + (finite ? "finite" : "NON-FINITE") +
          ", schedule " + (integer ? "integer in [0,4]" : "NON-INTEGER") + ", lambda grads " +
          (grads_finite ? "finite" : "NON-FINITE") + ", final valid " + fmt(final_valid) + ", " +
          fmt(secs) + "s";
    return finite && integer && grads_finite;
}

}  // namespace

int main(int argc, char** argv) {
    using Criterion = bool (*)(std::string&);
    struct Entry {
        Criterion fn;
        const char* title;
    };
    Entry entries[] = {
        {criterion1, "affine global fit recovers the exact affine best response"},
        {criterion2, "analytic hypergradient matches central differences"},
        {criterion3, "gated closed form and learned gates match the ridge path"},
        {criterion4, "gradient checks on all ops and hyper-layer graphs"},
        {criterion5, "hyper-layer parameter counts and per-example batching"},
        {criterion6, "entropy weight drives sigma to its floor and ceiling"},
        {criterion7, "STN beats a 10x-budget grid on the overfit task"},
        {criterion8, "L2 schedule grows and is insensitive to initialization"},
        {criterion9, "bitwise-identical schedule.csv for repeated runs"},
        {criterion10, "discrete cutout path stays finite and integer-valued"},
    };

    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > 10) {
            std::cerr << "usage: " << argv[0] << " [criterion 1..10]\n";
            return 2;
        }
    }

    bool all_ok = true;
    for (int i = 1; i <= 10; ++i) {
        if (only && i != only) continue;
        std::string msg;
        bool ok = false;
        try {
            ok = entries[i - 1].fn(msg);
        } catch (const std::exception& e) {
            msg = std::string("exception: ") + e.what();
        }
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << i << ": " << entries[i - 1].title << " — "
                  << msg << std::endl;
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
