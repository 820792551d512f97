#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "stn/data.hpp"
#include "stn/layers.hpp"
#include "stn/oracles.hpp"
#include "stn/tensor.hpp"

namespace stn {

struct OracleCheck {
    std::string name;
    double error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Closed-form identity suite over the analytic oracles; every check is an
/// equation both sides of which are computed independently.
inline std::vector<OracleCheck> oracle_checks(std::uint64_t seed = 7) {
    std::vector<OracleCheck> checks;
    auto push = [&](const std::string& name, double err, double tol) {
        checks.push_back({name, err, tol, err <= tol});
    };
    Rng rng(seed);

    {  // lower-level stationarity: grad_th(lam, theta*(lam)) = 0
        double worst = 0;
        for (int k = 0; k < 5; ++k) {
            auto p = random_quadratic_bilevel(3, 4, rng);
            la::Vec lam(3);
            for (auto& v : lam) v = rng.normal();
            la::Vec g = p.lower.grad_th(lam, quad_best_response(p, lam));
            for (double v : g) worst = std::max(worst, std::abs(v));
        }
        push("best-response stationarity", worst, 1e-9);
    }
    {  // response jacobian solves C J = -B^T
        double worst = 0;
        for (int k = 0; k < 5; ++k) {
            auto p = random_quadratic_bilevel(3, 4, rng);
            la::Mat j = quad_response_jacobian(p);
            la::Mat lhs = la::matmul(p.lower.C, j);
            la::Mat bt = la::transpose(p.lower.B);
            for (std::size_t i = 0; i < lhs.a.size(); ++i)
                worst = std::max(worst, std::abs(lhs.a[i] + bt.a[i]));
        }
        push("response jacobian identity", worst, 1e-9);
    }
    {  // hypergradient vs central differences of F(lam, theta*(lam))
        double worst = 0;
        for (int k = 0; k < 5; ++k) {
            auto p = random_quadratic_bilevel(3, 4, rng);
            la::Vec lam(3);
            for (auto& v : lam) v = rng.normal();
            la::Vec g = quad_hypergradient(p, lam);
            for (std::size_t j = 0; j < 3; ++j) {
                double h = 1e-5;
                la::Vec lp = lam, lm = lam;
                lp[j] += h;
                lm[j] -= h;
                double fd = (p.upper.eval(lp, quad_best_response(p, lp)) -
                             p.upper.eval(lm, quad_best_response(p, lm))) /
                            (2 * h);
                worst = std::max(worst, std::abs(g[j] - fd) / (std::abs(fd) + 1e-8));
            }
        }
        push("hypergradient finite differences", worst, 1e-6);
    }
    {  // svd reconstruction U D V^T = X and orthogonality
        Dataset ds = make_regression(4, 32, {10, 3, 1, 0.3}, 0.1, seed);
        la::Mat x(32, 4);
        x.a = ds.inputs.data();
        auto s = la::svd(x);
        double worst = 0;
        for (std::size_t i = 0; i < 32; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                double acc = 0;
                for (std::size_t k = 0; k < 4; ++k) acc += s.u(i, k) * s.d[k] * s.v(j, k);
                worst = std::max(worst, std::abs(acc - x(i, j)));
            }
        push("svd reconstruction", worst, 1e-8);
        double spec = 0;
        for (std::size_t k = 0; k < 4; ++k)
            spec = std::max(spec, std::abs(s.d[k] - std::vector<double>{10, 3, 1, 0.3}[k]));
        push("regression spectrum", spec, 1e-8);
    }
    {  // ridge normal equations: (X^T X + e^lam I) u* = X^T t
        Dataset ds = make_regression(4, 32, {5, 2, 1, 0.5}, 0.1, seed + 1);
        la::Mat x(32, 4);
        x.a = ds.inputs.data();
        la::Vec t = ds.targets.data();
        auto rp = RidgeProblem::from_data(x, t);
        double worst = 0;
        for (double lam : {-2.0, 0.0, 2.0}) {
            la::Vec u = ridge_solution(rp, lam);
            la::Vec lhs = la::matvec(la::matmul(la::transpose(x), x), u);
            la::Vec rhs = la::matvec(la::transpose(x), t);
            for (std::size_t j = 0; j < 4; ++j)
                worst = std::max(worst, std::abs(lhs[j] + std::exp(lam) * u[j] - rhs[j]));
        }
        push("ridge normal equations", worst, 1e-8);
    }
    {  // gated family reproduces the ridge path exactly
        Dataset ds = make_regression(4, 32, {5, 2, 1, 0.5}, 0.1, seed + 2);
        la::Mat x(32, 4);
        x.a = ds.inputs.data();
        la::Vec t = ds.targets.data();
        auto rp = RidgeProblem::from_data(x, t);
        auto net = make_gated_net(gated_response_params(rp));
        double worst = 0;
        for (double lam : {-3.0, -1.0, 0.0, 1.0, 3.0}) {
            la::Vec u = ridge_solution(rp, lam);
            for (std::size_t i = 0; i < 8; ++i) {
                std::vector<double> xi(4);
                for (std::size_t j = 0; j < 4; ++j) xi[j] = x(i, j);
                double pred = gated_forward(net, xi, lam);
                double want = la::dot(la::Vec(xi), u);
                worst = std::max(worst, std::abs(pred - want));
            }
        }
        push("gated ridge path", worst, 1e-10);
    }
    {  // autodiff on a composite hyper-layer graph
        Rng lrng(seed + 3);
        HyperDense layer(3, 2, 2, lrng);
        Tensor x = Tensor::zeros({4, 3});
        Tensor lam = Tensor::zeros({4, 2});
        for (auto& v : x.data()) v = lrng.normal();
        for (auto& v : lam.data()) v = 0.3 * lrng.normal();
        double err = grad_check([&] { return mean(square(layer.forward(x, lam))); }, layer.params());
        push("hyper-layer gradient check", err, 1e-5);
    }
    return checks;
}

inline bool print_oracle_table(const std::vector<OracleCheck>& checks) {
    bool all = true;
    std::printf("%-36s %12s %10s  %s\n", "check", "error", "tol", "status");
    for (const auto& c : checks) {
        std::printf("%-36s %12.3e %10.0e  %s\n", c.name.c_str(), c.error, c.tolerance,
                    c.passed ? "pass" : "FAIL");
        all = all && c.passed;
    }
    return all;
}

}  // namespace stn
