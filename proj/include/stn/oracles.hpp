#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stn/hyperspace.hpp"
#include "stn/layers.hpp"
#include "stn/linalg.hpp"
#include "stn/rng.hpp"

namespace stn {

/// Quadratic bilevel instance: both levels share the form
///   g(lam, th) = 1/2 lam^T A lam + lam^T B th + 1/2 th^T C th + d^T lam + e^T th
/// with the lower-level C positive definite so the best-response is closed
/// form.
struct QuadraticCoeffs {
    la::Mat A;   // n x n symmetric
    la::Mat B;   // n x m
    la::Mat C;   // m x m symmetric
    la::Vec d;   // n
    la::Vec e;   // m

    double eval(const la::Vec& lam, const la::Vec& th) const {
        double v = 0.5 * la::dot(lam, la::matvec(A, lam));
        v += la::dot(lam, la::matvec(B, th));
        v += 0.5 * la::dot(th, la::matvec(C, th));
        v += la::dot(d, lam) + la::dot(e, th);
        return v;
    }

    la::Vec grad_lam(const la::Vec& lam, const la::Vec& th) const {
        return la::add(la::add(la::matvec(A, lam), la::matvec(B, th)), d);
    }

    la::Vec grad_th(const la::Vec& lam, const la::Vec& th) const {
        return la::add(la::add(la::matvec(la::transpose(B), lam), la::matvec(C, th)), e);
    }
};

struct QuadraticBilevel {
    QuadraticCoeffs lower;  // f
    QuadraticCoeffs upper;  // F
    std::size_t n = 0, m = 0;

    /// Verifies the Hessian precondition before any oracle use.
    la::Mat lower_chol() const { return la::cholesky(lower.C); }
};

/// Random instance with C = M^T M + 0.1 I so the lower level is PD; the
/// upper-level quadratic is generated the same way to keep desk tasks convex.
inline QuadraticBilevel random_quadratic_bilevel(std::size_t n, std::size_t m, Rng& rng) {
    auto rand_mat = [&](std::size_t r, std::size_t c) {
        la::Mat mt(r, c);
        for (auto& v : mt.a) v = rng.normal();
        return mt;
    };
    auto rand_spd = [&](std::size_t k) {
        la::Mat mt = rand_mat(k, k);
        la::Mat s = la::matmul(la::transpose(mt), mt);
        for (std::size_t i = 0; i < k; ++i) s(i, i) += 0.1;
        return s;
    };
    auto rand_vec = [&](std::size_t k) {
        la::Vec v(k);
        for (auto& x : v) x = rng.normal();
        return v;
    };
    QuadraticBilevel q;
    q.n = n;
    q.m = m;
    q.lower = {rand_spd(n), rand_mat(n, m), rand_spd(m), rand_vec(n), rand_vec(m)};
    q.upper = {rand_spd(n), rand_mat(n, m), rand_spd(m), rand_vec(n), rand_vec(m)};
    return q;
}

/// theta*(lam) = -C^{-1}(e + B^T lam).
inline la::Vec quad_best_response(const QuadraticBilevel& p, const la::Vec& lam) {
    la::Mat l = p.lower_chol();
    la::Vec rhs = la::add(p.lower.e, la::matvec(la::transpose(p.lower.B), lam));
    return la::scale(la::chol_solve(l, rhs), -1.0);
}

/// d theta*/d lam = -C^{-1} B^T, an m x n matrix.
inline la::Mat quad_response_jacobian(const QuadraticBilevel& p) {
    la::Mat l = p.lower_chol();
    la::Mat j = la::chol_solve_mat(l, la::transpose(p.lower.B));
    for (auto& v : j.a) v = -v;
    return j;
}

/// dF*/d lam = dF/d lam + (d theta*/d lam)^T dF/d theta, at theta = theta*(lam).
inline la::Vec quad_hypergradient(const QuadraticBilevel& p, const la::Vec& lam) {
    la::Vec th = quad_best_response(p, lam);
    la::Vec direct = p.upper.grad_lam(lam, th);
    la::Vec gth = p.upper.grad_th(lam, th);
    la::Mat jac = quad_response_jacobian(p);
    return la::add(direct, la::matvec(la::transpose(jac), gth));
}

/// Exact minimizer of E_{eps~N(0,s^2 I)}[f(lam0+eps, U(lam0+eps)+b)]:
/// U = -C^{-1}B^T (independent of the scale) and b = theta*(lam0) - U lam0.
inline std::pair<la::Mat, la::Vec> quad_affine_fit_exact(const QuadraticBilevel& p,
                                                         const la::Vec& lam0, double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("affine fit requires sigma > 0; the minimizer is not unique otherwise");
    la::Mat u = quad_response_jacobian(p);
    la::Vec b = quad_best_response(p, lam0);
    la::Vec ul = la::matvec(u, lam0);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= ul[i];
    return {u, b};
}

/// Ridge regression instance with precomputed SVD factors.
struct RidgeProblem {
    la::Mat x;  // N x D
    la::Vec t;  // N
    la::SvdResult svd;

    static RidgeProblem from_data(la::Mat x_, la::Vec t_) {
        RidgeProblem rp;
        rp.svd = la::svd(x_);
        for (double dv : rp.svd.d)
            if (!(dv > 0.0)) throw std::invalid_argument("ridge oracle requires full column rank");
        rp.x = std::move(x_);
        rp.t = std::move(t_);
        return rp;
    }
};

/// u*(lambda) = V (D^2 + exp(lambda) I)^{-1} D U^T t.
inline la::Vec ridge_solution(const RidgeProblem& rp, double lambda) {
    std::size_t d = rp.svd.d.size();
    la::Vec ut = la::matvec(la::transpose(rp.svd.u), rp.t);
    la::Vec scaled(d);
    double el = std::exp(lambda);
    for (std::size_t i = 0; i < d; ++i)
        scaled[i] = rp.svd.d[i] / (rp.svd.d[i] * rp.svd.d[i] + el) * ut[i];
    return la::matvec(rp.svd.v, scaled);
}

struct GatedResponseParams {
    la::Mat q0;  // V^T
    la::Vec s0;  // D^{-1} U^T t
    la::Vec v;   // all -1
    la::Vec c;   // 2 log d_i
};

/// The (Q0, s0, v, c) family whose gated predictions reproduce the ridge
/// path: sigma(-lambda + 2 log d) = d^2 / (d^2 + exp(lambda)).
inline GatedResponseParams gated_response_params(const RidgeProblem& rp) {
    std::size_t d = rp.svd.d.size();
    GatedResponseParams g;
    g.q0 = la::transpose(rp.svd.v);
    la::Vec ut = la::matvec(la::transpose(rp.svd.u), rp.t);
    g.s0.resize(d);
    g.v.assign(d, -1.0);
    g.c.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (!(rp.svd.d[i] > 0.0)) throw std::invalid_argument("zero singular value");
        g.s0[i] = ut[i] / rp.svd.d[i];
        g.c[i] = 2.0 * std::log(rp.svd.d[i]);
    }
    return g;
}

/// Instantiates a GatedLinearNet carrying the closed-form response family.
inline GatedLinearNet make_gated_net(const GatedResponseParams& g) {
    std::size_t d = g.s0.size();
    Tensor q0 = Tensor::from({d, d}, g.q0.a);
    Tensor s0 = Tensor::from({d}, g.s0);
    Tensor v = Tensor::from({d}, g.v, true);
    Tensor c = Tensor::from({d}, g.c, true);
    return GatedLinearNet(std::move(q0), std::move(s0), std::move(v), std::move(c));
}

}  // namespace stn
