#pragma once

#include <functional>
#include <limits>
#include <optional>

#include "dco/core.hpp"

namespace dco::solve {

/// f(x), optionally writing ∇f(x) into *grad.
using SmoothFunction = std::function<real(const RVector& x, RVector* grad)>;
using Function = std::function<real(const RVector& x)>;

struct Result {
    RVector x;
    real value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

// ---------------------------------------------------------------------------
// BFGS

struct BfgsOptions {
    int max_iterations = 2000;
    real gradient_tolerance = 1e-12;
    real step_tolerance = 1e-15;
};

namespace detail {

struct LinePoint {
    real a, f, slope;
};

inline real cubic_min(const LinePoint& lo, const LinePoint& hi)
{
    const real d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
    const real disc = d1 * d1 - lo.slope * hi.slope;
    if (disc >= 0.0) {
        const real d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
        const real a = hi.a - (hi.a - lo.a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
        const real lo_a = std::min(lo.a, hi.a), hi_a = std::max(lo.a, hi.a);
        const real margin = 0.1 * (hi_a - lo_a);
        if (std::isfinite(a) && a > lo_a + margin && a < hi_a - margin) return a;
    }
    return 0.5 * (lo.a + hi.a);
}

/// Strong-Wolfe line search (bracketing + zoom with cubic interpolation).
inline std::optional<real> wolfe_search(const SmoothFunction& f, const RVector& x, real f0, const RVector& g0,
                                        const RVector& p, RVector& x_new, real& f_new, RVector& g_new, int& evals)
{
    constexpr real c1 = 1e-4, c2 = 0.9;
    const real slope0 = g0.dot(p);
    if (!(slope0 < 0.0)) return std::nullopt;

    auto eval = [&](real a) {
        x_new = x + a * p;
        f_new = f(x_new, &g_new);
        ++evals;
        return LinePoint{a, f_new, g_new.dot(p)};
    };

    auto zoom = [&](LinePoint lo, LinePoint hi) -> std::optional<real> {
        for (int it = 0; it < 40; ++it) {
            const real a = cubic_min(lo, hi);
            const LinePoint cur = eval(a);
            if (!std::isfinite(cur.f) || cur.f > f0 + c1 * a * slope0 || cur.f >= lo.f) {
                hi = cur;
            } else {
                if (std::abs(cur.slope) <= -c2 * slope0) return a;
                if (cur.slope * (hi.a - lo.a) >= 0.0) hi = lo;
                lo = cur;
            }
            if (std::abs(hi.a - lo.a) < 1e-16 * std::max<real>(1.0, lo.a)) break;
        }
        // Fall back to the best sufficient-decrease point found.
        if (lo.a > 0.0) {
            eval(lo.a);
            return lo.a;
        }
        return std::nullopt;
    };

    LinePoint prev{0.0, f0, slope0};
    real a = 1.0;
    for (int it = 0; it < 60; ++it) {
        const LinePoint cur = eval(a);
        if (!std::isfinite(cur.f) || cur.f > f0 + c1 * a * slope0 || (it > 0 && cur.f >= prev.f))
            return zoom(prev, cur);
        if (std::abs(cur.slope) <= -c2 * slope0) return a;
        if (cur.slope >= 0.0) return zoom(cur, prev);
        prev = cur;
        a *= 2.0;
    }
    return std::nullopt;
}

}  // namespace detail

inline Result bfgs(const SmoothFunction& f, RVector x, const BfgsOptions& opt = {})
{
    const auto n = x.size();
    Result res;
    RVector g(n);
    real fx = f(x, &g);
    res.evaluations = 1;
    RMatrix hinv = RMatrix::Identity(n, n);
    bool fresh = true;
    RVector x_new(n), g_new(n);
    real f_new = 0.0;

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance) {
            res.converged = true;
            break;
        }
        RVector p = -hinv * g;
        if (!(g.dot(p) < 0.0)) {
            hinv.setIdentity();
            p = -g;
            fresh = true;
        }
        if (fresh) {
            // scale the first step to a unit-length move
            const real pn = p.norm();
            if (pn > 1.0) p /= pn;
        }
        const auto step = detail::wolfe_search(f, x, fx, g, p, x_new, f_new, g_new, res.evaluations);
        if (!step) {
            if (fresh) break;
            hinv.setIdentity();
            fresh = true;
            continue;
        }
        const RVector s = x_new - x;
        const RVector y = g_new - g;
        const real sy = s.dot(y);
        const bool tiny = s.lpNorm<Eigen::Infinity>() <= opt.step_tolerance * std::max<real>(1.0, x.lpNorm<Eigen::Infinity>());
        const real improvement = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        if (tiny || (improvement <= 0.0 && !fresh)) {
            res.converged = g.lpNorm<Eigen::Infinity>() <= std::sqrt(opt.gradient_tolerance);
            break;
        }
        if (sy > 1e-300) {
            if (fresh) hinv *= sy / y.squaredNorm();
            const real rho = 1.0 / sy;
            const RVector hy = hinv * y;
            hinv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
            fresh = false;
        }
    }
    res.x = std::move(x);
    res.value = fx;
    return res;
}

// ---------------------------------------------------------------------------
// Nelder–Mead

struct NelderMeadOptions {
    real initial_step = 0.1;
    int max_evaluations = 20000;
    real value_tolerance = 1e-12;
    real size_tolerance = 1e-10;
    int restarts = 2;  // re-seed the simplex around the best point
};

/// Nelder–Mead with dimension-adaptive coefficients.
inline Result nelder_mead(const Function& f, const RVector& x0, const NelderMeadOptions& opt = {})
{
    const auto n = x0.size();
    const real alpha = 1.0, beta = 1.0 + 2.0 / n, gamma = 0.75 - 0.5 / n, delta = 1.0 - 1.0 / n;
    Result res;
    res.x = x0;
    res.value = f(x0);
    res.evaluations = 1;

    for (int round = 0; round <= opt.restarts; ++round) {
        std::vector<RVector> pts(n + 1, res.x);
        std::vector<real> vals(n + 1, res.value);
        const real step = opt.initial_step / (1 << (2 * round));
        for (Eigen::Index i = 0; i < n; ++i) {
            pts[i + 1](i) += step;
            vals[i + 1] = f(pts[i + 1]);
            ++res.evaluations;
        }
        std::vector<int> order(n + 1);
        for (;;) {
            for (Eigen::Index i = 0; i <= n; ++i) order[i] = static_cast<int>(i);
            std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
            const int best = order[0], worst = order[n], second = order[n - 1];
            ++res.iterations;
            real size = 0.0;
            for (Eigen::Index i = 1; i <= n; ++i)
                size = std::max(size, (pts[order[i]] - pts[best]).lpNorm<Eigen::Infinity>());
            const bool flat = std::isfinite(vals[worst]) &&
                              std::abs(vals[worst] - vals[best]) <= opt.value_tolerance * std::max<real>(1.0, std::abs(vals[best]));
            if ((flat && size <= std::sqrt(opt.size_tolerance)) || size <= opt.size_tolerance ||
                res.evaluations >= opt.max_evaluations)
                break;

            RVector centroid = RVector::Zero(n);
            for (Eigen::Index i = 0; i < n; ++i) centroid += pts[order[i]];
            centroid /= real(n);

            const RVector xr = centroid + alpha * (centroid - pts[worst]);
            const real fr = f(xr);
            ++res.evaluations;
            if (fr < vals[best]) {
                const RVector xe = centroid + beta * (xr - centroid);
                const real fe = f(xe);
                ++res.evaluations;
                if (fe < fr) { pts[worst] = xe; vals[worst] = fe; }
                else { pts[worst] = xr; vals[worst] = fr; }
            } else if (fr < vals[second]) {
                pts[worst] = xr;
                vals[worst] = fr;
            } else {
                const bool outside = fr < vals[worst];
                const RVector xc = outside ? RVector(centroid + gamma * (xr - centroid))
                                           : RVector(centroid - gamma * (centroid - pts[worst]));
                const real fc = f(xc);
                ++res.evaluations;
                if (fc < (outside ? fr : vals[worst])) {
                    pts[worst] = xc;
                    vals[worst] = fc;
                } else {
                    for (Eigen::Index i = 1; i <= n; ++i) {
                        const int k = order[i];
                        pts[k] = pts[best] + delta * (pts[k] - pts[best]);
                        vals[k] = f(pts[k]);
                        ++res.evaluations;
                    }
                }
            }
        }
        const int best = static_cast<int>(std::min_element(vals.begin(), vals.end()) - vals.begin());
        const bool improved = vals[best] < res.value;
        if (vals[best] <= res.value) {
            res.x = pts[best];
            res.value = vals[best];
        }
        if (res.evaluations >= opt.max_evaluations) break;
        if (!improved && round > 0) {
            res.converged = true;
            break;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Augmented Lagrangian over Bloch coordinates

/// Maximize objective(x) subject to equalities(x) = 0 and
/// ρ(x) = 𝟙/d + Σ x_i B_i/κ ⪰ 0.
///
/// The positivity constraint enters through the conic augmented-Lagrangian
/// term (1/2σ)(‖Π₊(Y − σρ)‖² − ‖Y‖²) with a matrix multiplier Y ⪰ 0, so
/// rank-deficient optima are reached without an interior barrier.
struct ConstrainedProblem {
    SmoothFunction objective;  // maximized; gradient ignored for nonsmooth kinds
    bool smooth = true;
    /// Returns the m constraint values; if jac != nullptr fills the m×n Jacobian.
    std::function<RVector(const RVector& x, RMatrix* jac)> equalities;
    /// Bloch basis for the positivity term; nullptr drops it (for
    /// parametrizations that are positive by construction).
    const OperatorBasis* basis = nullptr;
};

struct AugmentedLagrangianOptions {
    int max_outer = 40;
    real feasibility_tolerance = 1e-12;
    real initial_penalty = 10.0;
    real max_penalty = 1e10;
    BfgsOptions bfgs{};
    NelderMeadOptions simplex{};
};

struct ConstrainedResult {
    RVector x;
    real objective = 0.0;
    real violation = 0.0;
    int outer_iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

inline CMatrix psd_part(const CMatrix& m) { return hermitian_function(m, [](real v) { return std::max(v, 0.0); }); }

inline ConstrainedResult augmented_lagrangian(const ConstrainedProblem& prob, RVector x,
                                              const AugmentedLagrangianOptions& opt = {})
{
    const OperatorBasis* basis = prob.basis;
    const int d = basis ? basis->dim() : 0;
    const auto m = prob.equalities ? prob.equalities(x, nullptr).size() : 0;
    RVector lambda = RVector::Zero(m);
    CMatrix y_mult = CMatrix::Zero(d, d);
    real mu = opt.initial_penalty, sigma = opt.initial_penalty;
    real last_violation = std::numeric_limits<real>::infinity();
    ConstrainedResult out;

    auto merit = [&](const RVector& z, RVector* grad) -> real {
        RVector og;
        const real obj = prob.objective(z, (grad && prob.smooth) ? &og : nullptr);
        real val = -obj;
        if (grad) *grad = prob.smooth ? RVector(-og) : RVector(RVector::Zero(z.size()));
        if (m > 0) {
            RMatrix jac;
            const RVector c = prob.equalities(z, grad ? &jac : nullptr);
            val += lambda.dot(c) + 0.5 * mu * c.squaredNorm();
            if (grad) *grad += jac.transpose() * (lambda + mu * c);
        }
        if (!basis) return val;
        const CMatrix rho = bloch_decode_matrix(z, *basis);
        const CMatrix shifted = psd_part(y_mult - sigma * rho);
        val += (shifted.squaredNorm() - y_mult.squaredNorm()) / (2.0 * sigma);
        if (grad)
            for (int i = 0; i < basis->size(); ++i)
                (*grad)(i) -= (shifted * (*basis)[i]).trace().real() / basis->kappa();
        return val;
    };

    for (out.outer_iterations = 0; out.outer_iterations < opt.max_outer; ++out.outer_iterations) {
        if (prob.smooth) {
            const Result r = bfgs(merit, x, opt.bfgs);
            x = r.x;
            out.evaluations += r.evaluations;
        } else {
            const Result r = nelder_mead([&](const RVector& z) { return merit(z, nullptr); }, x, opt.simplex);
            x = r.x;
            out.evaluations += r.evaluations;
        }
        const RVector c = m > 0 ? prob.equalities(x, nullptr) : RVector();
        real cone_residual = 0.0;
        CMatrix y_next = y_mult;
        if (basis) {
            y_next = psd_part(y_mult - sigma * bloch_decode_matrix(x, *basis));
            cone_residual = (y_next - y_mult).norm() / sigma;
        }
        const real violation = std::max(m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0, cone_residual);
        if (m > 0) lambda += mu * c;
        y_mult = y_next;
        out.violation = violation;
        if (violation <= opt.feasibility_tolerance) {
            out.converged = true;
            ++out.outer_iterations;
            break;
        }
        if (violation > 0.25 * last_violation) {
            mu = std::min(mu * 10.0, opt.max_penalty);
            sigma = std::min(sigma * 10.0, opt.max_penalty);
        }
        last_violation = violation;
    }
    out.x = x;
    out.objective = prob.objective(x, nullptr);
    return out;
}

}  // namespace dco::solve
