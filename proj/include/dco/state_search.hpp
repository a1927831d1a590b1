#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dco/dissipator.hpp"
#include "dco/parallel.hpp"
#include "dco/solvers.hpp"

namespace dco {

/// Constraint functions c_n(r) = Tr[ρⁿ⁻¹ D(ρ)], n = 2..depth, in Bloch
/// coordinates, with the Jacobian assembled from the analytic ρ-gradients.
class FluxConstraints {
public:
    FluxConstraints(const DissipatorSpec& spec, const OperatorBasis& basis, int depth)
        : spec_(spec), basis_(basis), depth_(depth)
    {
        if (depth < 2 || depth > spec.dim())
            throw ValidationError("constraint depth must satisfy 2 <= depth <= d");
    }

    int count() const { return depth_ - 1; }

    RVector operator()(const RVector& x, RMatrix* jac) const
    {
        const CMatrix rho = bloch_decode_matrix(x, basis_);
        RVector c(count());
        if (jac) jac->resize(count(), basis_.size());
        for (int n = 2; n <= depth_; ++n) {
            c(n - 2) = moment_flux(spec_, rho, n);
            if (jac) {
                const CMatrix g = moment_flux_gradient(spec_, rho, n);
                for (int i = 0; i < basis_.size(); ++i)
                    (*jac)(n - 2, i) = (g * basis_[i]).trace().real() / basis_.kappa();
            }
        }
        return c;
    }

private:
    const DissipatorSpec& spec_;
    const OperatorBasis& basis_;
    int depth_;
};

/// Characteristic rate used to make flux tolerances scale covariant.
inline real rate_scale(const DissipatorSpec& spec)
{
    real s = 0.0;
    for (const auto& c : spec.channels()) s = std::max(s, c.rate * c.op.squaredNorm() / spec.dim());
    return s > 0.0 ? s : 1.0;
}

struct RestoredPoint {
    RVector x;
    real constraint_residual = 0.0;
    real min_eigenvalue = 0.0;
    bool ok = false;
};

/// Alternates the Frobenius projection onto the state set with minimum-norm
/// Newton steps on the flux constraints until both hold.
inline RestoredPoint restore_feasibility(const FluxConstraints& constraints, const OperatorBasis& basis, RVector x,
                                         real scale, int max_iterations = 60)
{
    RestoredPoint out;
    const real target = 1e-14 * scale;
    for (int it = 0; it < max_iterations; ++it) {
        CMatrix rho = bloch_decode_matrix(x, basis);
        if (eigenvalues_of(rho).minCoeff() < -1e-13) {
            rho = project_to_states(rho);
            x = bloch_encode(rho, basis).coords;
        }
        RMatrix jac;
        const RVector c = constraints(x, &jac);
        out.constraint_residual = c.lpNorm<Eigen::Infinity>();
        out.min_eigenvalue = eigenvalues_of(bloch_decode_matrix(x, basis)).minCoeff();
        if (out.constraint_residual <= target && out.min_eigenvalue >= -1e-12) break;
        Eigen::JacobiSVD<RMatrix> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-12);
        x -= svd.solve(c);
    }
    out.x = x;
    out.ok = out.constraint_residual <= 1e-11 * scale && out.min_eigenvalue >= -1e-10;
    return out;
}

/// Random full-rank starting state: a Ginibre sample mixed with a random pure
/// state at a uniform weight, so that near-pure optima get covered.
inline RVector random_start(const OperatorBasis& basis, std::mt19937_64& rng)
{
    const int d = basis.dim();
    std::uniform_real_distribution<real> uni(0.0, 1.0);
    const DensityMatrix mixed = random_state(d, rng);
    const CVector psi = random_unitary(d, rng).col(0);
    const real w = uni(rng);
    const CMatrix rho = w * (psi * psi.adjoint()) + (1.0 - w) * mixed.matrix();
    return bloch_encode(rho, basis).coords;
}

struct SearchOptions {
    int restarts = 64;
    std::uint64_t seed = 1;
    int constraint_depth = 2;
    solve::AugmentedLagrangianOptions engine{};
    /// Values within this distance are ties, resolved by the
    /// lexicographically smallest Bloch vector.
    real tie_tolerance = 1e-9;
    /// Optional local refinement of each restart's result; kept only if it is
    /// feasible and loses at most `refine_slack` in value.
    std::function<std::optional<RVector>(const RVector&)> refine;
    real refine_slack = 1e-10;
};

struct SearchOutcome {
    RVector x;
    real value = -std::numeric_limits<real>::infinity();
    bool found = false;
    int restarts_used = 0;
    int feasible_restarts = 0;
    real constraint_residual = 0.0;
    std::vector<real> restart_values;  // NaN for infeasible restarts
};

namespace detail {
inline bool lex_less(const RVector& a, const RVector& b)
{
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a(i) != b(i)) return a(i) < b(i);
    return false;
}
}  // namespace detail

/// Multi-start maximization of `objective` over {ρ ⪰ 0 : c_n(ρ) = 0, n ≤ depth}.
/// Restarts run in parallel with per-restart seeds and are reduced in index
/// order: a candidate replaces the incumbent if it is better by more than the
/// tie tolerance, or ties without lowering the value and is
/// lexicographically smaller.
inline SearchOutcome maximize_over_flux_constraints(const DissipatorSpec& spec, const solve::SmoothFunction& objective,
                                                    bool smooth, const SearchOptions& opt)
{
    const OperatorBasis basis(spec.dim());
    const FluxConstraints constraints(spec, basis, opt.constraint_depth);
    const real scale = rate_scale(spec);

    solve::ConstrainedProblem prob;
    prob.objective = objective;
    prob.smooth = smooth;
    prob.basis = &basis;
    prob.equalities = [&](const RVector& x, RMatrix* jac) { return RVector(constraints(x, jac) / scale); };

    struct Slot {
        RVector x;
        real value = std::numeric_limits<real>::quiet_NaN();
        real residual = 0.0;
        bool ok = false;
    };
    std::vector<Slot> slots(std::max(0, opt.restarts));
    parallel_for(opt.restarts, [&](int k) {
        std::mt19937_64 rng(mix_seed(opt.seed, static_cast<std::uint64_t>(k)));
        const RVector x0 = random_start(basis, rng);
        const solve::ConstrainedResult r = solve::augmented_lagrangian(prob, x0, opt.engine);
        const RestoredPoint p = restore_feasibility(constraints, basis, r.x, scale);
        Slot& s = slots[k];
        s.x = p.x;
        s.ok = p.ok && p.x.allFinite();
        s.residual = p.constraint_residual;
        if (s.ok) s.value = objective(p.x, nullptr);
        if (s.ok && opt.refine) {
            const std::optional<RVector> better = opt.refine(s.x);
            if (better && better->allFinite()) {
                const real v = objective(*better, nullptr);
                if (v >= s.value - opt.refine_slack) {
                    s.x = *better;
                    s.value = v;
                    s.residual = constraints(s.x, nullptr).lpNorm<Eigen::Infinity>();
                }
            }
        }
    });

    SearchOutcome out;
    out.restarts_used = opt.restarts;
    for (const Slot& s : slots) {
        out.restart_values.push_back(s.ok ? s.value : std::numeric_limits<real>::quiet_NaN());
        if (!s.ok || !std::isfinite(s.value)) continue;
        ++out.feasible_restarts;
        const bool better = !out.found || s.value > out.value + opt.tie_tolerance;
        const bool tie_break = out.found && std::abs(s.value - out.value) <= opt.tie_tolerance &&
                               s.value >= out.value && detail::lex_less(s.x, out.x);
        if (better || tie_break) {
            out.x = s.x;
            out.value = s.value;
            out.constraint_residual = s.residual;
            out.found = true;
        }
    }
    return out;
}

/// Refines a candidate optimum with the factorization ρ = VV†/Tr(VV†), V of
/// size d×rank.  Rank-deficient optima are interior points of this
/// parametrization, so the local solve converges where the conic term alone
/// stalls.  Returns nullopt if the refined point is infeasible.
template <typename Value, typename Gradient>
std::optional<RVector> low_rank_polish(const DissipatorSpec& spec, const OperatorBasis& basis, int depth,
                                       Value value, Gradient gradient, const CMatrix& rho0, int rank,
                                       const solve::AugmentedLagrangianOptions& engine = {})
{
    const int d = spec.dim();
    const real scale = rate_scale(spec);
    const EigenSystem es = spectral_decompose(HermitianMatrix(rho0));
    CMatrix v0 = es.eigenvectors.leftCols(rank);
    for (int j = 0; j < rank; ++j) v0.col(j) *= std::sqrt(std::max(es.eigenvalues(j), 1e-8));
    const int nv = d * rank;
    const auto unpack = [d, rank, nv](const RVector& x) {
        CMatrix v(d, rank);
        for (int i = 0; i < nv; ++i) v.data()[i] = complex(x(i), x(nv + i));
        return v;
    };
    const auto pull_back = [nv](const CMatrix& g, const CMatrix& rho, const CMatrix& v, real t) {
        const CMatrix z = 2.0 * (g - (g * rho).trace().real() * CMatrix::Identity(g.rows(), g.cols())) * v / t;
        RVector out(2 * nv);
        for (int i = 0; i < nv; ++i) out(i) = z.data()[i].real(), out(nv + i) = z.data()[i].imag();
        return out;
    };
    const auto state = [&](const RVector& x, CMatrix& v, real& t) {
        v = unpack(x);
        t = v.squaredNorm();
        return CMatrix(v * v.adjoint() / t);
    };

    solve::ConstrainedProblem prob;
    prob.smooth = true;
    prob.objective = [&](const RVector& x, RVector* grad) -> real {
        CMatrix v;
        real t;
        const CMatrix rho = state(x, v, t);
        if (grad) *grad = pull_back(gradient(rho), rho, v, t);
        return value(rho);
    };
    prob.equalities = [&](const RVector& x, RMatrix* jac) -> RVector {
        CMatrix v;
        real t;
        const CMatrix rho = state(x, v, t);
        RVector c(depth - 1);
        if (jac) jac->resize(depth - 1, 2 * nv);
        for (int n = 2; n <= depth; ++n) {
            c(n - 2) = moment_flux(spec, rho, n) / scale;
            if (jac) jac->row(n - 2) = pull_back(moment_flux_gradient(spec, rho, n), rho, v, t).transpose() / scale;
        }
        return c;
    };
    RVector x0(2 * nv);
    for (int i = 0; i < nv; ++i) x0(i) = v0.data()[i].real(), x0(nv + i) = v0.data()[i].imag();
    const solve::ConstrainedResult r = solve::augmented_lagrangian(prob, x0, engine);
    if (!r.x.allFinite()) return std::nullopt;
    CMatrix v;
    real t;
    const RVector bloch = bloch_encode(state(r.x, v, t), basis).coords;
    const FluxConstraints constraints(spec, basis, depth);
    const RestoredPoint p = restore_feasibility(constraints, basis, bloch, scale);
    if (!p.ok) return std::nullopt;
    return p.x;
}

/// Number of eigenvalues above `threshold` times the largest.
inline int numerical_rank(const CMatrix& rho, real threshold)
{
    const RVector ev = eigenvalues_of(rho);
    return static_cast<int>((ev.array() > threshold * ev(0)).count());
}

/// Wraps an ρ-space objective and its gradient as a Bloch-space function.
template <typename Value, typename Gradient>
solve::SmoothFunction bloch_function(const OperatorBasis& basis, Value value, Gradient gradient)
{
    return [&basis, value, gradient](const RVector& x, RVector* grad) -> real {
        const CMatrix rho = bloch_decode_matrix(x, basis);
        if (grad) {
            const CMatrix g = gradient(rho);
            grad->resize(basis.size());
            for (int i = 0; i < basis.size(); ++i) (*grad)(i) = (g * basis[i]).trace().real() / basis.kappa();
        }
        return value(rho);
    };
}

}  // namespace dco
