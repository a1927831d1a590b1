#pragma once

#include <array>
#include <string>
#include <vector>

#include "dco/objectives.hpp"
#include "dco/state_search.hpp"

namespace dco {

enum class Verdict { stabilizable, boundary, not_stabilizable };

inline std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::stabilizable: return "stabilizable";
    case Verdict::boundary: return "boundary";
    case Verdict::not_stabilizable: return "not_stabilizable";
    }
    return "?";
}

struct ConstraintReport {
    std::vector<real> values;  // Tr[ρⁿ⁻¹D(ρ)] for n = 2..d
    real max_abs = 0.0;
    bool nondegenerate = false;
    RVector eigenvalues;
    Verdict verdict = Verdict::not_stabilizable;
};

struct CheckOptions {
    real tolerance = 1e-9;
    real degeneracy = tol::degeneracy;
};

/// Hamiltonian-free membership test.  All fluxes vanishing with a
/// nondegenerate spectrum is sufficient for stabilizability; with a
/// degenerate spectrum the state is reported as boundary (closure of the
/// stabilizable set), never silently accepted.
inline ConstraintReport constraint_values(const DissipatorSpec& spec, const CMatrix& rho, const CheckOptions& opt = {})
{
    check_dim(spec, rho, "constraint_values");
    ConstraintReport rep;
    for (int n = 2; n <= spec.dim(); ++n) {
        rep.values.push_back(moment_flux(spec, rho, n));
        rep.max_abs = std::max(rep.max_abs, std::abs(rep.values.back()));
    }
    const EigenSystem es = spectral_decompose(rho);
    rep.eigenvalues = es.eigenvalues;
    rep.nondegenerate = es.nondegenerate(opt.degeneracy);
    if (rep.max_abs > opt.tolerance) rep.verdict = Verdict::not_stabilizable;
    else rep.verdict = rep.nondegenerate ? Verdict::stabilizable : Verdict::boundary;
    return rep;
}
inline ConstraintReport constraint_values(const DissipatorSpec& spec, const DensityMatrix& rho,
                                          const CheckOptions& opt = {})
{
    return constraint_values(spec, rho.matrix(), opt);
}

inline bool is_stabilizable(const DissipatorSpec& spec, const DensityMatrix& rho, const CheckOptions& opt = {})
{
    return constraint_values(spec, rho, opt).verdict == Verdict::stabilizable;
}

/// Raised when D(ρ) has matrix elements inside a degenerate eigenspace block
/// that no Hamiltonian can compensate.
class ReconstructionError : public NumericalError {
public:
    ReconstructionError(const std::string& what, int alpha, int beta, real magnitude)
        : NumericalError(what), alpha(alpha), beta(beta), magnitude(magnitude)
    {}
    int alpha, beta;
    real magnitude;
};

struct Reconstruction {
    HermitianMatrix hamiltonian;
    real residual = 0.0;  // ‖i[ρ,H] + D(ρ)‖_F
    EigenSystem eigensystem;
};

struct ReconstructOptions {
    real degeneracy = tol::degeneracy;
    /// Largest |⟨α|D(ρ)|β⟩| tolerated inside a degenerate block.
    real block_tolerance = 1e-9;
    real residual_tolerance = 1e-9;
};

/// H = Σ_{λα≠λβ} i⟨α|D(ρ)|β⟩/(λα − λβ) |α⟩⟨β|, which has vanishing diagonal
/// in the eigenbasis of ρ.  Adding any operator diagonal in that basis gives
/// another stabilizing Hamiltonian.
inline Reconstruction reconstruct_hamiltonian(const DissipatorSpec& spec, const CMatrix& rho,
                                              const ReconstructOptions& opt = {})
{
    check_dim(spec, rho, "reconstruct_hamiltonian");
    const int d = spec.dim();
    Reconstruction out;
    out.eigensystem = spectral_decompose(rho);
    const EigenSystem& es = out.eigensystem;
    const CMatrix& v = es.eigenvectors;
    const CMatrix dmat = v.adjoint() * apply_dissipator(spec, rho) * v;
    const real scale = rate_scale(spec);

    CMatrix h_eig = CMatrix::Zero(d, d);
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            if (a != b && es.distinct(a, b, opt.degeneracy)) {
                h_eig(a, b) = I_unit * dmat(a, b) / (es.eigenvalues(a) - es.eigenvalues(b));
            } else if (std::abs(dmat(a, b)) > opt.block_tolerance * scale) {
                throw ReconstructionError(
                    "reconstruct_hamiltonian: dissipator element <" + std::to_string(a) + "|D|" + std::to_string(b) +
                        "> = " + std::to_string(std::abs(dmat(a, b))) + " inside a degenerate block",
                    a, b, std::abs(dmat(a, b)));
            }
        }
    }
    const CMatrix h = v * h_eig * v.adjoint();
    out.hamiltonian = HermitianMatrix(CMatrix(0.5 * (h + h.adjoint())));
    out.residual = stationarity_residual(out.hamiltonian.matrix(), spec, rho);
    if (out.residual > opt.residual_tolerance * std::max<real>(1.0, scale))
        throw ReconstructionError("reconstruct_hamiltonian: stationarity residual " + std::to_string(out.residual) +
                                      " exceeds tolerance",
                                  -1, -1, out.residual);
    return out;
}
inline Reconstruction reconstruct_hamiltonian(const DissipatorSpec& spec, const DensityMatrix& rho,
                                              const ReconstructOptions& opt = {})
{
    return reconstruct_hamiltonian(spec, rho.matrix(), opt);
}

// ---------------------------------------------------------------------------
// Single-qubit quadric

enum class QuadricClass { sphere, spheroid, ellipsoid, degenerate };

inline std::string_view to_string(QuadricClass c)
{
    switch (c) {
    case QuadricClass::sphere: return "sphere";
    case QuadricClass::spheroid: return "spheroid";
    case QuadricClass::ellipsoid: return "ellipsoid";
    case QuadricClass::degenerate: return "degenerate";
    }
    return "?";
}

/// r·(D r + d) = 0 written as (r − c)ᵀ S (r − c) = k with S the symmetric
/// part of D.  `semi_axes[i]` belongs to the principal axis closest to the
/// coordinate axis i (x, y, z); `axes` holds the principal directions as
/// columns in the same order.
struct QuadricForm {
    BlochGenerator generator;
    RVector center = RVector::Zero(3);
    RVector semi_axes = RVector::Zero(3);
    RMatrix axes = RMatrix::Identity(3, 3);
    QuadricClass classification = QuadricClass::degenerate;

    real residual(const RVector& r) const { return r.dot(generator.D * r + generator.d); }
};

inline QuadricForm quadric(const DissipatorSpec& spec)
{
    if (spec.dim() != 2) throw ValidationError("quadric: only defined for a single qubit");
    QuadricForm q;
    q.generator = bloch_generator(spec, OperatorBasis(2));
    const RMatrix s = 0.5 * (q.generator.D + q.generator.D.transpose());
    const real scale = std::max(s.cwiseAbs().maxCoeff(), q.generator.d.cwiseAbs().maxCoeff());
    if (scale == 0.0) return q;

    Eigen::SelfAdjointEigenSolver<RMatrix> es(s);
    const RVector ev = es.eigenvalues();
    if (ev.cwiseAbs().minCoeff() <= 1e-12 * scale) return q;
    q.center = -0.5 * s.ldlt().solve(q.generator.d);
    const real k = q.center.dot(s * q.center);
    // (r−c)ᵀS(r−c) = k; an ellipsoid needs k/s_i > 0 for every axis.
    for (int i = 0; i < 3; ++i)
        if (!(k / ev(i) > 0.0)) return q;

    std::array<int, 3> assigned{-1, -1, -1};
    std::array<bool, 3> used{false, false, false};
    for (int axis = 2; axis >= 0; --axis) {
        int best = -1;
        for (int j = 0; j < 3; ++j)
            if (!used[j] && (best < 0 || std::abs(es.eigenvectors()(axis, j)) > std::abs(es.eigenvectors()(axis, best))))
                best = j;
        used[best] = true;
        assigned[axis] = best;
    }
    for (int axis = 0; axis < 3; ++axis) {
        const int j = assigned[axis];
        RVector dir = es.eigenvectors().col(j);
        if (dir(axis) < 0) dir = -dir;
        q.axes.col(axis) = dir;
        q.semi_axes(axis) = std::sqrt(k / ev(j));
    }
    const real a = q.semi_axes(0), b = q.semi_axes(1), c = q.semi_axes(2);
    const auto eq = [](real x, real y) { return std::abs(x - y) <= 1e-10 * std::max(x, y); };
    if (eq(a, b) && eq(b, c)) q.classification = QuadricClass::sphere;
    else if (eq(a, b) || eq(b, c) || eq(a, c)) q.classification = QuadricClass::spheroid;
    else q.classification = QuadricClass::ellipsoid;
    return q;
}

/// N×N parametric mesh (θ_j = πj/N, φ_k = 2πk/N) of the quadric, clipped to
/// the Bloch ball.  Row order is j-major; θ = 0 is the pole along +axes(:,2).
/// Empty for degenerate forms.
inline std::vector<RVector> surface_mesh(const QuadricForm& q, int resolution)
{
    if (resolution < 8) throw ValidationError("surface_mesh: resolution must be >= 8");
    std::vector<RVector> pts;
    if (q.classification == QuadricClass::degenerate) return pts;
    const real pi = std::acos(-1.0);
    pts.reserve(static_cast<std::size_t>(resolution) * resolution);
    for (int j = 0; j < resolution; ++j) {
        const real theta = pi * j / resolution;
        for (int k = 0; k < resolution; ++k) {
            const real phi = 2.0 * pi * k / resolution;
            const RVector local = (RVector(3) << q.semi_axes(0) * std::sin(theta) * std::cos(phi),
                                   q.semi_axes(1) * std::sin(theta) * std::sin(phi),
                                   q.semi_axes(2) * std::cos(theta))
                                      .finished();
            RVector r = q.center + q.axes * local;
            if (r.norm() > 1.0 + 1e-12) continue;
            pts.push_back(std::move(r));
        }
    }
    return pts;
}
inline std::vector<RVector> surface_mesh(const DissipatorSpec& spec, int resolution)
{
    return surface_mesh(quadric(spec), resolution);
}

// ---------------------------------------------------------------------------
// Constraint intersection and the purity ceiling

struct ProjectionResult {
    DensityMatrix state;
    int attempts = 0;
    real constraint_residual = 0.0;
};

/// Random nondegenerate state on ⋂ₙ Sₙ: Newton root-finding on all d−1
/// flux constraints along the span of their gradients from random mixed
/// starts.  Results that leave the state set or whose smallest relative
/// eigenvalue gap falls below `min_gap` are discarded and resampled.
inline ProjectionResult project_onto_constraints(const DissipatorSpec& spec, std::mt19937_64& rng,
                                                 real min_gap = 1e-3, int max_attempts = 200)
{
    const OperatorBasis basis(spec.dim());
    const FluxConstraints constraints(spec, basis, spec.dim());
    const real scale = rate_scale(spec);
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        RVector x = bloch_encode(random_state(spec.dim(), rng), basis).coords;
        real residual = 0.0;
        for (int it = 0; it < 100; ++it) {
            RMatrix jac;
            const RVector c = constraints(x, &jac);
            residual = c.lpNorm<Eigen::Infinity>();
            if (residual <= 1e-15 * scale || !x.allFinite()) break;
            Eigen::JacobiSVD<RMatrix> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
            svd.setThreshold(1e-12);
            x -= svd.solve(c);
        }
        if (!x.allFinite() || residual > 1e-13 * scale) continue;
        const CMatrix rho = bloch_decode_matrix(x, basis);
        const RVector ev = eigenvalues_of(rho);
        if (ev.minCoeff() < 1e-6) continue;
        bool gapped = true;
        for (Eigen::Index i = 0; i + 1 < ev.size(); ++i)
            if (ev(i) - ev(i + 1) < min_gap) gapped = false;
        if (!gapped) continue;
        return {DensityMatrix(rho), attempt, residual};
    }
    throw NumericalError("project_onto_constraints: no admissible state after " + std::to_string(max_attempts) +
                         " attempts");
}

struct PurityCeiling {
    real value = 1.0;  // p₁
    DensityMatrix witness;
};

/// p₁ = max Tr[ρ²] over states with vanishing purity flux.
inline PurityCeiling max_purity_on_s2(const DissipatorSpec& spec, SearchOptions opt = {})
{
    const int d = spec.dim();
    if (spec.is_zero()) return {1.0, DensityMatrix::basis_state(d, 0)};
    const OperatorBasis basis(d);
    opt.constraint_depth = 2;
    const auto f = [&basis](const RVector& x, RVector* grad) -> real {
        if (grad) *grad = 2.0 * x / basis.kappa();
        return purity_from_norm2(x.squaredNorm(), basis.dim());
    };
    opt.refine = [&](const RVector& x) -> std::optional<RVector> {
        const CMatrix rho = bloch_decode_matrix(x, basis);
        const int rank = numerical_rank(rho, 1e-3);
        if (rank >= d) return std::nullopt;
        return low_rank_polish(
            spec, basis, 2, [](const CMatrix& r) { return purity(r); },
            [](const CMatrix& r) { return CMatrix(2.0 * r); }, rho, rank);
    };
    const SearchOutcome res = maximize_over_flux_constraints(spec, f, true, opt);
    if (!res.found) throw NumericalError("max_purity_on_s2: every restart was infeasible");
    const RVector& x = res.x;
    CMatrix rho = bloch_decode_matrix(x, basis);
    if (eigenvalues_of(rho).minCoeff() < 0.0) rho = project_to_states(rho);
    return {std::min(1.0, f(x, nullptr)), DensityMatrix(rho)};
}

}  // namespace dco
