#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dco/core.hpp"

namespace dco {

struct Channel {
    CMatrix op;       // Lindblad operator L_k (not necessarily Hermitian)
    real rate = 0.0;  // γ_k ≥ 0
    std::string label;
};

/// D(ρ) = Σ_k γ_k (L ρ L† − ½{L†L, ρ}).
///
/// Named shorthands: decay L = σ₋, absorption L = σ₊, dephasing
/// L = σ_z/√2 (so that transverse coherence decays at rate γ_d), each
/// embedded on one qubit of a register.
class DissipatorSpec {
public:
    explicit DissipatorSpec(int dim) : dim_(dim)
    {
        if (dim < 2) throw ValidationError("DissipatorSpec: dimension must be >= 2");
    }

    DissipatorSpec& add(CMatrix op, real rate, std::string label = "custom")
    {
        if (op.rows() != dim_ || op.cols() != dim_)
            throw ValidationError("DissipatorSpec: operator dimension mismatch");
        if (!(rate >= 0.0)) throw ValidationError("DissipatorSpec: rates must be non-negative");
        channels_.push_back({std::move(op), rate, std::move(label)});
        return *this;
    }

    DissipatorSpec& add_decay(real rate, int qubit = 0) { return add_local(ops::sigma_minus(), rate, qubit, "decay"); }
    DissipatorSpec& add_absorption(real rate, int qubit = 0) { return add_local(ops::sigma_plus(), rate, qubit, "absorption"); }
    DissipatorSpec& add_dephasing(real rate, int qubit = 0)
    {
        return add_local(CMatrix(ops::sigma_z() / std::sqrt(2.0)), rate, qubit, "dephasing");
    }

    /// Single qubit with decay γ₋, absorption γ₊ and dephasing γ_d.
    static DissipatorSpec qubit(real gamma_minus, real gamma_plus = 0.0, real gamma_dephasing = 0.0)
    {
        DissipatorSpec s(2);
        s.add_decay(gamma_minus).add_absorption(gamma_plus).add_dephasing(gamma_dephasing);
        return s;
    }

    /// Every qubit of an n-qubit register decays independently at rate γ.
    static DissipatorSpec local_decay(int num_qubits, real gamma)
    {
        DissipatorSpec s(1 << num_qubits);
        for (int q = 0; q < num_qubits; ++q) s.add_decay(gamma, q);
        return s;
    }

    int dim() const { return dim_; }
    const std::vector<Channel>& channels() const { return channels_; }

    real max_rate() const
    {
        real m = 0.0;
        for (const auto& c : channels_) m = std::max(m, c.rate);
        return m;
    }
    bool is_zero() const
    {
        for (const auto& c : channels_)
            if (c.rate > 0.0 && c.op.cwiseAbs().maxCoeff() > 0.0) return false;
        return true;
    }
    DissipatorSpec scaled(real factor) const
    {
        DissipatorSpec s = *this;
        for (auto& c : s.channels_) c.rate *= factor;
        return s;
    }

private:
    DissipatorSpec& add_local(const CMatrix& op, real rate, int qubit, const char* kind)
    {
        const int n = qubit_count(dim_);
        if (n < 1 || qubit < 0 || qubit >= n)
            throw ValidationError(std::string("DissipatorSpec: ") + kind + " channel needs a valid qubit index");
        return add(ops::embed(op, qubit, n), rate, std::string(kind) + "[" + std::to_string(qubit) + "]");
    }

    int dim_;
    std::vector<Channel> channels_;
};

inline void check_dim(const DissipatorSpec& spec, const CMatrix& m, const char* where)
{
    if (m.rows() != spec.dim() || m.cols() != spec.dim())
        throw ValidationError(std::string(where) + ": dimension mismatch");
}

/// D(ρ); traceless, Hermiticity preserving.
inline CMatrix apply_dissipator(const DissipatorSpec& spec, const CMatrix& rho)
{
    check_dim(spec, rho, "apply_dissipator");
    CMatrix out = CMatrix::Zero(spec.dim(), spec.dim());
    for (const auto& c : spec.channels()) {
        if (c.rate == 0.0) continue;
        const CMatrix ldl = c.op.adjoint() * c.op;
        out += c.rate * (c.op * rho * c.op.adjoint() - 0.5 * (ldl * rho + rho * ldl));
    }
    return out;
}

/// Heisenberg-picture adjoint D†(X) = Σ γ (L† X L − ½{L†L, X}).
inline CMatrix apply_adjoint(const DissipatorSpec& spec, const CMatrix& x)
{
    check_dim(spec, x, "apply_adjoint");
    CMatrix out = CMatrix::Zero(spec.dim(), spec.dim());
    for (const auto& c : spec.channels()) {
        if (c.rate == 0.0) continue;
        const CMatrix ldl = c.op.adjoint() * c.op;
        out += c.rate * (c.op.adjoint() * x * c.op - 0.5 * (ldl * x + x * ldl));
    }
    return out;
}

/// Full generator i[ρ,H] + D(ρ).
inline CMatrix lindblad_rhs(const CMatrix& h, const DissipatorSpec& spec, const CMatrix& rho)
{
    return I_unit * ops::commutator(rho, h) + apply_dissipator(spec, rho);
}

/// Tr[ρⁿ⁻¹ D(ρ)], the dissipative rate of change of Tr[ρⁿ] divided by n.
/// n = 1 is accepted only with `allow_diagnostic` (it is identically zero).
inline real moment_flux(const DissipatorSpec& spec, const CMatrix& rho, int n, bool allow_diagnostic = false)
{
    check_dim(spec, rho, "moment_flux");
    if (n > spec.dim() || n < (allow_diagnostic ? 1 : 2))
        throw ValidationError("moment_flux: order n must satisfy 2 <= n <= d");
    CMatrix power = CMatrix::Identity(spec.dim(), spec.dim());
    for (int k = 1; k < n; ++k) power = power * rho;
    return (power * apply_dissipator(spec, rho)).trace().real();
}
inline real moment_flux(const DissipatorSpec& spec, const DensityMatrix& rho, int n, bool allow_diagnostic = false)
{
    return moment_flux(spec, rho.matrix(), n, allow_diagnostic);
}

/// Purity flux f(ρ) = Tr[ρ D(ρ)].
inline real purity_flux(const DissipatorSpec& spec, const CMatrix& rho) { return moment_flux(spec, rho, 2); }

/// Gradient of Tr[ρⁿ⁻¹ D(ρ)] with respect to ρ, as the Hermitian G with
/// δ(flux) = Tr[G δρ].
inline CMatrix moment_flux_gradient(const DissipatorSpec& spec, const CMatrix& rho, int n)
{
    const int d = spec.dim();
    std::vector<CMatrix> powers{CMatrix::Identity(d, d)};
    for (int k = 1; k < n; ++k) powers.push_back(powers.back() * rho);
    const CMatrix drho = apply_dissipator(spec, rho);
    // ∂ Tr[ρ^{n-1} D(ρ)] = Σ_k Tr[ρ^k δρ ρ^{n-2-k} D(ρ)] + Tr[ρ^{n-1} D(δρ)]
    CMatrix g = apply_adjoint(spec, powers[n - 1]);
    for (int k = 0; k <= n - 2; ++k) g += powers[n - 2 - k] * drho * powers[k];
    return 0.5 * (g + g.adjoint());
}

// ---------------------------------------------------------------------------
// Bloch-space forms

/// D_ij = Tr[B_i D(B_j)], d_i = Tr[B_i D(𝟙)].  With the basis normalization
/// Tr[B_i B_j] = d δ_ij the purity flux is f = r·(D r + d)/d².
struct BlochGenerator {
    RMatrix D;
    RVector d;
    int dim = 0;

    real flux_constant() const { return 1.0 / (real(dim) * dim); }
    real flux(const RVector& r) const { return flux_constant() * r.dot(D * r + d); }
    RVector flux_gradient(const RVector& r) const { return flux_constant() * ((D + D.transpose()) * r + d); }
};

inline BlochGenerator bloch_generator(const DissipatorSpec& spec, const OperatorBasis& basis)
{
    if (basis.dim() != spec.dim()) throw ValidationError("bloch_generator: basis dimension mismatch");
    const int n = basis.size();
    BlochGenerator g{RMatrix(n, n), RVector(n), spec.dim()};
    std::vector<CMatrix> images;
    images.reserve(n);
    for (int j = 0; j < n; ++j) images.push_back(apply_dissipator(spec, basis[j]));
    const CMatrix di = apply_dissipator(spec, CMatrix::Identity(spec.dim(), spec.dim()));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) g.D(i, j) = (basis[i] * images[j]).trace().real();
        g.d(i) = (basis[i] * di).trace().real();
    }
    return g;
}

/// ṙ = A r + b, the Bloch-coordinate form of the Lindblad equation.
struct BlochAffine {
    RMatrix A;
    RVector b;

    RVector rate(const RVector& r) const { return A * r + b; }

    /// (n+1)×(n+1) homogeneous form acting on (r, 1).
    RMatrix augmented() const
    {
        const auto n = A.rows();
        RMatrix m = RMatrix::Zero(n + 1, n + 1);
        m.topLeftCorner(n, n) = A;
        m.topRightCorner(n, 1) = b;
        return m;
    }
};

/// Bloch-coordinate generator of the Hamiltonian part alone: ṙ = A_H r.
inline RMatrix hamiltonian_generator(const CMatrix& h, const OperatorBasis& basis)
{
    const int n = basis.size();
    RMatrix a(n, n);
    for (int j = 0; j < n; ++j) {
        const CMatrix image = I_unit * ops::commutator(basis[j], h);
        for (int i = 0; i < n; ++i) a(i, j) = (basis[i] * image).trace().real() / basis.kappa();
    }
    return a;
}

inline BlochAffine liouvillian_matrix(const CMatrix& h, const DissipatorSpec& spec, const OperatorBasis& basis)
{
    check_dim(spec, h, "liouvillian_matrix");
    const BlochGenerator gen = bloch_generator(spec, basis);
    const real d = spec.dim();
    return {hamiltonian_generator(h, basis) + gen.D / basis.kappa(), gen.d / d};
}
inline BlochAffine liouvillian_matrix(const HermitianMatrix& h, const DissipatorSpec& spec, const OperatorBasis& basis)
{
    return liouvillian_matrix(h.matrix(), spec, basis);
}

/// Rotation matrix R_ij = Tr[B_i U B_j U†]/κ, the Bloch image of ρ ↦ UρU†.
inline RMatrix unitary_action(const CMatrix& u, const OperatorBasis& basis)
{
    const int n = basis.size();
    RMatrix r(n, n);
    for (int j = 0; j < n; ++j) {
        const CMatrix image = u * basis[j] * u.adjoint();
        for (int i = 0; i < n; ++i) r(i, j) = (basis[i] * image).trace().real() / basis.kappa();
    }
    return r;
}

// ---------------------------------------------------------------------------
// Steady state

struct StationaryResult {
    DensityMatrix state;
    bool unique = true;
    real residual = 0.0;  // ‖i[ρ,H] + D(ρ)‖_F
    int nullity = 0;
};

inline real stationarity_residual(const CMatrix& h, const DissipatorSpec& spec, const CMatrix& rho)
{
    return lindblad_rhs(h, spec, rho).norm();
}

/// Solves A r = −b.  A rank-deficient A (relative singular-value threshold
/// 1e-9) yields the minimum-norm solution with `unique = false`.
inline StationaryResult stationary_state(const CMatrix& h, const DissipatorSpec& spec, const OperatorBasis& basis)
{
    const BlochAffine aff = liouvillian_matrix(h, spec, basis);
    Eigen::JacobiSVD<RMatrix> svd(aff.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector& sv = svd.singularValues();
    const real smax = sv.size() ? sv(0) : 0.0;
    const real threshold = 1e-9 * std::max<real>(smax, 1e-300);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > threshold) ++rank;
    const int nullity = static_cast<int>(aff.A.cols()) - rank;

    RVector r;
    if (nullity == 0) {
        Eigen::PartialPivLU<RMatrix> lu(aff.A);
        r = lu.solve(-aff.b);
        // one step of iterative refinement
        r += lu.solve(-aff.b - aff.A * r);
    } else {
        svd.setThreshold(1e-9);
        r = svd.solve(-aff.b);
    }

    CMatrix rho = bloch_decode_matrix(r, basis);
    const real floor = eigenvalues_of(rho).minCoeff();
    if (floor < -1e-8)
        throw NumericalError("stationary_state: no positive stationary state (min eigenvalue " +
                             std::to_string(floor) + ")");
    if (floor < 0.0) rho = project_to_states(rho);
    StationaryResult out{DensityMatrix(rho), nullity == 0, 0.0, nullity};
    out.residual = stationarity_residual(h, spec, out.state.matrix());
    return out;
}

inline StationaryResult stationary_state(const HermitianMatrix& h, const DissipatorSpec& spec)
{
    return stationary_state(h.matrix(), spec, OperatorBasis(spec.dim()));
}

}  // namespace dco
