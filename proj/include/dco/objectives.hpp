#pragma once

#include <limits>
#include <string>
#include <string_view>

#include "dco/dynamics.hpp"

namespace dco {

enum class ObjectiveKind { coherence, bell_fidelity, concurrence, linear, purity };

inline std::string_view to_string(ObjectiveKind k)
{
    switch (k) {
    case ObjectiveKind::coherence: return "coherence";
    case ObjectiveKind::bell_fidelity: return "bell-fidelity";
    case ObjectiveKind::concurrence: return "concurrence";
    case ObjectiveKind::linear: return "linear";
    case ObjectiveKind::purity: return "purity";
    }
    return "?";
}

inline ObjectiveKind objective_kind_from_string(std::string_view s)
{
    if (s == "coherence") return ObjectiveKind::coherence;
    if (s == "bell-fidelity") return ObjectiveKind::bell_fidelity;
    if (s == "concurrence") return ObjectiveKind::concurrence;
    if (s == "linear") return ObjectiveKind::linear;
    if (s == "purity") return ObjectiveKind::purity;
    throw ValidationError("unknown objective kind '" + std::string(s) + "'");
}

namespace bell {
/// |Ψ±⟩ = (|01⟩ ± |10⟩)/√2, qubit 0 the left tensor factor.
inline CVector psi(int sign = +1)
{
    CVector v = CVector::Zero(4);
    v(1) = 1.0 / std::sqrt(2.0);
    v(2) = sign / std::sqrt(2.0);
    return v;
}
inline CVector psi_plus() { return psi(+1); }
inline CVector psi_minus() { return psi(-1); }

/// ½|00⟩⟨00| + ½|Ψ⟩⟨Ψ|, the optimal two-qubit state under local decay.
inline CMatrix optimal_state(int sign = +1)
{
    const CVector p = psi(sign);
    CMatrix rho = 0.5 * p * p.adjoint();
    rho(0, 0) += 0.5;
    return rho;
}
}  // namespace bell

// ---------------------------------------------------------------------------
// Named objectives (free functions)

/// 2|⟨0|ρ|1⟩|, equal to the distance of the Bloch vector from the z-axis.
inline real coherence(const CMatrix& rho)
{
    if (rho.rows() != 2) throw ValidationError("coherence: requires a qubit state");
    return 2.0 * std::abs(rho(0, 1));
}

inline real fidelity(const CMatrix& rho, const CVector& target)
{
    if (rho.rows() != target.size()) throw ValidationError("fidelity: dimension mismatch");
    return (target.adjoint() * rho * target)(0, 0).real();
}

inline real bell_fidelity(const CMatrix& rho)
{
    if (rho.rows() != 4) throw ValidationError("bell_fidelity: requires a two-qubit state");
    return fidelity(rho, bell::psi_plus());
}

/// Wootters concurrence max(0, μ₁−μ₂−μ₃−μ₄), where μ_i are the eigenvalues
/// of the Hermitian matrix √(√ρ ρ̃ √ρ), ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y).
inline real concurrence(const CMatrix& rho)
{
    if (rho.rows() != 4) throw ValidationError("concurrence: requires a two-qubit state");
    const CMatrix yy = ops::kron(ops::sigma_y(), ops::sigma_y());
    const CMatrix flipped = yy * rho.conjugate() * yy;
    const CMatrix root = hermitian_function(rho, [](real v) { return std::sqrt(std::max(v, 0.0)); });
    RVector nu = eigenvalues_of(root * flipped * root);  // descending
    // eigenvalues at round-off level are zero; their square roots would not be
    const real floor = 16.0 * std::numeric_limits<real>::epsilon() * std::max<real>(nu.cwiseAbs().maxCoeff(), 1e-300);
    for (Eigen::Index i = 0; i < nu.size(); ++i) nu(i) = nu(i) > floor ? std::sqrt(nu(i)) : 0.0;
    return std::max(0.0, nu(0) - nu(1) - nu(2) - nu(3));
}

/// Objective functional O(ρ) with an optional analytic gradient G such that
/// δO = Tr[G δρ] (smooth kinds only).
class Objective {
public:
    static Objective coherence() { return Objective(ObjectiveKind::coherence, 2); }
    static Objective bell_fidelity(const CVector& target = bell::psi_plus())
    {
        Objective o(ObjectiveKind::bell_fidelity, 4);
        o.observable_ = target.normalized() * target.normalized().adjoint();
        return o;
    }
    static Objective concurrence() { return Objective(ObjectiveKind::concurrence, 4); }
    static Objective purity(int dim) { return Objective(ObjectiveKind::purity, dim); }
    static Objective linear(const CMatrix& observable)
    {
        Objective o(ObjectiveKind::linear, static_cast<int>(observable.rows()));
        o.observable_ = HermitianMatrix(observable, 1e-10).matrix();
        return o;
    }

    ObjectiveKind kind() const { return kind_; }
    int dim() const { return dim_; }
    bool smooth() const { return kind_ != ObjectiveKind::concurrence; }
    bool is_linear() const { return kind_ == ObjectiveKind::bell_fidelity || kind_ == ObjectiveKind::linear; }
    /// Observable for the linear kinds (projector onto the target for fidelity).
    const CMatrix& observable() const { return observable_; }

    real operator()(const CMatrix& rho) const
    {
        if (rho.rows() != dim_) throw ValidationError("objective: dimension mismatch");
        switch (kind_) {
        case ObjectiveKind::coherence: return dco::coherence(rho);
        case ObjectiveKind::concurrence: return dco::concurrence(rho);
        case ObjectiveKind::purity: return dco::purity(rho);
        case ObjectiveKind::bell_fidelity:
        case ObjectiveKind::linear: return (observable_ * rho).trace().real();
        }
        return 0.0;
    }
    real operator()(const DensityMatrix& rho) const { return (*this)(rho.matrix()); }

    CMatrix gradient(const CMatrix& rho) const
    {
        switch (kind_) {
        case ObjectiveKind::coherence: {
            const complex z = rho(0, 1);
            CMatrix g = CMatrix::Zero(2, 2);
            const real a = std::abs(z);
            if (a == 0.0) return g;
            // δ(2|z|) = Tr[G δρ] with G = (z̄|1⟩⟨0| + z|0⟩⟨1|)/|z|
            g(1, 0) = std::conj(z) / a;
            g(0, 1) = z / a;
            return g;
        }
        case ObjectiveKind::purity: return 2.0 * rho;
        case ObjectiveKind::bell_fidelity:
        case ObjectiveKind::linear: return observable_;
        case ObjectiveKind::concurrence: break;
        }
        throw ValidationError("objective: concurrence has no analytic gradient");
    }

    /// True when O commutes with rotations about the z-axis of a qubit.
    bool z_symmetric() const
    {
        if (dim_ != 2) return false;
        switch (kind_) {
        case ObjectiveKind::coherence:
        case ObjectiveKind::purity: return true;
        case ObjectiveKind::linear:
            return std::abs(observable_(0, 1)) < 1e-14;
        default: return false;
        }
    }

private:
    Objective(ObjectiveKind k, int dim) : kind_(k), dim_(dim) {}

    ObjectiveKind kind_;
    int dim_;
    CMatrix observable_;
};

// ---------------------------------------------------------------------------
// Time averages

/// Flux-weighted value (O⁺|f⁻| + O⁻|f⁺|)/(|f⁺| + |f⁻|) of a two-point cycle.
/// With both fluxes zero the cycle is a single static point and the value the
/// mean of the two (equal) objective values.
inline real two_point_average(real value_plus, real value_minus, real flux_plus, real flux_minus)
{
    const real wp = std::abs(flux_minus), wm = std::abs(flux_plus);
    if (wp + wm == 0.0) return 0.5 * (value_plus + value_minus);
    return (value_plus * wp + value_minus * wm) / (wp + wm);
}

/// Trapezoidal time average over one period of a sampled cycle.
inline real time_average(const Objective& obj, const CycleTrajectory& cycle)
{
    if (cycle.samples.empty()) throw ValidationError("time_average: empty cycle");
    if (cycle.samples.size() == 1) return obj(cycle.samples.front().state);
    real integral = 0.0;
    real prev_t = cycle.samples.front().t;
    real prev_v = obj(cycle.samples.front().state);
    for (std::size_t i = 1; i < cycle.samples.size(); ++i) {
        const real v = obj(cycle.samples[i].state);
        integral += 0.5 * (v + prev_v) * (cycle.samples[i].t - prev_t);
        prev_t = cycle.samples[i].t;
        prev_v = v;
    }
    const real span = prev_t - cycle.samples.front().t;
    return span > 0.0 ? integral / span : prev_v;
}

}  // namespace dco
