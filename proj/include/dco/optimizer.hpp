#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dco/stabilizable.hpp"

namespace dco {

enum class Certificate { in_S, in_S2_only, boundary };

inline std::string_view to_string(Certificate c)
{
    switch (c) {
    case Certificate::in_S: return "in_S";
    case Certificate::in_S2_only: return "in_S2_only";
    case Certificate::boundary: return "boundary";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Two-qubit Hamiltonian family approaching the optimal Bell-fidelity state

/// H(α,β) = 𝟙⊗(ασ_z + βσ_x) + (ασ_z + βσ_x)⊗𝟙 − 2α(σ₊⊗σ₋ + σ₋⊗σ₊), with
/// σ_z taken in the excitation convention (+1 on |1⟩).  In the ground-at-+z
/// labeling used elsewhere that operator is −ops::sigma_z(); only then is
/// |00⟩ resonant with |Ψ₊⟩ while |11⟩ is detuned by 4α.
inline CMatrix bell_family_hamiltonian(real alpha, real beta)
{
    const CMatrix local = -alpha * ops::sigma_z() + beta * ops::sigma_x();
    const CMatrix id = CMatrix::Identity(2, 2);
    const CMatrix hop = ops::kron(ops::sigma_plus(), ops::sigma_minus()) + ops::kron(ops::sigma_minus(), ops::sigma_plus());
    return ops::kron(id, local) + ops::kron(local, id) - 2.0 * alpha * hop;
}

struct FamilyProbe {
    real distance = 0.0;  // trace distance of the steady state to ρ*
    bool unique = true;
    DensityMatrix state;
};

/// Steady state of H(α,β) under local decay γ₋ on both qubits, compared with
/// ρ* = ½|00⟩⟨00| + ½|Ψ₊⟩⟨Ψ₊|.
inline FamilyProbe bell_family_distance(real alpha, real beta, real gamma_minus)
{
    if (!(alpha >= 0.0 && beta >= 0.0 && gamma_minus > 0.0))
        throw ValidationError("bell_family_distance: requires alpha, beta >= 0 and gamma > 0");
    const DissipatorSpec spec = DissipatorSpec::local_decay(2, gamma_minus);
    const StationaryResult ss = stationary_state(HermitianMatrix(bell_family_hamiltonian(alpha, beta)), spec);
    return {trace_distance(ss.state.matrix(), bell::optimal_state()), ss.unique, ss.state};
}

/// Stabilization only in a limit of a Hamiltonian family, used when the
/// optimum has a degenerate spectrum and no finite Hamiltonian exists.
struct BoundaryLimit {
    std::string family;       // empty when no family is known
    std::string limit;
    real probe_alpha = 0.0, probe_beta = 0.0;
    real probe_distance = 0.0;  // trace distance reached at the probe point
};

using StabilizingControl = std::variant<std::monostate, HermitianMatrix, BoundaryLimit>;

struct StaticOptimum {
    DensityMatrix state;
    real value = 0.0;
    StabilizingControl hamiltonian;
    Certificate certificate = Certificate::in_S2_only;
    int restarts_used = 0;
    int feasible_restarts = 0;
    ConstraintReport constraints;
    real stationarity_residual = 0.0;  // for a finite Hamiltonian
    std::vector<std::string> notes;
};

struct StaticOptions {
    int restarts = 64;
    std::uint64_t seed = 1;
    int constraint_depth = 2;
    /// Flux magnitude (relative to the rate scale) accepted as vanishing when
    /// certifying an optimizer result.
    real certificate_tolerance = 1e-7;
    /// Relative eigenvalue gap below which an optimum counts as degenerate.
    real degeneracy_tolerance = 1e-6;
    /// Eigenvalues below this fraction of the largest are dropped by the
    /// low-rank refinement of smooth optima.
    real polish_rank_threshold = 1e-3;
    /// Largest objective loss accepted from the refinement.
    real polish_slack = 1e-10;
};

// ---------------------------------------------------------------------------
// Single qubit closed form

/// Coherence optimum for decay γ₋, absorption γ₊, dephasing γ_d:
/// value Γ₋/2Ω with Γ± = γ₋ ± γ₊ and Ω = √(Γ₊(Γ₊/2 + γ_d)).
///
/// The returned state sits at azimuth −x, which pairs with H* = −(Ω/2)σ_y;
/// an optimum at azimuth φ pairs with the same generator rotated about z by
/// φ − π.
inline StaticOptimum qubit_analytic(real gamma_minus, real gamma_plus = 0.0, real gamma_dephasing = 0.0)
{
    if (!(gamma_plus >= 0.0 && gamma_dephasing >= 0.0))
        throw ValidationError("qubit_analytic: rates must be non-negative");
    if (!(gamma_minus > gamma_plus))
        throw ValidationError("qubit_analytic: requires net decay (gamma_minus > gamma_plus)");
    const real gm = gamma_minus - gamma_plus, gp = gamma_minus + gamma_plus;
    const real omega = std::sqrt(gp * (gp / 2.0 + gamma_dephasing));
    const real radius = gm / (2.0 * omega);
    const real z = gm / (2.0 * gp);
    const OperatorBasis basis(2);
    StaticOptimum out;
    out.state = DensityMatrix(bloch_decode_matrix((RVector(3) << -radius, 0.0, z).finished(), basis));
    out.value = radius;
    out.hamiltonian = HermitianMatrix(CMatrix(-(omega / 2.0) * ops::sigma_y()));
    out.certificate = Certificate::in_S;
    const DissipatorSpec spec = DissipatorSpec::qubit(gamma_minus, gamma_plus, gamma_dephasing);
    out.constraints = constraint_values(spec, out.state);
    out.stationarity_residual =
        stationarity_residual(std::get<HermitianMatrix>(out.hamiltonian).matrix(), spec, out.state.matrix());
    return out;
}

// ---------------------------------------------------------------------------
// Static optimization

inline solve::SmoothFunction objective_function(const Objective& obj, const OperatorBasis& basis)
{
    if (obj.smooth())
        return bloch_function(basis, [obj](const CMatrix& r) { return obj(r); },
                              [obj](const CMatrix& r) { return obj.gradient(r); });
    return [obj, &basis](const RVector& x, RVector* grad) -> real {
        if (grad) grad->setZero(x.size());
        return obj(bloch_decode_matrix(x, basis));
    };
}

namespace detail {

inline solve::AugmentedLagrangianOptions engine_options(bool smooth)
{
    solve::AugmentedLagrangianOptions e;
    if (!smooth) {
        // Simplex inner solves are expensive; the outer loop warm-starts them.
        e.max_outer = 12;
        e.simplex.max_evaluations = 6000;
        e.simplex.initial_step = 0.05;
        e.simplex.restarts = 1;
        e.feasibility_tolerance = 1e-10;
    }
    return e;
}

/// Rotations about z leave the generator invariant and d ∥ z.
inline bool z_symmetric(const BlochGenerator& g)
{
    const real s = std::max<real>(1e-300, g.D.cwiseAbs().maxCoeff() + g.d.cwiseAbs().maxCoeff());
    const real t = 1e-12 * s;
    return std::abs(g.D(0, 0) - g.D(1, 1)) <= t && std::abs(g.D(0, 1) + g.D(1, 0)) <= t &&
           std::abs(g.D(0, 2)) <= t && std::abs(g.D(1, 2)) <= t && std::abs(g.D(2, 0)) <= t &&
           std::abs(g.D(2, 1)) <= t && std::abs(g.d(0)) <= t && std::abs(g.d(1)) <= t;
}

/// Rotates a qubit Bloch vector about z onto azimuth −x (r_y = 0, r_x ≤ 0).
/// The optimum of a z-symmetric problem is a circle; this picks the
/// representative paired with H* ∝ −σ_y.
inline RVector fix_azimuth(RVector r)
{
    const real rho = std::hypot(r(0), r(1));
    r(0) = -rho;
    r(1) = 0.0;
    return r;
}

inline BoundaryLimit boundary_descriptor(const DissipatorSpec& spec, const CMatrix& rho)
{
    BoundaryLimit b;
    b.limit = "no finite stabilizing Hamiltonian; the state lies in the closure of the stabilizable set";
    if (spec.dim() != 4 || trace_distance(rho, bell::optimal_state()) > 1e-3) return b;
    const real gamma = spec.max_rate();
    if (!(gamma > 0.0)) return b;
    b.probe_alpha = 1e4 * gamma;
    b.probe_beta = 1e2 * gamma;
    const FamilyProbe probe = bell_family_distance(b.probe_alpha, b.probe_beta, gamma);
    // only advertise the family when it demonstrably approaches the state
    DissipatorSpec reference = DissipatorSpec::local_decay(2, gamma);
    const auto same = [&] {
        if (reference.channels().size() != spec.channels().size()) return false;
        for (std::size_t i = 0; i < spec.channels().size(); ++i)
            if ((reference.channels()[i].op - spec.channels()[i].op).norm() > 1e-12 ||
                std::abs(reference.channels()[i].rate - spec.channels()[i].rate) > 1e-12)
                return false;
        return true;
    }();
    if (!same || probe.distance > 0.05) return b;
    b.family = "H(alpha,beta) = 1 x (alpha sz + beta sx) + (alpha sz + beta sx) x 1 - 2 alpha (s+ x s- + s- x s+)";
    b.limit = "beta/gamma -> infinity and alpha/beta -> infinity";
    b.probe_distance = probe.distance;
    return b;
}

}  // namespace detail

/// Classifies a candidate optimum: full stabilizability with a reconstructed
/// Hamiltonian, boundary (degenerate spectrum), or an S₂-only upper bound.
inline StaticOptimum certify(const DissipatorSpec& spec, const Objective& obj, const CMatrix& rho_in,
                             const StaticOptions& opt)
{
    const real scale = rate_scale(spec);
    StaticOptimum out;
    CMatrix rho = rho_in;
    CheckOptions loose{opt.certificate_tolerance * scale, opt.degeneracy_tolerance};
    ConstraintReport rep = constraint_values(spec, rho, loose);

    if (rep.verdict == Verdict::stabilizable) {
        // Polish onto every flux constraint, then rebuild the Hamiltonian.
        const OperatorBasis basis(spec.dim());
        const FluxConstraints all(spec, basis, spec.dim());
        const RestoredPoint p = restore_feasibility(all, basis, bloch_encode(rho, basis).coords, scale);
        if (p.ok) {
            const CMatrix polished = bloch_decode_matrix(p.x, basis);
            try {
                const Reconstruction rec = reconstruct_hamiltonian(spec, polished);
                rho = polished;
                out.hamiltonian = rec.hamiltonian;
                out.stationarity_residual = rec.residual;
                out.certificate = Certificate::in_S;
            } catch (const ReconstructionError& e) {
                out.notes.push_back(e.what());
                rep.verdict = Verdict::not_stabilizable;
            }
        } else {
            rep.verdict = Verdict::not_stabilizable;
        }
    }
    if (out.certificate != Certificate::in_S) {
        if (rep.verdict == Verdict::boundary) {
            out.certificate = Certificate::boundary;
            try {
                ReconstructOptions ro;
                ro.degeneracy = opt.degeneracy_tolerance;
                ro.block_tolerance = opt.certificate_tolerance;
                ro.residual_tolerance = opt.certificate_tolerance;
                const Reconstruction rec = reconstruct_hamiltonian(spec, rho, ro);
                out.hamiltonian = rec.hamiltonian;
                out.stationarity_residual = rec.residual;
                out.notes.push_back("degenerate spectrum, but a finite Hamiltonian compensates the dissipator");
            } catch (const ReconstructionError&) {
                out.hamiltonian = detail::boundary_descriptor(spec, rho);
            }
        } else {
            out.certificate = Certificate::in_S2_only;
            out.notes.push_back("higher-order flux constraints do not vanish; value is an upper bound");
        }
    }
    out.state = DensityMatrix(rho);
    out.value = obj(out.state);
    out.constraints = constraint_values(spec, rho, loose);
    return out;
}

/// Maximizes the objective over the flux-constraint set up to
/// `constraint_depth` (S₂ by default) with multi-start augmented Lagrangian
/// searches, then certifies the result against the full hierarchy.  The
/// concurrence objective is not differentiable at its optima, so its local
/// solves use the simplex method instead of BFGS.
inline StaticOptimum optimize_static(const DissipatorSpec& spec, const Objective& obj, const StaticOptions& opt = {})
{
    if (obj.dim() != spec.dim()) throw ValidationError("optimize_static: objective and dissipator dimensions differ");
    const OperatorBasis basis(spec.dim());
    SearchOptions so;
    so.restarts = opt.restarts;
    so.seed = opt.seed;
    so.constraint_depth = opt.constraint_depth;
    so.engine = detail::engine_options(obj.smooth());
    if (obj.smooth()) {
        so.refine = [&](const RVector& x) -> std::optional<RVector> {
            const CMatrix rho = bloch_decode_matrix(x, basis);
            const int rank = numerical_rank(rho, opt.polish_rank_threshold);
            if (rank >= spec.dim()) return std::nullopt;
            return low_rank_polish(
                spec, basis, opt.constraint_depth, [&](const CMatrix& r) { return obj(r); },
                [&](const CMatrix& r) { return obj.gradient(r); }, rho, rank);
        };
        so.refine_slack = opt.polish_slack;
    }
    const SearchOutcome res = maximize_over_flux_constraints(spec, objective_function(obj, basis), obj.smooth(), so);
    if (!res.found) throw NumericalError("optimize_static: every restart was infeasible");

    RVector x = res.x;
    if (spec.dim() == 2 && obj.z_symmetric() && detail::z_symmetric(bloch_generator(spec, basis)))
        x = detail::fix_azimuth(x);
    CMatrix rho = bloch_decode_matrix(x, basis);
    if (eigenvalues_of(rho).minCoeff() < 0.0) rho = project_to_states(rho);
    StaticOptimum out = certify(spec, obj, rho, opt);
    out.restarts_used = res.restarts_used;
    out.feasible_restarts = res.feasible_restarts;
    if (!obj.smooth()) out.notes.push_back("nonsmooth objective: simplex local search");
    return out;
}

// ---------------------------------------------------------------------------
// Two-point cycles

struct TwoPointCycle {
    RVector r_plus, r_minus;
    real flux_plus = 0.0, flux_minus = 0.0;
    /// δt⁺/δt⁻ = |f⁻|/|f⁺|; 1 for the degenerate (static) cycle.
    real dwell_ratio = 1.0;
    real value = 0.0;
    bool degenerate = false;
};

struct TpcResult {
    TwoPointCycle cycle;
    real static_value = 0.0;
    StaticOptimum static_optimum;
    /// Best cycle with distinct support points found by the search.
    std::optional<TwoPointCycle> best_nondegenerate;
    real purity_ceiling = 1.0;  // p₁
    /// True when the search ran in the purity-only relaxation A₂ (d > 2), so
    /// the value bounds the optimum over genuine cycles from above.
    bool upper_bound = false;
    std::string parametrization;
};

struct TpcOptions {
    StaticOptions static_options{};
    int restarts = 24;
    std::uint64_t seed = 7;
    int simplex_evaluations = 20000;
    int grid_radii = 160;
    int grid_angles = 240;
    /// A nondegenerate cycle must beat the static point by more than this.
    real improvement_tolerance = 1e-9;
    real degenerate_distance = 1e-6;
};

/// Evaluates a candidate pair; nullopt when the pair violates the strict
/// flux signs, state validity or the purity ceiling.
inline std::optional<TwoPointCycle> evaluate_two_point(const DissipatorSpec& spec, const OperatorBasis& basis,
                                                       const Objective& obj, const RVector& r_plus,
                                                       const RVector& r_minus, real purity_ceiling)
{
    const real tol_pur = 1e-12;
    const int d = spec.dim();
    if (purity_from_norm2(r_plus.squaredNorm(), d) > purity_ceiling + tol_pur) return std::nullopt;
    const CMatrix rp = bloch_decode_matrix(r_plus, basis);
    const CMatrix rm = bloch_decode_matrix(r_minus, basis);
    const real fp = purity_flux(spec, rp);
    const real fm = purity_flux(spec, rm);
    if (!(fp > 0.0 && fm < 0.0)) return std::nullopt;
    if (eigenvalues_of(rp).minCoeff() < 0.0 || eigenvalues_of(rm).minCoeff() < 0.0) return std::nullopt;
    TwoPointCycle c;
    c.r_plus = r_plus;
    c.r_minus = r_minus;
    c.flux_plus = fp;
    c.flux_minus = fm;
    c.dwell_ratio = std::abs(fm) / std::abs(fp);
    c.value = two_point_average(obj(rp), obj(rm), fp, fm);
    return c;
}

namespace detail {

inline void keep_best(std::optional<TwoPointCycle>& best, const std::optional<TwoPointCycle>& c)
{
    if (c && (!best || c->value > best->value)) best = c;
}

/// Qubit with z-symmetric dissipator and objective: points (R sinθ, 0, R cosθ)
/// on a common sphere of radius R; the azimuth drops out.
inline std::optional<TwoPointCycle> search_qubit_reduced(const DissipatorSpec& spec, const OperatorBasis& basis,
                                                         const Objective& obj, real ceiling, const TpcOptions& opt)
{
    const real pi = std::acos(-1.0);
    const real r_max = std::sqrt(std::max(0.0, norm2_from_purity(ceiling, 2)));
    const auto point = [](real radius, real theta) {
        return (RVector(3) << radius * std::sin(theta), 0.0, radius * std::cos(theta)).finished();
    };
    const auto evaluate = [&](const RVector& p) {
        return evaluate_two_point(spec, basis, obj, point(p(0), p(1)), point(p(0), p(2)), ceiling);
    };

    struct Seed {
        real value;
        RVector p;
    };
    std::vector<Seed> seeds;
    const int nr = opt.grid_radii, na = opt.grid_angles;
    std::vector<real> fl(na + 1), ov(na + 1);
    for (int i = 1; i <= nr; ++i) {
        const real radius = r_max * i / nr;
        for (int a = 0; a <= na; ++a) {
            const CMatrix rho = bloch_decode_matrix(point(radius, pi * a / na), basis);
            fl[a] = purity_flux(spec, rho);
            ov[a] = obj(rho);
        }
        Seed best{-std::numeric_limits<real>::infinity(), RVector()};
        for (int a = 0; a <= na; ++a) {
            if (!(fl[a] > 0.0)) continue;
            for (int b = 0; b <= na; ++b) {
                if (!(fl[b] < 0.0)) continue;
                const real v = two_point_average(ov[a], ov[b], fl[a], fl[b]);
                if (v > best.value) best = {v, (RVector(3) << radius, pi * a / na, pi * b / na).finished()};
            }
        }
        if (best.p.size()) seeds.push_back(best);
    }
    std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.value > b.value; });
    if (seeds.size() > static_cast<std::size_t>(opt.restarts)) seeds.resize(opt.restarts);

    std::vector<std::optional<TwoPointCycle>> found(seeds.size());
    parallel_for(static_cast<int>(seeds.size()), [&](int k) {
        const auto f = [&](const RVector& p) {
            const auto c = evaluate(p);
            return c ? -c->value : std::numeric_limits<real>::infinity();
        };
        solve::NelderMeadOptions nm;
        nm.initial_step = 0.5 * pi / na;
        nm.max_evaluations = opt.simplex_evaluations;
        const solve::Result r = solve::nelder_mead(f, seeds[k].p, nm);
        found[k] = evaluate(r.x);
        if (!found[k] || found[k]->value < seeds[k].value) found[k] = evaluate(seeds[k].p);
    });
    std::optional<TwoPointCycle> best;
    for (const auto& c : found) keep_best(best, c);
    return best;
}

/// General pairs: r⁺ free, r⁻ = |r⁺| ŷ so both points share the purity.
inline std::optional<TwoPointCycle> search_general(const DissipatorSpec& spec, const OperatorBasis& basis,
                                                   const Objective& obj, real ceiling, const RVector& static_point,
                                                   const TpcOptions& opt)
{
    const int n = basis.size();
    const BlochGenerator gen = bloch_generator(spec, basis);
    const auto unpack = [n](const RVector& p, RVector& rp, RVector& rm) {
        rp = p.head(n);
        const RVector y = p.tail(n);
        const real yn = y.norm();
        rm = yn > 0.0 ? RVector(y * (rp.norm() / yn)) : RVector(RVector::Zero(n));
    };
    const auto evaluate = [&](const RVector& p) {
        RVector rp, rm;
        unpack(p, rp, rm);
        return evaluate_two_point(spec, basis, obj, rp, rm, ceiling);
    };

    std::vector<std::optional<TwoPointCycle>> found(opt.restarts);
    parallel_for(opt.restarts, [&](int k) {
        std::mt19937_64 rng(mix_seed(opt.seed, static_cast<std::uint64_t>(k)));
        std::normal_distribution<real> normal;
        // Start from a pair straddling S₂ around either the static optimum or
        // a random state, displaced along ± the flux gradient.
        RVector base = k == 0 ? static_point : random_start(basis, rng);
        if (k > 0) {
            const FluxConstraints s2(spec, basis, 2);
            base = restore_feasibility(s2, basis, base, rate_scale(spec)).x;
        }
        RVector grad = gen.flux_gradient(base);
        if (grad.norm() == 0.0) grad = RVector::Ones(n);
        grad.normalize();
        std::optional<TwoPointCycle> start;
        for (real eps = 0.05; eps > 1e-6 && !start; eps *= 0.5) {
            RVector jitter(n);
            for (int i = 0; i < n; ++i) jitter(i) = normal(rng);
            jitter *= 0.2 * eps / std::max<real>(1e-300, jitter.norm());
            RVector p(2 * n);
            p << base + eps * grad + jitter, base - eps * grad;
            start = evaluate(p);
            if (start) {
                const auto f = [&](const RVector& z) {
                    const auto c = evaluate(z);
                    return c ? -c->value : std::numeric_limits<real>::infinity();
                };
                solve::NelderMeadOptions nm;
                nm.initial_step = eps;
                nm.max_evaluations = opt.simplex_evaluations;
                const solve::Result r = solve::nelder_mead(f, p, nm);
                found[k] = evaluate(r.x);
                keep_best(found[k], start);
            }
        }
    });
    std::optional<TwoPointCycle> best;
    for (const auto& c : found) keep_best(best, c);
    return best;
}

}  // namespace detail

/// Optimal time-averaged objective over two-point cycles.  The search space
/// includes the degenerate cycle sitting at the static optimum, so the result
/// never falls below the static value; a nondegenerate cycle is reported only
/// when it beats the static point.
inline TpcResult optimize_tpc(const DissipatorSpec& spec, const Objective& obj, const TpcOptions& opt = {})
{
    if (obj.dim() != spec.dim()) throw ValidationError("optimize_tpc: objective and dissipator dimensions differ");
    if (spec.is_zero()) throw NumericalError("optimize_tpc: zero dissipator admits no two-point cycle");
    const OperatorBasis basis(spec.dim());
    TpcResult out;
    out.static_optimum = optimize_static(spec, obj, opt.static_options);
    out.static_value = out.static_optimum.value;
    SearchOptions ceiling_opts;
    ceiling_opts.restarts = std::max(8, opt.static_options.restarts / 4);
    ceiling_opts.seed = opt.seed;
    out.purity_ceiling = max_purity_on_s2(spec, ceiling_opts).value;
    out.upper_bound = spec.dim() > 2;

    const RVector static_point = bloch_encode(out.static_optimum.state, basis).coords;
    const BlochGenerator gen = bloch_generator(spec, basis);
    if (spec.dim() == 2 && detail::z_symmetric(gen) && obj.z_symmetric()) {
        out.parametrization = "qubit: common purity and two polar angles";
        out.best_nondegenerate = detail::search_qubit_reduced(spec, basis, obj, out.purity_ceiling, opt);
    } else {
        out.parametrization = "general: equal-purity pairs in Bloch coordinates";
        out.best_nondegenerate = detail::search_general(spec, basis, obj, out.purity_ceiling, static_point, opt);
    }

    TwoPointCycle degenerate;
    degenerate.r_plus = degenerate.r_minus = static_point;
    degenerate.value = out.static_value;
    degenerate.degenerate = true;
    degenerate.flux_plus = degenerate.flux_minus = purity_flux(spec, out.static_optimum.state.matrix());

    const auto& nd = out.best_nondegenerate;
    if (nd && nd->value > out.static_value + opt.improvement_tolerance) {
        out.cycle = *nd;
        out.cycle.degenerate = (nd->r_plus - nd->r_minus).norm() <= opt.degenerate_distance;
    } else {
        out.cycle = degenerate;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random-Hamiltonian baseline

struct SampleStatistics {
    int requested = 0;
    int used = 0;
    int skipped_nonunique = 0;
    real mean = 0.0;
    real stddev = 0.0;
    real min = 0.0;
    real max = 0.0;
    real scale = 0.0;
    std::vector<real> bin_edges;
    std::vector<int> histogram;
};

/// Objective statistics of steady states of GUE Hamiltonians whose ensemble
/// RMS eigenvalue is `scale` times `rate_unit` (default: largest channel
/// rate).  Sample i draws from seed mix(seed, i), so results do not depend on
/// the thread count.
inline SampleStatistics sample_random_hamiltonians(const DissipatorSpec& spec, const Objective& obj, int count,
                                                   real scale, std::uint64_t seed, real rate_unit = 0.0,
                                                   int bins = 20)
{
    if (count < 0) throw ValidationError("sample_random_hamiltonians: count must be >= 0");
    if (obj.dim() != spec.dim()) throw ValidationError("sample_random_hamiltonians: dimension mismatch");
    if (rate_unit <= 0.0) rate_unit = spec.max_rate() > 0.0 ? spec.max_rate() : 1.0;
    const OperatorBasis basis(spec.dim());
    std::vector<real> values(count, std::numeric_limits<real>::quiet_NaN());
    parallel_for(count, [&](int i) {
        const HermitianMatrix h = random_hermitian(spec.dim(), scale * rate_unit, mix_seed(seed, i));
        try {
            const StationaryResult ss = stationary_state(h.matrix(), spec, basis);
            if (ss.unique) values[i] = obj(ss.state);
        } catch (const NumericalError&) {
        }
    });

    SampleStatistics st;
    st.requested = count;
    st.scale = scale;
    std::vector<real> kept;
    for (real v : values)
        if (std::isfinite(v)) kept.push_back(v);
    st.used = static_cast<int>(kept.size());
    st.skipped_nonunique = count - st.used;
    if (kept.empty()) return st;
    real sum = 0.0;
    for (real v : kept) sum += v;
    st.mean = sum / kept.size();
    real var = 0.0;
    for (real v : kept) var += (v - st.mean) * (v - st.mean);
    st.stddev = kept.size() > 1 ? std::sqrt(var / (kept.size() - 1)) : 0.0;
    st.min = *std::min_element(kept.begin(), kept.end());
    st.max = *std::max_element(kept.begin(), kept.end());

    const bool unit_range = obj.kind() != ObjectiveKind::linear;
    const real lo = unit_range ? 0.0 : st.min;
    const real hi = unit_range ? 1.0 : (st.max > st.min ? st.max : st.min + 1.0);
    st.histogram.assign(bins, 0);
    for (int b = 0; b <= bins; ++b) st.bin_edges.push_back(lo + (hi - lo) * b / bins);
    for (real v : kept) {
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        st.histogram[std::clamp(b, 0, bins - 1)]++;
    }
    return st;
}

}  // namespace dco
