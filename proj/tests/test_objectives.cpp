#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dco/dynamics.hpp"
#include "dco/objectives.hpp"

using namespace dco;

namespace {

const real pi = std::acos(-1.0);

CMatrix projector(const CVector& v)
{
    const CVector n = v.normalized();
    return n * n.adjoint();
}

CVector random_ket(int d, std::mt19937_64& rng)
{
    std::normal_distribution<real> g;
    CVector v(d);
    for (int i = 0; i < d; ++i) v(i) = complex(g(rng), g(rng));
    return v.normalized();
}

// Drive that cancels the tangential drift at r, leaving only the radial
// (purity-changing) motion of the dissipator.
CMatrix hold_drive(const DissipatorSpec& spec, const OperatorBasis& basis, const RVector& r)
{
    const RVector drift = liouvillian_matrix(CMatrix(CMatrix::Zero(2, 2)), spec, basis).rate(r);
    const RVector n = r.normalized();
    const RVector tangential = drift - drift.dot(n) * n;
    RMatrix cols(3, 3);
    for (int k = 0; k < 3; ++k) cols.col(k) = hamiltonian_generator(basis[k], basis) * r;
    const RVector h = cols.jacobiSvd(Eigen::ComputeFullU | Eigen::ComputeFullV).solve(-tangential);
    CMatrix out = CMatrix::Zero(2, 2);
    for (int k = 0; k < 3; ++k) out += h(k) * basis[k];
    return out;
}

std::vector<Objective> named_objectives()
{
    return {Objective::bell_fidelity(), Objective::concurrence(), Objective::purity(4)};
}

}  // namespace

TEST(Coherence, Examples)
{
    const CVector plus = (CVector(2) << 1.0, 1.0).finished();
    EXPECT_NEAR(coherence(projector(plus)), 1.0, 1e-15);
    CMatrix diag = CMatrix::Zero(2, 2);
    diag(0, 0) = 0.3;
    diag(1, 1) = 0.7;
    EXPECT_EQ(coherence(diag), 0.0);

    const real omega = 1.0 / std::sqrt(2.0);
    const StationaryResult ss =
        stationary_state(HermitianMatrix(CMatrix(-(omega / 2) * ops::sigma_y())), DissipatorSpec::qubit(1.0));
    EXPECT_NEAR(coherence(ss.state.matrix()), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(BellFidelity, Examples)
{
    EXPECT_NEAR(bell_fidelity(projector(bell::psi_plus())), 1.0, 1e-15);
    EXPECT_NEAR(bell_fidelity(DensityMatrix::basis_state(4, 0).matrix()), 0.0, 1e-15);
    EXPECT_NEAR(bell_fidelity(bell::optimal_state()), 0.5, 1e-15);
}

TEST(Concurrence, Examples)
{
    EXPECT_NEAR(concurrence(projector(bell::psi_plus())), 1.0, 1e-10);
    EXPECT_NEAR(concurrence(bell::optimal_state()), 0.5, 1e-10);
    EXPECT_NEAR(concurrence(bell::optimal_state(-1)), 0.5, 1e-10);
    EXPECT_NEAR(concurrence(DensityMatrix::maximally_mixed(4).matrix()), 0.0, 1e-12);
}

TEST(Concurrence, ProductStatesAreSeparable)
{
    std::mt19937_64 rng(1);
    for (int k = 0; k < 100; ++k) {
        const CVector a = random_ket(2, rng), b = random_ket(2, rng);
        const CVector ab = ops::kron(CMatrix(a), CMatrix(b));
        EXPECT_NEAR(concurrence(projector(ab)), 0.0, 1e-7);
    }
}

TEST(Concurrence, PureStateFormula)
{
    // C = 2|ad − bc| for |ψ⟩ = a|00⟩ + b|01⟩ + c|10⟩ + d|11⟩
    std::mt19937_64 rng(2);
    for (int k = 0; k < 100; ++k) {
        const CVector v = random_ket(4, rng);
        EXPECT_NEAR(concurrence(projector(v)), 2.0 * std::abs(v(0) * v(3) - v(1) * v(2)), 1e-7);
    }
}

TEST(Objectives, RangesOnRandomStates)
{
    std::mt19937_64 rng(3);
    for (int k = 0; k < 200; ++k) {
        const DensityMatrix r4 = random_state(4, rng);
        for (const auto& o : named_objectives()) {
            const real v = o(r4);
            EXPECT_GE(v, -1e-12);
            EXPECT_LE(v, 1.0 + 1e-12);
        }
        const real c = Objective::coherence()(random_state(2, rng));
        EXPECT_GE(c, 0.0);
        EXPECT_LE(c, 1.0 + 1e-12);
    }
}

TEST(Objectives, BellFidelityIsLinear)
{
    std::mt19937_64 rng(4);
    const Objective f = Objective::bell_fidelity();
    EXPECT_TRUE(f.is_linear());
    for (int k = 0; k < 50; ++k) {
        const CMatrix a = random_state(4, rng).matrix(), b = random_state(4, rng).matrix();
        const real l = std::uniform_real_distribution<real>(0, 1)(rng);
        EXPECT_NEAR(f(CMatrix(l * a + (1 - l) * b)), l * f(a) + (1 - l) * f(b), 1e-12);
    }
}

TEST(Objectives, GlobalPhaseInvariance)
{
    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k) {
        const CVector v = random_ket(4, rng);
        const CVector w = std::polar(1.0, 2 * pi * k / 20.0) * v;
        for (const auto& o : named_objectives()) EXPECT_NEAR(o(projector(v)), o(projector(w)), 1e-12);
        const CVector q = random_ket(2, rng);
        EXPECT_NEAR(coherence(projector(q)), coherence(projector(std::polar(1.0, 0.3 * k) * q)), 1e-12);
    }
}

TEST(Objectives, Continuity)
{
    std::mt19937_64 rng(6);
    for (int k = 0; k < 20; ++k) {
        const CMatrix rho = random_state(4, rng).matrix();
        const CMatrix sigma = random_state(4, rng).matrix();
        for (const auto& o : named_objectives()) {
            const real v0 = o(rho);
            for (real eps : {1e-4, 1e-6}) {
                const CMatrix mix = (1 - eps) * rho + eps * sigma;
                EXPECT_LT(std::abs(o(mix) - v0), 100 * eps);
            }
        }
    }
}

TEST(Objectives, GradientsMatchFiniteDifferences)
{
    std::mt19937_64 rng(7);
    const CMatrix rho2 = random_state(2, rng).matrix();
    const CMatrix dir2 = random_hermitian(2, 1.0, rng).matrix();
    const CMatrix rho4 = random_state(4, rng).matrix();
    const CMatrix dir4 = random_hermitian(4, 1.0, rng).matrix();
    const real h = 1e-6;
    for (const auto& [o, rho, dir] :
         {std::tuple{Objective::coherence(), rho2, dir2}, std::tuple{Objective::purity(4), rho4, dir4},
          std::tuple{Objective::bell_fidelity(), rho4, dir4}}) {
        const real fd = (o(CMatrix(rho + h * dir)) - o(CMatrix(rho - h * dir))) / (2 * h);
        EXPECT_NEAR((o.gradient(rho) * dir).trace().real(), fd, 1e-7);
    }
    EXPECT_THROW(Objective::concurrence().gradient(rho4), ValidationError);
}

TEST(Objectives, NamesAndValidation)
{
    EXPECT_EQ(objective_kind_from_string("bell-fidelity"), ObjectiveKind::bell_fidelity);
    EXPECT_EQ(objective_kind_from_string("coherence"), ObjectiveKind::coherence);
    EXPECT_EQ(objective_kind_from_string("concurrence"), ObjectiveKind::concurrence);
    EXPECT_EQ(objective_kind_from_string("purity"), ObjectiveKind::purity);
    EXPECT_EQ(objective_kind_from_string("linear"), ObjectiveKind::linear);
    EXPECT_EQ(to_string(ObjectiveKind::bell_fidelity), "bell-fidelity");
    EXPECT_THROW(objective_kind_from_string("negativity"), ValidationError);
    EXPECT_THROW(Objective::coherence()(DensityMatrix::maximally_mixed(4)), ValidationError);
    EXPECT_THROW(Objective::linear(CMatrix(I_unit * ops::sigma_x())), ValidationError);
}

TEST(Objectives, PsiMinusTarget)
{
    const Objective f = Objective::bell_fidelity(bell::psi_minus());
    EXPECT_NEAR(f(bell::optimal_state(-1)), 0.5, 1e-15);
    EXPECT_NEAR(f(bell::optimal_state(+1)), 0.0, 1e-15);
}

TEST(TimeAverage, ConstantCycle)
{
    const DensityMatrix rho = DensityMatrix::basis_state(2, 0);
    CycleTrajectory c;
    c.period = 1.0;
    for (int k = 0; k <= 4; ++k) c.samples.push_back({0.25 * k, rho});
    EXPECT_NEAR(time_average(Objective::purity(2), c), 1.0, 1e-15);
}

TEST(TimeAverage, TwoPointExamples)
{
    EXPECT_NEAR(two_point_average(1.0, 0.0, 0.5, -0.5), 0.5, 1e-15);
    EXPECT_NEAR(two_point_average(1.0, 0.0, 0.5, -1.0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(two_point_average(0.4, 0.4, 0.0, 0.0), 0.4, 1e-15);
}

TEST(TimeAverage, KickSimulationApproachesTwoPointValue)
{
    // r⁺ = (0,0,½) gains purity, r⁻ = (½,0,0) loses it; equal norms
    const DissipatorSpec spec = DissipatorSpec::qubit(1.0);
    const OperatorBasis basis(2);
    const RVector rp = (RVector(3) << 0.0, 0.0, 0.5).finished();
    const RVector rm = (RVector(3) << 0.5, 0.0, 0.0).finished();
    const real fp = purity_flux(spec, bloch_decode_matrix(rp, basis));
    const real fm = purity_flux(spec, bloch_decode_matrix(rm, basis));
    ASSERT_GT(fp, 0.0);
    ASSERT_LT(fm, 0.0);
    const Objective obj = Objective::coherence();
    const real target = two_point_average(obj(bloch_decode_matrix(rp, basis)), obj(bloch_decode_matrix(rm, basis)), fp, fm);

    CMatrix u;
    for (real theta : {pi / 2, -pi / 2}) {
        const CMatrix c = unitary_from_hamiltonian(ops::sigma_y(), theta / 2);
        if ((unitary_action(c, basis) * rm - rp).norm() < 1e-12) u = c;
    }
    ASSERT_EQ(u.rows(), 2);

    std::vector<real> errors;
    for (real eps : {1e-1, 1e-2, 1e-3}) {
        const real tp = eps * std::abs(fm) / (std::abs(fp) + std::abs(fm));
        const real tm = eps - tp;
        ControlSchedule s;
        s.periodic = true;
        s.segments.push_back({tp, hold_drive(spec, basis, rp), u});
        s.segments.push_back({tm, hold_drive(spec, basis, rm), CMatrix(u.adjoint())});
        StepControl ctl;
        ctl.max_step = eps / 50;
        const CycleTrajectory cyc = asymptotic_cycle(spec, s, ctl);
        errors.push_back(std::abs(time_average(obj, cyc) - target));
    }
    EXPECT_LT(errors[1], errors[0]);
    EXPECT_LT(errors[2], errors[1]);
    EXPECT_LT(errors[2], 1e-3);
}
