#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dco/objectives.hpp"
#include "dco/stabilizable.hpp"

using namespace dco;

namespace {

DissipatorSpec random_qubit_spec(std::mt19937_64& rng)
{
    std::uniform_real_distribution<real> u(0.1, 1.0);
    const real gm = u(rng);
    return DissipatorSpec::qubit(gm, 0.5 * gm * u(rng), u(rng));
}

DissipatorSpec random_two_qubit_spec(std::mt19937_64& rng)
{
    std::uniform_real_distribution<real> u(0.1, 1.0);
    DissipatorSpec spec(4);
    for (int q = 0; q < 2; ++q) spec.add_decay(u(rng), q).add_absorption(0.3 * u(rng), q).add_dephasing(u(rng), q);
    return spec;
}

RVector bloch(real x, real y, real z) { return (RVector(3) << x, y, z).finished(); }

DensityMatrix qubit_state(real x, real y, real z)
{
    return DensityMatrix(CMatrix(bloch_decode_matrix(bloch(x, y, z), OperatorBasis(2))));
}

}  // namespace

TEST(Constraints, QubitExamples)
{
    const DissipatorSpec spec = DissipatorSpec::qubit(1.0);
    const ConstraintReport ground = constraint_values(spec, DensityMatrix::basis_state(2, 0));
    EXPECT_EQ(ground.verdict, Verdict::stabilizable);
    EXPECT_EQ(ground.max_abs, 0.0);
    EXPECT_TRUE(ground.nondegenerate);

    const ConstraintReport mixed = constraint_values(spec, DensityMatrix::maximally_mixed(2));
    EXPECT_EQ(mixed.verdict, Verdict::boundary);
    EXPECT_NEAR(mixed.values[0], 0.0, 1e-15);
    EXPECT_FALSE(mixed.nondegenerate);

    const ConstraintReport excited = constraint_values(spec, DensityMatrix::basis_state(2, 1));
    EXPECT_EQ(excited.verdict, Verdict::not_stabilizable);
    EXPECT_NEAR(excited.values[0], -1.0, 1e-15);
}

TEST(Constraints, GroundStateNeedsNoDrive)
{
    const Reconstruction rec = reconstruct_hamiltonian(DissipatorSpec::qubit(1.0), DensityMatrix::basis_state(2, 0));
    EXPECT_LT(rec.hamiltonian.matrix().norm(), 1e-15);
}

TEST(Constraints, StabilizableImpliesSmallFluxAndGap)
{
    std::mt19937_64 rng(1);
    for (int k = 0; k < 200; ++k) {
        const DissipatorSpec spec = random_two_qubit_spec(rng);
        const ConstraintReport rep = constraint_values(spec, random_state(4, rng));
        if (rep.verdict == Verdict::stabilizable) {
            EXPECT_LE(rep.max_abs, 1e-9);
            EXPECT_TRUE(rep.nondegenerate);
        }
        EXPECT_EQ(rep.values.size(), 3u);
    }
}

TEST(Reconstruct, OptimalCoherenceStateAtPlusX)
{
    const real g = 1.0, omega = g / std::sqrt(2.0);
    const DissipatorSpec spec = DissipatorSpec::qubit(g);
    const Reconstruction rec = reconstruct_hamiltonian(spec, qubit_state(1.0 / std::sqrt(2.0), 0.0, 0.5));
    // the −x state pairs with −(Ω/2)σ_y; rotating by π about z maps it to +x
    const CMatrix rz = unitary_from_hamiltonian(ops::sigma_z(), std::acos(-1.0) / 2.0);
    const CMatrix expected = rz * (-(omega / 2.0) * ops::sigma_y()) * rz.adjoint();
    EXPECT_LT((rec.hamiltonian.matrix() - expected).norm(), 1e-8);
    EXPECT_LE(rec.residual, 1e-9);
}

TEST(Reconstruct, RoundTripFromRandomDrives)
{
    std::mt19937_64 rng(2);
    int checked = 0;
    for (int k = 0; k < 60; ++k) {
        const bool qubit = k % 2 == 0;
        const DissipatorSpec spec = qubit ? random_qubit_spec(rng) : random_two_qubit_spec(rng);
        const int d = spec.dim();
        const HermitianMatrix h0 = random_hermitian(d, 1.0, rng);
        const StationaryResult ss = stationary_state(h0, spec);
        const EigenSystem es = spectral_decompose(ss.state.matrix());
        if (!ss.unique || !es.nondegenerate(1e-4)) continue;
        const Reconstruction rec = reconstruct_hamiltonian(spec, ss.state);
        EXPECT_LE(rec.residual, 1e-9);
        const CMatrix& v = rec.eigensystem.eigenvectors;
        CMatrix a = v.adjoint() * h0.matrix() * v, b = v.adjoint() * rec.hamiltonian.matrix() * v;
        a.diagonal().setZero();
        b.diagonal().setZero();
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-7);
        ++checked;
    }
    EXPECT_GT(checked, 40);
}

TEST(Reconstruct, FullyMixedStateFails)
{
    EXPECT_THROW(reconstruct_hamiltonian(DissipatorSpec::qubit(1.0), DensityMatrix::maximally_mixed(2)),
                 ReconstructionError);
    try {
        reconstruct_hamiltonian(DissipatorSpec::local_decay(2, 1.0), DensityMatrix::maximally_mixed(4));
        FAIL() << "expected a reconstruction error";
    } catch (const ReconstructionError& e) {
        EXPECT_GE(e.alpha, 0);
        EXPECT_GE(e.beta, 0);
    }
}

TEST(Reconstruct, DiagonalGauge)
{
    std::mt19937_64 rng(3);
    const DissipatorSpec spec = random_two_qubit_spec(rng);
    const ProjectionResult p = project_onto_constraints(spec, rng);
    const Reconstruction rec = reconstruct_hamiltonian(spec, p.state);
    const CMatrix& v = rec.eigensystem.eigenvectors;
    const RVector diag = RVector::Random(4);
    const CMatrix extra = v * diag.cast<complex>().asDiagonal() * v.adjoint();
    const real r = stationarity_residual(CMatrix(rec.hamiltonian.matrix() + extra), spec, p.state.matrix());
    EXPECT_NEAR(r, rec.residual, 1e-12);
}

TEST(Sufficiency, ProjectedStatesReconstruct)
{
    std::mt19937_64 rng(4);
    for (int k = 0; k < 40; ++k) {
        const DissipatorSpec spec = k % 2 ? random_qubit_spec(rng) : random_two_qubit_spec(rng);
        const ProjectionResult p = project_onto_constraints(spec, rng);
        const Reconstruction rec = reconstruct_hamiltonian(spec, p.state);
        EXPECT_LE(rec.residual, 1e-9);
        const CMatrix& v = rec.eigensystem.eigenvectors;
        const CMatrix dm = v.adjoint() * apply_dissipator(spec, p.state.matrix()) * v;
        EXPECT_LE(dm.diagonal().cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Necessity, SteadyStatesAreStabilizable)
{
    std::mt19937_64 rng(5);
    int checked = 0;
    for (int k = 0; k < 1000; ++k) {
        const DissipatorSpec spec = k % 2 ? random_qubit_spec(rng) : random_two_qubit_spec(rng);
        const HermitianMatrix h = random_hermitian(spec.dim(), 1.0, rng);
        const StationaryResult ss = stationary_state(h, spec);
        if (!ss.unique || !spectral_decompose(ss.state.matrix()).nondegenerate()) continue;
        EXPECT_EQ(constraint_values(spec, ss.state).verdict, Verdict::stabilizable);
        ++checked;
    }
    EXPECT_GT(checked, 900);
}

TEST(Quadric, PureDecaySpheroid)
{
    const QuadricForm q = quadric(DissipatorSpec::qubit(1.0));
    EXPECT_EQ(q.classification, QuadricClass::spheroid);
    EXPECT_LT((q.center - bloch(0, 0, 0.5)).norm(), 1e-14);
    EXPECT_LT((q.semi_axes - bloch(1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0.5)).norm(), 1e-14);
}

TEST(Quadric, EquatorialSemiAxis)
{
    const real gm = 1.0, gp = 0.25, gd = 0.25;
    const QuadricForm q = quadric(DissipatorSpec::qubit(gm, gp, gd));
    const real big = gm + gp, small = gm - gp;
    const real omega = std::sqrt(big * (big / 2 + gd));
    EXPECT_NEAR(q.semi_axes(0), small / (2 * omega), 1e-12);
    EXPECT_NEAR(q.semi_axes(0), 0.35857, 1e-5);
}

TEST(Quadric, ZeroRatesAndWrongDimension)
{
    EXPECT_EQ(quadric(DissipatorSpec::qubit(0.0)).classification, QuadricClass::degenerate);
    EXPECT_THROW(quadric(DissipatorSpec::local_decay(2, 1.0)), ValidationError);
}

TEST(Mesh, PureDecay)
{
    const DissipatorSpec spec = DissipatorSpec::qubit(1.0);
    const QuadricForm q = quadric(spec);
    const std::vector<RVector> pts = surface_mesh(q, 32);
    EXPECT_EQ(pts.size(), 1024u);
    for (const auto& r : pts) EXPECT_LE(std::abs(q.residual(r)), 1e-10);
    EXPECT_LT((pts.front() - bloch(0, 0, 1)).norm(), 1e-14);
}

TEST(Mesh, ResidualForGeneralRates)
{
    const QuadricForm q = quadric(DissipatorSpec::qubit(1.0, 0.3, 0.7));
    for (const auto& r : surface_mesh(q, 24)) EXPECT_LE(std::abs(q.residual(r)), 1e-10);
}

TEST(Mesh, EmptyAndTooCoarse)
{
    EXPECT_TRUE(surface_mesh(DissipatorSpec::qubit(0.0), 16).empty());
    EXPECT_THROW(surface_mesh(DissipatorSpec::qubit(1.0), 7), ValidationError);
}

TEST(Ceiling, PureDecayReachesPole)
{
    const PurityCeiling c = max_purity_on_s2(DissipatorSpec::qubit(1.0));
    EXPECT_NEAR(c.value, 1.0, 1e-9);
    EXPECT_NEAR(bloch_encode(c.witness, OperatorBasis(2)).coords(2), 1.0, 1e-4);
}

TEST(Ceiling, MatchesBruteForceGrid)
{
    const DissipatorSpec spec = DissipatorSpec::qubit(1.0, 0.25, 0.25);
    const PurityCeiling c = max_purity_on_s2(spec);
    real grid = 0.0;
    for (const auto& r : surface_mesh(spec, 400)) grid = std::max(grid, purity_from_norm2(r.squaredNorm(), 2));
    EXPECT_LT(c.value, 1.0);
    EXPECT_GE(c.value, grid - 1e-9);
    EXPECT_LE(c.value, grid + 1e-4);
}

TEST(Ceiling, ZeroRates)
{
    EXPECT_EQ(max_purity_on_s2(DissipatorSpec::qubit(0.0)).value, 1.0);
}
