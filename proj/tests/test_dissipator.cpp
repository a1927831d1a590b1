#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dco/dissipator.hpp"
#include "dco/objectives.hpp"

using namespace dco;

namespace {

// Lindblad form written out term by term, independent of the library sum.
CMatrix lindblad_oracle(const std::vector<std::pair<CMatrix, real>>& channels, const CMatrix& rho)
{
    CMatrix out = CMatrix::Zero(rho.rows(), rho.cols());
    for (const auto& [l, g] : channels) {
        const CMatrix ld = l.adjoint();
        out += g * (l * rho * ld - 0.5 * ld * l * rho - 0.5 * rho * ld * l);
    }
    return out;
}

DissipatorSpec random_spec(int d, std::mt19937_64& rng)
{
    std::uniform_real_distribution<real> u(0.0, 1.0);
    DissipatorSpec spec(d);
    if (d == 2) {
        spec.add_decay(u(rng)).add_absorption(0.5 * u(rng)).add_dephasing(u(rng));
    } else {
        for (int k = 0; k < 3; ++k) {
            CMatrix l = random_hermitian(d, 1.0, rng).matrix();
            l += I_unit * random_hermitian(d, 1.0, rng).matrix();
            spec.add(l, u(rng));
        }
    }
    return spec;
}

const CMatrix ket0 = DensityMatrix::basis_state(2, 0).matrix();
const CMatrix ket1 = DensityMatrix::basis_state(2, 1).matrix();

}  // namespace

TEST(Apply, DecayOfExcitedState)
{
    const real g = 0.7;
    const DissipatorSpec spec = DissipatorSpec::qubit(g);
    EXPECT_LT((apply_dissipator(spec, ket1) - g * (ket0 - ket1)).norm(), 1e-15);
    EXPECT_LT(apply_dissipator(spec, ket0).norm(), 1e-15);
}

TEST(Apply, DephasingKeepsDiagonalStates)
{
    const DissipatorSpec spec = DissipatorSpec::qubit(0.0, 0.0, 1.3);
    EXPECT_LT(apply_dissipator(spec, ket0).norm(), 1e-15);
}

TEST(Apply, MatchesTermByTermOracle)
{
    std::mt19937_64 rng(4);
    DissipatorSpec spec(3);
    std::vector<std::pair<CMatrix, real>> channels;
    for (int k = 0; k < 2; ++k) {
        const CMatrix l = random_hermitian(3, 1.0, rng).matrix() + I_unit * random_hermitian(3, 1.0, rng).matrix();
        spec.add(l, 0.3 + k);
        channels.push_back({l, 0.3 + k});
    }
    const CMatrix rho = random_state(3, rng).matrix();
    EXPECT_LT((apply_dissipator(spec, rho) - lindblad_oracle(channels, rho)).norm(), 1e-12);
}

TEST(Apply, TraceAnnihilatingAndHermitian)
{
    std::mt19937_64 rng(21);
    for (int k = 0; k < 1000; ++k) {
        const int d = k % 2 ? 2 : 4;
        const DissipatorSpec spec = random_spec(d, rng);
        const CMatrix rho = random_hermitian(d, 1.0, rng).matrix();
        const CMatrix out = apply_dissipator(spec, rho);
        EXPECT_LT(std::abs(out.trace()), 1e-12);
        EXPECT_LT((out - out.adjoint()).norm(), 1e-12);
    }
}

TEST(Spec, RejectsNegativeRateAndBadQubit)
{
    DissipatorSpec spec(2);
    EXPECT_THROW(spec.add_decay(-0.1), ValidationError);
    EXPECT_THROW(spec.add_decay(0.1, 1), ValidationError);
    EXPECT_THROW(DissipatorSpec(3).add_decay(1.0), ValidationError);
    EXPECT_THROW(spec.add(CMatrix::Identity(3, 3), 1.0), ValidationError);
}

TEST(Spec, DephasingNormalization)
{
    const DissipatorSpec spec = DissipatorSpec::qubit(0.0, 0.0, 1.0);
    ASSERT_EQ(spec.channels().size(), 3u);
    EXPECT_LT((spec.channels()[2].op - ops::sigma_z() / std::sqrt(2.0)).norm(), 1e-15);
}

TEST(MomentFlux, Examples)
{
    const real g = 1.0;
    const DissipatorSpec spec = DissipatorSpec::qubit(g);
    EXPECT_NEAR(moment_flux(spec, DensityMatrix::maximally_mixed(2), 2), 0.0, 1e-15);
    EXPECT_NEAR(moment_flux(spec, DensityMatrix::basis_state(2, 1), 2), -g, 1e-15);
}

TEST(MomentFlux, FirstOrderNeedsDiagnosticFlag)
{
    std::mt19937_64 rng(2);
    const DissipatorSpec spec = random_spec(4, rng);
    const DensityMatrix rho = random_state(4, rng);
    EXPECT_THROW(moment_flux(spec, rho, 1), ValidationError);
    EXPECT_NEAR(moment_flux(spec, rho, 1, true), 0.0, 1e-12);
    EXPECT_THROW(moment_flux(spec, rho, 5), ValidationError);
}

TEST(MomentFlux, GradientMatchesFiniteDifference)
{
    std::mt19937_64 rng(6);
    const DissipatorSpec spec = random_spec(3, rng);
    const CMatrix rho = random_state(3, rng).matrix();
    const CMatrix dir = random_hermitian(3, 1.0, rng).matrix();
    for (int n = 2; n <= 3; ++n) {
        const CMatrix g = moment_flux_gradient(spec, rho, n);
        const real h = 1e-6;
        const real fd =
            (moment_flux(spec, CMatrix(rho + h * dir), n) - moment_flux(spec, CMatrix(rho - h * dir), n)) / (2 * h);
        EXPECT_NEAR((g * dir).trace().real(), fd, 1e-7);
    }
}

TEST(Generator, PureDecay)
{
    const real g = 0.8;
    const BlochGenerator gen = bloch_generator(DissipatorSpec::qubit(g), OperatorBasis(2));
    const RMatrix d = RVector((RVector(3) << -g, -g, -2 * g).finished()).asDiagonal();
    EXPECT_LT((gen.D - d).norm(), 1e-14);
    EXPECT_LT((gen.d - (RVector(3) << 0, 0, 2 * g).finished()).norm(), 1e-14);
}

TEST(Generator, Dephasing)
{
    const real g = 0.3;
    const BlochGenerator gen = bloch_generator(DissipatorSpec::qubit(0, 0, g), OperatorBasis(2));
    const RMatrix d = RVector((RVector(3) << -2 * g, -2 * g, 0).finished()).asDiagonal();
    EXPECT_LT((gen.D - d).norm(), 1e-14);
    EXPECT_LT(gen.d.norm(), 1e-14);
}

TEST(Generator, ZeroRates)
{
    const BlochGenerator gen = bloch_generator(DissipatorSpec::qubit(0), OperatorBasis(2));
    EXPECT_EQ(gen.D.norm(), 0.0);
    EXPECT_EQ(gen.d.norm(), 0.0);
}

TEST(Generator, EntriesMatchTraceOracle)
{
    std::mt19937_64 rng(13);
    const DissipatorSpec spec = random_spec(4, rng);
    std::vector<std::pair<CMatrix, real>> channels;
    for (const auto& c : spec.channels()) channels.push_back({c.op, c.rate});
    const OperatorBasis basis(4);
    const BlochGenerator gen = bloch_generator(spec, basis);
    for (int i = 0; i < basis.size(); ++i) {
        EXPECT_NEAR(gen.d(i), (basis[i] * lindblad_oracle(channels, CMatrix::Identity(4, 4))).trace().real(), 1e-12);
        for (int j = 0; j < basis.size(); ++j)
            EXPECT_NEAR(gen.D(i, j), (basis[i] * lindblad_oracle(channels, basis[j])).trace().real(), 1e-12);
    }
}

TEST(Generator, FluxConstant)
{
    EXPECT_DOUBLE_EQ(bloch_generator(DissipatorSpec::qubit(1), OperatorBasis(2)).flux_constant(), 0.25);
    std::mt19937_64 rng(31);
    for (int k = 0; k < 1000; ++k) {
        const int d = k % 2 ? 2 : 4;
        const DissipatorSpec spec = random_spec(d, rng);
        const OperatorBasis basis(d);
        const BlochGenerator gen = bloch_generator(spec, basis);
        const DensityMatrix rho = random_state(d, rng);
        const RVector r = bloch_encode(rho, basis).coords;
        EXPECT_NEAR(purity_flux(spec, rho.matrix()), gen.flux(r), 1e-12);
        EXPECT_NEAR(gen.flux_constant(), 1.0 / (d * d), 0.0);
    }
}

TEST(Liouvillian, PureDecayWithoutDrive)
{
    const real g = 1.7;
    const BlochAffine aff = liouvillian_matrix(CMatrix(CMatrix::Zero(2, 2)), DissipatorSpec::qubit(g), OperatorBasis(2));
    const RMatrix a = RVector((RVector(3) << -g / 2, -g / 2, -g).finished()).asDiagonal();
    EXPECT_LT((aff.A - a).norm(), 1e-14);
    EXPECT_LT((aff.b - (RVector(3) << 0, 0, g).finished()).norm(), 1e-14);
}

TEST(Liouvillian, UnitaryLimitRotatesAboutZ)
{
    const real w = 0.9;
    const BlochAffine aff =
        liouvillian_matrix(CMatrix(0.5 * w * ops::sigma_z()), DissipatorSpec::qubit(0), OperatorBasis(2));
    EXPECT_LT((aff.A + aff.A.transpose()).norm(), 1e-14);
    EXPECT_NEAR(std::abs(aff.A(0, 1)), w, 1e-14);
    EXPECT_NEAR(aff.A(2, 2), 0.0, 1e-15);
    EXPECT_LT(aff.b.norm(), 1e-15);
}

TEST(Liouvillian, ConsistentWithMasterEquation)
{
    std::mt19937_64 rng(77);
    for (int d : {2, 4}) {
        const OperatorBasis basis(d);
        const DissipatorSpec spec = random_spec(d, rng);
        const CMatrix h = random_hermitian(d, 1.0, rng).matrix();
        const BlochAffine aff = liouvillian_matrix(h, spec, basis);
        for (int k = 0; k < 20; ++k) {
            const CMatrix rho = random_state(d, rng).matrix();
            const CMatrix rhs = I_unit * (rho * h - h * rho) + apply_dissipator(spec, rho);
            const RVector expected = bloch_encode(rhs, basis).coords;
            EXPECT_LT((aff.rate(bloch_encode(rho, basis).coords) - expected).norm(), 1e-12);
        }
    }
}

TEST(Stationary, DarkState)
{
    const StationaryResult ss = stationary_state(HermitianMatrix::zero(2), DissipatorSpec::qubit(1.0));
    EXPECT_TRUE(ss.unique);
    EXPECT_LT((ss.state.matrix() - ket0).norm(), 1e-12);
}

TEST(Stationary, OptimalCoherenceDrive)
{
    const real g = 1.0, omega = g / std::sqrt(2.0);
    const StationaryResult ss =
        stationary_state(HermitianMatrix(CMatrix(-(omega / 2) * ops::sigma_y())), DissipatorSpec::qubit(g));
    EXPECT_NEAR(coherence(ss.state.matrix()), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_LT(ss.residual, 1e-12);
}

TEST(Stationary, ZeroRatesAreNotUnique)
{
    const StationaryResult ss = stationary_state(HermitianMatrix::zero(2), DissipatorSpec::qubit(0.0));
    EXPECT_FALSE(ss.unique);
    EXPECT_EQ(ss.nullity, 3);
}

TEST(Stationary, ResidualOnRandomProblems)
{
    std::mt19937_64 rng(9);
    for (int k = 0; k < 50; ++k) {
        const int d = k % 2 ? 2 : 4;
        const DissipatorSpec spec = random_spec(d, rng);
        const HermitianMatrix h = random_hermitian(d, 1.0, rng);
        const StationaryResult ss = stationary_state(h, spec);
        if (!ss.unique) continue;
        EXPECT_LT(ss.residual, 1e-10);
    }
}

TEST(Stationary, ScaleCovariance)
{
    std::mt19937_64 rng(10);
    const DissipatorSpec spec = random_spec(4, rng);
    const HermitianMatrix h = random_hermitian(4, 1.0, rng);
    const real lambda = 7.5;
    const StationaryResult a = stationary_state(h, spec);
    const StationaryResult b = stationary_state(lambda * h, spec.scaled(lambda));
    EXPECT_LT(trace_distance(a.state.matrix(), b.state.matrix()), 1e-10);
    const DensityMatrix rho = random_state(4, rng);
    EXPECT_NEAR(purity_flux(spec.scaled(lambda), rho.matrix()), lambda * purity_flux(spec, rho.matrix()), 1e-12);
}
