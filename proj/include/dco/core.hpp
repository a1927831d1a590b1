#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dco {

using real = double;
using complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr complex I_unit{0.0, 1.0};

/// Malformed input: wrong dimension, non-Hermitian matrix, invalid state.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to produce a result meeting its contract.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace tol {
inline constexpr real hermitian = 1e-12;
inline constexpr real trace = 1e-10;
inline constexpr real eigen_floor = -1e-10;
/// Relative eigenvalue gap (in units of the spectral range) below which
/// two eigenvalues are treated as degenerate.
inline constexpr real degeneracy = 1e-8;
}  // namespace tol

class HermitianMatrix {
public:
    HermitianMatrix() = default;

    /// Validates Hermiticity within `tolerance` (absolute, entrywise) and
    /// stores the exactly symmetrized matrix.
    explicit HermitianMatrix(const CMatrix& m, real tolerance = tol::hermitian)
    {
        if (m.rows() != m.cols() || m.rows() < 1)
            throw ValidationError("HermitianMatrix: matrix must be square and non-empty");
        const real defect = (m - m.adjoint()).cwiseAbs().maxCoeff();
        const real scale = std::max<real>(1.0, m.cwiseAbs().maxCoeff());
        if (defect > tolerance * scale)
            throw ValidationError("HermitianMatrix: input is not Hermitian (defect " +
                                  std::to_string(defect) + ")");
        m_ = 0.5 * (m + m.adjoint());
    }

    static HermitianMatrix zero(int dim) { return HermitianMatrix(CMatrix::Zero(dim, dim)); }
    static HermitianMatrix identity(int dim) { return HermitianMatrix(CMatrix::Identity(dim, dim)); }

    int dim() const { return static_cast<int>(m_.rows()); }
    const CMatrix& matrix() const { return m_; }
    complex operator()(int j, int k) const { return m_(j, k); }

    HermitianMatrix operator+(const HermitianMatrix& o) const { return HermitianMatrix(m_ + o.m_); }
    HermitianMatrix operator-(const HermitianMatrix& o) const { return HermitianMatrix(m_ - o.m_); }
    HermitianMatrix operator*(real s) const { return HermitianMatrix(m_ * s); }

private:
    CMatrix m_;
};

inline HermitianMatrix operator*(real s, const HermitianMatrix& h) { return h * s; }

/// Hermitian, unit-trace, positive semidefinite matrix.
class DensityMatrix {
public:
    DensityMatrix() = default;

    explicit DensityMatrix(const HermitianMatrix& h) : h_(h)
    {
        const complex tr = h.matrix().trace();
        if (std::abs(tr - 1.0) > tol::trace)
            throw ValidationError("DensityMatrix: trace " + std::to_string(tr.real()) + " != 1");
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h.matrix(), Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < tol::eigen_floor)
            throw ValidationError("DensityMatrix: negative eigenvalue " +
                                  std::to_string(es.eigenvalues().minCoeff()));
    }
    explicit DensityMatrix(const CMatrix& m) : DensityMatrix(HermitianMatrix(m, 1e-10)) {}

    static DensityMatrix maximally_mixed(int dim)
    {
        return DensityMatrix(CMatrix(CMatrix::Identity(dim, dim) / real(dim)));
    }
    static DensityMatrix pure(const CVector& psi)
    {
        const CVector n = psi.normalized();
        return DensityMatrix(CMatrix(n * n.adjoint()));
    }
    static DensityMatrix basis_state(int dim, int k)
    {
        CVector v = CVector::Zero(dim);
        v(k) = 1.0;
        return pure(v);
    }

    int dim() const { return h_.dim(); }
    const HermitianMatrix& hermitian() const { return h_; }
    const CMatrix& matrix() const { return h_.matrix(); }
    complex operator()(int j, int k) const { return h_(j, k); }

private:
    HermitianMatrix h_;
};

// ---------------------------------------------------------------------------
// Spectral decomposition

struct EigenSystem {
    RVector eigenvalues;   // descending
    CMatrix eigenvectors;  // column α is |α⟩
    RVector degeneracy_gaps;

    int dim() const { return static_cast<int>(eigenvalues.size()); }
    real spectral_range() const { return eigenvalues(0) - eigenvalues(dim() - 1); }

    /// Eigenvalues λ_a, λ_b count as distinct when their gap exceeds
    /// `relative` times the spectral range.
    bool distinct(int a, int b, real relative = tol::degeneracy) const
    {
        return std::abs(eigenvalues(a) - eigenvalues(b)) > relative * spectral_range();
    }
    bool nondegenerate(real relative = tol::degeneracy) const
    {
        for (int a = 0; a + 1 < dim(); ++a)
            if (!distinct(a, a + 1, relative)) return false;
        return true;
    }
    CMatrix reassemble() const
    {
        return eigenvectors * eigenvalues.cast<complex>().asDiagonal() * eigenvectors.adjoint();
    }
};

namespace detail {

// First component with magnitude above the threshold is made real positive.
inline void fix_phase(Eigen::Ref<CVector> v)
{
    const real threshold = 1e-10;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > threshold) {
            v *= std::conj(v(i)) / std::abs(v(i));
            v(i) = std::abs(v(i));
            return;
        }
    }
}

inline bool lex_less(const CVector& a, const CVector& b)
{
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i).real() != b(i).real()) return a(i).real() < b(i).real();
        if (a(i).imag() != b(i).imag()) return a(i).imag() < b(i).imag();
    }
    return false;
}

}  // namespace detail

/// Eigen::SelfAdjointEigenSolver with descending order and a reproducible
/// phase and tie convention on the eigenvectors.
inline EigenSystem spectral_decompose(const CMatrix& m)
{
    if (m.rows() != m.cols())
        throw ValidationError("spectral_decompose: matrix is not square");
    const real defect = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (defect > 1e-10 * std::max<real>(1.0, m.cwiseAbs().maxCoeff()))
        throw ValidationError("spectral_decompose: input is not Hermitian");

    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
    if (es.info() != Eigen::Success)
        throw NumericalError("spectral_decompose: eigensolver failed");
    const int d = static_cast<int>(m.rows());

    std::vector<int> order(d);
    for (int i = 0; i < d; ++i) order[i] = d - 1 - i;
    CMatrix vecs = es.eigenvectors();
    for (int i = 0; i < d; ++i) detail::fix_phase(vecs.col(i));

    const RVector& vals = es.eigenvalues();
    const real range = vals(d - 1) - vals(0);
    // Stable sort descending; ties (within the degeneracy threshold) by
    // lexicographic order of the phase-fixed eigenvectors.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (std::abs(vals(a) - vals(b)) > tol::degeneracy * range) return vals(a) > vals(b);
        return detail::lex_less(vecs.col(a), vecs.col(b));
    });

    EigenSystem out;
    out.eigenvalues.resize(d);
    out.eigenvectors.resize(d, d);
    for (int i = 0; i < d; ++i) {
        out.eigenvalues(i) = vals(order[i]);
        out.eigenvectors.col(i) = vecs.col(order[i]);
    }
    out.degeneracy_gaps.resize(std::max(0, d - 1));
    for (int i = 0; i + 1 < d; ++i)
        out.degeneracy_gaps(i) = out.eigenvalues(i) - out.eigenvalues(i + 1);
    return out;
}

inline EigenSystem spectral_decompose(const HermitianMatrix& h) { return spectral_decompose(h.matrix()); }

inline RVector eigenvalues_of(const CMatrix& m)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().reverse();
}

/// f(M) = V f(Λ) V† for Hermitian M.
template <typename F>
CMatrix hermitian_function(const CMatrix& m, F&& f)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
    RVector fv = es.eigenvalues().unaryExpr(std::forward<F>(f));
    return es.eigenvectors() * fv.cast<complex>().asDiagonal() * es.eigenvectors().adjoint();
}

/// Nearest density matrix in Frobenius norm (eigenvalue projection onto the
/// probability simplex).
inline CMatrix project_to_states(const CMatrix& m)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
    RVector v = es.eigenvalues();
    const int d = static_cast<int>(v.size());
    std::vector<real> u(v.data(), v.data() + d);
    std::sort(u.begin(), u.end(), std::greater<>());
    real cumulative = 0.0, shift = 0.0;
    for (int k = 0; k < d; ++k) {
        cumulative += u[k];
        const real t = (cumulative - 1.0) / (k + 1);
        if (u[k] - t > 0) shift = t;
    }
    for (int k = 0; k < d; ++k) v(k) = std::max(0.0, v(k) - shift);
    return es.eigenvectors() * v.cast<complex>().asDiagonal() * es.eigenvectors().adjoint();
}

inline real trace_distance(const CMatrix& a, const CMatrix& b)
{
    return 0.5 * eigenvalues_of(a - b).cwiseAbs().sum();
}

inline real purity(const CMatrix& rho) { return (rho * rho).trace().real(); }
inline real purity(const DensityMatrix& rho) { return purity(rho.matrix()); }

// ---------------------------------------------------------------------------
// Operators

namespace ops {

inline CMatrix pauli(int mu)
{
    CMatrix s(2, 2);
    switch (mu) {
    case 0: s << 1, 0, 0, 1; break;
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, -I_unit, I_unit, 0; break;
    case 3: s << 1, 0, 0, -1; break;
    default: throw ValidationError("pauli: index must be 0..3");
    }
    return s;
}
inline CMatrix sigma_x() { return pauli(1); }
inline CMatrix sigma_y() { return pauli(2); }
inline CMatrix sigma_z() { return pauli(3); }

/// |0⟩ is the ground state (σ_z = +1), so σ₋ = |0⟩⟨1| lowers the excitation.
inline CMatrix sigma_minus()
{
    CMatrix s = CMatrix::Zero(2, 2);
    s(0, 1) = 1.0;
    return s;
}
inline CMatrix sigma_plus() { return sigma_minus().adjoint(); }

inline CMatrix kron(const CMatrix& a, const CMatrix& b)
{
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Embeds a single-qubit operator on `qubit` (0 = leftmost tensor factor).
inline CMatrix embed(const CMatrix& op, int qubit, int num_qubits)
{
    CMatrix out = CMatrix::Identity(1, 1);
    for (int q = 0; q < num_qubits; ++q)
        out = kron(out, q == qubit ? op : CMatrix(CMatrix::Identity(2, 2)));
    return out;
}

inline CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

}  // namespace ops

/// Number of qubits if `dim` is a power of two, otherwise -1.
inline int qubit_count(int dim)
{
    int n = 0;
    while ((1 << n) < dim) ++n;
    return (1 << n) == dim ? n : -1;
}

// ---------------------------------------------------------------------------
// Bloch representation

/// Traceless Hermitian basis {B_i}, i = 0..d²−2, with Tr[B_i B_j] = d δ_ij.
///
/// d = 2: σ_x, σ_y, σ_z.  d = 4: σ_μ⊗σ_ν in lexicographic (μ,ν) order
/// skipping (0,0).  Other d: generalized Gell-Mann matrices rescaled to the
/// same normalization.  With ρ = 𝟙/d + Σ r_i B_i / d the purity is
/// Tr[ρ²] = (1 + |r|²)/d.
class OperatorBasis {
public:
    explicit OperatorBasis(int dim) : dim_(dim)
    {
        if (dim < 2) throw ValidationError("OperatorBasis: dimension must be >= 2");
        if (dim == 2) {
            for (int mu = 1; mu < 4; ++mu) {
                elements_.push_back(ops::pauli(mu));
                labels_.push_back(std::string(1, "IXYZ"[mu]));
            }
        } else if (dim == 4) {
            for (int mu = 0; mu < 4; ++mu)
                for (int nu = 0; nu < 4; ++nu) {
                    if (mu == 0 && nu == 0) continue;
                    elements_.push_back(ops::kron(ops::pauli(mu), ops::pauli(nu)));
                    labels_.push_back(std::string{"IXYZ"[mu], "IXYZ"[nu]});
                }
        } else {
            build_gell_mann();
        }
    }

    int dim() const { return dim_; }
    int size() const { return dim_ * dim_ - 1; }
    /// Tr[B_i B_j] = kappa δ_ij.
    real kappa() const { return dim_; }
    const CMatrix& operator[](int i) const { return elements_[i]; }
    const std::vector<CMatrix>& elements() const { return elements_; }
    const std::string& label(int i) const { return labels_[i]; }

private:
    void build_gell_mann()
    {
        const real scale = std::sqrt(dim_ / 2.0);
        for (int j = 0; j < dim_; ++j)
            for (int k = j + 1; k < dim_; ++k) {
                CMatrix s = CMatrix::Zero(dim_, dim_);
                s(j, k) = s(k, j) = scale;
                elements_.push_back(s);
                labels_.push_back("S" + std::to_string(j) + std::to_string(k));
                CMatrix a = CMatrix::Zero(dim_, dim_);
                a(j, k) = -I_unit * scale;
                a(k, j) = I_unit * scale;
                elements_.push_back(a);
                labels_.push_back("A" + std::to_string(j) + std::to_string(k));
            }
        for (int l = 1; l < dim_; ++l) {
            CMatrix g = CMatrix::Zero(dim_, dim_);
            const real c = scale * std::sqrt(2.0 / (l * (l + 1.0)));
            for (int j = 0; j < l; ++j) g(j, j) = c;
            g(l, l) = -c * l;
            elements_.push_back(g);
            labels_.push_back("D" + std::to_string(l));
        }
    }

    int dim_;
    std::vector<CMatrix> elements_;
    std::vector<std::string> labels_;
};

struct BlochVector {
    int dim = 0;
    RVector coords;

    real norm() const { return coords.norm(); }
};

inline BlochVector bloch_encode(const CMatrix& rho, const OperatorBasis& basis)
{
    if (rho.rows() != basis.dim())
        throw ValidationError("bloch_encode: dimension mismatch");
    BlochVector r{basis.dim(), RVector(basis.size())};
    for (int i = 0; i < basis.size(); ++i)
        r.coords(i) = (rho * basis[i]).trace().real();
    return r;
}
inline BlochVector bloch_encode(const DensityMatrix& rho, const OperatorBasis& basis)
{
    return bloch_encode(rho.matrix(), basis);
}

/// Unit-trace Hermitian matrix; positivity is not guaranteed.
inline CMatrix bloch_decode_matrix(const RVector& coords, const OperatorBasis& basis)
{
    if (coords.size() != basis.size())
        throw ValidationError("bloch_decode: coordinate count mismatch");
    const int d = basis.dim();
    CMatrix m = CMatrix::Identity(d, d) / real(d);
    for (int i = 0; i < basis.size(); ++i) m += (coords(i) / basis.kappa()) * basis[i];
    return m;
}
inline HermitianMatrix bloch_decode(const BlochVector& r, const OperatorBasis& basis)
{
    if (r.dim != basis.dim()) throw ValidationError("bloch_decode: dimension mismatch");
    return HermitianMatrix(bloch_decode_matrix(r.coords, basis));
}

/// Purity as a function of the Bloch norm: (1 + |r|²)/d.
inline real purity_from_norm2(real norm2, int dim) { return (1.0 + norm2) / dim; }
inline real norm2_from_purity(real p, int dim) { return p * dim - 1.0; }

// ---------------------------------------------------------------------------
// Random sampling

/// SplitMix64 step; used to derive independent per-task seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// GUE sample normalized so that E[Tr H²/d] = scale², i.e. the ensemble
/// root-mean-square eigenvalue equals `scale`.
inline HermitianMatrix random_hermitian(int dim, real scale, std::mt19937_64& rng)
{
    if (scale < 0) throw ValidationError("random_hermitian: scale must be >= 0");
    if (scale == 0) return HermitianMatrix::zero(dim);
    const real sigma = scale * std::sqrt(2.0 / dim);
    std::normal_distribution<real> normal(0.0, sigma / std::sqrt(2.0));
    CMatrix a(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) a(j, k) = complex(normal(rng), normal(rng));
    return HermitianMatrix(CMatrix(0.5 * (a + a.adjoint())));
}

inline HermitianMatrix random_hermitian(int dim, real scale, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return random_hermitian(dim, scale, rng);
}

/// Full-rank random state ρ = G G† / Tr[G G†] with complex Ginibre G.
inline DensityMatrix random_state(int dim, std::mt19937_64& rng)
{
    std::normal_distribution<real> normal;
    CMatrix g(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) g(j, k) = complex(normal(rng), normal(rng));
    CMatrix rho = g * g.adjoint();
    return DensityMatrix(CMatrix(rho / rho.trace().real()));
}

/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
inline CMatrix random_unitary(int dim, std::mt19937_64& rng)
{
    std::normal_distribution<real> normal;
    CMatrix g(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k) g(j, k) = complex(normal(rng), normal(rng));
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < dim; ++k) {
        const complex z = r(k, k);
        if (std::abs(z) > 0) q.col(k) *= z / std::abs(z);
    }
    return q;
}

/// exp(−i H t) for Hermitian H.
inline CMatrix unitary_from_hamiltonian(const CMatrix& h, real t)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()));
    CVector phases = (es.eigenvalues() * (-t)).unaryExpr([](real x) { return std::polar(1.0, x); });
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace dco
