// Optimal coherence of a decaying qubit: numerical optimum, closed form and a
// propagation check of the reconstructed Hamiltonian.

#include <cstdio>

#include "dco/dco.hpp"

int main(int argc, char** argv)
{
    using namespace dco;
    const real gm = argc > 1 ? std::atof(argv[1]) : 1.0;
    const real gp = argc > 2 ? std::atof(argv[2]) : 0.0;
    const real gd = argc > 3 ? std::atof(argv[3]) : 0.0;

    const DissipatorSpec spec = DissipatorSpec::qubit(gm, gp, gd);
    const StaticOptimum num = optimize_static(spec, Objective::coherence());
    const StaticOptimum exact = qubit_analytic(gm, gp, gd);
    std::printf("numerical  %.10f  (%s)\n", num.value, std::string(to_string(num.certificate)).c_str());
    std::printf("closed     %.10f\n", exact.value);

    const auto* h = std::get_if<HermitianMatrix>(&num.hamiltonian);
    if (!h) return 1;
    const CMatrix& m = h->matrix();
    std::printf("H = [[%+.6f, %+.6f%+.6fi], [.., %+.6f]]\n", m(0, 0).real(), m(0, 1).real(), m(0, 1).imag(),
                m(1, 1).real());

    // start from the ground state and let the dynamics settle
    const Trajectory t = propagate(spec, ControlSchedule::constant(m), DensityMatrix::basis_state(2, 0), 40.0 / gm);
    const CMatrix rho = bloch_decode_matrix(t.samples.back().r, OperatorBasis(2));
    std::printf("propagated %.10f\n", coherence(rho));
    return 0;
}
