// dco: command-line front end for the dissipative control optimizer.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dco/dco.hpp"

using namespace dco;
using io::ordered_json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_numerical = 3;

struct Common {
    bool lenient = false;
    std::string output;
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

void emit(const Common& c, const std::string& text)
{
    if (c.output.empty() || c.output == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(c.output, std::ios::binary);
    if (!out) throw io::SchemaError("", "cannot write '" + c.output + "'");
    out << text;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

io::Problem load(const std::string& path, const Common& c)
{
    io::Problem p = io::read_problem(path, !c.lenient);
    for (const auto& w : p.warnings) warn(w);
    return p;
}

// ---------------------------------------------------------------------------

struct CheckArgs {
    std::string problem, state;
    real tolerance = CheckOptions{}.tolerance;
    real degeneracy = CheckOptions{}.degeneracy;
};

int run_check(const CheckArgs& a, const Common& c)
{
    const io::Problem p = load(a.problem, c);
    const DensityMatrix rho = io::parse_state(io::read_json_file(a.state), p.dimension);
    const ConstraintReport rep = constraint_values(p.dissipator, rho, {a.tolerance, a.degeneracy});
    ordered_json j = io::to_json(rep);
    j["hamiltonian"] = nullptr;
    if (rep.verdict == Verdict::stabilizable) {
        ReconstructOptions ro;
        ro.degeneracy = a.degeneracy;
        ro.block_tolerance = a.tolerance;
        ro.residual_tolerance = a.tolerance;
        try {
            const Reconstruction rec = reconstruct_hamiltonian(p.dissipator, rho, ro);
            j["hamiltonian"] = io::to_json(rec.hamiltonian.matrix());
            j["stationarity_residual"] = rec.residual;
        } catch (const ReconstructionError& e) {
            j["reconstruction_error"] = e.what();
        }
    }
    emit(c, dump(j));
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct OptimizeArgs {
    std::string problem;
    std::string mode = "static";
    std::optional<int> restarts;
    std::optional<std::uint64_t> seed;
    std::optional<int> depth;
    std::optional<real> certificate, degeneracy;
    bool timing = true;
};

int run_optimize(const OptimizeArgs& a, const Common& c)
{
    io::Problem p = load(a.problem, c);
    if (a.restarts) p.options.restarts = *a.restarts;
    if (a.seed) p.options.seed = *a.seed;
    if (a.depth) p.options.constraint_depth = *a.depth;
    if (a.certificate) p.options.tolerances.certificate = *a.certificate;
    if (a.degeneracy) p.options.tolerances.optimizer_degeneracy = *a.degeneracy;
    if (p.options.constraint_depth > p.dimension)
        throw io::SchemaError("/options/constraint_depth", "must lie in [2, dimension]");
    const Objective& obj = p.require_objective();
    if (p.dissipator.is_zero())
        throw NumericalError("zero dissipator: every state is stationary for H = 0 but none is isolated");

    const auto t0 = std::chrono::steady_clock::now();
    ordered_json j;
    if (a.mode == "static") {
        j = io::to_json(optimize_static(p.dissipator, obj, p.static_options()));
    } else {
        TpcOptions to;
        to.static_options = p.static_options();
        to.seed = p.options.seed;
        j = io::to_json(optimize_tpc(p.dissipator, obj, to));
    }
    j["objective"] = std::string(to_string(obj.kind()));
    if (a.timing)
        j["timing_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit(c, dump(j));
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct SurfaceArgs {
    std::string problem;
    int resolution = 32;
    std::string format = "csv";
    bool gradient = false;
};

int run_surface(const SurfaceArgs& a, const Common& c)
{
    const io::Problem p = load(a.problem, c);
    if (p.dimension != 2) throw io::SchemaError("/dimension", "surface export requires dimension 2");
    if (a.resolution < 8) throw io::SchemaError("", "--resolution must be >= 8");
    const QuadricForm q = quadric(p.dissipator);
    const std::vector<RVector> pts = surface_mesh(q, a.resolution);
    if (pts.empty()) {
        warn(p.dissipator.is_zero() ? "zero rates: every state has vanishing flux, no surface to export"
                                    : "degenerate flux quadric, no surface to export");
        emit(c, "");
        return exit_ok;
    }
    if (a.format == "json") {
        ordered_json j;
        j["resolution"] = a.resolution;
        j["classification"] = std::string(to_string(q.classification));
        j["center"] = io::to_json(q.center);
        j["semi_axes"] = io::to_json(q.semi_axes);
        ordered_json rows = ordered_json::array(), grads = ordered_json::array();
        for (const auto& r : pts) {
            rows.push_back(io::to_json(r));
            if (a.gradient) grads.push_back(io::to_json(q.generator.flux_gradient(r)));
        }
        j["points"] = rows;
        if (a.gradient) j["flux_gradient"] = grads;
        emit(c, dump(j));
        return exit_ok;
    }
    std::ostringstream out;
    out.precision(17);
    out << "rx,ry,rz" << (a.gradient ? ",gx,gy,gz" : "") << "\n";
    for (const auto& r : pts) {
        out << r(0) << "," << r(1) << "," << r(2);
        if (a.gradient) {
            const RVector g = q.generator.flux_gradient(r);
            out << "," << g(0) << "," << g(1) << "," << g(2);
        }
        out << "\n";
    }
    emit(c, out.str());
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct SampleArgs {
    std::string problem;
    int n = 1000;
    std::vector<real> scales{1.0};
    std::uint64_t seed = 1;
    real rate_unit = 0.0;
    int bins = 20;
    std::string histogram;
};

int run_sample(const SampleArgs& a, const Common& c)
{
    const io::Problem p = load(a.problem, c);
    const Objective& obj = p.require_objective();
    if (a.n < 0) throw io::SchemaError("", "--n must be >= 0");
    if (a.bins < 1) throw io::SchemaError("", "--bins must be >= 1");
    ordered_json j;
    j["objective"] = std::string(to_string(obj.kind()));
    j["n"] = a.n;
    j["seed"] = a.seed;
    ordered_json sweep = ordered_json::array();
    std::vector<SampleStatistics> all;
    int best = -1;
    for (std::size_t i = 0; i < a.scales.size(); ++i) {
        if (!(a.scales[i] >= 0.0)) throw io::SchemaError("", "--scale values must be >= 0");
        // each scale reuses the same seed so sweeps are comparable point by point
        all.push_back(sample_random_hamiltonians(p.dissipator, obj, a.n, a.scales[i], a.seed, a.rate_unit, a.bins));
        sweep.push_back(io::to_json(all.back()));
        if (all.back().used > 0 && (best < 0 || all.back().mean > all[best].mean)) best = static_cast<int>(i);
    }
    j["sweep"] = sweep;
    j["max_mean"] = best < 0 ? ordered_json(nullptr) : ordered_json{{"scale", all[best].scale}, {"mean", all[best].mean}};
    if (!a.histogram.empty()) {
        std::ofstream h(a.histogram);
        if (!h) throw io::SchemaError("", "cannot write '" + a.histogram + "'");
        h.precision(17);
        h << "scale,bin_lo,bin_hi,count\n";
        for (const auto& s : all)
            for (std::size_t b = 0; b < s.histogram.size(); ++b)
                h << s.scale << "," << s.bin_edges[b] << "," << s.bin_edges[b + 1] << "," << s.histogram[b] << "\n";
    }
    emit(c, dump(j));
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string problem, hamiltonian, schedule, state, summary;
    real t_end = 10.0;
    int steps = 1000;
    StepControl control{};
    int ceiling_restarts = 16;
};

int run_simulate(const SimulateArgs& a, const Common& c)
{
    const io::Problem p = load(a.problem, c);
    const int d = p.dimension;
    if (a.hamiltonian.empty() == a.schedule.empty())
        throw io::SchemaError("", "exactly one of --hamiltonian or --schedule is required");
    if (!(a.t_end > 0.0)) throw io::SchemaError("", "--t must be > 0");
    if (a.steps < 1) throw io::SchemaError("", "--steps must be >= 1");
    ControlSchedule schedule;
    if (a.schedule.empty()) {
        schedule = ControlSchedule::constant(io::parse_hamiltonian(io::read_json_file(a.hamiltonian), d).matrix(), a.t_end);
        schedule.periodic = false;
    } else {
        schedule = io::parse_schedule(io::read_json_file(a.schedule), d, !c.lenient);
    }
    const DensityMatrix rho0 =
        a.state.empty() ? DensityMatrix::maximally_mixed(d) : io::parse_state(io::read_json_file(a.state), d);

    StepControl control = a.control;
    control.max_step = std::min(control.max_step, a.t_end / a.steps);
    const Trajectory traj = propagate(p.dissipator, schedule, rho0, a.t_end, control);
    if (traj.min_eigenvalue < -1e-6)
        throw NumericalError("integration left the state space (min eigenvalue " + std::to_string(traj.min_eigenvalue) + ")");

    const OperatorBasis basis(d);
    std::ostringstream out;
    out.precision(17);
    out << "t";
    for (int i = 0; i < basis.size(); ++i) {
        std::string label = basis.label(i);
        for (auto& ch : label) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        out << ",r" << label;
    }
    out << ",purity" << (p.objective ? ",objective" : "") << "\n";
    const auto row = [&](const TrajectorySample& s) {
        out << s.t;
        for (int i = 0; i < s.r.size(); ++i) out << "," << s.r(i);
        out << "," << purity_from_norm2(s.r.squaredNorm(), d);
        if (p.objective) {
            CMatrix rho = bloch_decode_matrix(s.r, basis);
            if (eigenvalues_of(rho).minCoeff() < 0.0) rho = project_to_states(rho);
            out << "," << (*p.objective)(rho);
        }
        out << "\n";
    };
    // thin to the requested output grid; kicks keep both pre- and post-kick rows
    int next = 0;
    const real eps = 1e-12 * std::max<real>(1.0, a.t_end);
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const auto& s = traj.samples[i];
        const bool duplicate_time = i > 0 && std::abs(traj.samples[i - 1].t - s.t) <= eps;
        if (s.t + eps >= a.t_end * next / a.steps || duplicate_time || i + 1 == traj.samples.size()) {
            row(s);
            while (next <= a.steps && a.t_end * next / a.steps <= s.t + eps) ++next;
        }
    }

    ordered_json summary;
    const RVector& rf = traj.samples.back().r;
    summary["t_end"] = a.t_end;
    summary["final_bloch"] = io::to_json(rf);
    summary["final_purity"] = purity_from_norm2(rf.squaredNorm(), d);
    if (p.objective) summary["final_objective"] = (*p.objective)(project_to_states(bloch_decode_matrix(rf, basis)));
    summary["min_eigenvalue"] = traj.min_eigenvalue;
    summary["warnings"] = traj.warnings;
    if (schedule.periodic) {
        const CycleTrajectory cyc = asymptotic_cycle(p.dissipator, schedule, control);
        ordered_json pj;
        pj["period"] = cyc.period;
        pj["unique"] = cyc.unique;
        pj["closure_defect"] = cyc.closure_defect;
        pj["max_purity"] = cyc.max_purity;
        SearchOptions so;
        so.restarts = a.ceiling_restarts;
        so.seed = p.options.seed;
        const real p1 = max_purity_on_s2(p.dissipator, so).value;
        pj["purity_ceiling"] = p1;
        pj["purity_margin"] = p1 - cyc.max_purity;
        if (p.objective) pj["time_average"] = time_average(*p.objective, cyc);
        summary["cycle"] = pj;
    }
    emit(c, out.str());
    if (a.summary.empty()) {
        std::cerr << summary.dump(2) << "\n";
    } else {
        std::ofstream s(a.summary);
        if (!s) throw io::SchemaError("", "cannot write '" + a.summary + "'");
        s << summary.dump(2) << "\n";
    }
    return exit_ok;
}

std::string fmt(real v)
{
    std::ostringstream s;
    s << v;
    return s.str();
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Optimal stationary and periodic states of coherently controlled open quantum systems.\n"
                 "Exit codes: 0 success, 2 input or schema error, 3 numerical failure.\n"
                 "DCO_THREADS caps the number of worker threads."};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_flag("--lenient", common.lenient, "Ignore unknown fields in input files (warn instead of failing)");
    app.add_option("-o,--output", common.output, "Write the result here instead of stdout");

    CheckArgs ca;
    auto* check = app.add_subcommand("check", "Evaluate the flux constraints for a state; reconstruct H when possible");
    check->add_option("problem", ca.problem, "Problem JSON")->required();
    check->add_option("state", ca.state, "Density matrix JSON (bare matrix or {\"state\": ...})")->required();
    check->add_option("--tolerance", ca.tolerance, "Flux magnitude treated as zero")->capture_default_str();
    check->add_option("--degeneracy", ca.degeneracy, "Relative eigenvalue gap treated as degenerate")
        ->capture_default_str();

    OptimizeArgs oa;
    auto* optimize = app.add_subcommand("optimize", "Maximize the objective over stabilizable states or two-point cycles");
    optimize->add_option("problem", oa.problem, "Problem JSON")->required();
    optimize->add_option("--mode", oa.mode, "static or tpc")->check(CLI::IsMember({"static", "tpc"}))->capture_default_str();
    optimize->add_option("--restarts", oa.restarts, "Multi-start count (default: problem file, else 64)");
    optimize->add_option("--seed", oa.seed, "Base seed (default: problem file, else 1)");
    optimize->add_option("--constraint-depth", oa.depth, "Highest flux moment imposed during search (default 2)");
    optimize->add_option("--certificate-tolerance", oa.certificate,
                         "Relative flux accepted as vanishing when certifying (default " +
                             fmt(StaticOptions{}.certificate_tolerance) + ")");
    optimize->add_option("--degeneracy-tolerance", oa.degeneracy,
                         "Relative gap below which an optimum counts as degenerate (default " +
                             fmt(StaticOptions{}.degeneracy_tolerance) + ")");
    bool no_timing = false;
    optimize->add_flag("--no-timing", no_timing, "Omit timing_seconds so output is byte-reproducible");

    SurfaceArgs sa;
    auto* surface = app.add_subcommand("surface", "Export the zero-flux surface of a qubit dissipator");
    surface->add_option("problem", sa.problem, "Problem JSON")->required();
    surface->add_option("--resolution", sa.resolution, "Mesh size N (N x N points)")->capture_default_str();
    surface->add_option("--format", sa.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    surface->add_flag("--gradient", sa.gradient, "Append the flux gradient at each point");

    SampleArgs sm;
    auto* sample = app.add_subcommand("sample", "Objective statistics over steady states of random Hamiltonians");
    sample->add_option("problem", sm.problem, "Problem JSON")->required();
    sample->add_option("--n", sm.n, "Samples per scale")->capture_default_str();
    sample->add_option("--scale", sm.scales, "RMS eigenvalue in units of the rate; several values make a sweep")
        ->capture_default_str();
    sample->add_option("--seed", sm.seed, "Base seed")->capture_default_str();
    sample->add_option("--rate-unit", sm.rate_unit, "Rate unit (default: largest channel rate)");
    sample->add_option("--bins", sm.bins, "Histogram bins")->capture_default_str();
    sample->add_option("--histogram", sm.histogram, "Also write histogram CSV here");

    SimulateArgs si;
    auto* simulate = app.add_subcommand("simulate", "Propagate a state and write the trajectory as CSV");
    simulate->add_option("problem", si.problem, "Problem JSON")->required();
    simulate->add_option("--hamiltonian", si.hamiltonian, "Static Hamiltonian JSON (bare or {\"hamiltonian\": ...})");
    simulate->add_option("--schedule", si.schedule, "Piecewise/kick schedule JSON");
    simulate->add_option("--state", si.state, "Initial state JSON (default: maximally mixed)");
    simulate->add_option("--t", si.t_end, "Final time")->capture_default_str();
    simulate->add_option("--steps", si.steps, "Output intervals; also caps the integration step at t/steps")
        ->capture_default_str();
    simulate->add_option("--max-step", si.control.max_step, "Largest integration step")->capture_default_str();
    simulate->add_option("--step-tolerance", si.control.local_tolerance, "Step-halving tolerance")
        ->capture_default_str();
    simulate->add_option("--ceiling-restarts", si.ceiling_restarts, "Restarts for the purity ceiling of periodic runs")
        ->capture_default_str();
    simulate->add_option("--summary", si.summary, "Write the JSON summary here (default: stderr)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }
    oa.timing = !no_timing;

    try {
        if (*check) return run_check(ca, common);
        if (*optimize) return run_optimize(oa, common);
        if (*surface) return run_surface(sa, common);
        if (*sample) return run_sample(sm, common);
        if (*simulate) return run_simulate(si, common);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    }
    return exit_input;
}
