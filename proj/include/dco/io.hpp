#pragma once

#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dco/dynamics.hpp"
#include "dco/optimizer.hpp"

namespace dco::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Input that violates the file schema; `path` is a JSON pointer, empty for
/// errors about a whole document or a command-line flag.
class SchemaError : public ValidationError {
public:
    SchemaError(std::string path, const std::string& msg)
        : ValidationError(path.empty() ? msg : path + ": " + msg), path_(std::move(path))
    {
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Schema helpers.  Strict readers reject unknown fields; lenient ones record
/// them as warnings.
class Reader {
public:
    explicit Reader(bool strict = true) : strict_(strict) {}

    const std::vector<std::string>& warnings() const { return warnings_; }

    void object(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed)
    {
        if (!j.is_object()) throw SchemaError(path, "expected an object");
        for (const auto& [key, value] : j.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
            const std::string where = path + "/" + escape(key);
            if (strict_) throw SchemaError(where, "unknown field");
            warnings_.push_back(where + ": unknown field ignored");
        }
    }

    static const json& required(const json& j, const std::string& path, const std::string& key)
    {
        if (!j.contains(key)) throw SchemaError(path + "/" + escape(key), "required field missing");
        return j.at(key);
    }

    static real number(const json& j, const std::string& path)
    {
        if (!j.is_number()) throw SchemaError(path, "expected a number");
        const real v = j.get<real>();
        if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
        return v;
    }

    static real non_negative(const json& j, const std::string& path)
    {
        const real v = number(j, path);
        if (v < 0.0) throw SchemaError(path, "must be >= 0");
        return v;
    }

    static long long integer(const json& j, const std::string& path)
    {
        if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
        return j.get<long long>();
    }

    static std::string string(const json& j, const std::string& path)
    {
        if (!j.is_string()) throw SchemaError(path, "expected a string");
        return j.get<std::string>();
    }

    static bool boolean(const json& j, const std::string& path)
    {
        if (!j.is_boolean()) throw SchemaError(path, "expected a boolean");
        return j.get<bool>();
    }

    static complex complex_number(const json& j, const std::string& path)
    {
        if (!j.is_array() || j.size() != 2) throw SchemaError(path, "expected a complex number [re, im]");
        return {number(j[0], path + "/0"), number(j[1], path + "/1")};
    }

    /// Square matrix of [re, im] pairs, row major.
    static CMatrix matrix(const json& j, const std::string& path, int dim = -1)
    {
        if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a non-empty array of rows");
        const int n = static_cast<int>(j.size());
        if (dim > 0 && n != dim)
            throw SchemaError(path, "expected " + std::to_string(dim) + " rows, got " + std::to_string(n));
        CMatrix m(n, n);
        for (int r = 0; r < n; ++r) {
            const std::string rp = path + "/" + std::to_string(r);
            if (!j[r].is_array() || static_cast<int>(j[r].size()) != n)
                throw SchemaError(rp, "expected a row of " + std::to_string(n) + " entries");
            for (int c = 0; c < n; ++c) m(r, c) = complex_number(j[r][c], rp + "/" + std::to_string(c));
        }
        return m;
    }

    static RVector vector(const json& j, const std::string& path, int size = -1)
    {
        if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
        const int n = static_cast<int>(j.size());
        if (size >= 0 && n != size)
            throw SchemaError(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(n));
        RVector v(n);
        for (int i = 0; i < n; ++i) v(i) = number(j[i], path + "/" + std::to_string(i));
        return v;
    }

    static std::string escape(const std::string& key)
    {
        std::string out;
        for (char c : key) {
            if (c == '~') out += "~0";
            else if (c == '/') out += "~1";
            else out += c;
        }
        return out;
    }

private:
    bool strict_;
    std::vector<std::string> warnings_;
};

// ---------------------------------------------------------------------------
// Problem files

struct Tolerances {
    real check = 1e-9;           // flux magnitude treated as zero by `check`
    real degeneracy = tol::degeneracy;
    real certificate = 1e-7;     // optimizer certification, relative to the rate scale
    real optimizer_degeneracy = 1e-6;
};

struct ProblemOptions {
    int restarts = 64;
    std::uint64_t seed = 1;
    int constraint_depth = 2;
    Tolerances tolerances{};
};

struct Problem {
    int dimension = 2;
    DissipatorSpec dissipator{2};
    std::optional<Objective> objective;
    ProblemOptions options{};
    std::vector<std::string> warnings;

    const Objective& require_objective() const
    {
        if (!objective) throw SchemaError("/objective", "required by this command");
        return *objective;
    }
    StaticOptions static_options() const
    {
        StaticOptions s;
        s.restarts = options.restarts;
        s.seed = options.seed;
        s.constraint_depth = options.constraint_depth;
        s.certificate_tolerance = options.tolerances.certificate;
        s.degeneracy_tolerance = options.tolerances.optimizer_degeneracy;
        return s;
    }
};

namespace detail {

inline int qubit_of(const json& ch, const std::string& path, int nq)
{
    if (!ch.contains("qubit")) return 0;
    const long long q = Reader::integer(ch["qubit"], path + "/qubit");
    if (q < 0 || q >= nq)
        throw SchemaError(path + "/qubit", "qubit index out of range [0, " + std::to_string(nq - 1) + "]");
    return static_cast<int>(q);
}

inline Objective parse_objective(Reader& rd, const json& j, const std::string& path, int dim)
{
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    const std::string kind_path = path + "/kind";
    const std::string kind_name = Reader::string(Reader::required(j, path, "kind"), kind_path);
    ObjectiveKind kind;
    try {
        kind = objective_kind_from_string(kind_name);
    } catch (const ValidationError&) {
        throw SchemaError(kind_path, "unknown objective '" + kind_name +
                                         "' (expected coherence, bell-fidelity, concurrence, purity, linear)");
    }
    const auto need_dim = [&](int want) {
        if (dim != want)
            throw SchemaError(kind_path, kind_name + " requires dimension " + std::to_string(want));
    };
    switch (kind) {
    case ObjectiveKind::coherence:
        rd.object(j, path, {"kind"});
        need_dim(2);
        return Objective::coherence();
    case ObjectiveKind::concurrence:
        rd.object(j, path, {"kind"});
        need_dim(4);
        return Objective::concurrence();
    case ObjectiveKind::purity:
        rd.object(j, path, {"kind"});
        return Objective::purity(dim);
    case ObjectiveKind::bell_fidelity: {
        rd.object(j, path, {"kind", "target"});
        need_dim(4);
        std::string target = "psi+";
        if (j.contains("target")) target = Reader::string(j["target"], path + "/target");
        if (target == "psi+") return Objective::bell_fidelity(bell::psi_plus());
        if (target == "psi-") return Objective::bell_fidelity(bell::psi_minus());
        throw SchemaError(path + "/target", "expected \"psi+\" or \"psi-\"");
    }
    case ObjectiveKind::linear: {
        rd.object(j, path, {"kind", "observable"});
        const std::string op = path + "/observable";
        const CMatrix m = Reader::matrix(Reader::required(j, path, "observable"), op, dim);
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol::hermitian * std::max<real>(1.0, m.cwiseAbs().maxCoeff()))
            throw SchemaError(op, "observable must be Hermitian");
        return Objective::linear(m);
    }
    }
    throw SchemaError(kind_path, "unsupported objective");
}

}  // namespace detail

/// Problem document:
///   {"dimension": d,
///    "dissipator": [{"channel": "decay"|"absorption"|"dephasing", "rate": g, "qubit": q}
///                   | {"channel": "custom", "rate": g, "operator": M, "label": s}],
///    "objective": {"kind": id, ...},
///    "options": {"restarts", "seed", "constraint_depth", "tolerances": {...}}}
inline Problem parse_problem(const json& j, bool strict = true)
{
    Reader rd(strict);
    rd.object(j, "", {"dimension", "dissipator", "objective", "options"});
    Problem p;
    const long long dim = Reader::integer(Reader::required(j, "", "dimension"), "/dimension");
    if (dim < 2 || dim > 64) throw SchemaError("/dimension", "must lie in [2, 64]");
    p.dimension = static_cast<int>(dim);
    p.dissipator = DissipatorSpec(p.dimension);

    const json& dj = Reader::required(j, "", "dissipator");
    if (!dj.is_array()) throw SchemaError("/dissipator", "expected an array of channels");
    const int nq = qubit_count(p.dimension);
    for (std::size_t i = 0; i < dj.size(); ++i) {
        const std::string path = "/dissipator/" + std::to_string(i);
        const json& ch = dj[i];
        if (!ch.is_object()) throw SchemaError(path, "expected an object");
        const std::string kind = Reader::string(Reader::required(ch, path, "channel"), path + "/channel");
        if (kind == "custom") rd.object(ch, path, {"channel", "rate", "operator", "label"});
        else rd.object(ch, path, {"channel", "rate", "qubit"});
        const real rate = Reader::non_negative(Reader::required(ch, path, "rate"), path + "/rate");
        if (kind == "custom") {
            const CMatrix op = Reader::matrix(Reader::required(ch, path, "operator"), path + "/operator", p.dimension);
            std::string label = "custom";
            if (ch.contains("label")) label = Reader::string(ch["label"], path + "/label");
            p.dissipator.add(op, rate, label);
            continue;
        }
        if (kind != "decay" && kind != "absorption" && kind != "dephasing")
            throw SchemaError(path + "/channel",
                              "unknown channel '" + kind + "' (expected decay, absorption, dephasing, custom)");
        if (nq < 0) throw SchemaError(path + "/channel", "named channels require a qubit register (d = 2^n)");
        const int q = detail::qubit_of(ch, path, nq);
        if (kind == "decay") p.dissipator.add_decay(rate, q);
        else if (kind == "absorption") p.dissipator.add_absorption(rate, q);
        else p.dissipator.add_dephasing(rate, q);
    }

    if (j.contains("objective")) p.objective = detail::parse_objective(rd, j["objective"], "/objective", p.dimension);

    if (j.contains("options")) {
        const json& o = j["options"];
        rd.object(o, "/options", {"restarts", "seed", "constraint_depth", "tolerances"});
        if (o.contains("restarts")) {
            const long long r = Reader::integer(o["restarts"], "/options/restarts");
            if (r < 1) throw SchemaError("/options/restarts", "must be >= 1");
            p.options.restarts = static_cast<int>(r);
        }
        if (o.contains("seed")) {
            if (!o["seed"].is_number_unsigned()) throw SchemaError("/options/seed", "expected a non-negative integer");
            p.options.seed = o["seed"].get<std::uint64_t>();
        }
        if (o.contains("constraint_depth")) {
            const long long c = Reader::integer(o["constraint_depth"], "/options/constraint_depth");
            if (c < 2 || c > p.dimension)
                throw SchemaError("/options/constraint_depth", "must lie in [2, dimension]");
            p.options.constraint_depth = static_cast<int>(c);
        }
        if (o.contains("tolerances")) {
            const json& t = o["tolerances"];
            const std::string tp = "/options/tolerances";
            rd.object(t, tp, {"check", "degeneracy", "certificate", "optimizer_degeneracy"});
            const auto positive = [&](const char* key, real& dst) {
                if (!t.contains(key)) return;
                const std::string path = tp + "/" + key;
                dst = Reader::number(t[key], path);
                if (!(dst > 0.0)) throw SchemaError(path, "must be > 0");
            };
            positive("check", p.options.tolerances.check);
            positive("degeneracy", p.options.tolerances.degeneracy);
            positive("certificate", p.options.tolerances.certificate);
            positive("optimizer_degeneracy", p.options.tolerances.optimizer_degeneracy);
        }
    }
    p.warnings = rd.warnings();
    return p;
}

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw SchemaError("", "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("", "'" + path + "' is not valid JSON: " + e.what());
    }
}

inline Problem read_problem(const std::string& path, bool strict = true)
{
    return parse_problem(read_json_file(path), strict);
}

/// A density matrix given bare, or under "state" (as in `optimize` output).
inline DensityMatrix parse_state(const json& j, int dim)
{
    const bool wrapped = j.is_object();
    const json& m = wrapped ? Reader::required(j, "", "state") : j;
    const std::string path = wrapped ? "/state" : "";
    const CMatrix rho = Reader::matrix(m, path, dim);
    try {
        return DensityMatrix(rho);
    } catch (const ValidationError& e) {
        throw SchemaError(path, e.what());
    }
}

/// A Hamiltonian given bare, or under "hamiltonian" (as in `optimize` output).
inline HermitianMatrix parse_hamiltonian(const json& j, int dim)
{
    const bool wrapped = j.is_object();
    const json& m = wrapped ? Reader::required(j, "", "hamiltonian") : j;
    const std::string path = wrapped ? "/hamiltonian" : "";
    if (m.is_object()) throw SchemaError(path, "no finite Hamiltonian (boundary limit descriptor)");
    try {
        return HermitianMatrix(Reader::matrix(m, path, dim));
    } catch (const SchemaError&) {
        throw;
    } catch (const ValidationError& e) {
        throw SchemaError(path, e.what());
    }
}

/// {"periodic": bool, "segments": [{"duration": t, "hamiltonian": H, "kick": U}]};
/// the kick, if present, is applied at the start of its segment.
inline ControlSchedule parse_schedule(const json& j, int dim, bool strict = true)
{
    Reader rd(strict);
    rd.object(j, "", {"periodic", "segments"});
    ControlSchedule s;
    if (j.contains("periodic")) s.periodic = Reader::boolean(j["periodic"], "/periodic");
    const json& segs = Reader::required(j, "", "segments");
    if (!segs.is_array() || segs.empty()) throw SchemaError("/segments", "expected a non-empty array");
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string path = "/segments/" + std::to_string(i);
        const json& sj = segs[i];
        rd.object(sj, path, {"duration", "hamiltonian", "kick"});
        Segment seg;
        seg.duration = Reader::non_negative(Reader::required(sj, path, "duration"), path + "/duration");
        seg.hamiltonian = sj.contains("hamiltonian") ? Reader::matrix(sj["hamiltonian"], path + "/hamiltonian", dim)
                                                     : CMatrix(CMatrix::Zero(dim, dim));
        if ((seg.hamiltonian - seg.hamiltonian.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
            throw SchemaError(path + "/hamiltonian", "must be Hermitian");
        if (sj.contains("kick")) {
            const CMatrix u = Reader::matrix(sj["kick"], path + "/kick", dim);
            if ((u * u.adjoint() - CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-10)
                throw SchemaError(path + "/kick", "must be unitary");
            seg.kick = u;
        }
        s.segments.push_back(std::move(seg));
    }
    try {
        s.validate(dim);
    } catch (const ValidationError& e) {
        throw SchemaError("/segments", e.what());
    }
    return s;
}

// ---------------------------------------------------------------------------
// Output

/// Adding +0.0 folds −0.0 into 0.0 so printed output has no signed zeros.
inline real unsigned_zero(real x) { return x + 0.0; }

inline ordered_json to_json(const CMatrix& m)
{
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({unsigned_zero(m(r, c).real()), unsigned_zero(m(r, c).imag())});
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ordered_json to_json(const RVector& v)
{
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(unsigned_zero(v(i)));
    return a;
}

inline ordered_json to_json(const ConstraintReport& rep)
{
    ordered_json j;
    ordered_json values = ordered_json::array();
    for (std::size_t i = 0; i < rep.values.size(); ++i) values.push_back({{"n", i + 2}, {"value", rep.values[i]}});
    j["verdict"] = std::string(to_string(rep.verdict));
    j["constraints"] = values;
    j["max_abs"] = rep.max_abs;
    j["nondegenerate"] = rep.nondegenerate;
    j["eigenvalues"] = to_json(rep.eigenvalues);
    return j;
}

inline ordered_json to_json(const StabilizingControl& h)
{
    if (const auto* m = std::get_if<HermitianMatrix>(&h)) return to_json(m->matrix());
    if (const auto* b = std::get_if<BoundaryLimit>(&h)) {
        ordered_json j;
        j["family"] = b->family.empty() ? ordered_json(nullptr) : ordered_json(b->family);
        j["limit"] = b->limit;
        if (!b->family.empty())
            j["probe"] = {{"alpha", b->probe_alpha}, {"beta", b->probe_beta}, {"trace_distance", b->probe_distance}};
        return j;
    }
    return nullptr;
}

inline ordered_json to_json(const StaticOptimum& o)
{
    const OperatorBasis basis(o.state.dim());
    ordered_json j;
    j["mode"] = "static";
    j["value"] = o.value;
    j["certificate"] = std::string(to_string(o.certificate));
    j["state"] = to_json(o.state.matrix());
    j["bloch"] = to_json(bloch_encode(o.state, basis).coords);
    j["hamiltonian"] = to_json(o.hamiltonian);
    j["residuals"] = {{"max_flux", o.constraints.max_abs}, {"stationarity", o.stationarity_residual}};
    j["constraints"] = to_json(o.constraints);
    j["restarts"] = {{"used", o.restarts_used}, {"feasible", o.feasible_restarts}};
    j["notes"] = o.notes;
    return j;
}

inline ordered_json to_json(const TwoPointCycle& c, int dim)
{
    const OperatorBasis basis(dim);
    ordered_json j;
    j["value"] = c.value;
    j["degenerate"] = c.degenerate;
    j["r_plus"] = to_json(c.r_plus);
    j["r_minus"] = to_json(c.r_minus);
    j["state_plus"] = to_json(bloch_decode_matrix(c.r_plus, basis));
    j["state_minus"] = to_json(bloch_decode_matrix(c.r_minus, basis));
    j["flux_plus"] = c.flux_plus;
    j["flux_minus"] = c.flux_minus;
    j["dwell_ratio"] = c.dwell_ratio;
    return j;
}

inline ordered_json to_json(const TpcResult& r)
{
    const int dim = r.static_optimum.state.dim();
    ordered_json j;
    j["mode"] = "tpc";
    j["value"] = r.cycle.value;
    j["degenerate"] = r.cycle.degenerate;
    j["upper_bound"] = r.upper_bound;
    j["cycle"] = to_json(r.cycle, dim);
    j["best_nondegenerate"] = r.best_nondegenerate ? to_json(*r.best_nondegenerate, dim) : ordered_json(nullptr);
    j["static_value"] = r.static_value;
    j["purity_ceiling"] = r.purity_ceiling;
    j["parametrization"] = r.parametrization;
    // keeps the document readable by `check` and `simulate`
    j["state"] = to_json(r.static_optimum.state.matrix());
    j["hamiltonian"] = to_json(r.static_optimum.hamiltonian);
    j["static"] = to_json(r.static_optimum);
    return j;
}

inline ordered_json to_json(const SampleStatistics& s)
{
    ordered_json j;
    j["requested"] = s.requested;
    j["used"] = s.used;
    j["skipped_nonunique"] = s.skipped_nonunique;
    j["scale"] = s.scale;
    if (s.used == 0) {
        j["mean"] = nullptr;
        j["stddev"] = nullptr;
        j["min"] = nullptr;
        j["max"] = nullptr;
    } else {
        j["mean"] = s.mean;
        j["stddev"] = s.stddev;
        j["min"] = s.min;
        j["max"] = s.max;
    }
    j["histogram"] = {{"edges", s.bin_edges}, {"counts", s.histogram}};
    return j;
}

}  // namespace dco::io
