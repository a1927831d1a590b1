#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dco/dissipator.hpp"

namespace dco {

/// One piece of a control schedule: an optional instantaneous unitary kick
/// ρ ↦ UρU† applied at the segment start, then evolution under a static
/// Hamiltonian for `duration`.
struct Segment {
    real duration = 0.0;
    CMatrix hamiltonian;
    std::optional<CMatrix> kick;
};

/// Constant, piecewise-constant and kick-sequence Hamiltonians share this
/// representation.  A periodic schedule repeats with period = Σ durations;
/// otherwise the last segment's Hamiltonian continues past the schedule end.
struct ControlSchedule {
    std::vector<Segment> segments;
    bool periodic = false;

    static ControlSchedule constant(const CMatrix& h, real duration = 1.0)
    {
        return {{Segment{duration, h, std::nullopt}}, true};
    }
    static ControlSchedule piecewise(std::vector<std::pair<real, CMatrix>> pieces, bool periodic = true)
    {
        ControlSchedule s{{}, periodic};
        for (auto& [t, h] : pieces) s.segments.push_back({t, std::move(h), std::nullopt});
        return s;
    }

    real period() const
    {
        real t = 0.0;
        for (const auto& s : segments) t += s.duration;
        return t;
    }
    int dim() const { return segments.empty() ? 0 : static_cast<int>(segments.front().hamiltonian.rows()); }

    void validate(int dim) const
    {
        if (segments.empty()) throw ValidationError("ControlSchedule: no segments");
        for (const auto& s : segments) {
            if (!(s.duration >= 0.0)) throw ValidationError("ControlSchedule: negative duration");
            if (s.hamiltonian.rows() != dim || s.hamiltonian.cols() != dim)
                throw ValidationError("ControlSchedule: Hamiltonian dimension mismatch");
            if ((s.hamiltonian - s.hamiltonian.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
                throw ValidationError("ControlSchedule: Hamiltonian is not Hermitian");
            if (s.kick) {
                if (s.kick->rows() != dim || s.kick->cols() != dim)
                    throw ValidationError("ControlSchedule: kick dimension mismatch");
                if ((*s.kick * s.kick->adjoint() - CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-9)
                    throw ValidationError("ControlSchedule: kick is not unitary");
            }
        }
        if (periodic && !(period() > 0.0)) throw ValidationError("ControlSchedule: period must be > 0");
    }
};

struct StepControl {
    real max_step = 1e-2;
    real local_tolerance = 1e-10;
    real min_step = 1e-12;
};

struct TrajectorySample {
    real t;
    RVector r;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    real min_eigenvalue = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

/// Classical RK4 step for y' = f(y).
template <typename Y, typename F>
Y rk4_step(const F& f, const Y& y, real h)
{
    const Y k1 = f(y);
    const Y k2 = f(Y(y + 0.5 * h * k1));
    const Y k3 = f(Y(y + 0.5 * h * k2));
    const Y k4 = f(Y(y + h * k3));
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Step-propagator for the augmented affine system over one segment.  The
/// step is halved until one step of size h and two of size h/2 agree within
/// the local tolerance; the accepted propagator is the Richardson
/// combination of the two.  For linear dynamics the check is state
/// independent, so every trajectory through the segment uses the same steps.
struct SegmentStepper {
    RMatrix step;  // one-step propagator on (r, 1)
    int count = 0;
};

inline SegmentStepper make_stepper(const RMatrix& augmented, real duration, const StepControl& control)
{
    SegmentStepper out;
    if (duration <= 0.0) {
        out.step = RMatrix::Identity(augmented.rows(), augmented.cols());
        return out;
    }
    const auto f = [&](const RMatrix& y) -> RMatrix { return augmented * y; };
    const RMatrix id = RMatrix::Identity(augmented.rows(), augmented.cols());
    int count = std::max(1, static_cast<int>(std::ceil(duration / control.max_step)));
    for (;;) {
        const real h = duration / count;
        if (h < control.min_step) throw NumericalError("propagate: step size underflow");
        const RMatrix full = rk4_step(f, id, h);
        const RMatrix halfstep = rk4_step(f, id, 0.5 * h);
        const RMatrix half = halfstep * halfstep;
        const real err = (full - half).cwiseAbs().maxCoeff();
        if (err <= control.local_tolerance) {
            out.step = half + (half - full) / 15.0;
            out.count = count;
            return out;
        }
        count *= 2;
    }
}

}  // namespace detail

/// Integrates the Lindblad equation in Bloch coordinates with RK4 under a
/// control schedule from t = 0 to t_end, recording every `sample_stride`-th
/// step (segment boundaries are always recorded, before and after a kick).
class Propagator {
public:
    Propagator(const DissipatorSpec& spec, ControlSchedule schedule, StepControl control = {})
        : basis_(spec.dim()), schedule_(std::move(schedule)), control_(control)
    {
        schedule_.validate(spec.dim());
        const BlochGenerator gen = bloch_generator(spec, basis_);
        for (const auto& seg : schedule_.segments) {
            BlochAffine aff{hamiltonian_generator(seg.hamiltonian, basis_) + gen.D / basis_.kappa(),
                            gen.d / real(spec.dim())};
            Compiled c;
            c.augmented = aff.augmented();
            c.stepper = detail::make_stepper(c.augmented, seg.duration, control_);
            if (seg.kick) c.kick = unitary_action(*seg.kick, basis_);
            compiled_.push_back(std::move(c));
        }
    }

    const OperatorBasis& basis() const { return basis_; }
    const ControlSchedule& schedule() const { return schedule_; }

    Trajectory run(const RVector& r0, real t_end, int sample_stride = 1) const
    {
        Trajectory traj;
        RVector y(r0.size() + 1);
        y << r0, 1.0;
        real t = 0.0;
        traj.min_eigenvalue = monitor(y, traj);
        traj.samples.push_back({t, r0});
        std::size_t idx = 0;
        const real eps = 1e-12 * std::max<real>(1.0, t_end);
        while (t_end - t > eps) {
            const auto& seg = schedule_.segments[idx];
            const auto& c = compiled_[idx];
            if (c.kick) {
                y.head(r0.size()) = *c.kick * y.head(r0.size());
                traj.samples.push_back({t, y.head(r0.size())});
            }
            const bool last = idx + 1 == schedule_.segments.size();
            const bool open_ended = last && !schedule_.periodic;
            real remaining = open_ended ? t_end - t : std::min(seg.duration, t_end - t);
            if (!open_ended && seg.duration - remaining <= eps) remaining = seg.duration;
            if (remaining > 0.0) {
                const detail::SegmentStepper partial =
                    (open_ended || remaining < seg.duration)
                        ? detail::make_stepper(c.augmented, remaining, control_)
                        : c.stepper;
                for (int k = 1; k <= partial.count; ++k) {
                    y = partial.step * y;
                    const real tk = t + remaining * k / partial.count;
                    if (k == partial.count || k % sample_stride == 0) {
                        traj.samples.push_back({tk, y.head(r0.size())});
                        traj.min_eigenvalue = std::min(traj.min_eigenvalue, monitor(y, traj));
                    }
                }
                t += remaining;
            }
            if (open_ended) break;
            idx = (idx + 1) % schedule_.segments.size();
        }
        return traj;
    }

    /// Affine map r ↦ Φ r + φ over one full period, stored in homogeneous form.
    RMatrix monodromy() const
    {
        const auto n = static_cast<Eigen::Index>(basis_.size());
        RMatrix m = RMatrix::Identity(n + 1, n + 1);
        for (std::size_t i = 0; i < compiled_.size(); ++i) {
            if (compiled_[i].kick) m.topRows(n) = *compiled_[i].kick * m.topRows(n);
            for (int k = 0; k < compiled_[i].stepper.count; ++k) m = compiled_[i].stepper.step * m;
        }
        return m;
    }

private:
    struct Compiled {
        RMatrix augmented;
        detail::SegmentStepper stepper;
        std::optional<RMatrix> kick;
    };

    real monitor(const RVector& y, Trajectory& traj) const
    {
        const real floor = eigenvalues_of(bloch_decode_matrix(y.head(y.size() - 1), basis_)).minCoeff();
        if (floor < -1e-8 && traj.warnings.empty())
            traj.warnings.push_back("eigenvalue floor violated: " + std::to_string(floor));
        return floor;
    }

    OperatorBasis basis_;
    ControlSchedule schedule_;
    StepControl control_;
    std::vector<Compiled> compiled_;
};

inline Trajectory propagate(const DissipatorSpec& spec, const ControlSchedule& schedule, const DensityMatrix& rho0,
                            real t_end, StepControl control = {}, int sample_stride = 1)
{
    Propagator p(spec, schedule, control);
    return p.run(bloch_encode(rho0, p.basis()).coords, t_end, sample_stride);
}

struct CycleSample {
    real t;
    DensityMatrix state;
};

struct CycleTrajectory {
    real period = 0.0;
    std::vector<CycleSample> samples;
    real closure_defect = 0.0;  // |r(T) − r(0)| for the propagated fixed point
    bool unique = true;         // monodromy eigenvalue 1 is simple
    real max_purity = 0.0;
};

/// Periodic asymptotic state of a periodic schedule: the fixed point of the
/// one-period affine (monodromy) map, followed through one sampled period.
inline CycleTrajectory asymptotic_cycle(const DissipatorSpec& spec, const ControlSchedule& schedule,
                                        StepControl control = {}, int sample_stride = 1)
{
    if (!schedule.periodic) throw ValidationError("asymptotic_cycle: schedule must be periodic");
    Propagator p(spec, schedule, control);
    const auto n = static_cast<Eigen::Index>(p.basis().size());
    const RMatrix m = p.monodromy();
    const RMatrix lhs = RMatrix::Identity(n, n) - m.topLeftCorner(n, n);
    const RVector rhs = m.topRightCorner(n, 1);

    Eigen::JacobiSVD<RMatrix> svd(lhs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector& sv = svd.singularValues();
    int small = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) <= 1e-9 * std::max<real>(1.0, sv(0))) ++small;

    CycleTrajectory cycle;
    cycle.period = schedule.period();
    cycle.unique = small == 0;
    RVector r0;
    if (cycle.unique) {
        Eigen::PartialPivLU<RMatrix> lu(lhs);
        r0 = lu.solve(rhs);
        r0 += lu.solve(rhs - lhs * r0);
    } else {
        svd.setThreshold(1e-9);
        r0 = svd.solve(rhs);
    }

    Trajectory traj = p.run(r0, cycle.period, sample_stride);
    cycle.closure_defect = (traj.samples.back().r - r0).norm();
    for (const auto& s : traj.samples) {
        CMatrix rho = bloch_decode_matrix(s.r, p.basis());
        if (eigenvalues_of(rho).minCoeff() < 0.0) rho = project_to_states(rho);
        cycle.samples.push_back({s.t, DensityMatrix(rho)});
        cycle.max_purity = std::max(cycle.max_purity, purity_from_norm2(s.r.squaredNorm(), spec.dim()));
    }
    return cycle;
}

}  // namespace dco
