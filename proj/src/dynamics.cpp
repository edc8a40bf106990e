#include "nlgsim/dynamics.hpp"

#include <cmath>

#include "nlgsim/analysis.hpp"
#include "nlgsim/controllers.hpp"

namespace nlgsim {

StateDerivative rhs_closed_loop(const PlantState& s, const ControllerSpec& controller, double d) {
    return {s.x2, controller(s) + d};
}

StateDerivative rhs_aux(const PlantState& s, double gamma, double d) noexcept {
    const double a = std::abs(s.x1);
    return {a * s.x2, -gamma * s.x1 - std::abs(s.x2) * s.x2 + a * d};
}

StateDerivative evaluate_rhs(const RhsKind& rhs, const PlantState& s, double t, double d) {
    struct Eval {
        const PlantState& s;
        double t;
        double d;
        StateDerivative operator()(const ClosedLoop& c) const { return rhs_closed_loop(s, c.controller, d); }
        StateDerivative operator()(const OpenLoopWithInput& o) const { return {s.x2, o.input(t) + d}; }
        StateDerivative operator()(const AuxSystem& a) const { return rhs_aux(s, a.gamma, d); }
    };
    return std::visit(Eval{s, t, d}, rhs);
}

PlantState step_forward_euler(const PlantState& s, const RhsKind& rhs, double t, double d_at_t, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveStep, "dt must be positive");
    const StateDerivative f = evaluate_rhs(rhs, s, t, d_at_t);
    const PlantState next{s.x1 + dt * f.dx1, s.x2 + dt * f.dx2};
    if (!next.is_finite()) throw NonFiniteStateError(t + dt);
    return next;
}

PlantState step_rk4(const PlantState& s, const RhsKind& rhs, const DisturbanceSignal& d, double t, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveStep, "dt must be positive");
    const double h = 0.5 * dt;
    const double d0 = d(t);
    const double dh = d(t + h);
    const double d1 = d(t + dt);
    const StateDerivative k1 = evaluate_rhs(rhs, s, t, d0);
    const StateDerivative k2 = evaluate_rhs(rhs, {s.x1 + h * k1.dx1, s.x2 + h * k1.dx2}, t + h, dh);
    const StateDerivative k3 = evaluate_rhs(rhs, {s.x1 + h * k2.dx1, s.x2 + h * k2.dx2}, t + h, dh);
    const StateDerivative k4 = evaluate_rhs(rhs, {s.x1 + dt * k3.dx1, s.x2 + dt * k3.dx2}, t + dt, d1);
    const PlantState next{s.x1 + dt / 6.0 * (k1.dx1 + 2.0 * k2.dx1 + 2.0 * k3.dx1 + k4.dx1),
                          s.x2 + dt / 6.0 * (k1.dx2 + 2.0 * k2.dx2 + 2.0 * k3.dx2 + k4.dx2)};
    if (!next.is_finite()) throw NonFiniteStateError(t + dt);
    return next;
}

namespace {

class SampleBuilder {
public:
    explicit SampleBuilder(const Scenario& s)
        : lyap_{s.controller.gamma(), default_epsilon(s.controller.gamma(), s.disturbance.bound())},
          floor_(s.numeric_floor()) {}

    TrajectorySample operator()(double t, const PlantState& x, double u, double d) const {
        TrajectorySample out;
        out.t = t;
        out.state = x;
        out.u = u;
        out.d = d;
        out.V = lyapunov_v(x, lyap_);
        const double a = std::abs(x.x1);
        if (a >= floor_) {
            out.zeta = x.x2 / x.x1;
            out.z = x.x2 * x.x2 / a;
        }
        return out;
    }

private:
    LyapunovParams lyap_;
    double floor_;
};

class ConvergenceTracker {
public:
    ConvergenceTracker(double tolerance, int dwell) : tolerance_(tolerance), dwell_(dwell) {}

    // Returns true once the dwell requirement has been met.
    bool update(double t, const PlantState& x) {
        if (converged_at_) return true;
        if (x.max_norm() < tolerance_) {
            if (streak_ == 0) streak_start_ = t;
            if (++streak_ >= dwell_) converged_at_ = streak_start_;
        } else {
            streak_ = 0;
        }
        return converged_at_.has_value();
    }

    std::optional<double> converged_at() const { return converged_at_; }

private:
    double tolerance_;
    int dwell_;
    int streak_ = 0;
    double streak_start_ = 0.0;
    std::optional<double> converged_at_;
};

long long step_count(const Scenario& s) { return std::llround(s.t_end / s.dt); }

void check_finite(const PlantState& x, double t) {
    if (!x.is_finite()) throw NonFiniteStateError(t);
}

}  // namespace

TrajectorySample make_sample(const Scenario& s, double t, const PlantState& x, double u, double d) {
    return SampleBuilder(s)(t, x, u, d);
}

SimulationSummary simulate(const Scenario& s, const SampleSink& sink) {
    require_runnable(s);
    const SampleBuilder build(s);
    ConvergenceTracker tracker(s.stop_tolerance, s.stop_dwell_steps);
    const ControllerSpec& ctrl = s.controller;
    const DisturbanceSpec& dist = s.disturbance;
    const long long n = step_count(s);
    const double dt = s.dt;

    SimulationSummary summary;
    PlantState x = s.initial;
    for (long long k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double u = ctrl(x);
        const double d = dist(t);
        ++summary.samples;
        summary.t_last = t;
        summary.final_state = x;
        const bool keep_going = sink(build(t, x, u, d));
        const bool converged = tracker.update(t, x);
        if (!keep_going || (converged && s.stop_on_convergence)) {
            summary.stopped_early = k < n;
            break;
        }
        if (k == n) break;

        const double t_next = static_cast<double>(k + 1) * dt;
        if (s.integrator == Integrator::ForwardEuler) {
            x = {x.x1 + dt * x.x2, x.x2 + dt * (u + d)};
        } else {
            const double h = 0.5 * dt;
            const double dh = dist(t + h);
            const double d1 = dist(t + dt);
            const PlantState s2{x.x1 + h * x.x2, x.x2 + h * (u + d)};
            const double u2 = ctrl(s2);
            const PlantState s3{x.x1 + h * s2.x2, x.x2 + h * (u2 + dh)};
            const double u3 = ctrl(s3);
            const PlantState s4{x.x1 + dt * s3.x2, x.x2 + dt * (u3 + dh)};
            const double u4 = ctrl(s4);
            x = {x.x1 + dt / 6.0 * (x.x2 + 2.0 * s2.x2 + 2.0 * s3.x2 + s4.x2),
                 x.x2 + dt / 6.0 * ((u + d) + 2.0 * (u2 + dh) + 2.0 * (u3 + dh) + (u4 + d1))};
        }
        check_finite(x, t_next);
    }
    summary.converged_at = tracker.converged_at();
    return summary;
}

Trajectory simulate(const Scenario& s) {
    Trajectory traj{{}, s, std::nullopt};
    traj.samples.reserve(static_cast<std::size_t>(std::min<long long>(step_count(s) + 1, 1LL << 22)));
    const auto summary = simulate(s, [&](const TrajectorySample& sample) {
        traj.samples.push_back(sample);
        return true;
    });
    traj.converged_at = summary.converged_at;
    return traj;
}

SimulationSummary simulate_aux(const Scenario& s, const SampleSink& sink) {
    for (const auto& d : validate_scenario(s)) {
        // The auxiliary system is defined on the whole plane.
        if (d.severity == Severity::Error && d.code != ErrorCode::InitialStateOutsideDomain)
            throw Error(*d.code, d.message);
    }
    const SampleBuilder build(s);
    ConvergenceTracker tracker(s.stop_tolerance, s.stop_dwell_steps);
    const double gamma = s.controller.gamma();
    const DisturbanceSpec& dist = s.disturbance;
    const long long n = step_count(s);
    const double dt = s.dt;

    struct Aug {
        double x1, x2, phi;
    };
    auto deriv = [&](const Aug& a) {
        const StateDerivative f = rhs_aux({a.x1, a.x2}, gamma, dist(a.phi));
        return Aug{f.dx1, f.dx2, std::abs(a.x1)};
    };
    auto axpy = [](const Aug& a, double h, const Aug& f) { return Aug{a.x1 + h * f.x1, a.x2 + h * f.x2, a.phi + h * f.phi}; };

    SimulationSummary summary;
    Aug a{s.initial.x1, s.initial.x2, 0.0};
    for (long long k = 0;; ++k) {
        const double tau = static_cast<double>(k) * dt;
        const PlantState x{a.x1, a.x2};
        TrajectorySample sample = build(tau, x, nlg_exact(x, gamma), dist(a.phi));
        sample.phi = a.phi;
        ++summary.samples;
        summary.t_last = tau;
        summary.final_state = x;
        const bool keep_going = sink(sample);
        const bool converged = tracker.update(tau, x);
        if (!keep_going || (converged && s.stop_on_convergence)) {
            summary.stopped_early = k < n;
            break;
        }
        if (k == n) break;

        if (s.integrator == Integrator::ForwardEuler) {
            a = axpy(a, dt, deriv(a));
        } else {
            const double h = 0.5 * dt;
            const Aug k1 = deriv(a);
            const Aug k2 = deriv(axpy(a, h, k1));
            const Aug k3 = deriv(axpy(a, h, k2));
            const Aug k4 = deriv(axpy(a, dt, k3));
            a = {a.x1 + dt / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1),
                 a.x2 + dt / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2),
                 a.phi + dt / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi)};
        }
        check_finite({a.x1, a.x2}, static_cast<double>(k + 1) * dt);
    }
    summary.converged_at = tracker.converged_at();
    return summary;
}

Trajectory simulate_aux(const Scenario& s) {
    Trajectory traj{{}, s, std::nullopt};
    const auto summary = simulate_aux(s, [&](const TrajectorySample& sample) {
        traj.samples.push_back(sample);
        return true;
    });
    traj.converged_at = summary.converged_at;
    return traj;
}

}  // namespace nlgsim
