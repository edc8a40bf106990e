#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <variant>

#include "nlgsim/core.hpp"

namespace nlgsim {

struct StateDerivative {
    double dx1 = 0.0;
    double dx2 = 0.0;
};

struct ClosedLoop {
    ControllerSpec controller;
};

struct OpenLoopWithInput {
    std::function<double(double)> input;
};

// Auxiliary system in rescaled time: x1' = |x1| x2, x2' = -gamma x1 - |x2| x2 + |x1| d.
struct AuxSystem {
    double gamma;
};

using RhsKind = std::variant<ClosedLoop, OpenLoopWithInput, AuxSystem>;

using DisturbanceSignal = std::function<double(double)>;

// (x2, u(x) + d)
StateDerivative rhs_closed_loop(const PlantState& s, const ControllerSpec& controller, double d);

StateDerivative rhs_aux(const PlantState& s, double gamma, double d) noexcept;

StateDerivative evaluate_rhs(const RhsKind& rhs, const PlantState& s, double t, double d);

// x + dt * f(x, d(t)); throws NonFiniteStateError at t + dt.
PlantState step_forward_euler(const PlantState& s, const RhsKind& rhs, double t, double d_at_t, double dt);

// Classical RK4 with d sampled at t, t + dt/2 and t + dt.
PlantState step_rk4(const PlantState& s, const RhsKind& rhs, const DisturbanceSignal& d, double t, double dt);

// Receives every sample; returning false stops the run.
using SampleSink = std::function<bool(const TrajectorySample&)>;

struct SimulationSummary {
    std::size_t samples = 0;
    std::optional<double> converged_at;
    double t_last = 0.0;
    PlantState final_state;
    bool stopped_early = false;
};

// Fixed-step closed-loop simulation on t_k = k*dt, k = 0..round(t_end/dt).
// converged_at is the first sample of the first run of stop_dwell_steps
// consecutive samples with ||x||_inf < stop_tolerance.
SimulationSummary simulate(const Scenario& s, const SampleSink& sink);
Trajectory simulate(const Scenario& s);

// Same loop on the auxiliary system with gain controller.gamma(); t is the
// rescaled time tau, phi(tau) is integrated alongside the state and the
// disturbance is evaluated at phi. Any initial state is admissible.
SimulationSummary simulate_aux(const Scenario& s, const SampleSink& sink);
Trajectory simulate_aux(const Scenario& s);

// The sample record the simulator emits for state s at time t.
TrajectorySample make_sample(const Scenario& s, double t, const PlantState& x, double u, double d);

}  // namespace nlgsim
