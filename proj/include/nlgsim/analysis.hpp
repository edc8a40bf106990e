#pragma once

#include <cstddef>
#include <optional>

#include "nlgsim/core.hpp"

namespace nlgsim {

struct LyapunovParams {
    double gamma;
    double epsilon;

    // Rejects parameters outside 0 < epsilon < sqrt(2*gamma).
    static LyapunovParams make(double gamma, double epsilon);
};

struct EpsilonWindow {
    double lo;
    double hi;
    double midpoint() const noexcept { return 0.5 * (lo + hi); }
    bool contains(double eps) const noexcept { return lo < eps && eps < hi; }
};

// D^1.5 + D + 1/2
double gain_lower_bound(double D);

// Throws EmptyWindow unless gamma > gain_lower_bound(D).
EpsilonWindow epsilon_window(double gamma, double D);

// Midpoint of the window when it exists, otherwise min(2/3, sqrt(2*gamma)) / 2.
double default_epsilon(double gamma, double D) noexcept;

double lyapunov_v(const PlantState& s, const LyapunovParams& p) noexcept;

// Upper bound on dV/dt along the closed loop at a state off the switching line.
double lyapunov_decrease_bound(const PlantState& s, double D, const LyapunovParams& p);

// Cap on z = x2^2/|x1| along a trajectory: max(z(0), 2(D + gamma)).
double z_cap(const PlantState& initial, double gamma, double D);

// gamma + max(z(0), 2(D + gamma))
double control_amplitude_bound(const PlantState& initial, double gamma, double D);

// 2D + 3*gamma, the cap for starts with x2(0) = 0.
double steady_start_control_bound(double gamma, double D) noexcept;

struct AnalysisOptions {
    // Unset means automatic selection.
    std::optional<double> epsilon;
    // Relative slack on the control and z caps.
    double bound_tolerance = 1e-6;
    // Lyapunov finite differences may exceed the bound by factor*dt*|f(x)|.
    double lyapunov_tolerance_factor = 10.0;
};

// Incremental analysis, fed one sample at a time in time order. Convergence is
// detected with the scenario's stop rule, exactly as the simulator does.
class TrajectoryAnalyzer {
public:
    TrajectoryAnalyzer(const Scenario& scenario, double D, AnalysisOptions options = {});
    TrajectoryAnalyzer(const Scenario& scenario, double D, const LyapunovParams& p, AnalysisOptions options = {});

    void add(const TrajectorySample& sample);
    AnalysisReport finish() const;
    std::size_t samples_seen() const noexcept { return count_; }

private:
    void check_step(const TrajectorySample& prev, const TrajectorySample& cur);

    Scenario scenario_;
    double D_;
    AnalysisOptions options_;
    std::optional<LyapunovParams> lyap_;
    double z_cap_;
    double u_cap_;

    std::size_t count_ = 0;
    std::optional<TrajectorySample> prev_;
    double last_sign_ = 0.0;
    std::optional<double> first_sign_change_at_;
    int sign_changes_ = 0;
    std::optional<double> reach_time_;
    double max_abs_u_ = 0.0;
    double max_z_ = 0.0;
    int lyapunov_violations_ = 0;

    std::optional<double> zeta_negative_since_;
    std::optional<double> theta_;
    std::optional<double> kappa_;
    bool prev_checked_ = false;

    int streak_ = 0;
    double streak_start_ = 0.0;
    double streak_max_u_ = 0.0;
    std::optional<double> converged_at_;
    double max_abs_u_after_convergence_ = 0.0;
};

AnalysisReport analyze(const Trajectory& traj, double D, const AnalysisOptions& options = {});
AnalysisReport analyze(const Trajectory& traj, double D, const LyapunovParams& p, AnalysisOptions options = {});

struct ChatteringStats {
    double start_time = 0.0;
    std::size_t samples = 0;
    double max_abs_u = 0.0;
    // RMS of (moving average of u) + d, and RMS of d over the same samples.
    double rms_tracking_error = 0.0;
    double rms_disturbance = 0.0;
    double relative_rms() const noexcept { return rms_disturbance > 0.0 ? rms_tracking_error / rms_disturbance : 0.0; }
};

// Centered moving average of u with the given window (seconds), compared
// against -d over samples with t >= start_time whose window fits inside the record.
ChatteringStats analyze_terminal_chattering(const Trajectory& traj, double start_time, double window_seconds);

struct RescalingCheck {
    double max_deviation = 0.0;
    std::size_t compared_samples = 0;
    double overlap_end = 0.0;
    bool passed = false;
};

// Maps auxiliary samples (tau, x) to (phi(tau), x), interpolates linearly onto the
// closed-loop time grid over the common range and returns the sup-norm deviation.
RescalingCheck verify_time_rescaling(const Trajectory& aux, const Trajectory& closed_loop, double tolerance);

}  // namespace nlgsim
