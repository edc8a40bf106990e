#include "nlgsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace nlgsim {

namespace {

constexpr double kTwoThirds = 2.0 / 3.0;

double pow15(double D) { return D * std::sqrt(D); }

}  // namespace

LyapunovParams LyapunovParams::make(double gamma, double epsilon) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::InvalidParameter, "gamma must be positive");
    if (!(epsilon > 0.0) || !(epsilon < std::sqrt(2.0 * gamma)))
        throw Error(ErrorCode::InvalidParameter, "epsilon must lie in (0, sqrt(2*gamma))");
    return {gamma, epsilon};
}

double gain_lower_bound(double D) {
    if (!(D >= 0.0)) throw Error(ErrorCode::NegativeD, "D must be non-negative");
    return pow15(D) + D + 0.5;
}

EpsilonWindow epsilon_window(double gamma, double D) {
    if (!(gamma > gain_lower_bound(D)))
        throw Error(ErrorCode::EmptyWindow, "gamma does not exceed D^1.5 + D + 0.5");
    return {kTwoThirds * pow15(D) / (gamma - 0.5 - D), std::min(kTwoThirds, std::sqrt(2.0 * gamma))};
}

double default_epsilon(double gamma, double D) noexcept {
    if (D >= 0.0 && gamma > pow15(D) + D + 0.5) return epsilon_window(gamma, D).midpoint();
    return 0.5 * std::min(kTwoThirds, std::sqrt(2.0 * gamma));
}

double lyapunov_v(const PlantState& s, const LyapunovParams& p) noexcept {
    const double a = std::abs(s.x1);
    return p.gamma * a + p.epsilon * std::sqrt(a) * sign(s.x1) * s.x2 + 0.5 * s.x2 * s.x2;
}

double lyapunov_decrease_bound(const PlantState& s, double D, const LyapunovParams& p) {
    if (s.x1 == 0.0) throw Error(ErrorCode::OnSwitchingLine, "bound is undefined at x1 = 0");
    if (!epsilon_window(p.gamma, D).contains(p.epsilon))
        throw Error(ErrorCode::InvalidParameter, "epsilon lies outside the admissible window");
    const double a = std::abs(s.x1);
    const double ax2 = std::abs(s.x2);
    return -(kTwoThirds - p.epsilon) * ax2 * ax2 * ax2 / a -
           (p.epsilon * (p.gamma - 0.5 - D) - kTwoThirds * pow15(D)) * std::sqrt(a);
}

double z_cap(const PlantState& initial, double gamma, double D) {
    if (initial.x1 == 0.0) throw Error(ErrorCode::InitialX1Zero, "z(0) is undefined for x1(0) = 0");
    return std::max(initial.x2 * initial.x2 / std::abs(initial.x1), 2.0 * (D + gamma));
}

double control_amplitude_bound(const PlantState& initial, double gamma, double D) {
    return gamma + z_cap(initial, gamma, D);
}

double steady_start_control_bound(double gamma, double D) noexcept { return 2.0 * D + 3.0 * gamma; }

TrajectoryAnalyzer::TrajectoryAnalyzer(const Scenario& scenario, double D, AnalysisOptions options)
    : scenario_(scenario), D_(D), options_(options) {
    const double gamma = scenario.controller.gamma();
    if (options_.epsilon) {
        const auto p = LyapunovParams::make(gamma, *options_.epsilon);
        if (gamma > gain_lower_bound(D) && epsilon_window(gamma, D).contains(p.epsilon)) lyap_ = p;
    } else if (gamma > gain_lower_bound(D)) {
        lyap_ = LyapunovParams{gamma, epsilon_window(gamma, D).midpoint()};
    }
    const PlantState& x0 = scenario.initial;
    z_cap_ = x0.x1 != 0.0 ? z_cap(x0, gamma, D) : 2.0 * (D + gamma);
    u_cap_ = gamma + z_cap_;
}

TrajectoryAnalyzer::TrajectoryAnalyzer(const Scenario& scenario, double D, const LyapunovParams& p,
                                       AnalysisOptions options)
    : TrajectoryAnalyzer(scenario, D, (options.epsilon = p.epsilon, options)) {}

void TrajectoryAnalyzer::add(const TrajectorySample& sample) {
    ++count_;
    const PlantState& x = sample.state;
    const double tol = scenario_.stop_tolerance;
    const bool in_band = x.max_norm() < tol;
    const double abs_u = std::abs(sample.u);

    if (std::abs(x.x1) >= tol) {
        const double sg = sign(x.x1);
        if (last_sign_ != 0.0 && sg != last_sign_) {
            ++sign_changes_;
            if (!first_sign_change_at_) first_sign_change_at_ = sample.t;
        }
        last_sign_ = sg;
    }

    // Caps and the Lyapunov certificate are checked before the first band entry
    // and away from the switching line, where the sampled quotients are resolved.
    const bool checked = !reach_time_ && !in_band && std::abs(x.x1) >= tol;
    if (prev_ && prev_checked_) check_step(*prev_, sample);
    if (!reach_time_ && in_band) reach_time_ = sample.t;
    if (checked) {
        max_abs_u_ = std::max(max_abs_u_, abs_u);
        if (sample.z) {
            // theta is measured after z has settled, i.e. after its running maximum.
            if (*sample.z > max_z_ || !theta_) {
                max_z_ = std::max(max_z_, *sample.z);
                theta_ = *sample.z;
            } else {
                theta_ = std::min(*theta_, *sample.z);
            }
        }
        if (sample.zeta && *sample.zeta < 0.0) {
            if (!zeta_negative_since_) {
                zeta_negative_since_ = sample.t;
                kappa_.reset();
            }
        } else {
            zeta_negative_since_.reset();
        }
    }
    prev_checked_ = checked;

    if (!converged_at_) {
        if (in_band) {
            if (streak_ == 0) {
                streak_start_ = sample.t;
                streak_max_u_ = 0.0;
            }
            streak_max_u_ = std::max(streak_max_u_, abs_u);
            if (++streak_ >= scenario_.stop_dwell_steps) {
                converged_at_ = streak_start_;
                max_abs_u_after_convergence_ = streak_max_u_;
            }
        } else {
            streak_ = 0;
        }
    } else {
        max_abs_u_after_convergence_ = std::max(max_abs_u_after_convergence_, abs_u);
    }
    prev_ = sample;
}

void TrajectoryAnalyzer::check_step(const TrajectorySample& prev, const TrajectorySample& cur) {
    if (!lyap_ || prev.state.x1 == 0.0) return;
    const double dt = cur.t - prev.t;
    const double v0 = lyapunov_v(prev.state, *lyap_);
    const double v1 = lyapunov_v(cur.state, *lyap_);
    const double rate = (v1 - v0) / dt;
    const double bound = lyapunov_decrease_bound(prev.state, D_, *lyap_);
    const double f = std::hypot(prev.state.x2, prev.u + prev.d);
    if (rate > bound + options_.lyapunov_tolerance_factor * dt * f) ++lyapunov_violations_;
    if (zeta_negative_since_ && v0 > 0.0) {
        const double k = -rate / std::sqrt(v0);
        kappa_ = std::min(kappa_.value_or(k), k);
    }
}

AnalysisReport TrajectoryAnalyzer::finish() const {
    if (count_ == 0) throw Error(ErrorCode::EmptyTrajectory, "no samples to analyze");
    const double slack = options_.bound_tolerance;
    AnalysisReport r;
    r.sign_changes_of_x1 = sign_changes_;
    r.overshoot_detected = first_sign_change_at_ && (!converged_at_ || *first_sign_change_at_ < *converged_at_);
    r.convergence_time = converged_at_;
    r.reach_time = reach_time_;
    r.lyapunov_checked = lyap_.has_value();
    r.lyapunov_violations = lyapunov_violations_;
    r.epsilon_used = lyap_ ? lyap_->epsilon : 0.0;
    r.max_abs_u = max_abs_u_;
    r.control_bound_theoretical = u_cap_;
    r.control_bound_satisfied = max_abs_u_ <= u_cap_ * (1.0 + slack);
    r.max_z = max_z_;
    r.z_cap = z_cap_;
    r.z_bound_satisfied = max_z_ <= z_cap_ * (1.0 + slack);
    r.zeta_negative_after = zeta_negative_since_;
    r.theta_empirical = theta_;
    r.kappa_empirical = kappa_;
    r.max_abs_u_after_convergence = max_abs_u_after_convergence_;
    return r;
}

AnalysisReport analyze(const Trajectory& traj, double D, const AnalysisOptions& options) {
    if (traj.samples.empty()) throw Error(ErrorCode::EmptyTrajectory, "no samples to analyze");
    TrajectoryAnalyzer a(traj.scenario, D, options);
    for (const auto& s : traj.samples) a.add(s);
    return a.finish();
}

AnalysisReport analyze(const Trajectory& traj, double D, const LyapunovParams& p, AnalysisOptions options) {
    options.epsilon = p.epsilon;
    return analyze(traj, D, options);
}

ChatteringStats analyze_terminal_chattering(const Trajectory& traj, double start_time, double window_seconds) {
    const auto& v = traj.samples;
    if (v.empty()) throw Error(ErrorCode::EmptyTrajectory, "no samples to analyze");
    const auto first = std::lower_bound(v.begin(), v.end(), start_time,
                                        [](const TrajectorySample& s, double t) { return s.t < t; });
    const std::size_t i0 = static_cast<std::size_t>(first - v.begin());
    const std::size_t n = v.size();
    const auto half = static_cast<std::size_t>(std::llround(0.5 * window_seconds / traj.scenario.dt));

    ChatteringStats out;
    out.start_time = start_time;
    if (i0 >= n || n - i0 < 2 * half + 1) return out;

    std::vector<double> prefix(n - i0 + 1, 0.0);
    for (std::size_t i = i0; i < n; ++i) {
        prefix[i - i0 + 1] = prefix[i - i0] + v[i].u;
        out.max_abs_u = std::max(out.max_abs_u, std::abs(v[i].u));
    }
    double err2 = 0.0;
    double dist2 = 0.0;
    const double width = static_cast<double>(2 * half + 1);
    for (std::size_t j = half; j + half < n - i0; ++j) {
        const double avg = (prefix[j + half + 1] - prefix[j - half]) / width;
        const double d = v[i0 + j].d;
        err2 += (avg + d) * (avg + d);
        dist2 += d * d;
        ++out.samples;
    }
    const double m = static_cast<double>(out.samples);
    out.rms_tracking_error = std::sqrt(err2 / m);
    out.rms_disturbance = std::sqrt(dist2 / m);
    return out;
}

RescalingCheck verify_time_rescaling(const Trajectory& aux, const Trajectory& closed_loop, double tolerance) {
    const auto& a = aux.samples;
    const auto& c = closed_loop.samples;
    if (a.empty() || c.empty()) throw Error(ErrorCode::EmptyTrajectory, "both trajectories need samples");
    for (const auto& s : a)
        if (!s.phi) throw Error(ErrorCode::InvalidParameter, "auxiliary samples must carry phi");

    const double lo = std::max(*a.front().phi, c.front().t);
    const double hi = std::min(*a.back().phi, c.back().t);
    if (*a.back().phi < c.front().t || hi < lo)
        throw Error(ErrorCode::NoOverlap, "rescaled time range does not overlap the closed-loop record");

    RescalingCheck out;
    out.overlap_end = hi;
    std::size_t j = 0;
    for (const auto& cs : c) {
        if (cs.t < lo) continue;
        if (cs.t > hi) break;
        while (j + 1 < a.size() && *a[j + 1].phi < cs.t) ++j;
        PlantState x = a[j].state;
        if (j + 1 < a.size()) {
            const double p0 = *a[j].phi;
            const double p1 = *a[j + 1].phi;
            if (p1 > p0 && cs.t >= p0) {
                const double w = std::min(1.0, (cs.t - p0) / (p1 - p0));
                x = {x.x1 + w * (a[j + 1].state.x1 - x.x1), x.x2 + w * (a[j + 1].state.x2 - x.x2)};
            }
        }
        out.max_deviation = std::max(out.max_deviation, PlantState{x.x1 - cs.state.x1, x.x2 - cs.state.x2}.max_norm());
        ++out.compared_samples;
    }
    out.passed = out.max_deviation < tolerance;
    return out;
}

}  // namespace nlgsim
