#include <doctest.h>

#include <cmath>
#include <random>

#include "nlgsim/analysis.hpp"
#include "nlgsim/dynamics.hpp"
#include "oracles.hpp"

using namespace nlgsim;

namespace {

Scenario periodic(const ControllerSpec& c, double dt = 1e-6) {
    return Scenario{.initial = {-1.0, 0.0},
                    .controller = c,
                    .disturbance = DisturbanceSpec::sinusoid(50.0, 20.0 * M_PI, 0.0, 50.0),
                    .dt = dt,
                    .t_end = 0.5,
                    .stop_tolerance = 1e-3,
                    .stop_dwell_steps = 100};
}

// A hand-made trajectory for feeding the analyzer directly.
Trajectory synthetic(const Scenario& s, const std::vector<PlantState>& states, const std::vector<double>& u) {
    Trajectory tr{{}, s, std::nullopt};
    for (std::size_t k = 0; k < states.size(); ++k)
        tr.samples.push_back(make_sample(s, static_cast<double>(k) * s.dt, states[k], u[k], 0.0));
    return tr;
}

}  // namespace

TEST_CASE("gain lower bound examples") {
    CHECK(gain_lower_bound(0.0) == 0.5);
    CHECK(gain_lower_bound(50.0) == doctest::Approx(404.0534).epsilon(1e-3 / 404.0));
    CHECK(gain_lower_bound(4.0) == doctest::Approx(12.5).epsilon(1e-15));
    CHECK_THROWS_AS(gain_lower_bound(-1.0), Error);
    try {
        gain_lower_bound(-1.0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NegativeD);
    }
}

TEST_CASE("gain lower bound is increasing and convex") {
    double prev = gain_lower_bound(0.0);
    double prev_slope = -INFINITY;
    for (int i = 1; i <= 1000; ++i) {
        const double D = 0.05 * i;
        const double g = gain_lower_bound(D);
        const double slope = (g - prev) / 0.05;
        REQUIRE(g > prev);
        REQUIRE(slope >= prev_slope);
        prev = g;
        prev_slope = slope;
    }
}

TEST_CASE("epsilon window examples") {
    const auto w = epsilon_window(405.0, 50.0);
    CHECK(w.lo == doctest::Approx(2.0 / 3.0 * 353.5534 / 354.5).epsilon(1e-6));
    CHECK(w.lo == doctest::Approx(0.66489).epsilon(1e-5));
    CHECK(w.hi == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(w.lo < w.hi);
    CHECK(w.contains(w.midpoint()));
    CHECK_FALSE(w.contains(w.lo));

    const auto z = epsilon_window(1.0, 0.0);
    CHECK(z.lo == 0.0);
    CHECK(z.hi == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    try {
        epsilon_window(100.0, 50.0);
        FAIL("expected EmptyWindow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyWindow);
    }
}

TEST_CASE("default epsilon") {
    CHECK(default_epsilon(405.0, 50.0) == epsilon_window(405.0, 50.0).midpoint());
    // Without a window the fallback still gives a positive definite V.
    const double e = default_epsilon(100.0, 50.0);
    CHECK(e > 0.0);
    CHECK(e < std::sqrt(200.0));
}

TEST_CASE("Lyapunov parameters are validated") {
    CHECK_NOTHROW(LyapunovParams::make(100.0, 0.5));
    CHECK_THROWS_AS(LyapunovParams::make(100.0, 0.0), Error);
    CHECK_THROWS_AS(LyapunovParams::make(100.0, std::sqrt(200.0)), Error);
    CHECK_THROWS_AS(LyapunovParams::make(0.0, 0.1), Error);
}

TEST_CASE("Lyapunov function examples") {
    CHECK(lyapunov_v({0.0, 0.0}, {100.0, 0.1}) == 0.0);
    CHECK(lyapunov_v({1.0, 0.0}, {100.0, 0.1}) == 100.0);
    CHECK(lyapunov_v({-1.0, 2.0}, {100.0, 0.5}) == 101.0);
}

TEST_CASE("Lyapunov function is positive definite") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const double g = 0.01 + 1000.0 * unit(rng);
        const double e = std::sqrt(2.0 * g) * (1.0 - unit(rng));
        const double scale = std::pow(10.0, -6.0 + 8.0 * unit(rng));
        const PlantState s{scale * (2.0 * unit(rng) - 1.0), scale * (2.0 * unit(rng) - 1.0)};
        if (s.is_origin()) continue;
        REQUIRE(lyapunov_v(s, {g, e}) > 0.0);
    }
}

TEST_CASE("Lyapunov decrease bound examples") {
    const LyapunovParams p{405.0, 0.666};
    const double c = 0.666 * 354.5 - 2.0 / 3.0 * std::pow(50.0, 1.5);
    // Direct arithmetic: 0.666 * 354.5 - (2/3) * 353.5534 = 0.39474.
    CHECK(lyapunov_decrease_bound({1.0, 0.0}, 50.0, p) == doctest::Approx(-c).epsilon(1e-12));
    CHECK(lyapunov_decrease_bound({1.0, 0.0}, 50.0, p) == doctest::Approx(-0.39474).epsilon(1e-4));
    CHECK(lyapunov_decrease_bound({1.0, 1.0}, 50.0, p) ==
          doctest::Approx(-c - (2.0 / 3.0 - 0.666)).epsilon(1e-12));
    CHECK(lyapunov_decrease_bound({1.0, 1.0}, 50.0, p) == doctest::Approx(-0.39541).epsilon(1e-4));
    // Along x2 = 0 the bound shrinks like sqrt|x1|.
    CHECK(std::abs(lyapunov_decrease_bound({1e-12, 0.0}, 50.0, p)) < 1e-6);
    CHECK(lyapunov_decrease_bound({-4.0, 0.0}, 50.0, p) == doctest::Approx(-2.0 * c).epsilon(1e-12));
}

TEST_CASE("Lyapunov decrease bound errors") {
    try {
        lyapunov_decrease_bound({0.0, 1.0}, 50.0, {405.0, 0.666});
        FAIL("expected OnSwitchingLine");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OnSwitchingLine);
    }
    CHECK_THROWS_AS(lyapunov_decrease_bound({1.0, 1.0}, 50.0, {405.0, 0.5}), Error);
    CHECK_THROWS_AS(lyapunov_decrease_bound({1.0, 1.0}, 50.0, {100.0, 0.5}), Error);
}

TEST_CASE("decrease bound is negative off the switching line") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const double D = 50.0 * unit(rng);
        const double g = gain_lower_bound(D) * (1.001 + unit(rng));
        const auto w = epsilon_window(g, D);
        const double e = w.lo + (w.hi - w.lo) * (0.01 + 0.98 * unit(rng));
        const PlantState s{10.0 * (2.0 * unit(rng) - 1.0) + 1e-3, 10.0 * (2.0 * unit(rng) - 1.0)};
        const double b = lyapunov_decrease_bound(s, D, {g, e});
        REQUIRE(b < 0.0);
        REQUIRE(oracle::rel_err(b, oracle::decrease_bound(s.x1, s.x2, g, D, e)) < 1e-12L);
    }
}

TEST_CASE("z cap and control amplitude bound examples") {
    CHECK(control_amplitude_bound({-1.0, 0.0}, 100.0, 50.0) == 400.0);
    CHECK(control_amplitude_bound({-1.0, 0.0}, 100.0, 50.0) == steady_start_control_bound(100.0, 50.0));
    CHECK(control_amplitude_bound({-1.0, 30.0}, 100.0, 50.0) == 1000.0);
    CHECK(control_amplitude_bound({1.0, 0.0}, 7.0, 0.0) == 21.0);
    CHECK(z_cap({-1.0, 30.0}, 100.0, 50.0) == 900.0);
    try {
        z_cap({0.0, 1.0}, 100.0, 50.0);
        FAIL("expected InitialX1Zero");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InitialX1Zero);
    }
}

TEST_CASE("analyze: periodic disturbance run has no overshoot") {
    const Trajectory tr = simulate(periodic(ControllerSpec::nlg_threshold(100.0, 1e-9)));
    const auto r = analyze(tr, 50.0);
    CHECK_FALSE(r.overshoot_detected);
    CHECK(r.sign_changes_of_x1 == 0);
    REQUIRE(r.convergence_time.has_value());
    CHECK(r.convergence_time == tr.converged_at);
    // gamma = 100 is below the sufficient bound, so there is no certificate to check.
    CHECK_FALSE(r.lyapunov_checked);
    CHECK(r.control_bound_satisfied);
    CHECK(r.z_bound_satisfied);
    CHECK(r.control_bound_theoretical == 400.0);
    CHECK(r.all_checks_passed());
}

TEST_CASE("analyze: all-zero trajectory") {
    Scenario s{.initial = {0.0, 0.0},
               .controller = ControllerSpec::nlg_exact(100.0),
               .disturbance = DisturbanceSpec::zero(1.0),
               .dt = 1e-3,
               .t_end = 0.5};
    const auto r = analyze(simulate(s), 1.0);
    CHECK_FALSE(r.overshoot_detected);
    REQUIRE(r.convergence_time.has_value());
    CHECK(*r.convergence_time == 0.0);
    CHECK(r.max_abs_u == 0.0);
    CHECK(r.max_abs_u_after_convergence == 0.0);
    CHECK(r.lyapunov_violations == 0);
    CHECK(r.all_checks_passed());
}

TEST_CASE("analyze: certificate holds above the gain bound") {
    Scenario s = periodic(ControllerSpec::nlg_exact(405.0));
    s.stop_dwell_steps = 1;
    s.stop_on_convergence = true;
    const Trajectory tr = simulate(s);
    const auto w = epsilon_window(405.0, 50.0);
    const auto r = analyze(tr, 50.0, LyapunovParams::make(405.0, w.midpoint()));
    CHECK(r.lyapunov_checked);
    CHECK(r.epsilon_used == w.midpoint());
    CHECK(r.lyapunov_violations == 0);
    CHECK(r.control_bound_satisfied);
    CHECK(r.max_abs_u <= steady_start_control_bound(405.0, 50.0));
    CHECK(r.z_bound_satisfied);
    CHECK(r.all_checks_passed());
    REQUIRE(r.theta_empirical.has_value());
    CHECK(*r.theta_empirical > 0.0);
    REQUIRE(r.zeta_negative_after.has_value());
    REQUIRE(r.kappa_empirical.has_value());
    CHECK(*r.kappa_empirical > 0.0);
    MESSAGE("theta " << *r.theta_empirical << ", kappa " << *r.kappa_empirical << ", zeta<0 after "
                     << *r.zeta_negative_after);
}

TEST_CASE("analyze: epsilon outside the window disables the certificate") {
    const Trajectory tr = simulate(periodic(ControllerSpec::nlg_threshold(405.0, 1e-9)));
    AnalysisOptions o;
    o.epsilon = 0.1;
    CHECK_FALSE(analyze(tr, 50.0, o).lyapunov_checked);
}

TEST_CASE("analyze: synthetic crossing is flagged as overshoot") {
    Scenario s{.initial = {-1.0, 0.0},
               .controller = ControllerSpec::nlg_exact(100.0),
               .disturbance = DisturbanceSpec::zero(1.0),
               .dt = 0.01,
               .t_end = 1.0,
               .stop_tolerance = 1e-3,
               .stop_dwell_steps = 2};
    const std::vector<PlantState> cross = {{-1.0, 0.0}, {-0.5, 1.0}, {0.5, 1.0}, {0.1, -1.0}, {0.0, 0.0}, {0.0, 0.0}};
    const auto r = analyze(synthetic(s, cross, std::vector<double>(cross.size(), 0.0)), 1.0);
    CHECK(r.overshoot_detected);
    CHECK(r.sign_changes_of_x1 == 1);
    CHECK(r.convergence_time == doctest::Approx(0.04));
    CHECK_FALSE(r.all_checks_passed());

    // Sign flips inside the terminal band after convergence are not overshoot.
    const std::vector<PlantState> settle = {{-1.0, 0.0}, {-1e-4, 0.0}, {1e-4, 0.0}, {-1e-4, 0.0}};
    const auto q = analyze(synthetic(s, settle, std::vector<double>(settle.size(), 0.0)), 1.0);
    CHECK_FALSE(q.overshoot_detected);
    CHECK(q.sign_changes_of_x1 == 0);
}

TEST_CASE("analyze: control bound flag agrees with the measured amplitude") {
    Scenario s{.initial = {-1.0, 0.0},
               .controller = ControllerSpec::nlg_exact(100.0),
               .disturbance = DisturbanceSpec::zero(50.0),
               .dt = 0.01,
               .t_end = 1.0};
    const double cap = control_amplitude_bound(s.initial, 100.0, 50.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        std::vector<PlantState> xs;
        std::vector<double> us;
        for (int k = 0; k < 20; ++k) {
            xs.push_back({-1.0 + 0.04 * k, 0.1});
            us.push_back(cap * 1.2 * (2.0 * unit(rng) - 1.0));
        }
        const auto r = analyze(synthetic(s, xs, us), 50.0);
        double m = 0.0;
        for (double u : us) m = std::max(m, std::abs(u));
        CHECK(r.max_abs_u == m);
        CHECK(r.control_bound_satisfied == (m <= cap * (1.0 + 1e-6)));
    }
}

TEST_CASE("analyze rejects empty trajectories") {
    Trajectory tr{{}, periodic(ControllerSpec::nlg_exact(100.0)), std::nullopt};
    try {
        analyze(tr, 50.0);
        FAIL("expected EmptyTrajectory");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyTrajectory);
    }
    TrajectoryAnalyzer a(tr.scenario, 50.0);
    CHECK_THROWS_AS(a.finish(), Error);
}

TEST_CASE("streaming analyzer matches the stored-trajectory analysis") {
    const Scenario s = periodic(ControllerSpec::nlg_regularized(100.0, 1e-9));
    TrajectoryAnalyzer a(s, 50.0);
    simulate(s, [&](const TrajectorySample& x) {
        a.add(x);
        return true;
    });
    const auto streamed = a.finish();
    const auto stored = analyze(simulate(s), 50.0);
    CHECK(streamed.convergence_time == stored.convergence_time);
    CHECK(streamed.max_abs_u == stored.max_abs_u);
    CHECK(streamed.max_z == stored.max_z);
    CHECK(streamed.theta_empirical == stored.theta_empirical);
    CHECK(streamed.kappa_empirical == stored.kappa_empirical);
}

TEST_CASE("terminal chattering statistics on synthetic data") {
    Scenario s{.initial = {-1.0, 0.0},
               .controller = ControllerSpec::nlg_exact(100.0),
               .disturbance = DisturbanceSpec::constant(5.0, 5.0),
               .dt = 1.0,
               .t_end = 100.0};
    Trajectory tr{{}, s, std::nullopt};
    for (int k = 0; k < 20; ++k) {
        TrajectorySample x;
        x.t = k;
        x.d = 5.0;
        x.u = -5.0 + (k % 2 == 0 ? 3.0 : -3.0);
        tr.samples.push_back(x);
    }
    // Three-sample averages of +-3 alternate between +1 and -1.
    const auto c = analyze_terminal_chattering(tr, 4.0, 2.0);
    CHECK(c.samples == 14);
    CHECK(c.max_abs_u == 8.0);
    CHECK(c.rms_tracking_error == doctest::Approx(1.0));
    CHECK(c.rms_disturbance == doctest::Approx(5.0));
    CHECK(c.relative_rms() == doctest::Approx(0.2));

    for (auto& x : tr.samples) x.u = -5.0;
    CHECK(analyze_terminal_chattering(tr, 0.0, 2.0).rms_tracking_error == 0.0);
    // A window longer than the record leaves nothing to compare.
    CHECK(analyze_terminal_chattering(tr, 0.0, 50.0).samples == 0);
}

namespace {

double rescaling_deviation(double gamma, const DisturbanceSpec& dist, PlantState x0, double dt,
                           Integrator integrator) {
    Scenario aux_s{.initial = x0,
                   .controller = ControllerSpec::nlg_exact(gamma),
                   .disturbance = dist,
                   .dt = 1e-3,
                   .t_end = 1e5,
                   .integrator = Integrator::Rk4,
                   .stop_tolerance = 1e-2,
                   .stop_dwell_steps = 1,
                   .stop_on_convergence = true};
    const Trajectory aux = simulate_aux(aux_s);
    const double t_stop = *aux.samples.back().phi;
    Scenario cl{.initial = x0,
                .controller = ControllerSpec::nlg_exact(gamma),
                .disturbance = dist,
                .dt = dt,
                .t_end = std::ceil(t_stop / dt) * dt + dt,
                .integrator = integrator};
    const auto r = verify_time_rescaling(aux, simulate(cl), 1e-2);
    CHECK(r.compared_samples > 0);
    return r.max_deviation;
}

}  // namespace

TEST_CASE("time rescaling: undisturbed run converges with the step") {
    const auto zero = DisturbanceSpec::zero(1.0);
    const double coarse = rescaling_deviation(100.0, zero, {-1.0, 0.0}, 1e-5, Integrator::ForwardEuler);
    const double fine = rescaling_deviation(100.0, zero, {-1.0, 0.0}, 5e-6, Integrator::ForwardEuler);
    CHECK(coarse < 1e-2);
    CHECK(coarse / fine >= 1.8);
}

TEST_CASE("time rescaling: constant disturbance above the gain bound") {
    // Euler with dt = 1e-5 does not resolve this stiff loop, so the direct run uses RK4.
    const double dev =
        rescaling_deviation(405.0, DisturbanceSpec::constant(50.0, 50.0), {-1.0, 0.0}, 1e-5, Integrator::Rk4);
    CHECK(dev < 1e-2);
}

TEST_CASE("time rescaling: origin gives zero deviation") {
    Scenario s{.initial = {0.0, 0.0},
               .controller = ControllerSpec::nlg_exact(100.0),
               .disturbance = DisturbanceSpec::zero(1.0),
               .dt = 1e-3,
               .t_end = 0.1};
    const Trajectory aux = simulate_aux(s);
    s.t_end = 0.05;
    const auto r = verify_time_rescaling(aux, simulate(s), 1e-2);
    CHECK(r.max_deviation == 0.0);
    CHECK(r.passed);
}

TEST_CASE("time rescaling: disjoint records are rejected") {
    Scenario s{.initial = {-1.0, 0.0},
               .controller = ControllerSpec::nlg_exact(100.0),
               .disturbance = DisturbanceSpec::zero(1.0),
               .dt = 1e-3,
               .t_end = 0.01};
    const Trajectory aux = simulate_aux(s);
    Trajectory cl = simulate(s);
    for (auto& x : cl.samples) x.t += 10.0;
    try {
        verify_time_rescaling(aux, cl, 1e-2);
        FAIL("expected NoOverlap");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoOverlap);
    }
    // Closed-loop samples carry no phi and cannot stand in for the auxiliary run.
    CHECK_THROWS_AS(verify_time_rescaling(cl, cl, 1e-2), Error);
}
