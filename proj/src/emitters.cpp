#include <cmath>
#include <fstream>

#include "nlgsim/analysis.hpp"
#include "nlgsim/cli.hpp"
#include "nlgsim/dynamics.hpp"

namespace nlgsim::cli {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

void close_output(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

std::vector<PlantState> default_phase_portrait_starts() {
    std::vector<PlantState> starts;
    for (double x2 : {50.0, -50.0})
        for (double x1 : {0.25, 0.5, 0.75, 1.0}) starts.push_back({x1, x2});
    return starts;
}

std::vector<std::filesystem::path> emit_phase_portrait(double gamma, const std::vector<PlantState>& starts,
                                                       const std::filesystem::path& out_dir,
                                                       const PhasePortraitOptions& options) {
    std::vector<Scenario> scenarios;
    for (const auto& x0 : starts) {
        Scenario s{.initial = x0,
                   .controller = ControllerSpec::nlg_threshold(gamma),
                   .disturbance = DisturbanceSpec::zero(std::min(1.0, 0.5 * gamma)),
                   .dt = options.dt,
                   .t_end = options.t_end,
                   .stop_tolerance = options.stop_tolerance,
                   .stop_on_convergence = true};
        require_runnable(s);
        scenarios.push_back(std::move(s));
    }
    ensure_directory(out_dir);
    std::vector<std::filesystem::path> written;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto path = out_dir / ("phase_" + std::to_string(i) + ".csv");
        auto out = open_output(path);
        out << "t,x1,x2,u\n";
        std::size_t k = 0;
        TrajectorySample last;
        const std::size_t stride = options.stride == 0 ? 1 : options.stride;
        simulate(scenarios[i], [&](const TrajectorySample& s) {
            if (k++ % stride == 0)
                out << format_number(s.t) << ',' << format_number(s.state.x1) << ',' << format_number(s.state.x2)
                    << ',' << format_number(s.u) << '\n';
            last = s;
            return true;
        });
        // Always end on the final sample so the file shows where the run stopped.
        if ((k - 1) % stride != 0)
            out << format_number(last.t) << ',' << format_number(last.state.x1) << ','
                << format_number(last.state.x2) << ',' << format_number(last.u) << '\n';
        close_output(out, path);
        written.push_back(path);
    }
    return written;
}

void emit_gain_bound_curve(double D_max, int n_points, const std::filesystem::path& out_path) {
    if (!(D_max > 0.0) || !std::isfinite(D_max)) throw Error(ErrorCode::InvalidParameter, "D_max must be positive");
    if (n_points < 2) throw Error(ErrorCode::InvalidParameter, "at least two points are needed");
    if (out_path.has_parent_path()) ensure_directory(out_path.parent_path());
    auto out = open_output(out_path);
    out << "D,gamma_min\n";
    for (int i = 0; i < n_points; ++i) {
        const double D = D_max * static_cast<double>(i) / static_cast<double>(n_points - 1);
        out << format_number(D) << ',' << format_number(gain_lower_bound(D)) << '\n';
    }
    close_output(out, out_path);
}

ComparisonResult emit_comparison(const std::filesystem::path& out_dir) {
    constexpr double gamma = 100.0;
    constexpr double dt = 1e-6;
    constexpr double t_end = 0.5;
    constexpr double reach_tolerance = 1e-6;
    const PlantState x0{-1.0, 0.0};

    Scenario nlg{.initial = x0,
                 .controller = ControllerSpec::nlg_regularized(gamma),
                 .disturbance = DisturbanceSpec::zero(1.0),
                 .dt = dt,
                 .t_end = t_end,
                 .stop_tolerance = reach_tolerance,
                 .stop_dwell_steps = 1};
    Scenario pd = nlg;
    pd.controller = ControllerSpec::pd(gamma, 2.0 * std::sqrt(gamma));

    const Trajectory a = simulate(nlg);
    const Trajectory b = simulate(pd);

    ensure_directory(out_dir);
    ComparisonResult result;
    result.state_csv = out_dir / "compare_abs_x2.csv";
    result.control_csv = out_dir / "compare_u.csv";
    result.nlg_reach_time = a.converged_at;

    const std::size_t n = std::min(a.samples.size(), b.samples.size());
    constexpr std::size_t stride = 10;
    auto xs = open_output(result.state_csv);
    auto us = open_output(result.control_csv);
    xs << "t,nlg_abs_x2,pd_abs_x2\n";
    us << "t,nlg_u,pd_u\n";
    for (std::size_t k = 0; k < n; k += stride) {
        const auto& p = a.samples[k];
        const auto& q = b.samples[k];
        xs << format_number(p.t) << ',' << format_number(std::abs(p.state.x2)) << ','
           << format_number(std::abs(q.state.x2)) << '\n';
        us << format_number(p.t) << ',' << format_number(p.u) << ',' << format_number(q.u) << '\n';
    }
    close_output(xs, result.state_csv);
    close_output(us, result.control_csv);

    if (a.converged_at) {
        const auto k = static_cast<std::size_t>(std::llround(*a.converged_at / dt));
        result.pd_norm_at_nlg_reach = b.samples.at(k).state.max_norm();
    }
    return result;
}

}  // namespace nlgsim::cli
