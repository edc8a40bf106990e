#include <array>
#include <charconv>
#include <ostream>

#include "nlgsim/cli.hpp"

namespace nlgsim::cli {

std::string format_number(double v) {
    if (v == 0.0) return "0";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace {

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : "none"; }

const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace

CsvTrajectoryWriter::CsvTrajectoryWriter(std::ostream& out, std::size_t stride)
    : out_(out), stride_(stride == 0 ? 1 : stride) {
    out_ << kTrajectoryHeader << '\n';
}

void CsvTrajectoryWriter::write(const TrajectorySample& s) {
    if (index_++ % stride_ != 0) return;
    out_ << format_number(s.t) << ',' << format_number(s.state.x1) << ',' << format_number(s.state.x2) << ','
         << format_number(s.u) << ',' << format_number(s.d) << ',' << format_number(s.V) << ',';
    if (s.zeta) out_ << format_number(*s.zeta);
    out_ << ',';
    if (s.z) out_ << format_number(*s.z);
    out_ << '\n';
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t stride) {
    CsvTrajectoryWriter w(out, stride);
    for (const auto& s : traj.samples) w.write(s);
}

void write_report(std::ostream& out, const AnalysisReport& r, const ReportContext& ctx) {
    out << "scenario=" << ctx.name << '\n'
        << "status=" << ctx.status << '\n'
        << "all_checks_passed=" << flag(ctx.status == "ok" && r.all_checks_passed()) << '\n'
        << "overshoot_detected=" << flag(r.overshoot_detected) << '\n'
        << "sign_changes_of_x1=" << r.sign_changes_of_x1 << '\n'
        << "convergence_time=" << optional_number(r.convergence_time) << '\n'
        << "reach_time=" << optional_number(r.reach_time) << '\n'
        << "lyapunov_checked=" << flag(r.lyapunov_checked) << '\n'
        << "lyapunov_violations=" << r.lyapunov_violations << '\n'
        << "epsilon_used=" << format_number(r.epsilon_used) << '\n'
        << "max_abs_u=" << format_number(r.max_abs_u) << '\n'
        << "control_bound_theoretical=" << format_number(r.control_bound_theoretical) << '\n'
        << "control_bound_satisfied=" << flag(r.control_bound_satisfied) << '\n'
        << "max_z=" << format_number(r.max_z) << '\n'
        << "z_cap=" << format_number(r.z_cap) << '\n'
        << "z_bound_satisfied=" << flag(r.z_bound_satisfied) << '\n'
        << "zeta_negative_after=" << optional_number(r.zeta_negative_after) << '\n'
        << "theta_empirical=" << optional_number(r.theta_empirical) << '\n'
        << "kappa_empirical=" << optional_number(r.kappa_empirical) << '\n'
        << "max_abs_u_after_convergence=" << format_number(r.max_abs_u_after_convergence) << '\n';
}

}  // namespace nlgsim::cli
