#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlgsim/analysis.hpp"
#include "nlgsim/core.hpp"

namespace nlgsim::cli {

struct AnalysisSettings {
    // Overrides each scenario's declared disturbance bound when set.
    std::optional<double> D;
    AnalysisOptions options;
};

struct NamedScenario {
    std::string name;
    Scenario scenario;
    int line = 0;
};

struct ScenarioFile {
    std::vector<NamedScenario> scenarios;
    AnalysisSettings analysis;
    std::size_t stride = 1;
    std::vector<std::string> warnings;
};

// YAML document with optional `analysis` and `output` sections and a
// `scenarios` list. Throws ConfigError with a 1-based line on any problem.
ScenarioFile parse_scenario_file(std::string_view text, const std::string& source = "<config>");
ScenarioFile load_scenario_file(const std::filesystem::path& path);

inline constexpr std::string_view kTrajectoryHeader = "t,x1,x2,u,d,V,zeta,z";

// Shortest round-trip decimal form; identical input gives identical text.
std::string format_number(double v);

class CsvTrajectoryWriter {
public:
    CsvTrajectoryWriter(std::ostream& out, std::size_t stride = 1);
    void write(const TrajectorySample& s);

private:
    std::ostream& out_;
    std::size_t stride_;
    std::size_t index_ = 0;
};

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t stride = 1);

struct ReportContext {
    std::string name;
    std::string status = "ok";
};

void write_report(std::ostream& out, const AnalysisReport& report, const ReportContext& ctx);

struct RunOverrides {
    std::optional<double> dt;
    std::optional<double> t_end;
    std::optional<double> tolerance;
    bool stop_on_convergence = false;
};

struct ScenarioOutcome {
    std::string name;
    std::string status;
    std::optional<AnalysisReport> report;
    bool passed = false;
};

// Simulates, analyzes and writes <name>_trajectory.csv and <name>_report.txt
// per scenario, then summary.txt. Returns 0, 1 (config or IO error) or 2
// (a check failed).
int run(const std::filesystem::path& config, const std::filesystem::path& out_dir, const RunOverrides& overrides,
        std::ostream& log);

struct PhasePortraitOptions {
    double dt = kDefaultDt;
    double t_end = 1.0;
    double stop_tolerance = kDefaultStopTolerance;
    std::size_t stride = 10;
};

// One CSV (t,x1,x2,u) per start, written as phase_<i>.csv. Uses the threshold
// scheme with d = 0 and stops once the terminal band is held.
std::vector<std::filesystem::path> emit_phase_portrait(double gamma, const std::vector<PlantState>& starts,
                                                       const std::filesystem::path& out_dir,
                                                       const PhasePortraitOptions& options = {});

std::vector<PlantState> default_phase_portrait_starts();

// Rows (D, gain_lower_bound(D)) on a uniform grid over [0, D_max].
void emit_gain_bound_curve(double D_max, int n_points, const std::filesystem::path& out_path);

struct ComparisonResult {
    std::filesystem::path state_csv;
    std::filesystem::path control_csv;
    std::optional<double> nlg_reach_time;
    double pd_norm_at_nlg_reach = 0.0;
};

// NLG (gamma = 100) against PD (gamma = 100, sigma = 2 sqrt(gamma)) from (-1, 0), d = 0.
ComparisonResult emit_comparison(const std::filesystem::path& out_dir);

// Entry point for the command-line tool.
int main(int argc, char** argv);

}  // namespace nlgsim::cli
