#include <CLI11.hpp>

#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "nlgsim/cli.hpp"
#include "nlgsim/dynamics.hpp"

namespace nlgsim::cli {

namespace {

struct Job {
    const NamedScenario* named;
    double D;
};

ScenarioOutcome run_one(const Job& job, const AnalysisOptions& options, std::size_t stride,
                        const std::filesystem::path& out_dir) {
    const Scenario& s = job.named->scenario;
    ScenarioOutcome outcome{job.named->name, "ok", std::nullopt, false};
    const auto csv_path = out_dir / (outcome.name + "_trajectory.csv");
    const auto report_path = out_dir / (outcome.name + "_report.txt");

    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw Error(ErrorCode::IoError, "cannot write " + csv_path.string());
    CsvTrajectoryWriter writer(csv, stride);
    TrajectoryAnalyzer analyzer(s, job.D, options);
    try {
        simulate(s, [&](const TrajectorySample& sample) {
            writer.write(sample);
            analyzer.add(sample);
            return true;
        });
    } catch (const NonFiniteStateError& e) {
        outcome.status = "non_finite_state_at_t=" + format_number(e.time());
    }
    csv.close();
    if (!csv) throw Error(ErrorCode::IoError, "failed writing " + csv_path.string());

    outcome.report = analyzer.finish();
    outcome.passed = outcome.status == "ok" && outcome.report->all_checks_passed();

    std::ofstream report(report_path, std::ios::binary | std::ios::trunc);
    if (!report) throw Error(ErrorCode::IoError, "cannot write " + report_path.string());
    write_report(report, *outcome.report, {outcome.name, outcome.status});
    report.close();
    if (!report) throw Error(ErrorCode::IoError, "failed writing " + report_path.string());
    return outcome;
}

void apply_overrides(ScenarioFile& file, const RunOverrides& o) {
    for (auto& ns : file.scenarios) {
        Scenario& s = ns.scenario;
        if (o.dt) s.dt = *o.dt;
        if (o.t_end) s.t_end = *o.t_end;
        if (o.tolerance) s.stop_tolerance = *o.tolerance;
        if (o.stop_on_convergence) s.stop_on_convergence = true;
        for (const auto& d : validate_scenario(s))
            if (d.severity == Severity::Error)
                throw ConfigError("<command line>", 0, "scenario '" + ns.name + "': " + d.message);
    }
}

}  // namespace

int run(const std::filesystem::path& config, const std::filesystem::path& out_dir, const RunOverrides& overrides,
        std::ostream& log) {
    ScenarioFile file;
    std::vector<Job> jobs;
    try {
        file = load_scenario_file(config);
        apply_overrides(file, overrides);
        for (const auto& ns : file.scenarios) {
            const double D = file.analysis.D.value_or(ns.scenario.disturbance.bound());
            // Surfaces an unusable epsilon before any simulation starts.
            TrajectoryAnalyzer probe(ns.scenario, D, file.analysis.options);
            jobs.push_back({&ns, D});
        }
    } catch (const ConfigError& e) {
        log << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        log << "error: " << config.string() << ": " << e.what() << '\n';
        return 1;
    }
    for (const auto& w : file.warnings) log << "warning: " << w << '\n';

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        log << "error: cannot create " << out_dir.string() << ": " << ec.message() << '\n';
        return 1;
    }

    std::vector<std::future<ScenarioOutcome>> futures;
    for (const auto& job : jobs)
        futures.push_back(std::async(std::launch::async, run_one, job, file.analysis.options, file.stride, out_dir));

    std::vector<ScenarioOutcome> outcomes;
    bool io_failed = false;
    for (auto& f : futures) {
        try {
            outcomes.push_back(f.get());
        } catch (const std::exception& e) {
            log << "error: " << e.what() << '\n';
            io_failed = true;
        }
    }
    if (io_failed) return 1;

    std::ostringstream summary;
    bool all_passed = true;
    for (const auto& o : outcomes) {
        summary << o.name << ' ' << (o.passed ? "pass" : "fail") << ' ' << o.status << '\n';
        log << o.name << ": " << (o.passed ? "pass" : "FAIL") << (o.status == "ok" ? "" : " (" + o.status + ")")
            << '\n';
        all_passed = all_passed && o.passed;
    }
    const auto summary_path = out_dir / "summary.txt";
    std::ofstream out(summary_path, std::ios::binary | std::ios::trunc);
    out << summary.str();
    out.close();
    if (!out) {
        log << "error: failed writing " << summary_path.string() << '\n';
        return 1;
    }
    return all_passed ? 0 : 2;
}

namespace {

PlantState parse_state(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw CLI::ValidationError("--start", "expected x1,x2 but got '" + text + "'");
    try {
        return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
    } catch (const std::exception&) {
        throw CLI::ValidationError("--start", "expected x1,x2 but got '" + text + "'");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification toolkit for the non-overshooting quasi-continuous sliding-mode controller"};
    app.require_subcommand(1);

    std::filesystem::path config, out_dir;
    RunOverrides overrides;
    double dt = 0.0, t_end = 0.0, tolerance = 0.0;
    auto* run_cmd = app.add_subcommand("run", "Simulate and check every scenario of a configuration file");
    run_cmd->add_option("config", config, "Scenario file (YAML)")->required();
    run_cmd->add_option("-o,--out", out_dir, "Output directory")->required();
    auto* dt_opt = run_cmd->add_option("--dt", dt, "Override the step size")->check(CLI::PositiveNumber);
    auto* t_end_opt = run_cmd->add_option("--t-end", t_end, "Override the horizon")->check(CLI::PositiveNumber);
    auto* tol_opt =
        run_cmd->add_option("--tolerance", tolerance, "Override the stop tolerance")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--stop-on-convergence", overrides.stop_on_convergence, "Stop each run once converged");

    double pp_gamma = 100.0;
    std::vector<std::string> pp_starts;
    PhasePortraitOptions pp_options;
    std::filesystem::path pp_out;
    auto* pp_cmd = app.add_subcommand("phase-portrait", "Emit closed-loop trajectories for several initial states");
    pp_cmd->add_option("-o,--out", pp_out, "Output directory")->required();
    pp_cmd->add_option("--gamma", pp_gamma, "Controller gain")->check(CLI::PositiveNumber);
    pp_cmd->add_option("--start", pp_starts, "Initial state x1,x2 (repeatable)");
    pp_cmd->add_option("--dt", pp_options.dt, "Step size")->check(CLI::PositiveNumber);
    pp_cmd->add_option("--t-end", pp_options.t_end, "Horizon")->check(CLI::PositiveNumber);
    pp_cmd->add_option("--tolerance", pp_options.stop_tolerance, "Terminal band")->check(CLI::PositiveNumber);
    pp_cmd->add_option("--stride", pp_options.stride, "Write every n-th sample")->check(CLI::PositiveNumber);

    double d_max = 10.0;
    int n_points = 101;
    std::filesystem::path gc_out;
    auto* gc_cmd = app.add_subcommand("gain-curve", "Emit the minimal gain as a function of the disturbance bound");
    gc_cmd->add_option("-o,--out", gc_out, "Output CSV file")->required();
    gc_cmd->add_option("--d-max", d_max, "Largest disturbance bound")->check(CLI::PositiveNumber);
    gc_cmd->add_option("--points", n_points, "Number of grid points")->check(CLI::Range(2, 10'000'000));

    std::filesystem::path cmp_out;
    auto* cmp_cmd = app.add_subcommand("compare", "Emit the NLG versus PD comparison from (-1, 0)");
    cmp_cmd->add_option("-o,--out", cmp_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run_cmd) {
            if (*dt_opt) overrides.dt = dt;
            if (*t_end_opt) overrides.t_end = t_end;
            if (*tol_opt) overrides.tolerance = tolerance;
            return run(config, out_dir, overrides, std::cerr);
        }
        if (*pp_cmd) {
            std::vector<PlantState> starts;
            for (const auto& s : pp_starts) starts.push_back(parse_state(s));
            if (starts.empty()) starts = default_phase_portrait_starts();
            for (const auto& p : emit_phase_portrait(pp_gamma, starts, pp_out, pp_options))
                std::cout << p.string() << '\n';
            return 0;
        }
        if (*gc_cmd) {
            emit_gain_bound_curve(d_max, n_points, gc_out);
            std::cout << gc_out.string() << '\n';
            return 0;
        }
        if (*cmp_cmd) {
            const auto r = emit_comparison(cmp_out);
            std::cout << r.state_csv.string() << '\n' << r.control_csv.string() << '\n';
            std::cout << "nlg_reach_time=" << (r.nlg_reach_time ? format_number(*r.nlg_reach_time) : "none") << '\n'
                      << "pd_norm_at_nlg_reach=" << format_number(r.pd_norm_at_nlg_reach) << '\n';
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NonFiniteStateError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace nlgsim::cli
