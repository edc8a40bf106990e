#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "nlgsim/cli.hpp"

namespace nlgsim::cli {

namespace {

class Parser {
public:
    explicit Parser(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
        const int line = at.Mark().is_null() ? 0 : at.Mark().line + 1;
        throw ConfigError(source_, line, message);
    }

    void expect_map(const YAML::Node& n, const std::string& what) const {
        if (!n.IsMap()) fail(n, what + " must be a mapping");
    }

    void allow_keys(const YAML::Node& n, std::initializer_list<std::string_view> keys) const {
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) fail(kv.first, "unknown key '" + key + "'");
        }
    }

    double number(const YAML::Node& n, const std::string& key) const {
        const YAML::Node v = n[key];
        if (!v) fail(n, "missing required key '" + key + "'");
        return to_number(v, key);
    }

    double number_or(const YAML::Node& n, const std::string& key, double fallback) const {
        const YAML::Node v = n[key];
        return v ? to_number(v, key) : fallback;
    }

    double to_number(const YAML::Node& v, const std::string& key) const {
        if (!v.IsScalar()) fail(v, "'" + key + "' must be a number");
        try {
            const double x = v.as<double>();
            if (!std::isfinite(x)) fail(v, "'" + key + "' must be finite");
            return x;
        } catch (const YAML::BadConversion&) {
            fail(v, "'" + key + "' must be a number, got '" + v.Scalar() + "'");
        }
    }

    long long integer_or(const YAML::Node& n, const std::string& key, long long fallback) const {
        const YAML::Node v = n[key];
        if (!v) return fallback;
        try {
            return v.as<long long>();
        } catch (const YAML::BadConversion&) {
            fail(v, "'" + key + "' must be an integer");
        }
    }

    bool boolean_or(const YAML::Node& n, const std::string& key, bool fallback) const {
        const YAML::Node v = n[key];
        if (!v) return fallback;
        try {
            return v.as<bool>();
        } catch (const YAML::BadConversion&) {
            fail(v, "'" + key + "' must be true or false");
        }
    }

    std::string text(const YAML::Node& n, const std::string& key) const {
        const YAML::Node v = n[key];
        if (!v) fail(n, "missing required key '" + key + "'");
        if (!v.IsScalar()) fail(v, "'" + key + "' must be a string");
        return v.Scalar();
    }

    template <class F>
    auto guarded(const YAML::Node& at, F&& f) const {
        try {
            return f();
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            fail(at, e.what());
        }
    }

    PlantState initial_state(const YAML::Node& n) const {
        const YAML::Node v = n["initial"];
        if (!v) fail(n, "missing required key 'initial'");
        if (!v.IsSequence() || v.size() != 2) fail(v, "'initial' must be a list [x1, x2]");
        return {to_number(v[0], "initial"), to_number(v[1], "initial")};
    }

    ControllerSpec controller(const YAML::Node& n) const {
        expect_map(n, "controller");
        const std::string kind = text(n, "kind");
        return guarded(n, [&] {
            if (kind == "nlg_exact") {
                allow_keys(n, {"kind", "gamma"});
                return ControllerSpec::nlg_exact(number(n, "gamma"));
            }
            if (kind == "nlg_threshold") {
                allow_keys(n, {"kind", "gamma", "mu"});
                return ControllerSpec::nlg_threshold(number(n, "gamma"), number_or(n, "mu", kDefaultNumericFloor));
            }
            if (kind == "nlg_regularized") {
                allow_keys(n, {"kind", "gamma", "mu"});
                return ControllerSpec::nlg_regularized(number(n, "gamma"), number_or(n, "mu", kDefaultNumericFloor));
            }
            if (kind == "pd") {
                allow_keys(n, {"kind", "gamma", "sigma"});
                return ControllerSpec::pd(number(n, "gamma"), number(n, "sigma"));
            }
            fail(n["kind"], "unknown controller kind '" + kind + "'");
        });
    }

    DisturbanceSpec disturbance(const YAML::Node& n) const {
        expect_map(n, "disturbance");
        const std::string kind = text(n, "kind");
        return guarded(n, [&] {
            if (kind == "zero") {
                allow_keys(n, {"kind", "bound"});
                return DisturbanceSpec::zero(number(n, "bound"));
            }
            if (kind == "constant") {
                allow_keys(n, {"kind", "value", "bound"});
                return DisturbanceSpec::constant(number(n, "value"), number(n, "bound"));
            }
            if (kind == "sinusoid") {
                allow_keys(n, {"kind", "amplitude", "angular_frequency", "frequency_hz", "phase", "bound"});
                const bool has_w = static_cast<bool>(n["angular_frequency"]);
                const bool has_f = static_cast<bool>(n["frequency_hz"]);
                if (has_w == has_f) fail(n, "sinusoid needs exactly one of 'angular_frequency' or 'frequency_hz'");
                const double w = has_w ? number(n, "angular_frequency") : 2.0 * M_PI * number(n, "frequency_hz");
                return DisturbanceSpec::sinusoid(number(n, "amplitude"), w, number_or(n, "phase", 0.0),
                                                 number(n, "bound"));
            }
            if (kind == "table") {
                allow_keys(n, {"kind", "samples", "bound"});
                const YAML::Node rows = n["samples"];
                if (!rows || !rows.IsSequence()) fail(n, "table disturbance needs a 'samples' list of [t, d] pairs");
                std::vector<std::pair<double, double>> samples;
                for (const auto& row : rows) {
                    if (!row.IsSequence() || row.size() != 2) fail(row, "table rows must be [t, d] pairs");
                    samples.emplace_back(to_number(row[0], "samples"), to_number(row[1], "samples"));
                }
                return DisturbanceSpec::table(std::move(samples), number(n, "bound"));
            }
            fail(n["kind"], "unknown disturbance kind '" + kind + "'");
        });
    }

    NamedScenario scenario(const YAML::Node& n, std::vector<std::string>& warnings) const {
        expect_map(n, "scenario");
        allow_keys(n, {"name", "initial", "controller", "disturbance", "integrator", "dt", "t_end", "stop_tolerance",
                       "stop_dwell_steps", "stop_on_convergence"});
        NamedScenario out{text(n, "name"),
                          Scenario{.initial = initial_state(n),
                                   .controller = controller(required(n, "controller")),
                                   .disturbance = disturbance(required(n, "disturbance"))},
                          n.Mark().line + 1};
        const std::string& name = out.name;
        if (name.empty() || !std::all_of(name.begin(), name.end(), [](char c) {
                return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
            }))
            fail(n["name"], "scenario name may only contain letters, digits, '_', '-' and '.'");

        Scenario& s = out.scenario;
        s.dt = number_or(n, "dt", kDefaultDt);
        s.t_end = number_or(n, "t_end", s.t_end);
        s.stop_tolerance = number_or(n, "stop_tolerance", kDefaultStopTolerance);
        const long long dwell = integer_or(n, "stop_dwell_steps", kDefaultDwellSteps);
        if (dwell < 1 || dwell > 1'000'000'000) fail(n["stop_dwell_steps"], "'stop_dwell_steps' must be at least 1");
        s.stop_dwell_steps = static_cast<int>(dwell);
        s.stop_on_convergence = boolean_or(n, "stop_on_convergence", false);
        if (const YAML::Node integ = n["integrator"]) {
            const std::string v = text(n, "integrator");
            if (v == "euler")
                s.integrator = Integrator::ForwardEuler;
            else if (v == "rk4")
                s.integrator = Integrator::Rk4;
            else
                fail(integ, "integrator must be 'euler' or 'rk4'");
        }
        check(n, out, warnings);
        return out;
    }

    void check(const YAML::Node& at, const NamedScenario& ns, std::vector<std::string>& warnings) const {
        for (const auto& d : validate_scenario(ns.scenario)) {
            if (d.severity == Severity::Error) fail(at, "scenario '" + ns.name + "': " + d.message);
            warnings.push_back(ns.name + ": " + d.message);
        }
    }

    YAML::Node required(const YAML::Node& n, const std::string& key) const {
        const YAML::Node v = n[key];
        if (!v) fail(n, "missing required key '" + key + "'");
        return v;
    }

    void analysis(const YAML::Node& n, AnalysisSettings& out) const {
        expect_map(n, "analysis");
        allow_keys(n, {"D", "epsilon", "bound_tolerance", "lyapunov_tolerance_factor"});
        if (n["D"]) {
            out.D = number(n, "D");
            if (*out.D < 0.0) fail(n["D"], "'D' must be non-negative");
        }
        if (const YAML::Node e = n["epsilon"]; e && !(e.IsScalar() && e.Scalar() == "auto"))
            out.options.epsilon = to_number(e, "epsilon");
        out.options.bound_tolerance = number_or(n, "bound_tolerance", out.options.bound_tolerance);
        out.options.lyapunov_tolerance_factor =
            number_or(n, "lyapunov_tolerance_factor", out.options.lyapunov_tolerance_factor);
        if (out.options.bound_tolerance < 0.0 || out.options.lyapunov_tolerance_factor < 0.0)
            fail(n, "analysis tolerances must be non-negative");
    }

    ScenarioFile document(const YAML::Node& root) const {
        ScenarioFile out;
        if (!root || root.IsNull()) throw ConfigError(source_, 0, "no scenarios");
        expect_map(root, "configuration");
        allow_keys(root, {"analysis", "output", "scenarios"});
        if (const YAML::Node a = root["analysis"]) analysis(a, out.analysis);
        if (const YAML::Node o = root["output"]) {
            expect_map(o, "output");
            allow_keys(o, {"stride"});
            const long long stride = integer_or(o, "stride", 1);
            if (stride < 1) fail(o["stride"], "'stride' must be at least 1");
            out.stride = static_cast<std::size_t>(stride);
        }
        const YAML::Node list = root["scenarios"];
        if (!list || (list.IsSequence() && list.size() == 0) || list.IsNull())
            fail(list ? list : root, "no scenarios");
        if (!list.IsSequence()) fail(list, "'scenarios' must be a list");
        std::set<std::string> names;
        for (const auto& item : list) {
            NamedScenario ns = scenario(item, out.warnings);
            if (!names.insert(ns.name).second) fail(item["name"], "duplicate scenario name '" + ns.name + "'");
            out.scenarios.push_back(std::move(ns));
        }
        return out;
    }

private:
    std::string source_;
};

}  // namespace

ScenarioFile parse_scenario_file(std::string_view text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source, e.mark.is_null() ? 0 : e.mark.line + 1, e.msg);
    }
    return Parser(source).document(root);
}

ScenarioFile load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), 0, "cannot read configuration file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_file(buf.str(), path.string());
}

}  // namespace nlgsim::cli
