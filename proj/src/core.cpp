#include "nlgsim/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlgsim/analysis.hpp"
#include "nlgsim/controllers.hpp"

namespace nlgsim {

bool PlantState::is_finite() const noexcept { return std::isfinite(x1) && std::isfinite(x2); }

double PlantState::max_norm() const noexcept { return std::max(std::abs(x1), std::abs(x2)); }

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::GammaTooSmall: return "GammaTooSmall";
        case ErrorCode::InitialStateOutsideDomain: return "InitialStateOutsideDomain";
        case ErrorCode::NonPositiveStep: return "NonPositiveStep";
        case ErrorCode::InvalidHorizon: return "InvalidHorizon";
        case ErrorCode::InvalidStopRule: return "InvalidStopRule";
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::DisturbanceOutOfBound: return "DisturbanceOutOfBound";
        case ErrorCode::NonFiniteState: return "NonFiniteState";
        case ErrorCode::NegativeD: return "NegativeD";
        case ErrorCode::EmptyWindow: return "EmptyWindow";
        case ErrorCode::OnSwitchingLine: return "OnSwitchingLine";
        case ErrorCode::InitialX1Zero: return "InitialX1Zero";
        case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
        case ErrorCode::NoOverlap: return "NoOverlap";
        case ErrorCode::ConfigParse: return "ConfigParse";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {

std::string time_message(double t) {
    std::ostringstream os;
    os.precision(17);
    os << "state became non-finite at t=" << t;
    return os.str();
}

std::string config_message(const std::string& source, int line, const std::string& message) {
    std::string out = source;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + message;
}

void require(bool ok, ErrorCode code, const char* what) {
    if (!ok) throw Error(code, what);
}

}  // namespace

NonFiniteStateError::NonFiniteStateError(double t) : Error(ErrorCode::NonFiniteState, time_message(t)), time_(t) {}

ConfigError::ConfigError(std::string source, int line, const std::string& message)
    : Error(ErrorCode::ConfigParse, config_message(source, line, message)),
      source_(std::move(source)),
      line_(line),
      message_(message) {}

DisturbanceSpec DisturbanceSpec::zero(double bound) {
    require(std::isfinite(bound) && bound > 0.0, ErrorCode::InvalidParameter, "disturbance bound must be positive");
    return {Zero{}, bound};
}

DisturbanceSpec DisturbanceSpec::constant(double value, double bound) {
    require(std::isfinite(bound) && bound > 0.0, ErrorCode::InvalidParameter, "disturbance bound must be positive");
    require(std::isfinite(value), ErrorCode::InvalidParameter, "constant disturbance must be finite");
    require(std::abs(value) <= bound, ErrorCode::DisturbanceOutOfBound, "|c| exceeds the declared bound");
    return {Constant{value}, bound};
}

DisturbanceSpec DisturbanceSpec::sinusoid(double amplitude, double angular_frequency, double phase, double bound) {
    require(std::isfinite(bound) && bound > 0.0, ErrorCode::InvalidParameter, "disturbance bound must be positive");
    require(std::isfinite(amplitude) && std::isfinite(angular_frequency) && std::isfinite(phase),
            ErrorCode::InvalidParameter, "sinusoid parameters must be finite");
    require(std::abs(amplitude) <= bound, ErrorCode::DisturbanceOutOfBound, "amplitude exceeds the declared bound");
    return {Sinusoid{amplitude, angular_frequency, phase}, bound};
}

DisturbanceSpec DisturbanceSpec::table(std::vector<std::pair<double, double>> samples, double bound) {
    require(std::isfinite(bound) && bound > 0.0, ErrorCode::InvalidParameter, "disturbance bound must be positive");
    require(!samples.empty(), ErrorCode::InvalidParameter, "table disturbance needs at least one sample");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto [t, d] = samples[i];
        require(std::isfinite(t) && std::isfinite(d), ErrorCode::InvalidParameter, "table entries must be finite");
        require(std::abs(d) <= bound, ErrorCode::DisturbanceOutOfBound, "table value exceeds the declared bound");
        if (i > 0)
            require(t > samples[i - 1].first, ErrorCode::InvalidParameter, "table times must strictly increase");
    }
    return {TableLookup{std::move(samples)}, bound};
}

double DisturbanceSpec::operator()(double t) const {
    struct Eval {
        double t;
        double operator()(const Zero&) const { return 0.0; }
        double operator()(const Constant& c) const { return c.value; }
        double operator()(const Sinusoid& s) const { return s.amplitude * std::sin(s.angular_frequency * t + s.phase); }
        double operator()(const TableLookup& tl) const {
            const auto& v = tl.samples;
            auto it = std::upper_bound(v.begin(), v.end(), t, [](double x, const auto& e) { return x < e.first; });
            if (it == v.begin()) return v.front().second;
            return std::prev(it)->second;
        }
    };
    return std::visit(Eval{t}, kind_);
}

std::string_view DisturbanceSpec::kind_name() const noexcept {
    struct Name {
        std::string_view operator()(const Zero&) const { return "zero"; }
        std::string_view operator()(const Constant&) const { return "constant"; }
        std::string_view operator()(const Sinusoid&) const { return "sinusoid"; }
        std::string_view operator()(const TableLookup&) const { return "table"; }
    };
    return std::visit(Name{}, kind_);
}

DisturbanceSpec DisturbanceSpec::negated() const {
    struct Neg {
        Kind operator()(const Zero& z) const { return z; }
        Kind operator()(const Constant& c) const { return Constant{-c.value}; }
        // -A sin(wt + p) keeps the phase so that values negate exactly.
        Kind operator()(const Sinusoid& s) const { return Sinusoid{-s.amplitude, s.angular_frequency, s.phase}; }
        Kind operator()(const TableLookup& tl) const {
            TableLookup out = tl;
            for (auto& e : out.samples) e.second = -e.second;
            return out;
        }
    };
    return {std::visit(Neg{}, kind_), bound_};
}

ControllerSpec ControllerSpec::nlg_exact(double gamma) {
    require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::InvalidParameter, "gamma must be positive");
    return ControllerSpec{NlgExact{gamma}};
}

ControllerSpec ControllerSpec::nlg_threshold(double gamma, double mu) {
    require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::InvalidParameter, "gamma must be positive");
    require(std::isfinite(mu) && mu > 0.0, ErrorCode::InvalidParameter, "mu must be positive");
    return ControllerSpec{NlgThreshold{gamma, mu}};
}

ControllerSpec ControllerSpec::nlg_regularized(double gamma, double mu) {
    require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::InvalidParameter, "gamma must be positive");
    require(std::isfinite(mu) && mu > 0.0, ErrorCode::InvalidParameter, "mu must be positive");
    return ControllerSpec{NlgRegularized{gamma, mu}};
}

ControllerSpec ControllerSpec::pd(double gamma, double sigma) {
    require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::InvalidParameter, "gamma must be positive");
    require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::InvalidParameter, "sigma must be non-negative");
    return ControllerSpec{Pd{gamma, sigma}};
}

ControllerSpec ControllerSpec::custom(std::string name, double gamma, ControlLaw law) {
    require(std::isfinite(gamma) && gamma > 0.0, ErrorCode::InvalidParameter, "gamma must be positive");
    require(static_cast<bool>(law), ErrorCode::InvalidParameter, "custom controller needs a callable law");
    return ControllerSpec{Custom{std::move(name), gamma, std::move(law)}};
}

double ControllerSpec::operator()(const PlantState& s) const {
    struct Eval {
        const PlantState& s;
        double operator()(const NlgExact& c) const { return nlgsim::nlg_exact(s, c.gamma); }
        double operator()(const NlgThreshold& c) const { return nlgsim::nlg_threshold(s, c.gamma, c.mu); }
        double operator()(const NlgRegularized& c) const { return nlgsim::nlg_regularized(s, c.gamma, c.mu); }
        double operator()(const Pd& c) const { return pd_control(s, c.gamma, c.sigma); }
        double operator()(const Custom& c) const { return c.law(s); }
    };
    return std::visit(Eval{s}, kind_);
}

double ControllerSpec::gamma() const noexcept {
    return std::visit([](const auto& c) { return c.gamma; }, kind_);
}

std::optional<double> ControllerSpec::mu() const noexcept {
    if (const auto* t = std::get_if<NlgThreshold>(&kind_)) return t->mu;
    if (const auto* r = std::get_if<NlgRegularized>(&kind_)) return r->mu;
    return std::nullopt;
}

bool ControllerSpec::is_nlg() const noexcept {
    return std::holds_alternative<NlgExact>(kind_) || std::holds_alternative<NlgThreshold>(kind_) ||
           std::holds_alternative<NlgRegularized>(kind_);
}

std::string ControllerSpec::name() const {
    struct Name {
        std::string operator()(const NlgExact&) const { return "nlg_exact"; }
        std::string operator()(const NlgThreshold&) const { return "nlg_threshold"; }
        std::string operator()(const NlgRegularized&) const { return "nlg_regularized"; }
        std::string operator()(const Pd&) const { return "pd"; }
        std::string operator()(const Custom& c) const { return c.name; }
    };
    return std::visit(Name{}, kind_);
}

std::string_view to_string(Integrator integrator) noexcept {
    return integrator == Integrator::Rk4 ? "rk4" : "euler";
}

double Scenario::numeric_floor() const noexcept { return controller.mu().value_or(kDefaultNumericFloor); }

bool AnalysisReport::all_checks_passed() const noexcept {
    return !overshoot_detected && lyapunov_violations == 0 && control_bound_satisfied && z_bound_satisfied;
}

std::vector<Diagnostic> validate_scenario(const Scenario& s) {
    std::vector<Diagnostic> out;
    auto error = [&](ErrorCode code, std::string msg) { out.push_back({Severity::Error, code, std::move(msg)}); };

    if (!(s.dt > 0.0) || !std::isfinite(s.dt)) error(ErrorCode::NonPositiveStep, "dt must be positive");
    if (!(s.t_end > 0.0) || !std::isfinite(s.t_end) || !(s.dt < s.t_end))
        error(ErrorCode::InvalidHorizon, "t_end must be positive and larger than dt");
    if (!(s.stop_tolerance > 0.0) || s.stop_dwell_steps < 1)
        error(ErrorCode::InvalidStopRule, "stop_tolerance must be positive and stop_dwell_steps at least 1");
    if (!s.initial.is_finite()) error(ErrorCode::InvalidParameter, "initial state must be finite");

    const double gamma = s.controller.gamma();
    const double D = s.disturbance.bound();
    if (gamma <= D) error(ErrorCode::GammaTooSmall, "gamma must exceed the disturbance bound D");
    if (s.initial.x1 == 0.0 && s.initial.x2 != 0.0)
        error(ErrorCode::InitialStateOutsideDomain, "x1(0) = 0 is only admissible together with x2(0) = 0");

    if (s.controller.is_nlg() && gamma > D && gamma <= gain_lower_bound(D))
        out.push_back({Severity::Warning, std::nullopt,
                       "gain below the sufficient bound D^1.5 + D + 0.5; stability is not guaranteed"});
    return out;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) noexcept {
    return std::any_of(diagnostics.begin(), diagnostics.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

void require_runnable(const Scenario& s) {
    for (const auto& d : validate_scenario(s))
        if (d.severity == Severity::Error) throw Error(*d.code, d.message);
}

}  // namespace nlgsim
