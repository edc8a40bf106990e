#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace nlgsim {

// sign(0) is 0, so the origin is an exact equilibrium of the switching branch.
constexpr double sign(double v) noexcept { return static_cast<double>((v > 0.0) - (v < 0.0)); }

struct PlantState {
    double x1 = 0.0;
    double x2 = 0.0;

    bool is_finite() const noexcept;
    bool is_origin() const noexcept { return x1 == 0.0 && x2 == 0.0; }
    double max_norm() const noexcept;
    PlantState operator-() const noexcept { return {-x1, -x2}; }
    friend bool operator==(const PlantState&, const PlantState&) = default;
};

enum class ErrorCode {
    GammaTooSmall,
    InitialStateOutsideDomain,
    NonPositiveStep,
    InvalidHorizon,
    InvalidStopRule,
    InvalidParameter,
    DisturbanceOutOfBound,
    NonFiniteState,
    NegativeD,
    EmptyWindow,
    OnSwitchingLine,
    InitialX1Zero,
    EmptyTrajectory,
    NoOverlap,
    ConfigParse,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class NonFiniteStateError : public Error {
public:
    explicit NonFiniteStateError(double t);
    double time() const noexcept { return time_; }

private:
    double time_;
};

class ConfigError : public Error {
public:
    // line is 1-based; 0 when the problem has no position (e.g. unreadable file)
    ConfigError(std::string source, int line, const std::string& message);
    int line() const noexcept { return line_; }
    const std::string& source() const noexcept { return source_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string source_;
    int line_;
    std::string message_;
};

class DisturbanceSpec {
public:
    struct Zero {};
    struct Constant {
        double value;
    };
    struct Sinusoid {
        double amplitude;
        double angular_frequency;
        double phase;
    };
    // Held piecewise constant: d(t) = d_i on [t_i, t_{i+1}); first value before t_0.
    struct TableLookup {
        std::vector<std::pair<double, double>> samples;
    };
    using Kind = std::variant<Zero, Constant, Sinusoid, TableLookup>;

    static DisturbanceSpec zero(double bound);
    static DisturbanceSpec constant(double value, double bound);
    static DisturbanceSpec sinusoid(double amplitude, double angular_frequency, double phase, double bound);
    static DisturbanceSpec table(std::vector<std::pair<double, double>> samples, double bound);

    double operator()(double t) const;
    double bound() const noexcept { return bound_; }
    const Kind& kind() const noexcept { return kind_; }
    std::string_view kind_name() const noexcept;

    // d -> -d with the same bound; used for symmetry checks.
    DisturbanceSpec negated() const;

private:
    DisturbanceSpec(Kind kind, double bound) : kind_(std::move(kind)), bound_(bound) {}
    Kind kind_;
    double bound_;
};

using ControlLaw = std::function<double(const PlantState&)>;

class ControllerSpec {
public:
    struct NlgExact {
        double gamma;
    };
    struct NlgThreshold {
        double gamma;
        double mu;
    };
    struct NlgRegularized {
        double gamma;
        double mu;
    };
    struct Pd {
        double gamma;
        double sigma;
    };
    // Hook for laws that are not built in. gamma is the nominal gain used
    // for validation and Lyapunov diagnostics.
    struct Custom {
        std::string name;
        double gamma;
        ControlLaw law;
    };
    using Kind = std::variant<NlgExact, NlgThreshold, NlgRegularized, Pd, Custom>;

    static ControllerSpec nlg_exact(double gamma);
    static ControllerSpec nlg_threshold(double gamma, double mu = 1e-9);
    static ControllerSpec nlg_regularized(double gamma, double mu = 1e-9);
    static ControllerSpec pd(double gamma, double sigma);
    static ControllerSpec custom(std::string name, double gamma, ControlLaw law);

    double operator()(const PlantState& s) const;
    double gamma() const noexcept;
    std::optional<double> mu() const noexcept;
    bool is_nlg() const noexcept;
    std::string name() const;
    const Kind& kind() const noexcept { return kind_; }

private:
    explicit ControllerSpec(Kind kind) : kind_(std::move(kind)) {}
    Kind kind_;
};

enum class Integrator { ForwardEuler, Rk4 };

std::string_view to_string(Integrator integrator) noexcept;

inline constexpr double kDefaultDt = 1e-6;
inline constexpr double kDefaultStopTolerance = 1e-3;
inline constexpr int kDefaultDwellSteps = 100;
inline constexpr double kDefaultNumericFloor = 1e-9;

struct Scenario {
    PlantState initial;
    ControllerSpec controller;
    DisturbanceSpec disturbance;
    double dt = kDefaultDt;
    double t_end = 1.0;
    Integrator integrator = Integrator::ForwardEuler;
    double stop_tolerance = kDefaultStopTolerance;
    int stop_dwell_steps = kDefaultDwellSteps;
    bool stop_on_convergence = false;

    // Floor below which |x1| is treated as zero for zeta and z diagnostics.
    double numeric_floor() const noexcept;
};

struct TrajectorySample {
    double t = 0.0;
    PlantState state;
    double u = 0.0;
    double d = 0.0;
    double V = 0.0;
    std::optional<double> zeta;
    std::optional<double> z;
    // Accumulated time change; only set on auxiliary-system runs.
    std::optional<double> phi;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    Scenario scenario;
    std::optional<double> converged_at;
};

struct AnalysisReport {
    bool overshoot_detected = false;
    int sign_changes_of_x1 = 0;
    std::optional<double> convergence_time;
    std::optional<double> reach_time;
    bool lyapunov_checked = false;
    int lyapunov_violations = 0;
    double epsilon_used = 0.0;
    double max_abs_u = 0.0;
    double control_bound_theoretical = 0.0;
    bool control_bound_satisfied = true;
    double max_z = 0.0;
    double z_cap = 0.0;
    bool z_bound_satisfied = true;
    std::optional<double> zeta_negative_after;
    std::optional<double> theta_empirical;
    std::optional<double> kappa_empirical;
    double max_abs_u_after_convergence = 0.0;

    bool all_checks_passed() const noexcept;
};

enum class Severity { Warning, Error };

struct Diagnostic {
    Severity severity;
    std::optional<ErrorCode> code;
    std::string message;
};

std::vector<Diagnostic> validate_scenario(const Scenario& s);
bool has_errors(const std::vector<Diagnostic>& diagnostics) noexcept;

// Throws Error with the first error diagnostic, if any.
void require_runnable(const Scenario& s);

}  // namespace nlgsim
