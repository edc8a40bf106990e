#pragma once

// Test-only re-derivations, written independently of the library and evaluated
// in long double so that they do not share rounding paths with it.

#include <algorithm>
#include <cmath>

namespace oracle {

using real = long double;

inline real sgn(real v) { return v > 0 ? 1.0L : (v < 0 ? -1.0L : 0.0L); }

inline real pow_three_halves(real D) { return D == 0 ? 0.0L : std::exp(1.5L * std::log(D)); }

inline real gain_lower_bound(real D) { return pow_three_halves(D) + D + 0.5L; }

struct Window {
    real lo, hi;
};

inline Window epsilon_window(real gamma, real D) {
    const real lo = (2.0L / 3.0L) * pow_three_halves(D) / (gamma - 0.5L - D);
    return {lo, std::min(2.0L / 3.0L, std::sqrt(2.0L * gamma))};
}

// V = 0.5 * [z1 x2] [[2g, e], [e, 1]] [z1 x2]^T with z1 = sqrt|x1| sign(x1)
inline real lyapunov_v(real x1, real x2, real gamma, real eps) {
    const real z1 = std::sqrt(std::fabs(x1)) * sgn(x1);
    const real p11 = 2.0L * gamma, p12 = eps, p22 = 1.0L;
    return 0.5L * (z1 * (p11 * z1 + p12 * x2) + x2 * (p12 * z1 + p22 * x2));
}

inline real decrease_bound(real x1, real x2, real gamma, real D, real eps) {
    const real a = std::fabs(x1);
    const real cubic = std::fabs(x2) * x2 * x2;
    return -(2.0L / 3.0L - eps) * std::fabs(cubic) / a -
           (eps * (gamma - 0.5L - D) - (2.0L / 3.0L) * pow_three_halves(D)) * std::sqrt(a);
}

inline real control_amplitude_bound(real x1, real x2, real gamma, real D) {
    const real z0 = x2 * x2 / std::fabs(x1);
    const real floor = 2.0L * (D + gamma);
    return gamma + (z0 > floor ? z0 : floor);
}

inline real nlg(real x1, real x2, real gamma) {
    if (x1 == 0) return -gamma * sgn(x1);
    return -(gamma * x1 + std::fabs(x2) * x2) / std::fabs(x1);
}

inline real rel_err(real got, real want) {
    const real scale = std::max(std::fabs(want), 1e-300L);
    return std::fabs(got - want) / scale;
}

}  // namespace oracle
