#include "nlgsim/controllers.hpp"

#include <cmath>

namespace nlgsim {

namespace {

double nlg_numerator(const PlantState& s, double gamma) noexcept {
    return gamma * s.x1 + std::abs(s.x2) * s.x2;
}

}  // namespace

double nlg_exact(const PlantState& s, double gamma) noexcept {
    if (s.x1 == 0.0) return -gamma * sign(s.x1);
    return -nlg_numerator(s, gamma) / std::abs(s.x1);
}

double nlg_threshold(const PlantState& s, double gamma, double mu) noexcept {
    const double a = std::abs(s.x1);
    if (a >= mu) return -nlg_numerator(s, gamma) / a;
    return -gamma * sign(s.x1);
}

double nlg_regularized(const PlantState& s, double gamma, double mu) noexcept {
    return -nlg_numerator(s, gamma) / (std::abs(s.x1) + mu);
}

double pd_control(const PlantState& s, double gamma, double sigma) noexcept {
    return -gamma * s.x1 - sigma * s.x2;
}

}  // namespace nlgsim
