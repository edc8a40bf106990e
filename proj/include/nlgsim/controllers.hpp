#pragma once

#include "nlgsim/core.hpp"

namespace nlgsim {

// u = -(gamma*x1 + |x2|*x2) / |x1| for x1 != 0, and -gamma*sign(x1) at x1 = 0.
double nlg_exact(const PlantState& s, double gamma) noexcept;

// First branch while |x1| >= mu, switching branch -gamma*sign(x1) below it.
double nlg_threshold(const PlantState& s, double gamma, double mu) noexcept;

// u = -(gamma*x1 + |x2|*x2) / (|x1| + mu). Unbounded in x2 on the x1 = 0 line.
double nlg_regularized(const PlantState& s, double gamma, double mu) noexcept;

double pd_control(const PlantState& s, double gamma, double sigma) noexcept;

}  // namespace nlgsim
