#pragma once

#include <cmath>
#include <stdexcept>

namespace acdc {

// Linear variance-preserving noise schedule on t in [0, 1]:
//
//   beta(t)      = beta_min + (beta_max - beta_min) * t
//   alpha_bar(t) = exp(-int_0^t beta(u) du)
//
// alpha_bar(0) = 1 exactly and alpha_bar(1) ~ 0 for the default (0.1, 20),
// so the fully-noised marginal is standard normal. The negative exponent is
// the convention every derived quantity in this project uses.
struct Schedule {
    double beta_min = 0.1;
    double beta_max = 20.0;

    Schedule() = default;
    Schedule(double bmin, double bmax) : beta_min(bmin), beta_max(bmax) {
        if (!(0.0 < beta_min && beta_min < beta_max))
            throw std::invalid_argument("Schedule requires 0 < beta_min < beta_max");
    }

    double beta(double t) const { return beta_min + (beta_max - beta_min) * t; }

    // int_0^t beta(u) du in closed form
    double beta_integral(double t) const {
        return beta_min * t + 0.5 * (beta_max - beta_min) * t * t;
    }

    double alpha_bar(double t) const { return std::exp(-beta_integral(t)); }

    // Integrating factor of the reverse PF-ODE: mu(t) = exp(int_{t'}^{t} beta(u)/2 du).
    // mu(t') = 1, and mu(0) = sqrt(alpha_bar(t')) under this sign convention.
    double integrating_factor_mu(double t, double t_prime) const {
        return std::exp(0.5 * (beta_integral(t) - beta_integral(t_prime)));
    }
};

inline void check_unit_time(double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("diffusion time must lie in [0, 1]");
}

}  // namespace acdc
