#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include "acdc/rng.hpp"
#include "acdc/schedule.hpp"
#include "acdc/score.hpp"
#include "acdc/vecmath.hpp"

namespace acdc {

struct SolverConfig {
    enum class Method { euler, heun };
    int n_steps = 64;
    Method method = Method::euler;
    bool stochastic = false;  // false: PF-ODE, true: reverse SDE
};

struct IntegrationDiverged : std::runtime_error {
    int step;
    explicit IntegrationDiverged(int step_index)
        : std::runtime_error("integration diverged at step " + std::to_string(step_index)),
          step(step_index) {}
};

// x(t) = sqrt(ab) x0 + sqrt(1 - ab) eps  with caller-supplied noise
Vec perturb_with_noise(const Vec& x0, double t, const Schedule& s, const Vec& eps);

// same, drawing eps ~ N(0, I) from rng
Vec perturb(const Vec& x0, double t, const Schedule& s, Rng& rng);

// Integrates the reverse dynamics from t_start down to t_end on a uniform
// grid of cfg.n_steps steps.
//
//   deterministic: dx = -1/2 beta(t) [x + s(x, t)] dt          (PF-ODE)
//   stochastic:    dx = [-1/2 beta(t) x - beta(t) s(x, t)] dt + sqrt(beta) dw
//
// post_step, when set, runs after every accepted step with the new state and
// the time just reached (used for inpainting-style coordinate replacement).
// Throws IntegrationDiverged naming the step if the state leaves IEEE range.
Vec integrate_reverse(Vec x, double t_start, double t_end, const ScoreFn& score,
                      const SolverConfig& cfg, const Schedule& s, Rng& rng,
                      const std::function<void(Vec&, double)>& post_step = nullptr);

}  // namespace acdc
