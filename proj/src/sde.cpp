#include "acdc/sde.hpp"

#include <cmath>

namespace acdc {

Vec perturb_with_noise(const Vec& x0, double t, const Schedule& s, const Vec& eps) {
    check_unit_time(t);
    require(eps.size() == x0.size(), "perturb: noise dimension mismatch");
    double ab = s.alpha_bar(t);
    double a = std::sqrt(ab);
    double b = std::sqrt(1.0 - ab);
    Vec x(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) x[i] = a * x0[i] + b * eps[i];
    return x;
}

Vec perturb(const Vec& x0, double t, const Schedule& s, Rng& rng) {
    return perturb_with_noise(x0, t, s, rng.normal_vec(x0.size()));
}

namespace {

// drift of the reverse dynamics at (x, t), written into out
void reverse_drift(const Vec& x, double t, const ScoreFn& score, const Schedule& s,
                   bool stochastic, Vec& out) {
    out = score(x, t);
    double b = s.beta(t);
    if (stochastic) {
        // -1/2 beta x - beta s
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = -0.5 * b * x[i] - b * out[i];
    } else {
        // -1/2 beta (x + s)
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = -0.5 * b * (x[i] + out[i]);
    }
}

}  // namespace

Vec integrate_reverse(Vec x, double t_start, double t_end, const ScoreFn& score,
                      const SolverConfig& cfg, const Schedule& s, Rng& rng,
                      const std::function<void(Vec&, double)>& post_step) {
    require(t_end <= t_start, "integrate_reverse: t_end must not exceed t_start");
    require(cfg.n_steps >= 0, "integrate_reverse: n_steps must be non-negative");
    if (cfg.n_steps == 0 || t_start == t_end) return x;

    const double dt = (t_end - t_start) / cfg.n_steps;  // negative
    const double noise_scale = std::sqrt(-dt);
    Vec drift(x.size()), drift2(x.size()), predictor(x.size());

    for (int k = 0; k < cfg.n_steps; ++k) {
        double t = t_start + dt * k;
        double t_next = (k + 1 == cfg.n_steps) ? t_end : t_start + dt * (k + 1);
        reverse_drift(x, t, score, s, cfg.stochastic, drift);
        if (cfg.method == SolverConfig::Method::euler) {
            axpy(dt, drift, x);
        } else {
            predictor = x;
            axpy(dt, drift, predictor);
            reverse_drift(predictor, t_next, score, s, cfg.stochastic, drift2);
            axpy(0.5 * dt, drift, x);
            axpy(0.5 * dt, drift2, x);
        }
        if (cfg.stochastic) {
            double g = std::sqrt(s.beta(t)) * noise_scale;
            for (auto& v : x) v += g * rng.normal();
        }
        if (!all_finite(x)) throw IntegrationDiverged(k);
        if (post_step) post_step(x, t_next);
    }
    return x;
}

}  // namespace acdc
