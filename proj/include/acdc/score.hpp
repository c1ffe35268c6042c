#pragma once

#include <functional>
#include <vector>

#include "acdc/condition.hpp"
#include "acdc/rng.hpp"
#include "acdc/schedule.hpp"
#include "acdc/vecmath.hpp"

namespace acdc {

// A score estimator s(x, t) ~ grad_x log p_t(x). Everything that consumes
// scores (integrators, SDEdit, Tweedie) works through this signature, so
// analytic mixture scores, learned networks and CFG combinations are
// interchangeable.
using ScoreFn = std::function<Vec(const Vec&, double)>;
using CondScoreFn = std::function<Vec(const Vec&, const ConditionRecord&, double)>;

struct MixtureComponent {
    double weight = 1.0;
    Vec mean;
    double variance = 1.0;  // isotropic
};

// Isotropic Gaussian mixture with closed-form diffused marginals: under the
// VP kernel, component (m_k, s_k^2) at time t becomes
// N(sqrt(ab) m_k, (ab s_k^2 + 1 - ab) I) with ab = alpha_bar(t). Used as the
// exact oracle distribution family for the bound and KL checks.
class GaussianMixture {
public:
    explicit GaussianMixture(std::vector<MixtureComponent> components);

    const std::vector<MixtureComponent>& components() const { return components_; }
    std::size_t dim() const { return dim_; }

    Vec sample(Rng& rng) const;
    Vec sample_diffused(double t, const Schedule& s, Rng& rng) const;

    // log density of the diffused mixture at time t (t = 0 gives the data
    // density itself)
    double log_density(const Vec& x, double t, const Schedule& s) const;

    // exact grad_x log p_t(x)
    Vec score(const Vec& x, double t, const Schedule& s) const;

    ScoreFn score_fn(const Schedule& s) const;

private:
    std::vector<MixtureComponent> components_;
    std::size_t dim_ = 0;
};

GaussianMixture single_gaussian(Vec mean, double variance);

// s_uncond + w * (s_cond - s_uncond); affine in w by construction.
ScoreFn guided_score(ScoreFn cond, ScoreFn uncond, double w);

// Rescales the score to norm <= c whenever it exceeds c. Keeps the bound
// assumption ||s|| <= C true along an entire integration path.
ScoreFn clip_score_norm(ScoreFn fn, double c);

// Posterior-mean denoiser: E[x0 | x_t] = (x_t + (1 - ab) s(x_t, t)) / sqrt(ab).
// At t = 0 this is the identity.
Vec tweedie_denoise(const Vec& x_t, double t, const ScoreFn& score, const Schedule& s);

}  // namespace acdc
