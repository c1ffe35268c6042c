#include "acdc/score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace acdc {

GaussianMixture::GaussianMixture(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
    require(!components_.empty(), "mixture needs at least one component");
    dim_ = components_.front().mean.size();
    double wsum = 0.0;
    for (const auto& c : components_) {
        require(c.mean.size() == dim_, "mixture components must share dimension");
        require(c.variance > 0.0, "mixture variances must be positive");
        require(c.weight >= 0.0, "mixture weights must be non-negative");
        wsum += c.weight;
    }
    require(std::abs(wsum - 1.0) <= 1e-12, "mixture weights must sum to 1");
}

GaussianMixture single_gaussian(Vec mean, double variance) {
    return GaussianMixture({MixtureComponent{1.0, std::move(mean), variance}});
}

Vec GaussianMixture::sample(Rng& rng) const {
    double u = rng.uniform();
    std::size_t k = 0;
    double acc = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
        acc += components_[i].weight;
        if (u < acc) {
            k = i;
            break;
        }
        k = i;
    }
    const auto& c = components_[k];
    Vec x(dim_);
    double sd = std::sqrt(c.variance);
    for (std::size_t i = 0; i < dim_; ++i) x[i] = c.mean[i] + sd * rng.normal();
    return x;
}

Vec GaussianMixture::sample_diffused(double t, const Schedule& s, Rng& rng) const {
    double ab = s.alpha_bar(t);
    double sab = std::sqrt(ab);
    Vec x = sample(rng);
    // equivalent to perturbing the clean sample: the component draw already
    // carried its own variance, which the kernel scales by alpha_bar
    double kernel_sd = std::sqrt(1.0 - ab);
    for (auto& v : x) v = sab * v;
    for (auto& v : x) v += kernel_sd * rng.normal();
    return x;
}

namespace {

// per-component diffused log weight + Gaussian exponent, combined by
// log-sum-exp for stability far from all modes
struct LogTerms {
    std::vector<double> log_w;   // log weight + normalizer
    std::vector<double> inv_v;   // 1 / diffused variance
    std::vector<double> sq;      // ||x - sqrt(ab) m_k||^2
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> term;
};

LogTerms diffused_terms(const std::vector<MixtureComponent>& comps, std::size_t dim,
                        const Vec& x, double t, const Schedule& s) {
    double ab = s.alpha_bar(t);
    double sab = std::sqrt(ab);
    LogTerms lt;
    lt.log_w.reserve(comps.size());
    lt.inv_v.reserve(comps.size());
    lt.sq.reserve(comps.size());
    lt.term.reserve(comps.size());
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    for (const auto& c : comps) {
        double v = ab * c.variance + (1.0 - ab);
        double sq = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double d = x[i] - sab * c.mean[i];
            sq += d * d;
        }
        double lw = (c.weight > 0.0 ? std::log(c.weight) : -std::numeric_limits<double>::infinity())
                    - 0.5 * static_cast<double>(dim) * (kLog2Pi + std::log(v));
        double term = lw - 0.5 * sq / v;
        lt.log_w.push_back(lw);
        lt.inv_v.push_back(1.0 / v);
        lt.sq.push_back(sq);
        lt.term.push_back(term);
        lt.max_term = std::max(lt.max_term, term);
    }
    return lt;
}

}  // namespace

double GaussianMixture::log_density(const Vec& x, double t, const Schedule& s) const {
    require(x.size() == dim_, "log_density: dimension mismatch");
    LogTerms lt = diffused_terms(components_, dim_, x, t, s);
    double acc = 0.0;
    for (double term : lt.term) acc += std::exp(term - lt.max_term);
    return lt.max_term + std::log(acc);
}

Vec GaussianMixture::score(const Vec& x, double t, const Schedule& s) const {
    require(x.size() == dim_, "score: dimension mismatch");
    double ab = s.alpha_bar(t);
    double sab = std::sqrt(ab);
    LogTerms lt = diffused_terms(components_, dim_, x, t, s);
    double z = 0.0;
    std::vector<double> resp(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        resp[k] = std::exp(lt.term[k] - lt.max_term);
        z += resp[k];
    }
    Vec out(dim_, 0.0);
    for (std::size_t k = 0; k < components_.size(); ++k) {
        double r = resp[k] / z;
        if (r == 0.0) continue;
        double iv = lt.inv_v[k];
        const Vec& m = components_[k].mean;
        for (std::size_t i = 0; i < dim_; ++i) out[i] += r * (sab * m[i] - x[i]) * iv;
    }
    return out;
}

ScoreFn GaussianMixture::score_fn(const Schedule& s) const {
    GaussianMixture copy = *this;
    return [copy, s](const Vec& x, double t) { return copy.score(x, t, s); };
}

ScoreFn guided_score(ScoreFn cond, ScoreFn uncond, double w) {
    return [cond = std::move(cond), uncond = std::move(uncond), w](const Vec& x, double t) {
        if (w == 1.0) return cond(x, t);
        if (w == 0.0) return uncond(x, t);
        Vec u = uncond(x, t);
        Vec c = cond(x, t);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += w * (c[i] - u[i]);
        return u;
    };
}

ScoreFn clip_score_norm(ScoreFn fn, double c) {
    require(c > 0.0, "clip norm must be positive");
    return [fn = std::move(fn), c](const Vec& x, double t) {
        Vec s = fn(x, t);
        double n = norm2(s);
        if (n > c) {
            double f = c / n;
            for (auto& v : s) v *= f;
        }
        return s;
    };
}

Vec tweedie_denoise(const Vec& x_t, double t, const ScoreFn& score, const Schedule& s) {
    check_unit_time(t);
    double ab = s.alpha_bar(t);
    if (t == 0.0) return x_t;
    Vec out = score(x_t, t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] + (1.0 - ab) * out[i]) / std::sqrt(ab);
    return out;
}

}  // namespace acdc
