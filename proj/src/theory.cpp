#include "acdc/theory.hpp"

#include <algorithm>
#include <cmath>

namespace acdc {

namespace {

constexpr std::uint64_t kTrialStream = 0x7214;

bool is_single(const GaussianMixture& m) { return m.components().size() == 1; }

// KL between the diffused single Gaussians in closed form
double single_gaussian_kl(const GaussianMixture& p, const GaussianMixture& q, double t,
                          const Schedule& s) {
    const auto& cp = p.components().front();
    const auto& cq = q.components().front();
    double ab = s.alpha_bar(t);
    double v1 = ab * cp.variance + (1.0 - ab);
    double v2 = ab * cq.variance + (1.0 - ab);
    double d = static_cast<double>(p.dim());
    double msq = 0.0;
    for (std::size_t i = 0; i < p.dim(); ++i) {
        double dm = std::sqrt(ab) * (cp.mean[i] - cq.mean[i]);
        msq += dm * dm;
    }
    return 0.5 * (d * v1 / v2 + msq / v2 - d + d * std::log(v2 / v1));
}

}  // namespace

std::vector<KlPoint> kl_curve(const GaussianMixture& p, const GaussianMixture& q,
                              const std::vector<double>& t_grid, const Schedule& s,
                              int mc_samples, std::uint64_t seed) {
    require(p.dim() == q.dim(), "kl_curve: dimension mismatch");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        require(t_grid[i] >= t_grid[i - 1], "kl_curve: grid must be ascending");

    std::vector<KlPoint> out;
    out.reserve(t_grid.size());
    const bool closed_form = is_single(p) && is_single(q);
    for (std::size_t gi = 0; gi < t_grid.size(); ++gi) {
        double t = t_grid[gi];
        KlPoint pt;
        pt.t = t;
        if (closed_form) {
            pt.kl = single_gaussian_kl(p, q, t, s);
            pt.std_err = 0.0;
        } else {
            Rng rng(mix_seed(seed, 0x6b1, gi));
            double mean = 0.0, m2 = 0.0;
            for (int i = 0; i < mc_samples; ++i) {
                Vec x = p.sample_diffused(t, s, rng);
                double v = p.log_density(x, t, s) - q.log_density(x, t, s);
                double delta = v - mean;
                mean += delta / (i + 1);
                m2 += delta * (v - mean);
            }
            pt.kl = mean;
            pt.std_err = std::sqrt(m2 / (static_cast<double>(mc_samples) - 1.0) /
                                   static_cast<double>(mc_samples));
        }
        out.push_back(pt);
    }
    return out;
}

double estimate_eta(const GaussianMixture& data, int n_samples, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0xe7a));
    double acc = 0.0;
    for (int i = 0; i < n_samples; ++i) acc += norm2(data.sample(rng));
    return acc / static_cast<double>(n_samples);
}

double estimate_clip_c(const GaussianMixture& data, const Schedule& s, int n_samples,
                       std::uint64_t seed, double percentile) {
    Rng rng(mix_seed(seed, 0xc11b));
    std::vector<double> norms(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        double t = rng.uniform();
        Vec x_t = data.sample_diffused(t, s, rng);
        norms[i] = norm2(data.score(x_t, t, s));
    }
    std::sort(norms.begin(), norms.end());
    auto idx = static_cast<std::size_t>(percentile * (n_samples - 1));
    return norms[idx];
}

namespace {

struct BoundPieces {
    double alt;         // (1 - sa)(eta + C/ab) + sqrt(1-ab) sqrt(d) / sa
    double consistent;  // sqrt((1-ab)/ab) sqrt(d) + C (1 - sa)/sa
};

BoundPieces unconditional_bounds(double ab, double eta, double c, int dim) {
    double sa = std::sqrt(ab);
    double sd = std::sqrt(static_cast<double>(dim));
    BoundPieces b;
    b.alt = (1.0 - sa) * (eta + c / ab) + std::sqrt(1.0 - ab) * sd / sa;
    b.consistent = std::sqrt((1.0 - ab) / ab) * sd + c * (1.0 - sa) / sa;
    return b;
}

double mean_recovery_deviation(const GaussianMixture& data, double t_prime, const Schedule& s,
                               const ScoreFn& score, int trials, const SolverConfig& solver,
                               std::uint64_t seed) {
    double acc = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(mix_seed(seed, kTrialStream, trial));
        Vec x = data.sample(rng);
        Vec x_t = perturb(x, t_prime, s, rng);
        Vec rec = integrate_reverse(std::move(x_t), t_prime, 0.0, score, solver, s, rng);
        acc += l2_distance(rec, x);
    }
    return acc / static_cast<double>(trials);
}

}  // namespace

BoundRow deviation_bound_check(const GaussianMixture& data, double t_prime, const Schedule& s,
                               double clip_c, double eta, int trials, const SolverConfig& solver,
                               std::uint64_t seed) {
    require(clip_c > 0.0, "deviation_bound_check: clip level must be positive");
    BoundRow row;
    row.t_prime = t_prime;
    row.alpha_bar = s.alpha_bar(t_prime);
    row.trials = trials;
    row.eta = eta;
    row.clip_c = clip_c;
    row.dim = static_cast<int>(data.dim());

    ScoreFn score = clip_score_norm(data.score_fn(s), clip_c);
    row.empirical_mean_dev = mean_recovery_deviation(data, t_prime, s, score, trials, solver, seed);

    BoundPieces b = unconditional_bounds(row.alpha_bar, eta, clip_c, row.dim);
    row.bound_alt = b.alt;
    row.bound_consistent = b.consistent;
    row.pass_alt = row.empirical_mean_dev <= row.bound_alt;
    row.pass_consistent = row.empirical_mean_dev <= row.bound_consistent;
    return row;
}

CondScoreFn shifted_conditional_score(const GaussianMixture& data, const Schedule& s,
                                      double clip_c, double k_lip,
                                      const ConditionRecord& reference) {
    ScoreFn base = clip_score_norm(data.score_fn(s), clip_c);
    std::size_t dim = data.dim();
    // fixed unit direction shared by every condition
    Vec u(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    return [base = std::move(base), u = std::move(u), k_lip, reference](
               const Vec& x, const ConditionRecord& cond, double t) {
        Vec sc = base(x, t);
        double shift = k_lip * condition_distance(cond, reference);
        if (shift != 0.0) axpy(shift, u, sc);
        return sc;
    };
}

BoundRow conditional_deviation_check(const GaussianMixture& data, double t_prime,
                                     const Schedule& s, double clip_c, double eta, double k_lip,
                                     const ConditionRecord& y_true, const ConditionRecord& y_used,
                                     int trials, const SolverConfig& solver, std::uint64_t seed) {
    CondScoreFn cond_score = shifted_conditional_score(data, s, clip_c, k_lip, y_true);
    ScoreFn bound_score = [cond_score, y_used](const Vec& x, double t) {
        return cond_score(x, y_used, t);
    };

    BoundRow row;
    row.t_prime = t_prime;
    row.alpha_bar = s.alpha_bar(t_prime);
    row.trials = trials;
    row.eta = eta;
    row.clip_c = clip_c;
    row.dim = static_cast<int>(data.dim());
    row.conditional = true;
    row.k_lip = k_lip;
    row.cond_distance = condition_distance(y_used, y_true);
    row.empirical_mean_dev =
        mean_recovery_deviation(data, t_prime, s, bound_score, trials, solver, seed);

    double ab = row.alpha_bar;
    double sa = std::sqrt(ab);
    double kd = k_lip * row.cond_distance;
    row.cond_term_alt_grouped = (1.0 - sa) * kd * ab;
    row.cond_term_alt_ratio = kd * (1.0 - sa) / ab;
    row.cond_term_consistent = kd * (1.0 - sa) / sa;

    BoundPieces b = unconditional_bounds(ab, eta, clip_c, row.dim);
    row.bound_alt = b.alt + row.cond_term_alt_grouped;
    row.bound_consistent = b.consistent + row.cond_term_consistent;
    row.pass_alt = row.empirical_mean_dev <= row.bound_alt;
    row.pass_consistent = row.empirical_mean_dev <= row.bound_consistent;
    return row;
}

double estimate_lipschitz_k(const CondScoreFn& score,
                            const std::vector<std::pair<ConditionRecord, ConditionRecord>>& pairs,
                            const std::vector<Vec>& points, const std::vector<double>& times) {
    require(!pairs.empty() && !points.empty() && !times.empty(),
            "estimate_lipschitz_k: empty sample set");
    double best = 0.0;
    for (const auto& [y, y2] : pairs) {
        double d = condition_distance(y, y2);
        require(d > 0.0, "estimate_lipschitz_k: conditions in a pair must differ");
        for (const auto& x : points)
            for (double t : times) {
                double diff = l2_distance(score(x, y, t), score(x, y2, t));
                best = std::max(best, diff / d);
            }
    }
    return best;
}

}  // namespace acdc
