#include <doctest.h>

#include <cmath>

#include "acdc/memory.hpp"
#include "acdc/score_net.hpp"
#include "acdc/theory.hpp"

using namespace acdc;

namespace {

const Schedule kDefault{0.1, 20.0};

std::vector<double> unit_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back(0.1 * i);
    return g;
}

}  // namespace

TEST_SUITE("kl_curve") {
    TEST_CASE("identical mixtures give zero KL at every t") {
        GaussianMixture p({{0.6, {0.5}, 0.4}, {0.4, {-1.0}, 0.8}});
        auto curve = kl_curve(p, p, unit_grid(), kDefault, 2000, 1);
        for (const auto& pt : curve) CHECK(std::abs(pt.kl) < 4.0 * pt.std_err + 1e-12);
    }

    TEST_CASE("unit-variance Gaussians match alpha_bar * dmu^2 / 2 exactly") {
        GaussianMixture p = single_gaussian({0.0}, 1.0);
        GaussianMixture q = single_gaussian({2.0}, 1.0);
        auto curve = kl_curve(p, q, unit_grid(), kDefault, 0, 0);
        for (const auto& pt : curve) {
            double expected = kDefault.alpha_bar(pt.t) * 2.0;
            CHECK(pt.kl == doctest::Approx(expected).epsilon(1e-9));
            CHECK(pt.std_err == 0.0);
        }
        CHECK(curve[0].kl == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(curve[5].kl == doctest::Approx(0.158).epsilon(2e-3));
    }

    TEST_CASE("closed-form curves are non-increasing for random Gaussian pairs") {
        Rng rng(3);
        for (int pair = 0; pair < 20; ++pair) {
            int dim = pair % 2 == 0 ? 1 : 2;
            auto draw = [&] {
                Vec mean(dim);
                for (auto& v : mean) v = -2.0 + 4.0 * rng.uniform();
                return single_gaussian(mean, 0.3 + 1.7 * rng.uniform());
            };
            GaussianMixture p = draw(), q = draw();
            auto curve = kl_curve(p, q, unit_grid(), kDefault, 0, 0);
            for (std::size_t i = 1; i < curve.size(); ++i)
                CHECK(curve[i].kl <= curve[i - 1].kl + 1e-12);
        }
    }

    TEST_CASE("Monte-Carlo mixture curve is non-increasing within 2x std err") {
        GaussianMixture p({{0.5, {-1.0, 0.0}, 0.2}, {0.5, {1.0, 0.0}, 0.2}});
        GaussianMixture q({{0.7, {-0.5, 0.5}, 0.3}, {0.3, {1.5, -0.5}, 0.4}});
        auto curve = kl_curve(p, q, unit_grid(), kDefault, 4000, 5);
        for (std::size_t i = 1; i < curve.size(); ++i) {
            double slack = 2.0 * std::sqrt(curve[i].std_err * curve[i].std_err +
                                           curve[i - 1].std_err * curve[i - 1].std_err);
            CHECK(curve[i].kl <= curve[i - 1].kl + slack);
        }
        CHECK(curve.front().kl > 0.1);  // distinct mixtures actually diverge at t = 0
    }
}

TEST_SUITE("deviation bounds") {
    TEST_CASE("alternative-convention bound reproduces a precomputed value") {
        // t' = 0.4, d = 2, eta = 1, C = 2 under the default schedule
        double ab = kDefault.alpha_bar(0.4);
        CHECK(ab == doctest::Approx(0.1956).epsilon(1e-3));
        double sa = std::sqrt(ab);
        double alt = (1.0 - sa) * (1.0 + 2.0 / ab) + std::sqrt(1.0 - ab) * std::sqrt(2.0) / sa;
        CHECK(alt == doctest::Approx(9.13).epsilon(1e-3));
        // the implementation computes the same expression
        GaussianMixture data({{0.5, {-1.0, 0.0}, 0.1}, {0.5, {1.0, 0.0}, 0.1}});
        SolverConfig solver;
        solver.n_steps = 64;
        BoundRow row = deviation_bound_check(data, 0.4, kDefault, 2.0, 1.0, 8, solver, 1);
        CHECK(row.bound_alt == doctest::Approx(alt).epsilon(1e-12));
    }

    TEST_CASE("small t' gives small bounds and small deviations") {
        GaussianMixture data({{0.5, {-1.0, 0.0}, 0.1}, {0.5, {1.0, 0.0}, 0.1}});
        SolverConfig solver;
        solver.n_steps = 128;
        double eta = estimate_eta(data, 20000, 3);
        BoundRow row = deviation_bound_check(data, 0.02, kDefault, 2.0, eta, 100, solver, 3);
        CHECK(row.bound_consistent < 0.45);
        CHECK(row.empirical_mean_dev < row.bound_consistent);
        CHECK(row.empirical_mean_dev < 0.2);
    }

    TEST_CASE("consistent bound holds across the t' grid") {
        GaussianMixture data({{0.5, {-1.0, 0.0}, 0.1}, {0.5, {1.0, 0.0}, 0.1}});
        SolverConfig solver;
        solver.n_steps = 256;
        double eta = estimate_eta(data, 20000, 5);
        double clip_c = estimate_clip_c(data, kDefault, 5000, 5);
        for (int i = 1; i <= 9; ++i) {
            BoundRow row = deviation_bound_check(data, 0.1 * i, kDefault, clip_c, eta, 100,
                                                 solver, 100 + i);
            CHECK(row.pass_consistent);
        }
    }
}

TEST_SUITE("conditional deviation") {
    TEST_CASE("matched condition reduces exactly to the unconditional check") {
        GaussianMixture data({{0.5, {-1.0, 0.0}, 0.1}, {0.5, {1.0, 0.0}, 0.1}});
        SolverConfig solver;
        solver.n_steps = 128;
        ConditionRecord y{1, 2, 0};
        BoundRow uncond = deviation_bound_check(data, 0.4, kDefault, 2.0, 1.0, 50, solver, 9);
        BoundRow matched =
            conditional_deviation_check(data, 0.4, kDefault, 2.0, 1.0, 1.0, y, y, 50, solver, 9);
        CHECK(matched.empirical_mean_dev ==
              doctest::Approx(uncond.empirical_mean_dev).epsilon(1e-12));
        CHECK(matched.cond_distance == 0.0);
        CHECK(matched.bound_consistent ==
              doctest::Approx(uncond.bound_consistent).epsilon(1e-12));
    }

    TEST_CASE("conditional term is linear in the condition distance") {
        GaussianMixture data({{0.5, {-1.0, 0.0}, 0.1}, {0.5, {1.0, 0.0}, 0.1}});
        SolverConfig solver;
        solver.n_steps = 32;
        ConditionRecord y{1, 2, 0};
        ConditionRecord y1{3, 2, 0};     // d = 1
        ConditionRecord y2{3, 0, 0};     // d = 2
        BoundRow r1 =
            conditional_deviation_check(data, 0.4, kDefault, 2.0, 1.0, 1.0, y, y1, 8, solver, 11);
        BoundRow r2 =
            conditional_deviation_check(data, 0.4, kDefault, 2.0, 1.0, 1.0, y, y2, 8, solver, 11);
        CHECK(r2.cond_term_consistent ==
              doctest::Approx(2.0 * r1.cond_term_consistent).epsilon(1e-12));
        CHECK(r2.cond_term_alt_grouped ==
              doctest::Approx(2.0 * r1.cond_term_alt_grouped).epsilon(1e-12));
        CHECK(r2.cond_term_alt_ratio ==
              doctest::Approx(2.0 * r1.cond_term_alt_ratio).epsilon(1e-12));
    }

    TEST_CASE("mismatched conditions recover strictly worse, within the bound") {
        GaussianMixture data({{0.5, {-1.0, 0.0}, 0.1}, {0.5, {1.0, 0.0}, 0.1}});
        SolverConfig solver;
        solver.n_steps = 256;
        ConditionRecord y{1, 2, 0};
        ConditionRecord y_far{3, 0, 0};  // d = 2
        double eta = estimate_eta(data, 20000, 13);
        double clip_c = estimate_clip_c(data, kDefault, 5000, 13);
        for (double tp : {0.3, 0.5, 0.7}) {
            BoundRow matched = conditional_deviation_check(data, tp, kDefault, clip_c, eta, 1.0,
                                                           y, y, 100, solver, 17);
            BoundRow mism = conditional_deviation_check(data, tp, kDefault, clip_c, eta, 1.0, y,
                                                        y_far, 100, solver, 17);
            CHECK(mism.empirical_mean_dev > matched.empirical_mean_dev);
            CHECK(mism.pass_consistent);
            CHECK(matched.pass_consistent);
        }
    }

    TEST_CASE("memory-refined conditions beat unrefined ones") {
        // refined history resolves the character; the unrefined local record
        // leaves character and background unset -> condition distance 2
        std::vector<ConditionRecord> history = {{7, 2, 0}, {std::nullopt, std::nullopt, 3}};
        ConditionRecord refined = refine(history);
        ConditionRecord unrefined = history.back();
        CHECK(condition_distance(refined, unrefined) == 2.0);
        GaussianMixture data({{0.5, {-1.0, 0.0}, 0.1}, {0.5, {1.0, 0.0}, 0.1}});
        SolverConfig solver;
        solver.n_steps = 128;
        double eta = estimate_eta(data, 20000, 19);
        BoundRow good = conditional_deviation_check(data, 0.45, kDefault, 2.0, eta, 1.0, refined,
                                                    refined, 100, solver, 23);
        BoundRow bad = conditional_deviation_check(data, 0.45, kDefault, 2.0, eta, 1.0, refined,
                                                   unrefined, 100, solver, 23);
        CHECK(bad.empirical_mean_dev > good.empirical_mean_dev);
    }
}

TEST_SUITE("lipschitz estimation") {
    TEST_CASE("condition-independent score gives K = 0") {
        GaussianMixture data = single_gaussian({0.0, 0.0}, 1.0);
        CondScoreFn fn = [&](const Vec& x, const ConditionRecord&, double t) {
            return data.score(x, t, kDefault);
        };
        std::vector<std::pair<ConditionRecord, ConditionRecord>> pairs = {
            {ConditionRecord{1, 0, 0}, ConditionRecord{2, 0, 0}}};
        std::vector<Vec> pts = {{0.1, 0.2}, {-1.0, 0.5}};
        CHECK(estimate_lipschitz_k(fn, pairs, pts, {0.2, 0.8}) == 0.0);
    }

    TEST_CASE("constructed shift recovers its own K exactly") {
        GaussianMixture data = single_gaussian({0.0, 0.0}, 1.0);
        ConditionRecord ref{0, 0, 0};
        double k = 1.7;
        CondScoreFn fn = shifted_conditional_score(data, kDefault, 5.0, k, ref);
        // pairs where one side is the reference: the shift norm is exactly K d
        std::vector<std::pair<ConditionRecord, ConditionRecord>> pairs = {
            {ConditionRecord{1, 0, 0}, ref}, {ConditionRecord{1, 2, 0}, ref}};
        std::vector<Vec> pts = {{0.3, -0.4}, {1.0, 1.1}};
        double est = estimate_lipschitz_k(fn, pairs, pts, {0.1, 0.5, 0.9});
        CHECK(est == doctest::Approx(k).epsilon(1e-12));
    }

    TEST_CASE("pairs must differ") {
        GaussianMixture data = single_gaussian({0.0}, 1.0);
        CondScoreFn fn = shifted_conditional_score(data, kDefault, 5.0, 1.0, {});
        std::vector<std::pair<ConditionRecord, ConditionRecord>> pairs = {
            {ConditionRecord{}, ConditionRecord{}}};
        CHECK_THROWS_AS(estimate_lipschitz_k(fn, pairs, {{0.0}}, {0.5}),
                        std::invalid_argument);
    }

    TEST_CASE("learned-network estimate is finite and resampling-stable") {
        NetConfig nc;
        nc.state_dim = 2;
        nc.hidden = 16;
        nc.embed_dim = 3;
        nc.character_vocab = 3;
        nc.background_vocab = 3;
        nc.motion_vocab = 4;
        ScoreNetwork net(nc, 71);
        Rng data_rng(73);
        std::vector<std::pair<Vec, ConditionRecord>> data;
        for (int i = 0; i < 128; ++i) {
            int mode = data_rng.uniform_int(2);
            Vec x = {(mode ? 1.0 : -1.0) + 0.1 * data_rng.normal(), 0.1 * data_rng.normal()};
            ConditionRecord cond;
            cond.character = mode;
            data.emplace_back(std::move(x), cond);
        }
        TrainConfig tc;
        tc.steps = 500;
        tc.seed = 77;
        train(net, data, kDefault, tc);
        CondScoreFn fn = net.cond_score_fn();
        std::vector<std::pair<ConditionRecord, ConditionRecord>> pairs = {
            {ConditionRecord{0, 0, 0}, ConditionRecord{1, 0, 0}},
            {ConditionRecord{0, 1, 2}, ConditionRecord{2, 1, 2}}};
        auto sample_points = [&](std::uint64_t seed) {
            Rng rng(seed);
            std::vector<Vec> pts(10000);
            for (auto& p : pts) p = {4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0};
            return pts;
        };
        std::vector<double> times = {0.2, 0.5, 0.8};
        double k1 = estimate_lipschitz_k(fn, pairs, sample_points(1), times);
        double k2 = estimate_lipschitz_k(fn, pairs, sample_points(2), times);
        CHECK(std::isfinite(k1));
        CHECK(k1 > 0.0);
        CHECK(std::abs(k1 - k2) <= 0.1 * std::max(k1, k2));
    }
}
