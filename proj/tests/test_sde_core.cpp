#include <doctest.h>

#include <cmath>

#include "acdc/rng.hpp"
#include "acdc/schedule.hpp"
#include "acdc/score.hpp"
#include "acdc/sde.hpp"
#include "testutil.hpp"

using namespace acdc;

namespace {
const Schedule kDefault{0.1, 20.0};
}

TEST_SUITE("schedule") {
    TEST_CASE("beta endpoints and midpoint") {
        CHECK(kDefault.beta(0.0) == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(kDefault.beta(1.0) == doctest::Approx(20.0).epsilon(1e-15));
        CHECK(kDefault.beta(0.5) == doctest::Approx(10.05).epsilon(1e-15));
    }

    TEST_CASE("alpha_bar endpoints") {
        CHECK(kDefault.alpha_bar(0.0) == 1.0);
        // closed-form integral: int_0^1 beta = 0.1 + 19.9/2 = 10.05
        CHECK(kDefault.alpha_bar(1.0) == doctest::Approx(std::exp(-10.05)).epsilon(1e-12));
        CHECK(kDefault.alpha_bar(1.0) < 1e-3);
        CHECK(kDefault.alpha_bar(0.5) == doctest::Approx(std::exp(-2.5375)).epsilon(1e-12));
        CHECK(kDefault.alpha_bar(0.5) == doctest::Approx(0.0790).epsilon(2e-3));
    }

    TEST_CASE("alpha_bar is strictly decreasing") {
        double prev = kDefault.alpha_bar(0.0);
        for (int i = 1; i <= 100; ++i) {
            double cur = kDefault.alpha_bar(i / 100.0);
            CHECK(cur < prev);
            prev = cur;
        }
    }

    TEST_CASE("alpha_bar matches adaptive quadrature on random schedules") {
        Rng rng(991);
        for (int trial = 0; trial < 100; ++trial) {
            double bmin = 0.01 + rng.uniform();
            double bmax = bmin + 0.5 + 25.0 * rng.uniform();
            Schedule s(bmin, bmax);
            double t = rng.uniform();
            double quad = testutil::adaptive_simpson([&](double u) { return s.beta(u); }, 0.0, t);
            double expected = std::exp(-quad);
            CHECK(s.alpha_bar(t) == doctest::Approx(expected).epsilon(1e-10));
        }
    }

    TEST_CASE("integrating factor") {
        // mu(t') = 1
        CHECK(kDefault.integrating_factor_mu(0.7, 0.7) == 1.0);
        // mu(0) = sqrt(alpha_bar(t')) under the consistent sign convention
        CHECK(kDefault.integrating_factor_mu(0.0, 0.5) ==
              doctest::Approx(std::sqrt(kDefault.alpha_bar(0.5))).epsilon(1e-12));
        CHECK(kDefault.integrating_factor_mu(0.0, 0.5) == doctest::Approx(0.2811).epsilon(1e-3));
        // constant-rate reduction: beta_min ~ beta_max ~ b0
        Schedule flat(5.0, 5.0 + 1e-13);
        CHECK(flat.integrating_factor_mu(0.9, 0.4) ==
              doctest::Approx(std::exp(0.5 * 5.0 * 0.5)).epsilon(1e-9));
    }

    TEST_CASE("invalid schedules are rejected") {
        CHECK_THROWS_AS(Schedule(0.0, 20.0), std::invalid_argument);
        CHECK_THROWS_AS(Schedule(2.0, 1.0), std::invalid_argument);
    }
}

TEST_SUITE("perturb") {
    TEST_CASE("t = 0 returns x0 exactly") {
        Rng rng(5);
        Vec x0 = {0.3, -1.7, 2.2};
        CHECK(perturb(x0, 0.0, kDefault, rng) == x0);
    }

    TEST_CASE("zero noise gives the kernel mean") {
        Vec x0 = {1.0, -2.0};
        Vec eps(2, 0.0);
        for (double t : {0.1, 0.45, 0.9}) {
            Vec got = perturb_with_noise(x0, t, kDefault, eps);
            double a = std::sqrt(kDefault.alpha_bar(t));
            CHECK(got[0] == doctest::Approx(a * x0[0]).epsilon(1e-15));
            CHECK(got[1] == doctest::Approx(a * x0[1]).epsilon(1e-15));
        }
    }

    TEST_CASE("terminal marginal has unit variance from the origin") {
        Rng rng(17);
        Vec x0(4, 0.0);
        double acc = 0.0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            Vec x = perturb(x0, 1.0, kDefault, rng);
            for (double v : x) acc += v * v;
        }
        double var = acc / (4.0 * n);
        CHECK(var == doctest::Approx(1.0).epsilon(0.05));
    }

    TEST_CASE("affine in x0 for fixed noise") {
        Rng rng(23);
        Vec eps = rng.normal_vec(3);
        Vec a = {1.0, 2.0, 3.0}, b = {-0.5, 0.25, 4.0};
        double lam = 0.37;
        Vec mix(3);
        for (int i = 0; i < 3; ++i) mix[i] = lam * a[i] + (1.0 - lam) * b[i];
        Vec pa = perturb_with_noise(a, 0.6, kDefault, eps);
        Vec pb = perturb_with_noise(b, 0.6, kDefault, eps);
        Vec pm = perturb_with_noise(mix, 0.6, kDefault, eps);
        for (int i = 0; i < 3; ++i)
            CHECK(pm[i] == doctest::Approx(lam * pa[i] + (1.0 - lam) * pb[i]).epsilon(1e-12));
    }
}

TEST_SUITE("integrate_reverse") {
    TEST_CASE("zero steps returns the input") {
        Rng rng(1);
        Vec x = {1.0, 2.0};
        SolverConfig cfg;
        cfg.n_steps = 0;
        ScoreFn score = [](const Vec& v, double) { return scaled(v, -1.0); };
        CHECK(integrate_reverse(x, 0.8, 0.0, score, cfg, kDefault, rng) == x);
    }

    TEST_CASE("stationary standard normal is a fixed point of the PF-ODE") {
        // score of N(0, I) at any t is -x, so the drift vanishes identically
        Rng rng(2);
        ScoreFn score = [](const Vec& v, double) { return scaled(v, -1.0); };
        Vec x = {0.7, -1.3, 0.2};
        for (int n_steps : {1, 7, 64}) {
            SolverConfig cfg;
            cfg.n_steps = n_steps;
            Vec got = integrate_reverse(x, 1.0, 0.0, score, cfg, kDefault, rng);
            for (int i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(x[i]).epsilon(1e-9));
        }
    }

    TEST_CASE("euler at 1024 steps matches a 65536-step reference within 1e-3") {
        // data = N(0, 4 I): diffused variance v(t) = 1 + 3 alpha_bar(t)
        GaussianMixture data = single_gaussian({0.0}, 4.0);
        ScoreFn score = data.score_fn(kDefault);
        Vec x_start = {0.9};
        Rng rng(3);
        SolverConfig coarse, fine;
        coarse.n_steps = 1024;
        fine.n_steps = 65536;
        Vec a = integrate_reverse(x_start, 1.0, 0.0, score, coarse, kDefault, rng);
        Vec b = integrate_reverse(x_start, 1.0, 0.0, score, fine, kDefault, rng);
        CHECK(l2_distance(a, b) < 1e-3);
        // closed-form endpoint of this linear ODE:
        // x(0) = x(1) * sqrt(4 / (1 + 3 alpha_bar(1)))
        double factor = std::sqrt(4.0 / (1.0 + 3.0 * kDefault.alpha_bar(1.0)));
        CHECK(b[0] == doctest::Approx(0.9 * factor).epsilon(1e-4));
    }

    TEST_CASE("euler error decays at first order in the step size") {
        GaussianMixture data = single_gaussian({0.0}, 4.0);
        ScoreFn score = data.score_fn(kDefault);
        Vec x_start = {1.1};
        Rng rng(4);
        SolverConfig ref_cfg;
        ref_cfg.n_steps = 1 << 16;
        Vec ref = integrate_reverse(x_start, 1.0, 0.0, score, ref_cfg, kDefault, rng);
        std::vector<double> hs, errs;
        for (int n : {64, 128, 256, 512, 1024}) {
            SolverConfig cfg;
            cfg.n_steps = n;
            Vec got = integrate_reverse(x_start, 1.0, 0.0, score, cfg, kDefault, rng);
            hs.push_back(1.0 / n);
            errs.push_back(l2_distance(got, ref));
        }
        double slope = testutil::loglog_slope(hs, errs);
        CHECK(slope > 0.8);
        CHECK(slope < 1.2);
    }

    TEST_CASE("heun converges faster than euler on the same grid") {
        GaussianMixture data = single_gaussian({0.5, -0.5}, 2.0);
        ScoreFn score = data.score_fn(kDefault);
        Vec x_start = {1.0, -0.3};
        Rng rng(6);
        SolverConfig ref_cfg;
        ref_cfg.n_steps = 1 << 16;
        Vec ref = integrate_reverse(x_start, 0.9, 0.0, score, ref_cfg, kDefault, rng);
        SolverConfig euler_cfg, heun_cfg;
        euler_cfg.n_steps = heun_cfg.n_steps = 128;
        heun_cfg.method = SolverConfig::Method::heun;
        Vec e = integrate_reverse(x_start, 0.9, 0.0, score, euler_cfg, kDefault, rng);
        Vec h = integrate_reverse(x_start, 0.9, 0.0, score, heun_cfg, kDefault, rng);
        CHECK(l2_distance(h, ref) < l2_distance(e, ref));
    }

    TEST_CASE("reverse SDE from pure noise lands near the data modes") {
        GaussianMixture data({{0.5, {-2.0}, 0.04}, {0.5, {2.0}, 0.04}});
        ScoreFn score = data.score_fn(kDefault);
        SolverConfig cfg;
        cfg.n_steps = 512;
        cfg.stochastic = true;
        Rng rng(7);
        int near = 0;
        const int trials = 200;
        for (int i = 0; i < trials; ++i) {
            Vec x = rng.normal_vec(1);
            Vec got = integrate_reverse(x, 1.0, 0.0, score, cfg, kDefault, rng);
            if (std::min(std::abs(got[0] - 2.0), std::abs(got[0] + 2.0)) < 0.8) ++near;
        }
        CHECK(near > trials * 9 / 10);
    }

    TEST_CASE("divergence reports the failing step") {
        ScoreFn bad = [](const Vec& v, double) { return scaled(v, 1e155); };
        SolverConfig cfg;
        cfg.n_steps = 8;
        Rng rng(8);
        Vec x = {1.0};
        CHECK_THROWS_AS(integrate_reverse(x, 0.9, 0.0, bad, cfg, kDefault, rng),
                        IntegrationDiverged);
        try {
            integrate_reverse(x, 0.9, 0.0, bad, cfg, kDefault, rng);
        } catch (const IntegrationDiverged& e) {
            CHECK(std::string(e.what()).find("step") != std::string::npos);
            CHECK(e.step >= 0);
            CHECK(e.step < 8);
        }
    }
}
