#include "dblab/policy.hpp"
#include "dblab/solver.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dblab;

namespace {

// q-hat written out independently for the reference set.
double q_hat_ref(double tau) {
    double mu = 1, lam = 0.75, c = 0.5, B = 5;
    double V = 4.5 * (1 - std::exp(-tau));
    double U = (B - c / lam) * (1 - std::exp(-lam * tau));
    return mu * (V + c * tau) / (mu * (B + c * tau) + (lam - mu) * (B - U));
}

}  // namespace

TEST_SUITE("policy_math") {

TEST_CASE("known-arm value against expected-value quadrature") {
    ModelParams p = oracle::fig1(4);
    CHECK(known_arm_value(p, 0.0) == 0.0);
    double tau = 1.0, lam = 0.75;
    // E[B 1{X < tau} - c min(X, tau)] for X ~ Exp(lambda)
    double ev = oracle::simpson([&](double s) { return lam * std::exp(-lam * s) * (5.0 - 0.5 * s); },
                                0, tau) -
                std::exp(-lam * tau) * 0.5 * tau;
    CHECK(known_arm_value(p, tau) == doctest::Approx(ev).epsilon(1e-12));
    CHECK(known_arm_value(p, tau) == doctest::Approx(2.2864).epsilon(1e-4));
    CHECK(known_arm_value(p, 80.0) == doctest::Approx(5.0 - 0.5 / 0.75));
}

TEST_CASE("do-throughout value against Monte Carlo") {
    ModelParams p = oracle::fig1(4);
    CHECK(do_throughout_value(p, 1.0, 0.7) == doctest::Approx(known_arm_value(p, 0.7)));
    ModelParams free = p;
    free.c = 0;
    CHECK(do_throughout_value(free, 0.0, 2.0) == 0.0);

    double z = do_throughout_value(p, 0.75, 1.0);
    CHECK(z == doctest::Approx(1.5898).epsilon(1e-4));
    std::mt19937_64 g(2024);
    std::bernoulli_distribution good(0.75);
    const int n = 1000000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        double v;
        if (good(g)) {
            double x = oracle::exp_draw(g, 0.75);
            v = x < 1.0 ? 5.0 - 0.5 * x : -0.5;
        } else {
            v = -0.5;
        }
        sum += v;
        sq += v * v;
    }
    double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
    CHECK(std::fabs(mean - z) < 3 * se);
}

TEST_CASE("hail-mary belief values") {
    ModelParams p = oracle::fig1(4);
    auto m = oracle::fig1_model();
    CHECK(hail_mary_belief(p, m, 0.0) == 0.0);
    CHECK(hail_mary_belief(p, m, 1.0) == doctest::Approx(0.6937).epsilon(1e-3));
    CHECK(hail_mary_belief(p, m, 1.2) == doctest::Approx(0.75).epsilon(1e-3));
    for (double tau : {0.3, 1.0, 2.0, 5.0})
        CHECK(hail_mary_belief_raw(p, m, tau) == doctest::Approx(q_hat_ref(tau)).epsilon(1e-13));
    CHECK(std::fabs(hail_mary_belief_raw(p, m, 1000.0) - 1.0) < 1e-3);
    double prev = 0;
    for (int i = 1; i <= 400; ++i) {
        double q = hail_mary_belief(p, m, 0.025 * i);
        CHECK(q >= prev);
        prev = q;
    }
}

TEST_CASE("marginal deviation agrees with the boundary belief") {
    // Z^t: think for eps, then do for the rest; thinking is better iff p < q-hat.
    ModelParams p = oracle::fig1(10);
    auto m = oracle::fig1_model();
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> up(0.01, 0.99), ut(0.01, 10.0);
    const double eps = 1e-6;
    int tested = 0, agree = 0;
    for (int i = 0; i < 500; ++i) {
        double belief = up(g), tau = ut(g);
        double qh = hail_mary_belief_raw(p, m, tau);
        if (std::fabs(qh - belief) <= 1e-4) continue;
        double think = oracle::simpson(
            [&](double s) {
                return std::exp(-s) * (4.5 * (1 - std::exp(-(tau - s))) - 0.5 * s);
            },
            0, eps, 2);
        double U = (5.0 - 0.5 / 0.75) * (1 - std::exp(-0.75 * (tau - eps)));
        double zd_rest = belief * U - (1 - belief) * 0.5 * (tau - eps);
        double zt = think + std::exp(-eps) * (zd_rest - 0.5 * eps);
        double U0 = (5.0 - 0.5 / 0.75) * (1 - std::exp(-0.75 * tau));
        double zd = belief * U0 - (1 - belief) * 0.5 * tau;
        ++tested;
        agree += ((zt - zd) > 0) == (qh - belief > 0);
    }
    CHECK(tested > 450);
    CHECK(agree == tested);
}

TEST_CASE("hail-mary time inverts the boundary") {
    ModelParams p = oracle::fig1(4);
    auto m = oracle::fig1_model();
    double t75 = hail_mary_time(p, m, 0.75);
    CHECK(t75 == doctest::Approx(1.2).epsilon(1e-3));
    CHECK(t75 == doctest::Approx(oracle::bisect([](double t) { return q_hat_ref(t) - 0.75; }, 0.1, 5))
                     .epsilon(1e-9));
    CHECK(hail_mary_time(p, m, 2.0 / 3.0) == doctest::Approx(0.92).epsilon(2e-3));
    CHECK(hail_mary_time(p, m, 1e-6) < 1e-4);
}

TEST_CASE("preference slope") {
    ModelParams p = oracle::fig1(4);
    auto m = oracle::fig1_model();
    CHECK(preference_slope(p, m, 0.0, 0.75, 1.2) == doctest::Approx(0.5305).epsilon(1e-3));
    ModelParams free = p;
    free.c = 0;
    CHECK(preference_slope(free, m, 0.4, 0.0, 1.0) == doctest::Approx(m.value(1.4, 1)));
    CHECK(preference_slope(p, m, 2.5, 0.75, 1.2) < 0.0);
    // sign flip of the slope at xi + s near 3.45
    double flip = oracle::bisect([&](double s) { return preference_slope(p, m, s, 0.75, 1.2); }, 0, 5);
    CHECK(flip + 1.2 == doctest::Approx(3.45).epsilon(5e-3));
}

TEST_CASE("preference integral closed form against quadrature") {
    ModelParams p = oracle::fig1(4);
    auto m = oracle::fig1_model();
    CHECK(preference_integral(p, m, 0.0, 0.75, 1.2) == 0.0);
    CHECK(preference_integral(p, m, 0.7, 0.75, 1.2) > 0.0);
    for (double tau : {0.3, 1.0, 2.0, 3.5, 6.0})
        for (double pp : {0.3, 0.6, 0.75})
            CHECK(std::fabs(preference_integral(p, m, tau, pp, 1.2) -
                            preference_integral_quadrature(p, m, tau, pp, 1.2)) < 1e-9);
}

TEST_CASE("thinking span on the reference set") {
    ModelParams p = oracle::fig1(4);
    auto m = oracle::fig1_model();
    Span s = thinking_span(p, m, 1.2);
    REQUIRE_FALSE(s.is_infinite());
    // Root of a tau + b (e^tau - 1) = 0 with the slope coefficients written out.
    double q = q_hat_ref(1.2);
    double a = 4.5 * std::exp(-1.2) * (1 - 0.75 * q), b = q * 0.75 * (4.5 - 5) + (1 - 0.75 * q) * 0.5;
    double ref = oracle::bisect([&](double t) { return a * t + b * std::expm1(t); }, 1, 10);
    CHECK(s.value() == doctest::Approx(ref).epsilon(1e-8));
    CHECK(std::fabs(s.value() - 3.543) <= 2e-3);
    // Below the infinite-horizon threshold the limiting slope is positive: no root.
    CHECK(thinking_span(p, m, 0.8).is_infinite());
}

TEST_CASE("initial doing span") {
    ModelParams p = oracle::fig1(4);
    auto m = oracle::fig1_model();
    CHECK(initial_doing_span(p, m, hail_mary_time(p, m, 0.75)) == doctest::Approx(0.0).epsilon(1e-8));
    double t = hail_mary_time(p, m, 2.0 / 3.0);
    CHECK(initial_doing_span(p, m, t) ==
          doctest::Approx(doing_time_to_reach(0.75, 0.75, 2.0 / 3.0)).epsilon(1e-8));
    CHECK_THROWS(initial_doing_span(p, m, 2.0));
}

TEST_CASE("slope is positive at hail-mary entry") {
    ModelParams p = oracle::fig1(4);
    auto m = oracle::fig1_model();
    for (int i = 1; i <= 64; ++i) {
        double tau3 = 1.2 * i / 64.0;
        double q = hail_mary_belief(p, m, tau3);
        if (q > 0 && q <= p.p_bar) CHECK(preference_slope(p, m, 0.0, q, tau3) > 0.0);
    }
}

TEST_CASE("period maps are nonincreasing in tau3") {
    ModelParams p = oracle::fig1(4);
    auto m = oracle::fig1_model();
    double lo = hail_mary_time(p, m, 2.0 / 3.0) + 1e-3, hi = hail_mary_time(p, m, 0.75);
    double prev1 = INFINITY, prev2 = INFINITY;
    for (int i = 0; i < 64; ++i) {
        double tau3 = lo + (hi - lo) * i / 63.0;
        double t1 = initial_doing_span(p, m, tau3);
        Span t2 = thinking_span(p, m, tau3);
        CHECK(t1 <= prev1 + 1e-12);
        if (!t2.is_infinite()) {
            CHECK(t2.value() <= prev2 + 1e-9);
            prev2 = t2.value();
        }
        prev1 = t1;
    }
}

TEST_CASE("switching profile: all doing below the threshold") {
    ModelParams p = oracle::fig1(0.5);
    auto m = oracle::fig1_model();
    auto d = switching_profile(p, m, make_schedule(0, 0, 0.5));
    for (size_t i = 1; i < d.grid.size(); ++i) CHECK(d.y_values[i] < 0.0);
    REQUIRE(d.sign_pattern.size() == 1);
    CHECK(d.sign_pattern[0].favored == Favored::Do);
}

TEST_CASE("switching profile matches the optimal schedules") {
    auto m = oracle::fig1_model();
    for (double T : {1.9, 4.0, 6.0}) {
        CAPTURE(T);
        ModelParams p = oracle::fig1(T);
        PolicySchedule s = solve(p, m);
        auto d = switching_profile(p, m, s);
        std::vector<double> switches;  // in remaining time
        if (s.tau2 > 0) switches.push_back(s.tau3);
        if (s.tau1 > 0) switches.push_back(s.tau3 + s.tau2);
        REQUIRE(d.zeros.size() == switches.size());
        for (size_t i = 0; i < switches.size(); ++i)
            CHECK(d.zeros[i] == doctest::Approx(switches[i]).epsilon(1e-5));
        double lo = s.tau3, hi = s.tau3 + s.tau2;
        for (size_t i = 0; i < d.grid.size(); ++i) {
            double r = d.grid[i];
            if (r > lo + 1e-3 && r < hi - 1e-3) {
                CHECK(d.y_values[i] > 0.0);
                CHECK(d.concavity_flags[i] <= 0);
            } else if (r > 1e-3 && (r < lo - 1e-3 || r > hi + 1e-3)) {
                CHECK(d.y_values[i] < 0.0);
            }
        }
        double covered = 0;
        for (const auto& iv : d.sign_pattern) covered += iv.hi - iv.lo;
        CHECK(covered == doctest::Approx(T));
    }
}

TEST_CASE("switching profile at the reference hail-mary entry") {
    ModelParams p = oracle::fig1(1.9);
    auto m = oracle::fig1_model();
    auto d = switching_profile(p, m, make_schedule(0, 0.7, 1.2));
    REQUIRE(d.zeros.size() == 1);
    CHECK(d.zeros[0] == doctest::Approx(1.2).epsilon(1e-3));
    for (size_t i = 0; i < d.grid.size(); ++i) {
        if (d.grid[i] > 1.21) CHECK(d.y_values[i] >= 0.0);
        if (d.grid[i] < 1.19) CHECK(d.y_values[i] <= 0.0);
    }
}

}
