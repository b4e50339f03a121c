#include <doctest.h>

#include <cmath>
#include <random>

#include "asyncfb/theory.hpp"

using namespace asyncfb;

namespace {

// direct transcription, independent of the library helpers
double oracle_eta_max(long N, long tau, double gamma, double L, double mu, double beta, double delta, double eps)
{
    const double nu = 1 - std::sqrt(1 - 2 * gamma * mu + mu * gamma * gamma * L);
    const double Y = 1 + gamma * L + 2 * beta;
    const double X = double(N) * (Y * double(N) + 1) * (4.0 * double(tau) * (1 + gamma * L) + 6 * beta * double(tau));
    return std::min(1 / (2 * (1 + delta)), std::sqrt(2 * delta * eps * (nu - eps) / (2 * delta + eps)) / X);
}

} // namespace

TEST_CASE("compute_nu examples")
{
    CHECK(compute_nu(0.5, 1.0, 2.0) == doctest::Approx(1 - std::sqrt(0.5)).epsilon(1e-15));
    CHECK(compute_nu(1.0, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(compute_nu(0.5, 0.0, 2.0) == 0);
    CHECK_THROWS_AS(compute_nu(1.0, 1.0, 2.0), ParameterError);
    CHECK_THROWS_AS(compute_nu(0.0, 1.0, 2.0), ParameterError);
}

TEST_CASE("compute_nu stays in [0, 1] on admissible inputs")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(1e-6, 1);
    for (int i = 0; i < 10000; ++i) {
        const double L = 0.1 + 10 * u(rng);
        const double mu = L * u(rng);
        const double gamma = 2 / L * u(rng) * (1 - 1e-9);
        const double nu = compute_nu(gamma, mu, L);
        CHECK(nu >= 0);
        CHECK(nu <= 1);
    }
}

TEST_CASE("compute_Y_X example")
{
    const auto yx = compute_Y_X(1, 1, 0.1, 1.0, 0.99);
    CHECK(yx.Y == doctest::Approx(3.08).epsilon(1e-12));
    CHECK(yx.X == doctest::Approx(42.1872).epsilon(1e-12));
    CHECK_THROWS_AS(compute_Y_X(0, 1, 0.1, 1.0, 0.5), ParameterError);
    CHECK_THROWS_AS(compute_Y_X(1, 0, 0.1, 1.0, 0.5), ParameterError);
}

TEST_CASE("eta_max examples")
{
    // delta = 1, eps = nu / 2, nu = 0.5, X = 42.19: second term sqrt(2 * 0.25 * 0.25 / 2.25) / 42.19
    CHECK(eta_max_from(42.19, 0.5, 0.25, 1.0) == doctest::Approx(std::sqrt(0.125 / 2.25) / 42.19).epsilon(1e-12));
    CHECK(eta_max_from(42.19, 0.5, 0.25, 1.0) == doctest::Approx(0.005587).epsilon(1e-4));
    // huge X: second term wins; tiny X: cap 1 / (2 (1 + delta))
    CHECK(eta_max_from(1e-6, 0.5, 0.25, 1.0) == doctest::Approx(0.25));
    CHECK(eta_max_from(1e-6, 0.5, 0.25, 1e6) < 1e-6);

    TheoryInputs in;
    in.N = 1;
    in.tau = 1;
    in.gamma = 1;
    in.L = 1;
    in.mu = 1;
    in.beta = 0;
    in.delta = 1;
    in.epsilon = 0.5;
    // nu = 1, Y = 2, X = 1 * 3 * 8 = 24
    CHECK(eta_max(in) == doctest::Approx(std::sqrt(0.2) / 24).epsilon(1e-12));
    CHECK(eta_max(in) == doctest::Approx(oracle_eta_max(1, 1, 1, 1, 1, 0, 1, 0.5)).epsilon(1e-12));
}

TEST_CASE("rate examples")
{
    CHECK(rate(0.9, 0.09, 1) == doctest::Approx(std::pow(0.99, 1.0 / 7)).epsilon(1e-15));
    CHECK(rate(0.5, 0.0, 0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(rate(0.6, 0.5, 1), ParameterError);
}

TEST_CASE("eta_max against the oracle on random tuples, and r + q < 1 below it")
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0, 1);
    int checked = 0;
    for (int i = 0; i < 10000; ++i) {
        TheoryInputs in;
        in.N = 1 + long(u(rng) * 20);
        in.tau = in.N + long(u(rng) * 100);
        in.L = 0.1 + 100 * u(rng);
        in.mu = in.L * (1e-4 + u(rng) * (1 - 1e-4));
        in.gamma = (0.01 + 1.98 * u(rng)) / in.L;
        in.beta = 0.999 * u(rng);
        in.delta = std::pow(10.0, -3 + 4 * u(rng));
        const double nu = in.nu();
        if (!(nu > 1e-12)) continue;
        in.epsilon = nu * (0.01 + 0.98 * u(rng));
        const double em = eta_max(in);
        CHECK(em == doctest::Approx(oracle_eta_max(in.N, in.tau, in.gamma, in.L, in.mu, in.beta, in.delta, in.epsilon))
                        .epsilon(1e-12));
        const double eta = em * (0.001 + 0.998 * u(rng));
        const auto c = make_constants(in, eta);
        CHECK(c.guaranteed);
        CHECK(c.margin > 0);
        CHECK(c.r + c.q <= 1);
        REQUIRE(c.s.has_value());
        CHECK(*c.s <= 1);
        ++checked;
    }
    CHECK(checked > 9000);
}

TEST_CASE("monotonicity")
{
    TheoryInputs base;
    base.N = 4;
    base.tau = 10;
    base.gamma = 0.5;
    base.L = 1;
    base.mu = 0.5;
    base.beta = 0.3;
    base.epsilon = 0.05;
    double prev = eta_max(base);
    for (long tau = 11; tau < 40; ++tau) {
        auto in = base;
        in.tau = tau;
        const double e = eta_max(in);
        CHECK(e <= prev);
        prev = e;
    }
    prev = eta_max(base);
    for (double beta = 0.31; beta < 0.99; beta += 0.05) {
        auto in = base;
        in.beta = beta;
        const double e = eta_max(in);
        CHECK(e <= prev);
        prev = e;
    }
    // below about eta_max / sqrt(3) the margin shrinks with eta
    double last = 1;
    for (double f = 0.5; f > 1e-4; f /= 2) {
        const auto cf = make_constants(base, eta_max(base) * f);
        CHECK(cf.margin < last);
        CHECK(cf.margin > 0);
        last = cf.margin;
    }
}

TEST_CASE("theory input validation")
{
    TheoryInputs in;
    in.gamma = 0.5;
    in.L = 1;
    in.mu = 0;
    CHECK_THROWS_AS(in.validate(), ParameterError);
    in.mu = 0.5;
    in.epsilon = 10;
    CHECK_THROWS_AS(in.validate(), ParameterError);
    in.epsilon = -1;
    CHECK_NOTHROW(in.validate());
    CHECK(in.resolved_epsilon() == doctest::Approx(in.nu() / 2));
}

TEST_CASE("grid search never does worse than the default choice")
{
    TheoryInputs in;
    in.N = 6;
    in.tau = 30;
    in.gamma = 0.9;
    in.L = 1;
    in.mu = 0.01;
    in.beta = 0.99;
    const auto g = search_delta_epsilon(in);
    CHECK(g.eta_max >= eta_max(in) * (1 - 1e-12));
    CHECK(g.epsilon > 0);
    CHECK(g.epsilon < in.nu());
    in.delta = g.delta;
    in.epsilon = g.epsilon;
    CHECK(eta_max(in) == doctest::Approx(g.eta_max));
}

TEST_CASE("check_iss on synthetic sequences")
{
    std::vector<double> V{1};
    for (int k = 0; k < 100; ++k) V.push_back(V.back() * 0.8);
    const auto ok = check_iss(V, 0.8, 0.1, 3);
    CHECK(ok.recursion_fraction == 1);
    CHECK(ok.envelope_ok);

    std::vector<double> bad{1, 1, 1, 1, 1, 1};
    const auto br = check_iss(bad, 0.5, 0.1, 1);
    CHECK_FALSE(br.envelope_ok);
    CHECK(br.first_violation == 1);
    CHECK(br.recursion_fraction == 0);
    CHECK_THROWS_AS(check_iss(V, 0.9, 0.2, 1), ParameterError);
}
