#include <doctest.h>

#include <cmath>
#include <random>

#include "asyncfb/engines.hpp"
#include "asyncfb/probes.hpp"
#include "asyncfb/theory.hpp"
#include "oracles.hpp"

using namespace asyncfb;
using V = Vector<double>;
using M = Matrix<double>;

namespace {

SyncParams<double> params(V x0, double eta = 1, double beta = 0, long iters = 100)
{
    SyncParams<double> p;
    p.x0 = std::move(x0);
    p.eta = eta;
    p.beta = beta;
    p.max_iters = iters;
    p.stop_tol = 1e-12;
    return p;
}

OperatorPair<double> qp_pair(const M& Q, const V& q, const BlockPartition& part, double lo, double hi, double gamma)
{
    std::vector<VectorMap<double>> blocks(std::size_t(part.size()), box_projection<double>(lo, hi));
    return {part, quadratic_gradient<double>(Q, q), BackwardBlocks<double>(blocks), gamma};
}

} // namespace

TEST_CASE("heavy ball examples")
{
    const VectorMap<double> grad = [](const V& x) { return x; };
    auto p = params(V::Constant(1, 7));
    p.gamma = 1;
    const auto r = run_heavy_ball(grad, p);
    CHECK(r.iterates[1][0] == 0);
    CHECK(r.terminated_by == Termination::tolerance);

    p.gamma = 0;
    p.max_iters = 5;
    const auto c = run_heavy_ball(grad, p);
    for (const auto& x : c.iterates) CHECK(x[0] == 7);

    // geometric decay with factor max |1 - gamma lambda|
    M Q = M::Zero(2, 2);
    Q(0, 0) = 1;
    Q(1, 1) = 4;
    const VectorMap<double> gq = [Q](const V& x) { return V(Q * x); };
    auto pq = params(V::Ones(2), 1, 0, 30);
    pq.gamma = 0.3;
    const auto rq = run_heavy_ball(gq, pq);
    const double rho = std::max(std::abs(1 - 0.3), std::abs(1 - 1.2));
    for (std::size_t k = 0; k < rq.iterates.size(); ++k) {
        CHECK(rq.iterates[k].norm() <= std::pow(rho, double(k)) * std::sqrt(2.0) * (1 + 1e-12));
    }
}

TEST_CASE("heavy ball with momentum matches the two-step recursion")
{
    M Q = M::Identity(2, 2) * 2;
    const VectorMap<double> g = [Q](const V& x) { return V(Q * x); };
    auto p = params(V::Ones(2), 1, 0.5, 5);
    p.gamma = 0.1;
    const auto r = run_heavy_ball(g, p);
    V xm = p.x0, x = p.x0;
    for (long k = 0; k < 5; ++k) {
        CHECK((r.iterates[std::size_t(k)] - x).norm() <= 1e-15);
        const V nx = x - 0.1 * Q * x + 0.5 * (x - xm);
        xm = x;
        x = nx;
    }
}

TEST_CASE("divergence guard")
{
    const VectorMap<double> g = [](const V& x) { return x; };
    auto p = params(V::Ones(1), 1, 0, 1000);
    p.gamma = 3; // factor -2 per step
    CHECK_THROWS_AS(run_heavy_ball(g, p), DivergenceError);
}

TEST_CASE("KM examples")
{
    const V c = V::Constant(2, 3);
    const VectorMap<double> constant = [c](const V&) { return c; };
    const auto r = run_km(constant, params(V::Zero(2), 1, 0, 10));
    CHECK(r.iterates[1] == c);
    CHECK(r.terminated_by == Termination::tolerance);

    const auto still = run_km(constant, params(V::Ones(2), 0, 0, 5));
    for (const auto& x : still.iterates) CHECK(x == V::Ones(2));

    M R(2, 2);
    R << 0, -1, 1, 0;
    const VectorMap<double> rot = [R](const V& x) { return V(R * x); };
    V x0(2);
    x0 << 3, 4;
    const auto rr = run_km(rot, params(x0, 0.5, 0, 40));
    for (std::size_t k = 0; k < rr.iterates.size(); ++k) {
        CHECK(rr.iterates[k].norm() == doctest::Approx(std::pow(std::sqrt(2.0) / 2, double(k)) * 5).epsilon(1e-12));
    }
}

TEST_CASE("KM residuals never increase for an averaged map")
{
    std::mt19937_64 rng(9);
    const M Q = oracle::random_spd(4, 0.1, 2.0, rng);
    const auto pair = qp_pair(Q, V::Ones(4), BlockPartition::uniform(4, 1), -1, 1, 0.5);
    const VectorMap<double> T = [&](const V& x) { return apply_T(pair, x); };
    const auto r = run_km(T, params(V::Constant(4, 3), 0.6, 0, 200));
    for (std::size_t k = 1; k < r.residuals.size(); ++k) CHECK(r.residuals[k] <= r.residuals[k - 1] * (1 + 1e-12));
}

TEST_CASE("sync FBS with T_A = I matches gradient descent")
{
    std::mt19937_64 rng(13);
    const M Q = oracle::random_spd(3, 0.5, 2.0, rng);
    const V q = V::Ones(3);
    std::vector<VectorMap<double>> id(3, identity_map<double>());
    OperatorPair<double> pair(BlockPartition::uniform(3, 1), quadratic_gradient<double>(Q, q), BackwardBlocks<double>(id),
                              0.4);
    auto p = params(V::Zero(3), 1, 0, 50);
    const auto a = run_sync_fbs(pair, p);
    p.gamma = 0.4;
    const VectorMap<double> g = [&](const V& x) { return V(Q * x + q); };
    const auto b = run_heavy_ball(g, p);
    REQUIRE(a.iterates.size() == b.iterates.size());
    for (std::size_t k = 0; k < a.iterates.size(); ++k) CHECK((a.iterates[k] - b.iterates[k]).norm() <= 1e-14);
}

TEST_CASE("sync FBS with one block equals repeated apply_T bit for bit")
{
    std::mt19937_64 rng(19);
    const M Q = oracle::random_spd(3, 0.2, 2.0, rng);
    const auto pair = qp_pair(Q, V::Ones(3), BlockPartition({3}), -0.5, 0.5, 0.6);
    const auto r = run_sync_fbs(pair, params(V::Constant(3, 2), 1, 0, 40));
    V x = V::Constant(3, 2);
    for (const auto& it : r.iterates) {
        CHECK(it == x);
        x = apply_T(pair, x);
    }
}

TEST_CASE("sync FBS contracts at the quadratic bound toward the active-set optimizer")
{
    std::mt19937_64 rng(29);
    for (int rep = 0; rep < 5; ++rep) {
        const M Q = oracle::random_spd(4, 0.3, 2.5, rng);
        std::normal_distribution<double> nd;
        V q(4);
        for (int i = 0; i < 4; ++i) q[i] = nd(rng);
        const double L = oracle::lambda_max(Q), mu = oracle::lambda_min(Q);
        const double gamma = 1.2 / L;
        const auto pair = qp_pair(Q, q, BlockPartition::uniform(2, 2), -0.4, 0.4, gamma);
        const V xs = oracle::box_qp_by_active_sets(Q, q, V::Constant(4, -0.4), V::Constant(4, 0.4));
        const auto r = run_sync_fbs(pair, params(V::Constant(4, 1.0), 1, 0, 60), &xs);
        REQUIRE(r.has_distances());
        const double lip = contraction_factor(gamma, mu, L);
        for (std::size_t k = 0; k < r.distances.size(); ++k) {
            CHECK(r.distances[k] <= std::pow(lip, double(k)) * r.distances[0] * (1 + 1e-9) + 1e-12);
            if (k > 0) CHECK(r.distances[k] <= r.distances[k - 1] * (1 + 1e-12) + 1e-14);
        }
    }
}

TEST_CASE("sync FBS stops at tolerance from the solution")
{
    std::mt19937_64 rng(7);
    const M Q = oracle::random_spd(2, 0.5, 1.0, rng);
    const auto pair = qp_pair(Q, V::Zero(2), BlockPartition::uniform(2, 1), -1, 1, 1.0);
    const auto r = run_sync_fbs(pair, params(V::Zero(2), 1, 0, 10));
    CHECK(r.terminated_by == Termination::tolerance);
    CHECK(r.iterations == 0);
    CHECK(r.residuals.back() <= 1e-12);
}

TEST_CASE("cyclic coordinate KM examples")
{
    std::mt19937_64 rng(43);
    const M Q = oracle::random_spd(3, 0.3, 2.0, rng);
    const auto one = qp_pair(Q, V::Ones(3), BlockPartition({3}), -1, 1, 0.5);
    const auto a = run_cyclic_coordinate_km(one, params(V::Zero(3), 0.7, 0, 30));
    const VectorMap<double> T = [&](const V& x) { return apply_T(one, x); };
    const auto b = run_km(T, params(V::Zero(3), 0.7, 0, 30));
    REQUIRE(a.iterates.size() == b.iterates.size());
    for (std::size_t k = 0; k < a.iterates.size(); ++k) CHECK((a.iterates[k] - b.iterates[k]).norm() <= 1e-14);

    const auto still = run_cyclic_coordinate_km(one, params(V::Ones(3), 0, 0, 5));
    for (const auto& x : still.iterates) CHECK(x == V::Ones(3));

    // block-diagonal B, separable T_A: one sweep equals one synchronous step
    M D = M::Zero(4, 4);
    D.topLeftCorner(2, 2) = oracle::random_spd(2, 0.5, 1.5, rng);
    D.bottomRightCorner(2, 2) = oracle::random_spd(2, 0.5, 1.5, rng);
    const auto sep = qp_pair(D, V::Ones(4), BlockPartition::uniform(2, 2), -0.3, 0.8, 0.6);
    const V x0 = V::Constant(4, 0.9);
    const auto cyc = run_cyclic_coordinate_km(sep, params(x0, 1, 0, 2));
    const auto syn = run_sync_fbs(sep, params(x0, 1, 0, 1));
    CHECK((cyc.iterates[2] - syn.iterates[1]).norm() <= 1e-14);
}

TEST_CASE("history thinning keeps the first and last iterates")
{
    RunResult<double> r;
    for (long k = 0; k < 250000; ++k) r.record(k, V::Constant(1, double(k)), 1.0, nullptr);
    CHECK(r.iterates.size() <= RunResult<double>::kMaxStored);
    CHECK_FALSE(r.dense);
    CHECK(r.iteration.front() == 0);
    r.record_final(249999, V::Constant(1, 249999.0), 1.0, nullptr);
    CHECK(r.iteration.back() == 249999);
    for (std::size_t i = 1; i < r.iteration.size(); ++i) CHECK(r.iteration[i] > r.iteration[i - 1]);
}

TEST_CASE("parameter validation")
{
    const VectorMap<double> g = [](const V& x) { return x; };
    auto p = params(V::Ones(1));
    p.eta = 1.5;
    CHECK_THROWS_AS(run_km(g, p), ParameterError);
    p.eta = 1;
    p.stop_tol = 0;
    CHECK_THROWS_AS(run_km(g, p), ParameterError);
    p.stop_tol = 1e-9;
    p.beta = -0.1;
    CHECK_THROWS_AS(run_heavy_ball(g, p), ParameterError);
}
