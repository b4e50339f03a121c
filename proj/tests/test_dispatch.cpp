#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "asyncfb/dispatch.hpp"
#include "asyncfb/engines.hpp"
#include "asyncfb/probes.hpp"
#include "asyncfb/theory.hpp"
#include "dispatch_toys.hpp"
#include "oracles.hpp"

using namespace asyncfb;

namespace {

DispatchProblem tiny_problem(Index T, std::uint64_t seed)
{
    DispatchParams dp;
    dp.n_small = 1;
    dp.n_medium = 0;
    dp.T_h = T;
    dp.seed = seed;
    return make_dispatch_problem(dp);
}

void check_firmly_nonexpansive(const VectorMap<double>& op, Index dim, double scale, std::uint64_t seed)
{
    CHECK(toys::firm_violations(op, dim, scale, seed) == 0);
}

} // namespace

TEST_CASE("generate_building: deterministic, stable, linear")
{
    for (auto cls : {AgentClass::small, AgentClass::medium, AgentClass::large}) {
        const auto a = generate_building(cls, 24, 11);
        const auto b = generate_building(cls, 24, 11);
        CHECK(a.A == b.A);
        CHECK(a.B_u == b.B_u);
        CHECK(a.u_base == b.u_base);
        CHECK(a.y_ref == b.y_ref);
        const auto c = generate_building(cls, 24, 12);
        CHECK(a.A != c.A);

        const Vec ev = Eigen::SelfAdjointEigenSolver<Matrix<double>>(a.A).eigenvalues();
        CHECK(ev.minCoeff() >= 0.7 - 1e-12);
        CHECK(ev.maxCoeff() <= 0.98 + 1e-12);

        const Index want_states = cls == AgentClass::small ? 3 : (cls == AgentClass::medium ? 5 : 6);
        CHECK(a.n_states() == want_states);
        CHECK(a.n_inputs() == (cls == AgentClass::small ? 1 : 2));

        // zero input, zero initial state and zero disturbance give zero output
        auto z = a;
        z.x_init.setZero();
        z.w_hat.setZero();
        const auto lp = condense(z);
        CHECK(lp.outputs(Vec::Zero(lp.n_u())).cwiseAbs().maxCoeff() == 0.0);

        // condensed outputs against the state recursion
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> ud(0, 10);
        const Index m = a.n_inputs();
        Vec u(m * 24);
        for (Index i = 0; i < u.size(); ++i) u[i] = ud(rng);
        Vec x = a.x_init;
        const Vec y = condense(a).outputs(u);
        for (Index t = 0; t < 24; ++t) {
            x = a.A * x + a.B_u * u.segment(t * m, m) + a.B_w * a.w_hat.row(t).transpose();
            CHECK((a.C * x - y.segment(t * m, m)).norm() <= 1e-10 * (1 + x.norm()));
        }
    }
    CHECK_THROWS_AS(generate_building(AgentClass::battery, 24, 1), ParameterError);
}

TEST_CASE("coupling gradient examples")
{
    // N = 1, T_h = 1, alpha1 = 0, alpha2 = 1, p_hat = 0, r = 1: grad of 1/2 (p1 + p2 - 1)^2 at 0
    DispatchProblem p;
    p.battery.T_h = 1;
    BuildingAgent b;
    b.p_hat = Vec::Zero(1);
    p.buildings.push_back(b);
    p.r = Vec::Ones(1);
    p.alpha1 = 0;
    p.alpha2 = 1;
    p.partition = BlockPartition::uniform(2, 1);
    const Vec g = coupling_gradient(p, Vec::Zero(2));
    CHECK(g[0] == -1.0);
    CHECK(g[1] == -1.0);

    // baseline with r = 0 is the minimizer of f alone
    auto d = make_dispatch_problem({});
    d.r.setZero();
    CHECK(coupling_gradient(d, d.baseline()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK_THROWS_AS(coupling_gradient(d, Vec::Zero(5)), ContractViolation);
}

TEST_CASE("coupling gradient matches central differences")
{
    const auto d = make_dispatch_problem({});
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 3; ++rep) {
        Vec p(d.partition.total());
        for (Index i = 0; i < p.size(); ++i) p[i] = 10 * nd(rng);
        const Vec g = coupling_gradient(d, p);
        const Vec gn = oracle::numeric_gradient([&](const Vec& x) { return coupling_value(d, x); }, p, 1e-5);
        CHECK((g - gn).norm() <= 1e-6 * g.norm());
    }
}

TEST_CASE("coupling is alpha1-strongly convex with L = alpha2 (N + 1) + alpha1")
{
    const auto d = make_dispatch_problem({});
    const auto f = coupling_operator(d);
    const double N1 = double(d.n_agents());
    CHECK(f.L == doctest::Approx(d.alpha2 * N1 + d.alpha1).epsilon(1e-9));
    CHECK(f.mu == doctest::Approx(d.alpha1).epsilon(1e-6));
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 200; ++i) {
        Vec p(d.partition.total()), q(d.partition.total());
        for (Index j = 0; j < p.size(); ++j) {
            p[j] = 50 * nd(rng);
            q[j] = 50 * nd(rng);
        }
        const double lhs = (p - q).dot(coupling_gradient(d, p) - coupling_gradient(d, q));
        CHECK(lhs >= d.alpha1 * (p - q).squaredNorm() * (1 - 1e-9));
    }
}

TEST_CASE("building prox on a two-step toy matches a grid search")
{
    CHECK(toys::building_grid_error(21) <= 1e-3);
}

TEST_CASE("battery prox on a two-step toy matches a grid search")
{
    CHECK(toys::battery_grid_error(22) <= 1e-3);
}

TEST_CASE("prox limits")
{
    const auto b = toys::building();
    const auto bat = toys::battery();
    Vec v(2);
    v << 5.0, -0.4;
    // tiny gamma: projection onto the feasible power range
    const Vec p = building_prox(b, 1e-8, v);
    CHECK(p[0] == doctest::Approx(4.0 / 3).epsilon(1e-6));
    CHECK(std::abs(p[1]) <= 1e-6);
    Vec w(2);
    w << 7.0, 0.5;
    const Vec q = battery_prox(bat, 1e-8, w);
    CHECK(q[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(q[1] == doctest::Approx(0.5).epsilon(1e-6));

    // zero weights, box inactive: identity
    auto b0 = generate_building(AgentClass::medium, 24, 4);
    b0.temp_weight = 0;
    b0.band_weight = 0;
    const Vec inside = Vec::LinSpaced(24, 2.0, 20.0);
    CHECK((building_prox(b0, 0.3, inside) - inside).cwiseAbs().maxCoeff() <= 1e-9);
    auto bat0 = bat;
    bat0.soc_weight = 0;
    bat0.band_weight = 0;
    Vec inb(2);
    inb << 0.7, -1.1;
    CHECK((battery_prox(bat0, 0.3, inb) - inb).cwiseAbs().maxCoeff() <= 1e-12);

    CHECK_THROWS_AS(building_prox(b, 0.0, v), ParameterError);
    CHECK_THROWS_AS(building_prox(b, 1.0, Vec::Zero(3)), ContractViolation);
}

TEST_CASE("agent proxes are firmly nonexpansive")
{
    const auto d = make_dispatch_problem({});
    const auto pair = make_dispatch_pair(d);
    const Index T = d.T_h();
    // the pair's gamma and a larger one where the local costs dominate
    check_firmly_nonexpansive(pair.backward[0], T, 50, 1);
    check_firmly_nonexpansive(pair.backward[1], T, 5, 2);
    check_firmly_nonexpansive(pair.backward[4], T, 10, 3);
    const auto lb = condense(d.buildings[3]);
    check_firmly_nonexpansive([&](const Vec& v) { return local_prox(lb, 0.01, v); }, T, 10, 4);
    const auto lbat = condense(d.battery);
    check_firmly_nonexpansive([&](const Vec& v) { return local_prox(lbat, 0.01, v); }, T, 50, 5);

    for (Index i = 0; i < pair.backward.size(); ++i) {
        CHECK(probe_nonexpansive<double>(pair.backward[i], T, 200, std::uint64_t(10 + i)).pass);
    }
}

TEST_CASE("solve_reference certificate and re-solve")
{
    const auto d = make_dispatch_problem({});
    const auto pair = make_dispatch_pair(d);
    const auto ref = solve_reference(d, pair, 1e-10);
    CHECK(ref.residual <= 1e-10);
    CHECK(apply_S(pair, ref.x_star).norm() <= 1e-10);

    SyncParams<double> sp;
    sp.x0 = ref.x_star;
    sp.stop_tol = 1e-10;
    const auto again = run_sync_fbs(pair, sp);
    CHECK(again.iterations == 0);
    CHECK_THROWS_AS(solve_reference(d, pair, 1e-8), ParameterError);
}

TEST_CASE("solve_reference agrees with plain iteration from two starts")
{
    const auto d = tiny_problem(2, 3);
    const auto pair = make_dispatch_pair(d);
    const double tol = 1e-10;
    const auto ref = solve_reference(d, pair, tol);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 2; ++rep) {
        SyncParams<double> sp;
        sp.x0 = Vec(d.partition.total());
        for (Index i = 0; i < sp.x0.size(); ++i) sp.x0[i] = 20 * nd(rng);
        sp.stop_tol = tol;
        sp.max_iters = 2000000;
        const auto run = run_sync_fbs(pair, sp);
        REQUIRE(run.terminated_by == Termination::tolerance);
        // ||x - x*|| <= ||S x|| / (1 - contraction), with the contraction factor from the forward step alone
        const double c = contraction_factor(pair.gamma, pair.forward.mu, pair.forward.L);
        CHECK((run.final_iterate() - ref.x_star).norm() <= 10 * tol / (1 - c));
    }
}

TEST_CASE("problem json round trip")
{
    DispatchParams dp;
    dp.n_small = 1;
    dp.n_medium = 1;
    dp.n_large = 1;
    dp.seed = 17;
    const auto d = make_dispatch_problem(dp);
    const std::string text = problem_to_json(d);
    const auto back = problem_from_json(text);
    CHECK(problem_to_json(back) == text);
    CHECK(back.r == d.r);
    CHECK(back.buildings[2].A == d.buildings[2].A);
    CHECK(back.buildings[2].cls == AgentClass::large);

    const Vec v = Vec::LinSpaced(d.partition.total(), -30, 30);
    const auto pa = make_dispatch_pair(d), pb = make_dispatch_pair(back);
    CHECK(apply_T(pa, v) == apply_T(pb, v));

    CHECK_THROWS_AS(problem_from_json("{"), FormatError);
    CHECK_THROWS_AS(problem_from_json(R"({"alpha1": 1})"), FormatError);
    std::string broken = text;
    broken.replace(broken.find("\"r\""), 3, "\"q\"");
    CHECK_THROWS_AS(problem_from_json(broken), FormatError);
}

TEST_CASE("dispatch parameter validation")
{
    DispatchParams dp;
    dp.n_small = dp.n_medium = 0;
    CHECK_THROWS_AS(make_dispatch_problem(dp), ParameterError);
    dp = {};
    dp.alpha1 = 0;
    CHECK_THROWS_AS(make_dispatch_problem(dp), ParameterError);
    auto d = make_dispatch_problem({});
    CHECK(d.n_agents() == 6);
    CHECK(d.partition.total() == 6 * 24);
    CHECK_THROWS_AS(make_dispatch_pair(d, 2.0), ParameterError);
    d.buildings[0].A(0, 0) = 5;
    CHECK_THROWS_AS(d.validate(), ParameterError);
}
