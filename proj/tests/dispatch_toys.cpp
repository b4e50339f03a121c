#include "dispatch_toys.hpp"

#include <random>

#include "oracles.hpp"

namespace toys {

using asyncfb::Matrix;

BuildingAgent building()
{
    BuildingAgent b;
    b.A = Matrix<double>::Constant(1, 1, 0.9);
    b.B_u = Matrix<double>::Constant(1, 1, 0.5);
    b.B_w = Matrix<double>::Constant(1, 1, 0.1);
    b.C = Matrix<double>::Identity(1, 1);
    b.x_init = Vec::Constant(1, 0.3);
    b.T_h = 2;
    b.u_min = Vec::Constant(1, 0.0);
    b.u_max = Vec::Constant(1, 4.0);
    b.w_hat = Matrix<double>(2, 1);
    b.w_hat << 1.0, -2.0;
    b.y_ref = Vec(2);
    b.y_ref << 1.5, 1.0;
    b.y_min = Vec(2);
    b.y_min << 1.2, 0.2;
    b.y_max = Vec(2);
    b.y_max << 1.4, 1.6;
    b.temp_weight = 1;
    b.band_weight = 1e3;
    b.cop = 3;
    b.u_base = Vec::Constant(2, 1.0);
    b.p_hat = b.u_base / b.cop;
    return b;
}

BatteryAgent battery()
{
    BatteryAgent b;
    b.a = 0.98;
    b.b = 0.5;
    b.soc_init = 2;
    b.soc_min = 1.8;
    b.soc_max = 3;
    b.p_min = -2;
    b.p_max = 2;
    b.soc_ref = 1.5;
    b.T_h = 2;
    return b;
}

namespace {

double dist_sq(double y, double lo, double hi)
{
    const double d = y > hi ? y - hi : (y < lo ? lo - y : 0.0);
    return d * d;
}

} // namespace

double building_prox_objective(const BuildingAgent& b, double gamma, const Vec& v, const Vec& u)
{
    double x = b.x_init[0], cost = 0;
    for (int t = 0; t < 2; ++t) {
        x = b.A(0, 0) * x + b.B_u(0, 0) * u[t] + b.B_w(0, 0) * b.w_hat(t, 0);
        cost += 0.5 * b.temp_weight * (x - b.y_ref[t]) * (x - b.y_ref[t]);
        cost += 0.5 * b.band_weight * dist_sq(x, b.y_min[t], b.y_max[t]);
        const double p = u[t] / b.cop;
        cost += (p - v[t]) * (p - v[t]) / (2 * gamma);
    }
    return cost;
}

double battery_prox_objective(const BatteryAgent& b, double gamma, const Vec& v, const Vec& p)
{
    double soc = b.soc_init, cost = 0;
    for (int t = 0; t < 2; ++t) {
        soc = b.a * soc + b.b * p[t];
        cost += 0.5 * b.soc_weight * (soc - b.soc_ref) * (soc - b.soc_ref);
        cost += 0.5 * b.band_weight * dist_sq(soc, b.soc_min, b.soc_max);
        cost += (p[t] - v[t]) * (p[t] - v[t]) / (2 * gamma);
    }
    return cost;
}

Vec grid_argmin(const std::function<double(const Vec&)>& f, const Vec& lo, const Vec& hi)
{
    const int n = 1201;
    Vec best = oracle::grid_minimize_2d(f, lo, hi, n);
    const Vec h = (hi - lo) / double(n - 1);
    const Vec wlo = (best - 4 * h).cwiseMax(lo), whi = (best + 4 * h).cwiseMin(hi);
    return oracle::grid_minimize_2d(f, wlo, whi, n);
}

double building_grid_error(std::uint64_t seed)
{
    const auto b = building();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(-0.5, 2.0);
    double worst = 0;
    for (double gamma : {0.05, 1.0, 20.0}) {
        for (int rep = 0; rep < 3; ++rep) {
            Vec v(2);
            v << ud(rng), ud(rng);
            const Vec p = asyncfb::building_prox(b, gamma, v);
            const Vec u = grid_argmin([&](const Vec& w) { return building_prox_objective(b, gamma, v, w); },
                                      Vec::Constant(2, b.u_min[0]), Vec::Constant(2, b.u_max[0]));
            worst = std::max(worst, (p - u / b.cop).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

double battery_grid_error(std::uint64_t seed)
{
    const auto b = battery();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(-3, 3);
    double worst = 0;
    for (double gamma : {0.05, 1.0, 20.0}) {
        for (int rep = 0; rep < 3; ++rep) {
            Vec v(2);
            v << ud(rng), ud(rng);
            const Vec p = asyncfb::battery_prox(b, gamma, v);
            const Vec g = grid_argmin([&](const Vec& w) { return battery_prox_objective(b, gamma, v, w); },
                                      Vec::Constant(2, b.p_min), Vec::Constant(2, b.p_max));
            worst = std::max(worst, (p - g).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

long firm_violations(const std::function<Vec(const Vec&)>& op, Eigen::Index dim, double scale, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    long bad = 0;
    for (int i = 0; i < 1000; ++i) {
        Vec x(dim), y(dim);
        for (Eigen::Index j = 0; j < dim; ++j) {
            x[j] = scale * nd(rng);
            y[j] = x[j] + scale * 0.1 * nd(rng);
        }
        const Vec px = op(x), py = op(y);
        if ((px - py).squaredNorm() > (px - py).dot(x - y) + 1e-9 * (1 + (x - y).squaredNorm())) ++bad;
    }
    return bad;
}

} // namespace toys
