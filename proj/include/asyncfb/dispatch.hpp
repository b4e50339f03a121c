#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asyncfb/async.hpp"
#include "asyncfb/box_qp.hpp"
#include "asyncfb/operators.hpp"
#include "asyncfb/scheduler.hpp"

namespace asyncfb {

/**
 * Building with linear zone dynamics
 *   x(t+1) = A x(t) + B_u u(t) + B_w w(t),  y(t) = C x(t),
 * heat inputs u in [u_min, u_max] and electrical power p(t) = sum_j u_j(t) / cop.
 * Outputs y(1..T_h) are stacked step-major; so are inputs u(0..T_h-1).
 */
struct BuildingAgent
{
    AgentClass cls = AgentClass::small;
    Matrix<double> A, B_u, B_w, C;
    Vec x_init;
    Index T_h = 0;
    Vec u_min, u_max;     ///< per input
    Matrix<double> w_hat; ///< T_h x disturbance channels
    Vec y_ref, y_min, y_max;
    double temp_weight = 1;
    double band_weight = 1e3; ///< penalty on leaving [y_min, y_max]
    double cop = 3;
    Vec u_base;               ///< baseline heat inputs, stacked
    Vec p_hat;                ///< baseline power, length T_h

    Index n_states() const { return A.rows(); }
    Index n_inputs() const { return B_u.cols(); }
    void validate() const;
};

/// SOC(t+1) = a SOC(t) + b p(t); SOC bounds enter as a penalty, the power box is hard.
struct BatteryAgent
{
    double a = 1;
    double b = 0.25;
    double soc_init = 0;
    double soc_min = 0;
    double soc_max = 1;
    double p_min = -1;
    double p_max = 1;
    double soc_ref = 0;
    Index T_h = 0;
    double soc_weight = 1;
    double band_weight = 1e3;

    void validate() const;
};

/**
 * An agent's program with the dynamics eliminated: decisions u in [u_lo, u_hi],
 * outputs y = G u + y0, power p = M u, cost
 *   weight/2 ||y - y_ref||^2 + rho/2 dist(y, [y_lo, y_hi])^2.
 */
struct LocalProgram
{
    Matrix<double> G;
    Vec y0, y_ref, y_lo, y_hi;
    Matrix<double> M;
    Vec u_lo, u_hi;
    double weight = 1;
    double rho = 0;

    Index n_u() const { return G.cols(); }
    Index n_p() const { return M.rows(); }
    Vec outputs(const Vec& u) const { return G * u + y0; }
    double cost(const Vec& u) const;
};

LocalProgram condense(const BuildingAgent& b);
LocalProgram condense(const BatteryAgent& b);

/// prox_{gamma g}(v) with g(p) = min { local cost(u) : M u = p }; returns p.
Vec local_prox(const LocalProgram& prog, double gamma, const Vec& v, const NewtonOptions& opt = {});

Vec building_prox(const BuildingAgent& b, double gamma, const Vec& v, double tol = 1e-12);
Vec battery_prox(const BatteryAgent& b, double gamma, const Vec& v, double tol = 1e-12);

/// Random stable building of the given class, reproducible from the seed.
BuildingAgent generate_building(AgentClass cls, Index T_h, std::uint64_t seed);

struct DispatchParams
{
    int n_small = 3;
    int n_medium = 2;
    int n_large = 0;
    Index T_h = 24;
    double alpha1 = 1e-2;
    double alpha2 = 1e4;
    double track_fraction = 0.8; ///< tracking signal amplitude relative to the fleet's flexibility
    std::uint64_t seed = 1;

    void validate() const;
};

/// Decision vector (p_bess, p_1, ..., p_N), one block of length T_h per agent.
struct DispatchProblem
{
    BatteryAgent battery;
    std::vector<BuildingAgent> buildings;
    Vec r;
    double alpha1 = 1e-2;
    double alpha2 = 1e4;
    BlockPartition partition;

    int n_agents() const { return 1 + int(buildings.size()); }
    Index T_h() const { return battery.T_h; }
    /// (0, p_hat_1, ..., p_hat_N): every agent on its baseline.
    Vec baseline() const;
    /// Battery first, then the buildings' class timings.
    std::vector<AgentProfile> profiles() const;
    void validate() const;
};

DispatchProblem make_dispatch_problem(const DispatchParams& params);

/**
 * f(p) = alpha2/2 sum_t (p_bess(t) + sum_i (p_i(t) - p_hat_i(t)) - r(t))^2
 *      + alpha1/2 (||p_bess||^2 + sum_i ||p_i - p_hat_i||^2).
 */
double coupling_value(const DispatchProblem& prob, const Vec& p);
Vec coupling_gradient(const DispatchProblem& prob, const Vec& p);

/// Hessian of f; constant since f is quadratic.
Matrix<double> coupling_hessian(const DispatchProblem& prob);

/// grad f with L and mu computed from the Hessian spectrum.
ForwardOperator<double> coupling_operator(const DispatchProblem& prob);

/// gamma = gamma_scale / L, one prox map per agent.
Pair make_dispatch_pair(const DispatchProblem& prob, double gamma_scale = 1.0);

struct ReferenceSolution
{
    Vec x_star;
    double residual = 0;       ///< ||S x_star||
    long polish_iterations = 0; ///< forward-backward steps spent after the direct solve
};

/**
 * High-accuracy solution: the full program (all agents' inputs at once) by
 * projected Newton, then plain forward-backward steps (beta = 0, eta = 1)
 * until ||S x|| <= tol.
 */
ReferenceSolution solve_reference(const DispatchProblem& prob, const Pair& pair, double tol = 1e-10,
                                  long max_iters = 100000);

std::string problem_to_json(const DispatchProblem& prob);
DispatchProblem problem_from_json(const std::string& text);

} // namespace asyncfb
