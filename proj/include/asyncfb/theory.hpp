#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "asyncfb/errors.hpp"

namespace asyncfb {

/**
 * Quasi-strong monotonicity constant of S = I - T_A o (I - gamma B) when B is
 * mu-strongly monotone and 1/L-cocoercive:
 *   nu = 1 - sqrt(1 - 2 gamma mu + mu gamma^2 L).
 */
template <class Scalar>
Scalar compute_nu(Scalar gamma, Scalar mu, Scalar L)
{
    if (!(L > Scalar(0))) throw ParameterError("compute_nu: L must be positive");
    if (!(gamma > Scalar(0) && gamma < Scalar(2) / L)) throw ParameterError("compute_nu: gamma outside (0, 2/L)");
    if (!(mu >= Scalar(0) && mu <= L * (Scalar(1) + Scalar(1e-8)))) throw ParameterError("compute_nu: need 0 <= mu <= L");
    Scalar rad = Scalar(1) - Scalar(2) * gamma * mu + mu * gamma * gamma * L;
    if (rad < Scalar(0)) {
        // only rounding can push it below zero when mu <= L
        if (rad < -Scalar(64) * std::numeric_limits<Scalar>::epsilon()) {
            throw ParameterError("compute_nu: negative radicand " + std::to_string(double(rad)));
        }
        rad = 0;
    }
    return Scalar(1) - std::sqrt(rad);
}

/// Lipschitz bound of T on quadratic forward operators: sqrt(1 - 2 gamma mu + mu gamma^2 L).
template <class Scalar>
Scalar contraction_factor(Scalar gamma, Scalar mu, Scalar L)
{
    return Scalar(1) - compute_nu(gamma, mu, L);
}

template <class Scalar>
struct YX
{
    Scalar Y;
    Scalar X;
};

/// Y = 1 + gamma L + 2 beta and X = N (Y N + 1)(4 tau (1 + gamma L) + 6 beta tau).
template <class Scalar>
YX<Scalar> compute_Y_X(long N, long tau, Scalar gamma, Scalar L, Scalar beta)
{
    if (N < 1) throw ParameterError("compute_Y_X: N must be >= 1");
    if (tau < 1) throw ParameterError("compute_Y_X: tau must be >= 1");
    if (gamma < Scalar(0) || L < Scalar(0) || beta < Scalar(0)) {
        throw ParameterError("compute_Y_X: gamma, L and beta must be nonnegative");
    }
    const Scalar n = Scalar(N);
    const Scalar t = Scalar(tau);
    const Scalar gl = gamma * L;
    const Scalar Y = Scalar(1) + gl + Scalar(2) * beta;
    const Scalar X = n * (Y * n + Scalar(1)) * (Scalar(4) * t * (Scalar(1) + gl) + Scalar(6) * beta * t);
    return {Y, X};
}

struct TheoryInputs
{
    long N = 1;
    long tau = 1;
    double gamma = 0;
    double L = 1;
    double mu = 0;
    double beta = 0;
    double delta = 1;
    double epsilon = -1; ///< negative selects nu / 2

    double nu() const { return compute_nu(gamma, mu, L); }
    double resolved_epsilon() const { return epsilon < 0 ? nu() / 2 : epsilon; }

    void validate() const
    {
        if (N < 1) throw ParameterError("theory: N must be >= 1");
        if (tau < 1) throw ParameterError("theory: tau must be >= 1");
        if (!(beta >= 0)) throw ParameterError("theory: beta must be >= 0");
        if (!(delta > 0)) throw ParameterError("theory: delta must be > 0");
        const double v = nu();
        if (!(v > 0)) throw ParameterError("theory: nu = 0, no linear-rate guarantee (mu = 0?)");
        const double e = resolved_epsilon();
        if (!(e > 0 && e < v)) {
            throw ParameterError("theory: epsilon must lie in (0, nu) with nu = " + std::to_string(v));
        }
    }
};

inline double r_of_eta(double eta, double nu, double epsilon) { return 1 - eta * (nu - epsilon); }

inline double q_of_eta(double eta, double X, double epsilon, double delta)
{
    return eta * eta * eta * X * X * (1 / epsilon + eta * (1 + delta) / delta);
}

/// Step cap min{1/(2(1+delta)), (1/X) sqrt(2 delta eps (nu - eps) / (2 delta + eps))}.
inline double eta_max_from(double X, double nu, double epsilon, double delta)
{
    if (!(epsilon > 0 && epsilon < nu)) throw ParameterError("eta_max: epsilon must lie in (0, nu)");
    if (!(delta > 0)) throw ParameterError("eta_max: delta must be > 0");
    const double first = 1 / (2 * (1 + delta));
    const double second = std::sqrt(2 * delta * epsilon * (nu - epsilon) / (2 * delta + epsilon)) / X;
    return std::min(first, second);
}

inline double eta_max(const TheoryInputs& in)
{
    in.validate();
    const auto yx = compute_Y_X(in.N, in.tau, in.gamma, in.L, in.beta);
    return eta_max_from(yx.X, in.nu(), in.resolved_epsilon(), in.delta);
}

/// (r + q)^(1 / (1 + window)).
inline double rate_window(double r, double q, double window)
{
    if (r < 0 || q < 0) throw ParameterError("rate: r and q must be nonnegative");
    if (!(r + q < 1)) throw ParameterError("rate: infeasible parameters, r + q >= 1");
    if (window < 0) throw ParameterError("rate: window must be nonnegative");
    return std::pow(r + q, 1.0 / (1.0 + window));
}

/// Linear rate (r + q)^(1 / (1 + 6 tau)).
inline double rate(double r, double q, double tau) { return rate_window(r, q, 6 * tau); }

struct TheoryConstants
{
    TheoryInputs inputs;
    double nu = 0;
    double epsilon = 0;
    double Y = 0;
    double X = 0;
    double eta_max = 0;
    double eta = 0;
    double r = 0;
    double q = 0;
    double margin = 0;        ///< 1 - (r + q) = eta (nu - eps) - q, computed without cancellation
    std::optional<double> s; ///< only when margin > 0
    bool guaranteed = false;

    double r_at(double e) const { return r_of_eta(e, nu, epsilon); }
    double q_at(double e) const { return q_of_eta(e, X, epsilon, inputs.delta); }
};

/**
 * All constants for the given inputs evaluated at relaxation eta. Throws if
 * eta lies below eta_max yet r + q >= 1, which would contradict the bound.
 */
inline TheoryConstants make_constants(const TheoryInputs& in, double eta)
{
    in.validate();
    TheoryConstants c;
    c.inputs = in;
    c.nu = in.nu();
    c.epsilon = in.resolved_epsilon();
    const auto yx = compute_Y_X(in.N, in.tau, in.gamma, in.L, in.beta);
    c.Y = yx.Y;
    c.X = yx.X;
    c.eta_max = eta_max_from(c.X, c.nu, c.epsilon, in.delta);
    c.eta = eta;
    c.r = c.r_at(eta);
    c.q = c.q_at(eta);
    c.margin = eta * (c.nu - c.epsilon) - c.q;
    c.guaranteed = eta > 0 && eta < c.eta_max;
    // r + q may round to 1 for tiny eta, so the rate goes through log1p of the margin
    if (c.r >= 0 && c.margin > 0) c.s = std::exp(std::log1p(-c.margin) / (1 + 6 * double(in.tau)));
    if (c.guaranteed && !(c.margin > 0)) {
        throw ContractViolation("make_constants: eta < eta_max but r + q >= 1");
    }
    return c;
}

struct GridSearchResult
{
    double delta = 1;
    double epsilon = 0;
    double eta_max = 0;
};

/**
 * Coarse search over delta in (0, 10] and epsilon in (0, nu) for the largest
 * eta_max. Grid is log-spaced in delta and uniform in epsilon / nu.
 */
inline GridSearchResult search_delta_epsilon(TheoryInputs in, int n_delta = 60, int n_eps = 60)
{
    const double v = in.nu();
    if (!(v > 0)) throw ParameterError("search_delta_epsilon: nu = 0");
    const auto yx = compute_Y_X(in.N, in.tau, in.gamma, in.L, in.beta);
    GridSearchResult best;
    best.eta_max = -1;
    for (int a = 0; a < n_delta; ++a) {
        const double delta = std::pow(10.0, -3.0 + 4.0 * (a + 1) / n_delta); // (1e-3, 10]
        for (int b = 1; b < n_eps; ++b) {
            const double eps = v * b / n_eps;
            const double e = eta_max_from(yx.X, v, eps, delta);
            if (e > best.eta_max) best = {delta, eps, e};
        }
    }
    return best;
}

struct IssReport
{
    double recursion_fraction = 1; ///< share of k where V_{k+1} <= r V_k + q max window
    bool envelope_ok = true;
    long first_violation = -1; ///< first k with V_k > s^k V_0 (1 + tol), or -1
    double s = 0;
    double worst_ratio = 0; ///< max_k V_k / (s^k V_0)
};

/**
 * Checks V_{k+1} <= r V_k + q max_{k-window <= l <= k} V_l and the envelope
 * V_k <= s^k V_0 (1 + rel_tol) with s = (r + q)^(1 / (1 + window)).
 */
inline IssReport check_iss(const std::vector<double>& V, double r, double q, long window, double rel_tol = 1e-9)
{
    IssReport rep;
    rep.s = rate_window(r, q, double(window));
    if (V.empty()) return rep;
    for (double v : V) {
        if (!(v >= 0)) throw ContractViolation("check_iss: V must be nonnegative");
    }
    long held = 0;
    long total = 0;
    for (std::size_t k = 0; k + 1 < V.size(); ++k) {
        const std::size_t lo = k >= std::size_t(window) ? k - std::size_t(window) : 0;
        const double mx = *std::max_element(V.begin() + long(lo), V.begin() + long(k) + 1);
        ++total;
        if (V[k + 1] <= (r * V[k] + q * mx) * (1 + rel_tol)) ++held;
    }
    rep.recursion_fraction = total ? double(held) / double(total) : 1.0;
    const double log_s = std::log(rep.s);
    for (std::size_t k = 0; k < V.size(); ++k) {
        const double env = V[0] * std::exp(double(k) * log_s);
        if (env > 0) rep.worst_ratio = std::max(rep.worst_ratio, V[k] / env);
        if (V[k] > env * (1 + rel_tol)) {
            if (rep.envelope_ok) rep.first_violation = long(k);
            rep.envelope_ok = false;
        }
    }
    return rep;
}

} // namespace asyncfb
