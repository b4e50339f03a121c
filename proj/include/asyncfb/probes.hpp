#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "asyncfb/operators.hpp"

namespace asyncfb {

/// Outcome of an empirical operator-property probe.
struct ProbeReport
{
    double value = 0; ///< max ratio (Lipschitz probes) or min slack (cocoercivity)
    bool pass = false;
    long samples = 0;
};

/// Standard-normal point scaled so its expected norm is `radius`.
template <class Scalar, class Rng>
Vector<Scalar> sample_point(Rng& rng, Index dim, double radius = 10.0)
{
    std::normal_distribution<double> normal;
    Vector<Scalar> x(dim);
    for (Index j = 0; j < dim; ++j) x[j] = Scalar(normal(rng));
    return x * Scalar(radius / std::sqrt(double(std::max<Index>(dim, 1))));
}

/// Largest observed ||op(x) - op(y)|| / ||x - y|| over random pairs.
template <class Scalar>
double probe_lipschitz(const VectorMap<Scalar>& op, Index dim, long n_pairs, std::uint64_t seed,
                       const Vector<Scalar>* center = nullptr)
{
    if (n_pairs < 1) throw ParameterError("probe: n_pairs must be >= 1");
    std::mt19937_64 rng(seed);
    double worst = 0;
    for (long s = 0; s < n_pairs; ++s) {
        Vector<Scalar> x = sample_point<Scalar>(rng, dim);
        Vector<Scalar> y = sample_point<Scalar>(rng, dim);
        if (center) {
            x += *center;
            y += *center;
        }
        const double den = static_cast<double>((x - y).norm());
        if (den == 0) continue;
        worst = std::max(worst, static_cast<double>((op(x) - op(y)).norm()) / den);
    }
    return worst;
}

template <class Scalar>
ProbeReport probe_nonexpansive(const VectorMap<Scalar>& op, Index dim, long n_pairs, std::uint64_t seed)
{
    ProbeReport r;
    r.value = probe_lipschitz<Scalar>(op, dim, n_pairs, seed);
    r.pass = r.value <= 1.0 + 1e-9;
    r.samples = n_pairs;
    return r;
}

/**
 * Checks 1/2-cocoercivity of S = I - T: reports the minimum over random pairs
 * of <x - y, Sx - Sy> - 1/2 ||Sx - Sy||^2. Passes iff that is >= -1e-9.
 */
template <class Scalar>
ProbeReport probe_cocoercive(const OperatorPair<Scalar>& pair, long n_pairs, std::uint64_t seed)
{
    if (n_pairs < 1) throw ParameterError("probe_cocoercive: n_pairs must be >= 1");
    const Index dim = pair.partition.total();
    std::mt19937_64 rng(seed);
    double worst = std::numeric_limits<double>::infinity();
    for (long s = 0; s < n_pairs; ++s) {
        const Vector<Scalar> x = sample_point<Scalar>(rng, dim);
        const Vector<Scalar> y = sample_point<Scalar>(rng, dim);
        const Vector<Scalar> ds = apply_S(pair, x) - apply_S(pair, y);
        const double slack = static_cast<double>((x - y).dot(ds) - Scalar(0.5) * ds.squaredNorm());
        worst = std::min(worst, slack);
    }
    return {worst, worst >= -1e-9, n_pairs};
}

/**
 * Estimate of the quasi-strong monotonicity constant of S around a zero
 * x_star: min over the given points of <x - x_star, Sx> / ||x - x_star||^2.
 * Points coinciding with x_star are skipped. Returns +inf if every point was
 * skipped.
 */
template <class Scalar>
double quasi_strong_estimate(const OperatorPair<Scalar>& pair,
                             const Vector<Scalar>& x_star,
                             const std::vector<Vector<Scalar>>& points)
{
    const Vector<Scalar> s_star = apply_S(pair, x_star);
    if (!(s_star.norm() <= Scalar(1e-8))) {
        throw ContractViolation("probe_quasi_strong: x_star is not a zero of S (||S x_star|| = "
                                + std::to_string(double(s_star.norm())) + ")");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : points) {
        const Vector<Scalar> dx = x - x_star;
        const double den = static_cast<double>(dx.squaredNorm());
        if (den == 0) continue;
        best = std::min(best, static_cast<double>(dx.dot(apply_S(pair, x))) / den);
    }
    return best;
}

template <class Scalar>
double probe_quasi_strong(const OperatorPair<Scalar>& pair, const Vector<Scalar>& x_star, long n_points,
                          std::uint64_t seed)
{
    if (n_points < 1) throw ParameterError("probe_quasi_strong: n_points must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<Vector<Scalar>> pts;
    pts.reserve(static_cast<std::size_t>(n_points));
    for (long s = 0; s < n_points; ++s) pts.push_back(x_star + sample_point<Scalar>(rng, x_star.size()));
    return quasi_strong_estimate(pair, x_star, pts);
}

} // namespace asyncfb
