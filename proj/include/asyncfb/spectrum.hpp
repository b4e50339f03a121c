#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>

#include "asyncfb/block.hpp"

namespace asyncfb {

struct SpectrumOptions
{
    double rel_tol = 1e-8;
    int max_iter = 20000;
    std::uint64_t seed = 0x5eed;
};

/**
 * Largest eigenvalue of a symmetric positive semidefinite operator given as
 * a mat-vec callable, by power iteration on the Rayleigh quotient.
 */
template <class Scalar, class MatVec>
Scalar power_iteration(MatVec&& matvec, Index dim, const SpectrumOptions& opt = {})
{
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal;
    Vector<Scalar> v(dim);
    for (Index j = 0; j < dim; ++j) v[j] = Scalar(normal(rng));
    v.normalize();

    Scalar lambda = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        Vector<Scalar> w = matvec(v);
        lambda = v.dot(w);
        const Scalar nrm = w.norm();
        if (nrm == Scalar(0)) return Scalar(0);
        // eigen-residual, not the change in lambda: the latter stalls early on small gaps
        const Scalar res = (w - lambda * v).norm();
        v = w / nrm;
        if (res <= Scalar(opt.rel_tol) * std::abs(lambda)) return lambda;
    }
    return lambda;
}

template <class Scalar>
Scalar largest_eigenvalue(const Matrix<Scalar>& Q, const SpectrumOptions& opt = {})
{
    return power_iteration<Scalar>([&](const Vector<Scalar>& v) { return Vector<Scalar>(Q * v); }, Q.rows(), opt);
}

/**
 * Smallest eigenvalue of a symmetric PSD matrix by inverse power iteration.
 * Returns 0 when Q is singular (LDLT cannot invert it).
 */
template <class Scalar>
Scalar smallest_eigenvalue(const Matrix<Scalar>& Q, const SpectrumOptions& opt = {})
{
    const Index n = Q.rows();
    if (n == 0) return Scalar(0);
    Eigen::LDLT<Matrix<Scalar>> ldlt(Q);
    const auto d = ldlt.vectorD();
    const Scalar scale = Q.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || scale == Scalar(0)
        || d.minCoeff() <= Scalar(64) * Eigen::NumTraits<Scalar>::epsilon() * scale) {
        return Scalar(0);
    }
    const Scalar inv_min = power_iteration<Scalar>(
        [&](const Vector<Scalar>& v) { return Vector<Scalar>(ldlt.solve(v)); }, n, opt);
    return inv_min > Scalar(0) ? Scalar(1) / inv_min : Scalar(0);
}

} // namespace asyncfb
