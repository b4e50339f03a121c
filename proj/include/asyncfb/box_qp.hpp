#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "asyncfb/block.hpp"
#include "asyncfb/errors.hpp"
#include "asyncfb/spectrum.hpp"

namespace asyncfb {

struct BoxSolveOptions
{
    double tol = 1e-10;
    long max_iter = 0; ///< 0 selects 50 * dim * condition estimate
};

struct BoxSolveResult
{
    long iterations = 0;
    double residual = 0;
};

template <class Scalar>
Vector<Scalar> clamp(const Vector<Scalar>& v, const Vector<Scalar>& lo, const Vector<Scalar>& hi)
{
    return v.cwiseMax(lo).cwiseMin(hi);
}

/**
 * Accelerated projected gradient for min phi(u) over lo <= u <= hi, phi smooth
 * convex with `lipschitz`-Lipschitz gradient.
 *
 * Stops when the fixed-step projected-gradient residual
 *   ||u - P(u - grad(u) / lipschitz)||
 * at the current iterate drops to opt.tol. Momentum is restarted whenever it
 * points uphill, so the method never does worse than plain projected gradient
 * by more than a constant.
 */
template <class Scalar, class Gradient>
BoxSolveResult minimize_box(Gradient&& grad,
                            Scalar lipschitz,
                            const Vector<Scalar>& lo,
                            const Vector<Scalar>& hi,
                            Vector<Scalar>& u,
                            double tol,
                            long max_iter)
{
    if (!(lipschitz > Scalar(0))) {
        throw ParameterError("minimize_box: gradient Lipschitz constant must be positive");
    }
    if (!(tol > 0)) throw ParameterError("minimize_box: tol must be positive");
    if ((lo.array() > hi.array()).any()) throw ContractViolation("minimize_box: lo > hi");

    const Scalar step = Scalar(1) / lipschitz;
    u = clamp<Scalar>(u, lo, hi);
    Vector<Scalar> g = grad(u);
    Vector<Scalar> y = u;
    Vector<Scalar> u_prev = u;
    Scalar t = 1;

    BoxSolveResult res;
    for (long it = 0;; ++it) {
        // residual at the current iterate
        Vector<Scalar> pg = clamp<Scalar>(Vector<Scalar>(u - step * g), lo, hi);
        res.residual = static_cast<double>((u - pg).norm());
        res.iterations = it;
        if (res.residual <= tol) return res;
        if (it >= max_iter) {
            throw ConvergenceFailure("minimize_box: max_iter reached after " + std::to_string(it) + " iterations",
                                     res.residual);
        }

        const Vector<Scalar> gy = (it == 0) ? g : Vector<Scalar>(grad(y));
        u_prev = u;
        u = clamp<Scalar>(Vector<Scalar>(y - step * gy), lo, hi);
        g = grad(u);

        const Scalar t_next = (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * t * t)) / Scalar(2);
        // gradient-based restart
        if (gy.dot(u - u_prev) > Scalar(0)) {
            t = 1;
            y = u;
        } else {
            y = u + ((t - Scalar(1)) / t_next) * (u - u_prev);
            t = t_next;
        }
    }
}

/**
 * Box-constrained QP  min 1/2 u'Hu + h'u  s.t. lo <= u <= hi.
 * `lambda_max` is an upper estimate of the largest eigenvalue of H.
 */
template <class Scalar>
BoxSolveResult solve_box_qp(const Matrix<Scalar>& H,
                            const Vector<Scalar>& h,
                            const Vector<Scalar>& lo,
                            const Vector<Scalar>& hi,
                            Scalar lambda_max,
                            Vector<Scalar>& u,
                            double tol,
                            long max_iter)
{
    return minimize_box<Scalar>([&](const Vector<Scalar>& x) { return Vector<Scalar>(H * x + h); },
                                lambda_max, lo, hi, u, tol, max_iter);
}

/**
 * prox_{gamma g}(v) for g(x) = 1/2 x'Qx + q'x + indicator of [lo, hi].
 *
 * Solved by the inner projected-gradient method with step
 * 1 / (lambda_max(Q) + 1/gamma). On return the residual
 *   ||u - P(u - s (Qu + q + (u - v)/gamma))||
 * is at most opt.tol. `lambda_max_Q` may be supplied to skip the power
 * iteration (pass a negative value to have it computed).
 */
template <class Scalar>
Vector<Scalar> prox_box_qp(const Matrix<Scalar>& Q,
                           const Vector<Scalar>& q,
                           const Vector<Scalar>& lo,
                           const Vector<Scalar>& hi,
                           Scalar gamma,
                           const Vector<Scalar>& v,
                           const BoxSolveOptions& opt = {},
                           Scalar lambda_max_Q = Scalar(-1),
                           BoxSolveResult* info = nullptr)
{
    const Index n = v.size();
    if (Q.rows() != n || Q.cols() != n || q.size() != n || lo.size() != n || hi.size() != n) {
        throw ContractViolation("prox_box_qp: dimension mismatch");
    }
    if (!(gamma > Scalar(0))) throw ParameterError("prox_box_qp: gamma must be positive");

    const Scalar lmax = lambda_max_Q >= Scalar(0) ? lambda_max_Q : largest_eigenvalue<Scalar>(Q);
    const Scalar inv_gamma = Scalar(1) / gamma;
    const Scalar lip = lmax + inv_gamma;
    long max_iter = opt.max_iter;
    if (max_iter <= 0) {
        const double cond = static_cast<double>(lip / inv_gamma);
        max_iter = static_cast<long>(std::ceil(50.0 * static_cast<double>(std::max<Index>(n, 1)) * cond));
    }

    Vector<Scalar> u = clamp<Scalar>(v, lo, hi);
    auto grad = [&](const Vector<Scalar>& x) { return Vector<Scalar>(Q * x + q + inv_gamma * (x - v)); };
    const auto r = minimize_box<Scalar>(grad, lip, lo, hi, u, opt.tol, max_iter);
    if (info) *info = r;
    return u;
}

/**
 * min 1/2 u'Pu + q'u + rho/2 sum_l [ (c_l'u - c_hi_l)_+^2 + (c_lo_l - c_l'u)_+^2 ]
 * s.t. lo <= u <= hi, with c_l the rows of C. Convex and piecewise quadratic.
 */
template <class Scalar>
struct PenalizedBoxQP
{
    Matrix<Scalar> P;
    Vector<Scalar> q;
    Matrix<Scalar> C; ///< may have zero rows
    Vector<Scalar> c_lo;
    Vector<Scalar> c_hi;
    Scalar rho = 0;
    Vector<Scalar> lo;
    Vector<Scalar> hi;

    Index dim() const { return P.rows(); }

    void validate() const
    {
        const Index n = P.rows();
        if (P.cols() != n || q.size() != n || lo.size() != n || hi.size() != n) {
            throw ContractViolation("PenalizedBoxQP: dimension mismatch");
        }
        if (C.rows() > 0 && (C.cols() != n || c_lo.size() != C.rows() || c_hi.size() != C.rows())) {
            throw ContractViolation("PenalizedBoxQP: penalty rows do not conform");
        }
        if ((lo.array() > hi.array()).any()) throw ContractViolation("PenalizedBoxQP: lo > hi");
        if (rho < Scalar(0)) throw ParameterError("PenalizedBoxQP: rho must be >= 0");
    }

    Vector<Scalar> excess(const Vector<Scalar>& u) const
    {
        if (C.rows() == 0) return Vector<Scalar>();
        const Vector<Scalar> cu = C * u;
        return (cu - c_hi).cwiseMax(Scalar(0)) - (c_lo - cu).cwiseMax(Scalar(0));
    }

    Scalar value(const Vector<Scalar>& u) const
    {
        Scalar v = Scalar(0.5) * u.dot(P * u) + q.dot(u);
        if (C.rows() > 0 && rho > Scalar(0)) v += Scalar(0.5) * rho * excess(u).squaredNorm();
        return v;
    }

    /// value(w) - value(u), formed without subtracting two large values.
    Scalar value_change(const Vector<Scalar>& u, const Vector<Scalar>& w) const
    {
        const Vector<Scalar> d = w - u;
        Scalar v = d.dot(P * u + q) + Scalar(0.5) * d.dot(P * d);
        if (C.rows() > 0 && rho > Scalar(0)) {
            const Vector<Scalar> eu = excess(u), ew = excess(w);
            v += Scalar(0.5) * rho * (ew - eu).dot(ew + eu);
        }
        return v;
    }

    Vector<Scalar> gradient(const Vector<Scalar>& u) const
    {
        Vector<Scalar> g = P * u + q;
        if (C.rows() > 0 && rho > Scalar(0)) g.noalias() += rho * (C.transpose() * excess(u));
        return g;
    }

    /// Generalized Hessian: penalty rows outside [c_lo, c_hi] contribute rho c_l c_l'.
    Matrix<Scalar> hessian(const Vector<Scalar>& u) const
    {
        Matrix<Scalar> H = P;
        if (C.rows() > 0 && rho > Scalar(0)) {
            const Vector<Scalar> ex = excess(u);
            for (Index l = 0; l < C.rows(); ++l) {
                if (ex[l] != Scalar(0)) H.noalias() += rho * C.row(l).transpose() * C.row(l);
            }
        }
        return H;
    }
};

struct NewtonOptions
{
    double tol = 1e-12; ///< on the diagonally scaled projected-gradient step, relative to 1 + ||u||_inf
    long max_iter = 200;
};

/**
 * Projected Newton method with an Armijo search along the projection arc.
 * Variables at a bound whose gradient pushes outward get a scaled gradient
 * step, the rest a Newton step on the generalized Hessian. Piecewise
 * quadratics terminate once the active pattern settles, usually within a
 * handful of iterations. `u` is the starting point on entry.
 */
template <class Scalar>
BoxSolveResult solve_penalized_box_qp(const PenalizedBoxQP<Scalar>& prob, Vector<Scalar>& u,
                                      const NewtonOptions& opt = {})
{
    prob.validate();
    const Index n = prob.dim();
    if (u.size() != n) throw ContractViolation("solve_penalized_box_qp: start point has wrong size");
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    u = clamp<Scalar>(u, prob.lo, prob.hi);
    Vector<Scalar> g = prob.gradient(u);

    BoxSolveResult res;
    for (long it = 0;; ++it) {
        const Matrix<Scalar> H = prob.hessian(u);
        Vector<Scalar> dscale(n);
        for (Index j = 0; j < n; ++j) dscale[j] = H(j, j) > Scalar(0) ? Scalar(1) / H(j, j) : Scalar(1);

        const Vector<Scalar> pstep =
            u - clamp<Scalar>(Vector<Scalar>(u - dscale.cwiseProduct(g)), prob.lo, prob.hi);
        const Scalar unorm = u.cwiseAbs().maxCoeff();
        res.residual = static_cast<double>(pstep.cwiseAbs().maxCoeff());
        res.iterations = it;
        if (res.residual <= opt.tol * static_cast<double>(Scalar(1) + unorm)) return res;
        if (it >= opt.max_iter) {
            throw ConvergenceFailure("solve_penalized_box_qp: max_iter reached", res.residual);
        }

        // bound-active set, widened by the current residual
        const Scalar band = std::min(Scalar(res.residual), Scalar(1e-3) * (Scalar(1) + unorm));
        std::vector<Index> free, fixed;
        for (Index j = 0; j < n; ++j) {
            const bool at_lo = u[j] <= prob.lo[j] + band && g[j] > Scalar(0);
            const bool at_hi = u[j] >= prob.hi[j] - band && g[j] < Scalar(0);
            (at_lo || at_hi ? fixed : free).push_back(j);
        }

        Vector<Scalar> d = Vector<Scalar>::Zero(n);
        for (Index j : fixed) d[j] = -dscale[j] * g[j];
        if (!free.empty()) {
            const Index m = Index(free.size());
            Matrix<Scalar> Hf(m, m);
            Vector<Scalar> gf(m);
            for (Index a = 0; a < m; ++a) {
                gf[a] = g[free[std::size_t(a)]];
                for (Index b = 0; b < m; ++b) Hf(a, b) = H(free[std::size_t(a)], free[std::size_t(b)]);
            }
            Eigen::LDLT<Matrix<Scalar>> ldlt(Hf);
            Vector<Scalar> df;
            const Scalar hscale = Hf.diagonal().cwiseAbs().maxCoeff();
            if (ldlt.info() == Eigen::Success && ldlt.isPositive()
                && ldlt.vectorD().minCoeff() > Scalar(1e3) * eps * hscale) {
                df = -ldlt.solve(gf);
            } else {
                // singular on the free set: minimum-norm Newton step
                df = -Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>>(Hf).solve(gf);
            }
            for (Index a = 0; a < m; ++a) d[free[std::size_t(a)]] = df[a];
        }

        Scalar alpha = 1;
        bool accepted = false;
        Vector<Scalar> un;
        for (int ls = 0; ls < 60; ++ls) {
            un = clamp<Scalar>(Vector<Scalar>(u + alpha * d), prob.lo, prob.hi);
            Scalar pred = 0;
            for (Index j : free) pred -= alpha * g[j] * d[j];
            for (Index j : fixed) pred += g[j] * (u[j] - un[j]);
            if (-prob.value_change(u, un) >= Scalar(1e-4) * pred) {
                accepted = true;
                break;
            }
            alpha /= 2;
        }
        const Scalar moved = accepted ? (un - u).cwiseAbs().maxCoeff() : Scalar(0);
        if (!accepted || moved <= Scalar(4) * eps * (Scalar(1) + unorm)) {
            // rounding floor: accept if the residual is within reach of the tolerance
            if (res.residual <= 1e4 * opt.tol * static_cast<double>(Scalar(1) + unorm)) return res;
            throw ConvergenceFailure("solve_penalized_box_qp: line search stalled", res.residual);
        }
        u = un;
        g = prob.gradient(u);
    }
}

} // namespace asyncfb
