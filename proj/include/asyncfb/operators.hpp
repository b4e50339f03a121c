#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "asyncfb/block.hpp"
#include "asyncfb/box_qp.hpp"
#include "asyncfb/errors.hpp"
#include "asyncfb/spectrum.hpp"

namespace asyncfb {

template <class Scalar>
using VectorMap = std::function<Vector<Scalar>(const Vector<Scalar>&)>;

/**
 * The forward operator B of the splitting. B is assumed 1/L-cocoercive and
 * (optionally) mu-strongly monotone; mu = 0 means no strong monotonicity is
 * known.
 */
template <class Scalar>
struct ForwardOperator
{
    VectorMap<Scalar> eval;
    Scalar L = 1;
    Scalar mu = 0;

    Vector<Scalar> operator()(const Vector<Scalar>& x) const { return eval(x); }

    void validate() const
    {
        if (!eval) throw ContractViolation("ForwardOperator: empty evaluation map");
        if (!(L > Scalar(0))) throw ParameterError("ForwardOperator: L must be positive");
        // power-iteration estimates of mu and L can cross by rounding when they coincide
        if (mu < Scalar(0) || mu > L * (Scalar(1) + Scalar(1e-8))) {
            throw ParameterError("ForwardOperator: need 0 <= mu <= L");
        }
    }
};

/// The separable backward operator T_A = (T_A_1, ..., T_A_N), one map per block.
template <class Scalar>
class BackwardBlocks
{
public:
    BackwardBlocks() = default;
    explicit BackwardBlocks(std::vector<VectorMap<Scalar>> blocks) : blocks_(std::move(blocks)) {}

    Index size() const { return static_cast<Index>(blocks_.size()); }
    const VectorMap<Scalar>& operator[](Index i) const { return blocks_[static_cast<std::size_t>(i)]; }

    Vector<Scalar> apply(Index i, const Vector<Scalar>& v) const
    {
        Vector<Scalar> out = blocks_[static_cast<std::size_t>(i)](v);
        if (out.size() != v.size()) {
            throw ContractViolation("BackwardBlocks: block " + std::to_string(i) + " changed dimension");
        }
        return out;
    }

private:
    std::vector<VectorMap<Scalar>> blocks_;
};

/**
 * Forward/backward pair defining T = T_A o T_B with T_B = I - gamma B and
 * S = I - T.
 *
 * Construction only requires gamma >= 0; whether gamma lies in the admissible
 * interval (0, 2/L) is a separate query so that inadmissible pairs can still
 * be built and probed.
 */
template <class Scalar>
struct OperatorPair
{
    BlockPartition partition;
    ForwardOperator<Scalar> forward;
    BackwardBlocks<Scalar> backward;
    Scalar gamma = 0;

    OperatorPair() = default;
    OperatorPair(BlockPartition p, ForwardOperator<Scalar> f, BackwardBlocks<Scalar> b, Scalar g)
        : partition(std::move(p)), forward(std::move(f)), backward(std::move(b)), gamma(g)
    {
        forward.validate();
        if (backward.size() != partition.size()) {
            throw ContractViolation("OperatorPair: need exactly one backward block per partition block");
        }
        if (!(gamma >= Scalar(0)) || !std::isfinite(static_cast<double>(gamma))) {
            throw ParameterError("OperatorPair: gamma must be a finite nonnegative number");
        }
    }

    Scalar gamma_max() const { return Scalar(2) / forward.L; }
    bool admissible() const { return gamma > Scalar(0) && gamma < gamma_max(); }

    void require_admissible() const
    {
        if (!admissible()) {
            throw ParameterError("OperatorPair: gamma = " + std::to_string(double(gamma))
                                 + " outside (0, 2/L) with L = " + std::to_string(double(forward.L)));
        }
    }
};

/// T_B x = x - gamma B(x).
template <class Scalar>
Vector<Scalar> apply_forward_step(const OperatorPair<Scalar>& pair, const Vector<Scalar>& x)
{
    pair.partition.check_conforms(x, "apply_forward_step");
    if (pair.gamma == Scalar(0)) return x;
    Vector<Scalar> bx = pair.forward(x);
    if (bx.size() != x.size()) throw ContractViolation("apply_forward_step: B changed dimension");
    return x - pair.gamma * bx;
}

/// T_A applied blockwise.
template <class Scalar>
Vector<Scalar> apply_backward(const OperatorPair<Scalar>& pair, const Vector<Scalar>& v)
{
    pair.partition.check_conforms(v, "apply_backward");
    Vector<Scalar> out(v.size());
    for (Index i = 0; i < pair.partition.size(); ++i) {
        block(out, pair.partition, i) = pair.backward.apply(i, Vector<Scalar>(block(v, pair.partition, i)));
    }
    return out;
}

template <class Scalar>
Vector<Scalar> apply_T(const OperatorPair<Scalar>& pair, const Vector<Scalar>& x)
{
    return apply_backward(pair, apply_forward_step(pair, x));
}

template <class Scalar>
Vector<Scalar> apply_S(const OperatorPair<Scalar>& pair, const Vector<Scalar>& x)
{
    return x - apply_T(pair, x);
}

// ---------------------------------------------------------------------------
// catalog

template <class Scalar>
VectorMap<Scalar> identity_map()
{
    return [](const Vector<Scalar>& v) { return v; };
}

template <class Scalar>
VectorMap<Scalar> scaled_identity_map(Scalar c)
{
    return [c](const Vector<Scalar>& v) { return Vector<Scalar>(c * v); };
}

/// Coordinate-wise projection onto [lo, hi] (bounds broadcast to any length).
template <class Scalar>
VectorMap<Scalar> box_projection(Scalar lo, Scalar hi)
{
    if (lo > hi) throw ContractViolation("box_projection: lo > hi");
    return [lo, hi](const Vector<Scalar>& v) { return Vector<Scalar>(v.cwiseMax(lo).cwiseMin(hi)); };
}

template <class Scalar>
VectorMap<Scalar> box_projection(Vector<Scalar> lo, Vector<Scalar> hi)
{
    if (lo.size() != hi.size()) throw ContractViolation("box_projection: bound sizes differ");
    if ((lo.array() > hi.array()).any()) throw ContractViolation("box_projection: lo > hi");
    return [lo = std::move(lo), hi = std::move(hi)](const Vector<Scalar>& v) {
        if (v.size() != lo.size()) throw ContractViolation("box_projection: dimension mismatch");
        return clamp<Scalar>(v, lo, hi);
    };
}

/**
 * prox_{gamma f}(v) for f(x) = 1/2 sum_j q_diag_j x_j^2 + q_lin' x, in closed form
 *   (v_j - gamma q_lin_j) / (1 + gamma q_diag_j).
 */
template <class Scalar>
Vector<Scalar> prox_separable_quadratic(const Vector<Scalar>& q_diag,
                                        const Vector<Scalar>& q_lin,
                                        Scalar gamma,
                                        const Vector<Scalar>& v)
{
    if (!(gamma > Scalar(0))) throw ParameterError("prox_separable_quadratic: gamma must be positive");
    if (q_diag.size() != v.size() || q_lin.size() != v.size()) {
        throw ContractViolation("prox_separable_quadratic: dimension mismatch");
    }
    if ((q_diag.array() < Scalar(0)).any()) {
        throw ParameterError("prox_separable_quadratic: q_diag must be nonnegative");
    }
    return ((v - gamma * q_lin).array() / (Scalar(1) + gamma * q_diag.array())).matrix();
}

template <class Scalar>
VectorMap<Scalar> separable_quadratic_prox(Vector<Scalar> q_diag, Vector<Scalar> q_lin, Scalar gamma)
{
    if (!(gamma > Scalar(0))) throw ParameterError("separable_quadratic_prox: gamma must be positive");
    return [q_diag = std::move(q_diag), q_lin = std::move(q_lin), gamma](const Vector<Scalar>& v) {
        return prox_separable_quadratic<Scalar>(q_diag, q_lin, gamma, v);
    };
}

/// prox_box_qp bound into a block map; lambda_max(Q) is computed once up front.
template <class Scalar>
VectorMap<Scalar> box_qp_prox(Matrix<Scalar> Q,
                              Vector<Scalar> q,
                              Vector<Scalar> lo,
                              Vector<Scalar> hi,
                              Scalar gamma,
                              BoxSolveOptions opt = {})
{
    if (!(gamma > Scalar(0))) throw ParameterError("box_qp_prox: gamma must be positive");
    const Scalar lmax = largest_eigenvalue<Scalar>(Q);
    auto shared = std::make_shared<const std::tuple<Matrix<Scalar>, Vector<Scalar>, Vector<Scalar>, Vector<Scalar>>>(
        std::move(Q), std::move(q), std::move(lo), std::move(hi));
    return [shared, gamma, opt, lmax](const Vector<Scalar>& v) {
        const auto& [Qm, qv, l, h] = *shared;
        return prox_box_qp<Scalar>(Qm, qv, l, h, gamma, v, opt, lmax);
    };
}

/**
 * B = grad of 1/2 x'Qx + q'x, with L = lambda_max(Q) and mu = lambda_min(Q)
 * estimated by power / inverse power iteration.
 */
template <class Scalar>
ForwardOperator<Scalar> quadratic_gradient(Matrix<Scalar> Q, Vector<Scalar> q, const SpectrumOptions& opt = {})
{
    if (Q.rows() != Q.cols() || q.size() != Q.rows()) {
        throw ContractViolation("quadratic_gradient: dimension mismatch");
    }
    ForwardOperator<Scalar> f;
    f.L = largest_eigenvalue<Scalar>(Q, opt);
    f.mu = smallest_eigenvalue<Scalar>(Q, opt);
    if (f.mu > f.L) f.mu = f.L;
    auto shared = std::make_shared<const std::pair<Matrix<Scalar>, Vector<Scalar>>>(std::move(Q), std::move(q));
    f.eval = [shared](const Vector<Scalar>& x) { return Vector<Scalar>(shared->first * x + shared->second); };
    return f;
}

} // namespace asyncfb
