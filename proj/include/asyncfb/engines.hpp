#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "asyncfb/operators.hpp"

namespace asyncfb {

enum class Termination { tolerance, max_iters, budget };

inline const char* to_string(Termination t)
{
    switch (t) {
    case Termination::tolerance: return "tol";
    case Termination::max_iters: return "max_iters";
    case Termination::budget: return "budget";
    }
    return "?";
}

template <class Scalar>
struct SyncParams
{
    Scalar gamma = 0; ///< used by run_heavy_ball; pair-based engines take gamma from the pair
    Scalar eta = 1;
    Scalar beta = 0;
    long max_iters = 1000;
    Scalar stop_tol = Scalar(1e-10);
    Vector<Scalar> x0;

    void validate() const
    {
        if (!(eta >= Scalar(0) && eta <= Scalar(1))) throw ParameterError("SyncParams: eta must lie in [0, 1]");
        if (!(beta >= Scalar(0))) throw ParameterError("SyncParams: beta must be >= 0");
        if (!(stop_tol > Scalar(0))) throw ParameterError("SyncParams: stop_tol must be > 0");
        if (max_iters < 0) throw ParameterError("SyncParams: max_iters must be >= 0");
    }
};

/**
 * Iterate sequence of one run plus per-iterate residual ||S x_k|| and, when a
 * reference point was supplied, dist_k = ||x_k - x_ref||.
 *
 * Iterates beyond `kMaxStored` are thinned by doubling the storage stride, so
 * `iteration` records which k each stored entry belongs to.
 */
template <class Scalar>
struct RunResult
{
    static constexpr std::size_t kMaxStored = 100000;

    std::vector<Vector<Scalar>> iterates;
    std::vector<long> iteration;
    std::vector<Scalar> residuals;
    std::vector<Scalar> distances;
    std::vector<double> sim_times; ///< only filled by simulated engines
    long iterations = 0;
    Termination terminated_by = Termination::max_iters;
    bool dense = true;
    bool force_dense = false;
    long stride = 1;

    bool has_distances() const { return !distances.empty(); }
    const Vector<Scalar>& final_iterate() const { return iterates.back(); }

    void record(long k, const Vector<Scalar>& x, Scalar residual, const Vector<Scalar>* reference,
                std::optional<double> sim_time = std::nullopt)
    {
        if (k % stride != 0) return;
        iterates.push_back(x);
        iteration.push_back(k);
        residuals.push_back(residual);
        if (reference) distances.push_back((x - *reference).norm());
        if (sim_time) sim_times.push_back(*sim_time);
        if (!force_dense && iterates.size() > kMaxStored) thin();
    }

    /// Replace the last stored entry (used to always keep the final iterate).
    void record_final(long k, const Vector<Scalar>& x, Scalar residual, const Vector<Scalar>* reference,
                      std::optional<double> sim_time = std::nullopt)
    {
        if (!iteration.empty() && iteration.back() == k) return;
        const long saved = stride;
        stride = 1;
        record(k, x, residual, reference, sim_time);
        stride = saved;
    }

private:
    void thin()
    {
        stride *= 2;
        dense = false;
        std::size_t w = 0;
        for (std::size_t r = 0; r < iterates.size(); ++r) {
            if (iteration[r] % stride != 0) continue;
            iterates[w] = std::move(iterates[r]);
            iteration[w] = iteration[r];
            residuals[w] = residuals[r];
            if (!distances.empty()) distances[w] = distances[r];
            if (!sim_times.empty()) sim_times[w] = sim_times[r];
            ++w;
        }
        iterates.resize(w);
        iteration.resize(w);
        residuals.resize(w);
        if (!distances.empty()) distances.resize(w);
        if (!sim_times.empty()) sim_times.resize(w);
    }
};

namespace detail {

constexpr double kDivergenceNorm = 1e12;

template <class Scalar>
void guard_divergence(const Vector<Scalar>& x, long k, const char* who)
{
    const double n = static_cast<double>(x.norm());
    if (!(n <= kDivergenceNorm)) {
        throw DivergenceError(std::string(who) + ": iterate norm exceeded 1e12 at iteration " + std::to_string(k), k);
    }
}

/// Drives a fixed-point style loop: record x_k with its residual, stop or step.
template <class Scalar, class Residual, class Step>
RunResult<Scalar> drive(const SyncParams<Scalar>& params, const Vector<Scalar>* reference, Residual&& residual,
                        Step&& step, const char* who)
{
    params.validate();
    RunResult<Scalar> out;
    Vector<Scalar> x = params.x0;
    Vector<Scalar> x_prev = params.x0; // x_{-1} := x_0
    for (long k = 0;; ++k) {
        guard_divergence(x, k, who);
        const Scalar res = residual(x);
        out.record(k, x, res, reference);
        out.iterations = k;
        if (res <= params.stop_tol) {
            out.terminated_by = Termination::tolerance;
            out.record_final(k, x, res, reference);
            return out;
        }
        if (k >= params.max_iters) {
            out.terminated_by = Termination::max_iters;
            out.record_final(k, x, res, reference);
            return out;
        }
        Vector<Scalar> next = step(k, x, x_prev);
        x_prev = std::move(x);
        x = std::move(next);
    }
}

} // namespace detail

/// Relaxed combination (1 - eta) x + eta z, written so eta = 1 returns z bit for bit.
template <class Scalar, class A, class B>
Vector<Scalar> relax(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& z, Scalar eta)
{
    return (Scalar(1) - eta) * x + eta * z;
}

/**
 * Heavy Ball: x_{k+1} = x_k - gamma grad_f(x_k) + beta (x_k - x_{k-1}).
 * Residual is ||gamma grad_f(x_k)||, i.e. ||S x_k|| for T = I - gamma grad_f.
 */
template <class Scalar>
RunResult<Scalar> run_heavy_ball(const VectorMap<Scalar>& grad_f, const SyncParams<Scalar>& params,
                                 const Vector<Scalar>* reference = nullptr)
{
    Vector<Scalar> g_cache;
    long g_at = -1;
    auto grad_at = [&](long k, const Vector<Scalar>& x) -> const Vector<Scalar>& {
        if (g_at != k) {
            g_cache = grad_f(x);
            g_at = k;
        }
        return g_cache;
    };
    long current = 0;
    return detail::drive<Scalar>(
        params, reference,
        [&](const Vector<Scalar>& x) { return (params.gamma * grad_at(current, x)).norm(); },
        [&](long k, const Vector<Scalar>& x, const Vector<Scalar>& x_prev) {
            Vector<Scalar> next = x - params.gamma * grad_at(k, x) + params.beta * (x - x_prev);
            current = k + 1;
            return next;
        },
        "run_heavy_ball");
}

/**
 * Krasnosel'skii-Mann: x_{k+1} = x_k + eta_k (T x_k - x_k). The schedule maps
 * k to eta_k; params.eta is ignored in favor of it.
 */
template <class Scalar>
RunResult<Scalar> run_km(const VectorMap<Scalar>& T, const std::function<Scalar(long)>& eta_schedule,
                         const SyncParams<Scalar>& params, const Vector<Scalar>* reference = nullptr)
{
    Vector<Scalar> tx;
    return detail::drive<Scalar>(
        params, reference,
        [&](const Vector<Scalar>& x) {
            tx = T(x);
            return (x - tx).norm();
        },
        [&](long k, const Vector<Scalar>& x, const Vector<Scalar>&) {
            const Scalar eta = eta_schedule(k);
            if (!(eta >= Scalar(0) && eta <= Scalar(1))) throw ParameterError("run_km: eta_k outside [0, 1]");
            return relax<Scalar>(x, tx, eta);
        },
        "run_km");
}

template <class Scalar>
RunResult<Scalar> run_km(const VectorMap<Scalar>& T, const SyncParams<Scalar>& params,
                         const Vector<Scalar>* reference = nullptr)
{
    const Scalar eta = params.eta;
    return run_km<Scalar>(T, [eta](long) { return eta; }, params, reference);
}

/**
 * Synchronous inertial forward-backward:
 *   x_{k+1} = (1 - eta) x_k + eta T_A(T_B x_k + beta (x_k - x_{k-1})).
 * This is the zero-delay, all-agents-every-epoch limit of the asynchronous
 * protocol. With beta = 0 and eta = 1 it is plain x_{k+1} = T x_k.
 */
template <class Scalar>
RunResult<Scalar> run_sync_fbs(const OperatorPair<Scalar>& pair, const SyncParams<Scalar>& params,
                               const Vector<Scalar>* reference = nullptr)
{
    pair.partition.check_conforms(params.x0, "run_sync_fbs");
    if (!(params.beta < Scalar(1))) throw ParameterError("run_sync_fbs: beta must be < 1");
    Vector<Scalar> tbx;
    Vector<Scalar> tx;
    return detail::drive<Scalar>(
        params, reference,
        [&](const Vector<Scalar>& x) {
            tbx = apply_forward_step(pair, x);
            tx = apply_backward(pair, tbx);
            return (x - tx).norm();
        },
        [&](long, const Vector<Scalar>& x, const Vector<Scalar>& x_prev) {
            if (params.beta == Scalar(0)) return relax<Scalar>(x, tx, params.eta);
            const Vector<Scalar> z = apply_backward(pair, Vector<Scalar>(tbx + params.beta * (x - x_prev)));
            return relax<Scalar>(x, z, params.eta);
        },
        "run_sync_fbs");
}

/**
 * Cyclic block-coordinate KM: at step k only block i = k mod N moves,
 *   x_{k+1}[i] = x_k[i] - eta (S x_k)[i],
 * evaluated as (1 - eta) x_k[i] + eta (T x_k)[i].
 */
template <class Scalar>
RunResult<Scalar> run_cyclic_coordinate_km(const OperatorPair<Scalar>& pair, const SyncParams<Scalar>& params,
                                           const Vector<Scalar>* reference = nullptr)
{
    pair.partition.check_conforms(params.x0, "run_cyclic_coordinate_km");
    const Index n_blocks = pair.partition.size();
    Vector<Scalar> tx;
    return detail::drive<Scalar>(
        params, reference,
        [&](const Vector<Scalar>& x) {
            tx = apply_T(pair, x);
            return (x - tx).norm();
        },
        [&](long k, const Vector<Scalar>& x, const Vector<Scalar>&) {
            const Index i = static_cast<Index>(k % n_blocks);
            Vector<Scalar> next = x;
            block(next, pair.partition, i) =
                relax<Scalar>(block(x, pair.partition, i), block(tx, pair.partition, i), params.eta);
            return next;
        },
        "run_cyclic_coordinate_km");
}

} // namespace asyncfb
