#pragma once

#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "asyncfb/engines.hpp"
#include "asyncfb/operators.hpp"
#include "asyncfb/scheduler.hpp"
#include "asyncfb/trace.hpp"

namespace asyncfb {

using Vec = Vector<double>;
using Pair = OperatorPair<double>;

// ---------------------------------------------------------------------------
// agent side

struct AgentState
{
    int id = 0;
    Vec y_write;
    Vec y_write_prev;
    Vec y_B;
    Vec z;
    bool activated = false;
};

/// Stores a transmission from the coordinator. The first receipt also seeds y_write_prev.
void agent_receive(AgentState& agent, const Vec& y_write, const Vec& y_B);

/// z = T_A_i(y_B + beta (y_write - y_write_prev)), then y_write_prev <- y_write.
Vec agent_step(AgentState& agent, const VectorMap<double>& T_A_i, double beta);

// ---------------------------------------------------------------------------
// coordinator side

enum class AgentLocation { read_buffer, in_flight, write_buffer };

struct CoordinatorState
{
    BlockPartition partition;
    Vec x;
    Vec z;
    std::vector<Vec> x_write;
    std::vector<Vec> x_read;
    std::vector<Vec> pending; ///< received z^i not yet consumed
    std::deque<int> W;
    std::deque<int> R;
    std::vector<AgentLocation> where;
    long k = 0;

    /// x = z = x_write^i = x_0, every agent queued in R, W empty.
    CoordinatorState(BlockPartition p, const Vec& x0);

    // T_B x_k is shared by all reads between two computes
    long tb_cache_k = -1;
    Vec tb_cache;

    int n_agents() const { return int(partition.size()); }
};

/// Write thread: z^i arrives from an in-flight agent and is queued in W.
void coordinator_receive(CoordinatorState& s, int i, Vec z_i);

/**
 * Compute thread, agent i pulled from W: z[i] <- z^i, then the relaxed update
 * per `mode`; x_write^i <- x_{k+1}; i queued in R; k <- k + 1.
 */
void coordinator_compute(CoordinatorState& s, int i, double eta, UpdateMode mode);

/// Barrier compute: consumes every agent (all must be in W) in one update.
void coordinator_compute_all(CoordinatorState& s, double eta);

struct ReadPayload
{
    Vec y_write;
    Vec y_B;
};

/// Read thread: x_read^i <- x_k; transmits x_write^i[i] and (T_B x_read^i)[i].
ReadPayload coordinator_read(CoordinatorState& s, int i, const Pair& pair);

// ---------------------------------------------------------------------------
// simulated engine

struct AsyncParams
{
    double eta = 1;
    double beta = 0;
    long max_iters = 1000;
    double stop_tol = 1e-10;
    Vec x0;
    UpdateMode mode = UpdateMode::aggregated;
    double max_sim_time = std::numeric_limits<double>::infinity();
    long residual_stride = 0; ///< epochs between ||S x_k|| evaluations; 0 selects N
    bool force_dense = false; ///< never thin the iterate history

    void validate() const;
};

struct AsyncRun
{
    RunResult<double> result;
    Trace trace;
    std::vector<long> updates; ///< consumptions per agent
    long tau = 0;              ///< bound enforced by the guard (0 when off)
    double end_time = 0;
};

/**
 * Runs the coordinator and N agents under the simulated schedule until the
 * stop test (every residual_stride computes), max_iters, or the simulated
 * time budget. Throws BoundedDelayViolation if the guard finds an agent past
 * its deadline.
 */
AsyncRun run_async(const Pair& pair, const AsyncParams& params, const ScheduleConfig& schedule,
                   const Vec* reference = nullptr);

// ---------------------------------------------------------------------------
// trace analysis

/// Iterate indices whose values agent j used for the z^j staged at some k.
struct SnapshotRefs
{
    long read = 0;
    long write = 0;
    long prev = 0;
};

/**
 * Walks trace events in order and keeps, for every agent, the snapshots
 * behind its currently staged z^j. Snapshots are derived from events only:
 * a read at clock k takes x_k; the write snapshot transmitted with it is
 * x_{c+1} for the agent's latest consumption c (x_0 before any); the previous
 * write is the one transmitted with the agent's previous read.
 */
class TraceWalker
{
public:
    explicit TraceWalker(const Trace& trace);

    /// Advances through coordinator compute number k. Returns false if the trace ends first.
    bool advance_to(long k);

    const std::vector<std::optional<SnapshotRefs>>& staged() const { return staged_; }
    /// Agent consumed by the compute just passed (kAllAgents for barrier computes).
    int consumed() const { return consumed_; }
    long k() const { return k_; }

private:
    const Trace& trace_;
    std::size_t pos_ = 0;
    long k_ = -1;
    int consumed_ = 0;
    std::vector<long> last_consume_;
    std::vector<std::optional<long>> last_read_write_;
    std::vector<std::optional<SnapshotRefs>> inflight_;
    std::vector<std::optional<SnapshotRefs>> staged_;
};

struct AgentDelays
{
    long read = -1; ///< l with x_read = x_{k+1-l}; -1 if the agent has not been consumed yet
    long write = -1;
    long prev = -1;
};

struct ErrorDecomposition
{
    long k = 0;
    Vec e, a, b, c, d;
    Vec Tx; ///< T x_k, needed alongside e_k for the identity
    std::vector<AgentDelays> delays;
    int consumed = 0;
    bool all_written = false;
};

/// Replays snapshots up to compute k and rebuilds e_k, a_k, b_k, c_k, d_k from the iterate history.
ErrorDecomposition reconstruct_error(const Trace& trace, const Pair& pair, long k);

/// Same, for a walker already advanced to k (used to sweep every k in one pass).
ErrorDecomposition reconstruct_error(const Trace& trace, const Pair& pair, const TraceWalker& walker);

struct IdentityReport
{
    long checked = 0;
    long failures = 0;
    long first_failure = -1;
    double worst_ratio = 0; ///< max violation / (1 + ||x_k||)
    long bound_checked = 0;
    long bound_failures = 0;
    bool pass() const { return checked > 0 && failures == 0 && bound_failures == 0; }
};

/**
 * For every k: ||x_{k+1} - (x_k - eta (S x_k - e_k))|| <= tol (1 + ||x_k||), and,
 * once every agent has written, ||e_k|| <= ||d_k|| + beta ||c_k - b_k||.
 * In coordinate mode only the updated block is tested; the others must be unchanged.
 */
IdentityReport check_error_identity(const Trace& trace, const Pair& pair, double tol = 1e-10);

struct DelayViolation
{
    long k = 0;
    int agent = 0;
    std::string which; ///< read | write | prev
    long l = 0;
    double bound = 0;
};

struct DelayReport
{
    long max_read = 0;
    long max_write = 0;
    long max_prev = 0;
    std::vector<DelayViolation> violations;
    bool pass() const { return violations.empty(); }
};

/// Staleness of every staged contribution at every compute against 2 tau / 2 tau / 3 tau.
DelayReport verify_delay_bounds(const Trace& trace, double tau);

/// Re-executes the protocol from the logged events; returns x_0 .. x_K.
std::vector<Vec> replay(const Trace& trace, const Pair& pair, const Vec& x0);

// ---------------------------------------------------------------------------
// live mode

struct LiveParams
{
    double eta = 1;
    double beta = 0;
    long max_iters = 200;
    Vec x0;
    UpdateMode mode = UpdateMode::aggregated;
};

/**
 * Threaded run: one coordinating thread owns the state, each agent runs on its
 * own thread behind a per-agent channel. Timestamps are wall-clock seconds.
 */
AsyncRun run_live(const Pair& pair, const LiveParams& params);

} // namespace asyncfb
