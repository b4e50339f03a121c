#include "asyncfb/async.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace asyncfb {

namespace {

void remove_from(std::deque<int>& q, int i)
{
    auto it = std::find(q.begin(), q.end(), i);
    if (it != q.end()) q.erase(it);
}

void check_agent(const CoordinatorState& s, int i, const char* who)
{
    if (i < 0 || i >= s.n_agents()) {
        throw ContractViolation(std::string(who) + ": agent id " + std::to_string(i) + " out of range");
    }
}

} // namespace

// ---------------------------------------------------------------------------
// agent side

void agent_receive(AgentState& agent, const Vec& y_write, const Vec& y_B)
{
    if (y_write.size() != y_B.size()) throw ContractViolation("agent_receive: y_write and y_B sizes differ");
    agent.y_write = y_write;
    agent.y_B = y_B;
    if (!agent.activated) {
        agent.y_write_prev = y_write;
        agent.activated = true;
    }
}

Vec agent_step(AgentState& agent, const VectorMap<double>& T_A_i, double beta)
{
    if (!agent.activated) throw ProtocolViolation("agent_step: agent has not received anything yet");
    if (agent.y_write_prev.size() != agent.y_write.size()) {
        throw ContractViolation("agent_step: block dimension mismatch");
    }
    Vec arg = agent.y_B + beta * (agent.y_write - agent.y_write_prev);
    agent.z = T_A_i(arg);
    if (agent.z.size() != arg.size()) throw ContractViolation("agent_step: T_A_i changed dimension");
    agent.y_write_prev = agent.y_write;
    return agent.z;
}

// ---------------------------------------------------------------------------
// coordinator side

CoordinatorState::CoordinatorState(BlockPartition p, const Vec& x0)
    : partition(std::move(p)), x(x0), z(x0)
{
    partition.check_conforms(x0, "CoordinatorState");
    const auto n = std::size_t(partition.size());
    x_write.assign(n, x0);
    x_read.assign(n, x0);
    pending.assign(n, Vec());
    where.assign(n, AgentLocation::read_buffer);
    for (int i = 0; i < int(n); ++i) R.push_back(i);
}

void coordinator_receive(CoordinatorState& s, int i, Vec z_i)
{
    check_agent(s, i, "coordinator_receive");
    if (s.where[std::size_t(i)] != AgentLocation::in_flight) {
        throw ProtocolViolation("coordinator_receive: agent " + std::to_string(i) + " is not in flight");
    }
    if (z_i.size() != s.partition.dim(i)) throw ContractViolation("coordinator_receive: block dimension mismatch");
    s.pending[std::size_t(i)] = std::move(z_i);
    s.W.push_back(i);
    s.where[std::size_t(i)] = AgentLocation::write_buffer;
}

void coordinator_compute(CoordinatorState& s, int i, double eta, UpdateMode mode)
{
    check_agent(s, i, "coordinator_compute");
    if (mode == UpdateMode::barrier) {
        throw ContractViolation("coordinator_compute: barrier mode consumes all agents at once");
    }
    if (s.where[std::size_t(i)] != AgentLocation::write_buffer) {
        throw ProtocolViolation("coordinator_compute: agent " + std::to_string(i) + " is not in W");
    }
    remove_from(s.W, i);
    block(s.z, s.partition, i) = s.pending[std::size_t(i)];
    if (mode == UpdateMode::aggregated) {
        s.x = relax<double>(s.x, s.z, eta);
    } else {
        block(s.x, s.partition, i) = relax<double>(block(s.x, s.partition, i), block(s.z, s.partition, i), eta);
    }
    s.x_write[std::size_t(i)] = s.x;
    s.R.push_back(i);
    s.where[std::size_t(i)] = AgentLocation::read_buffer;
    ++s.k;
}

void coordinator_compute_all(CoordinatorState& s, double eta)
{
    if (int(s.W.size()) != s.n_agents()) {
        throw ProtocolViolation("coordinator_compute_all: not every agent is in W");
    }
    for (int i = 0; i < s.n_agents(); ++i) block(s.z, s.partition, i) = s.pending[std::size_t(i)];
    s.W.clear();
    s.x = relax<double>(s.x, s.z, eta);
    for (int i = 0; i < s.n_agents(); ++i) {
        s.x_write[std::size_t(i)] = s.x;
        s.R.push_back(i);
        s.where[std::size_t(i)] = AgentLocation::read_buffer;
    }
    ++s.k;
}

ReadPayload coordinator_read(CoordinatorState& s, int i, const Pair& pair)
{
    check_agent(s, i, "coordinator_read");
    if (s.where[std::size_t(i)] != AgentLocation::read_buffer) {
        throw ProtocolViolation("coordinator_read: agent " + std::to_string(i) + " is not in R");
    }
    remove_from(s.R, i);
    s.x_read[std::size_t(i)] = s.x;
    if (s.tb_cache_k != s.k) {
        s.tb_cache = apply_forward_step(pair, s.x);
        s.tb_cache_k = s.k;
    }
    s.where[std::size_t(i)] = AgentLocation::in_flight;
    return {Vec(block(s.x_write[std::size_t(i)], s.partition, i)), Vec(block(s.tb_cache, s.partition, i))};
}

// ---------------------------------------------------------------------------
// simulated engine

void AsyncParams::validate() const
{
    if (!(eta >= 0 && eta <= 1)) throw ParameterError("AsyncParams: eta must lie in [0, 1]");
    if (!(beta >= 0 && beta < 1)) throw ParameterError("AsyncParams: beta must lie in [0, 1)");
    if (!(stop_tol > 0)) throw ParameterError("AsyncParams: stop_tol must be > 0");
    if (max_iters < 0) throw ParameterError("AsyncParams: max_iters must be >= 0");
    if (residual_stride < 0) throw ParameterError("AsyncParams: residual_stride must be >= 0");
    if (!(max_sim_time > 0)) throw ParameterError("AsyncParams: max_sim_time must be > 0");
}

namespace {

enum Tag : int { kAgentDone = 0, kWriteArrive = 1, kWake = 2 };

class Simulation
{
public:
    Simulation(const Pair& pair, const AsyncParams& params, const ScheduleConfig& schedule, const Vec* reference)
        : pair_(pair), p_(params), cfg_(schedule), reference_(reference), s_(pair.partition, params.x0),
          sampler_(schedule), pick_rng_(schedule.seed ^ 0x5851f42d4c957f2dULL)
    {
        n_ = int(pair.partition.size());
        agents_.resize(std::size_t(n_));
        for (int i = 0; i < n_; ++i) agents_[std::size_t(i)].id = i;
        last_consume_.assign(std::size_t(n_), -1);
        out_.updates.assign(std::size_t(n_), 0);
        stride_ = p_.residual_stride > 0 ? p_.residual_stride : n_;
        if (cfg_.guard && p_.mode != UpdateMode::barrier) {
            tau_ = cfg_.resolved_tau();
            if (tau_ < n_) {
                throw ParameterError("run_async: tau_epochs = " + std::to_string(tau_)
                                     + " is below the agent count, no schedule can meet it");
            }
        }
        out_.tau = tau_;
        out_.result.force_dense = p_.force_dense;
        auto& t = out_.trace;
        t.eta = p_.eta;
        t.beta = p_.beta;
        t.gamma = pair.gamma;
        t.partition = pair.partition;
        t.mode = p_.mode;
    }

    AsyncRun run()
    {
        if (record(0.0)) return finish(0.0);
        if (cfg_.mode == ScheduleMode::round_robin_zero_latency) {
            run_round_robin();
        } else {
            run_events();
        }
        return finish(now_);
    }

private:
    // returns true when the run should stop
    bool record(double t)
    {
        detail::guard_divergence(s_.x, s_.k, "run_async");
        double res = std::numeric_limits<double>::quiet_NaN();
        if (s_.k % stride_ == 0) res = residual();
        out_.result.record(s_.k, s_.x, res, reference_, t);
        out_.result.iterations = s_.k;
        if (!std::isnan(res) && res <= p_.stop_tol) {
            out_.result.terminated_by = Termination::tolerance;
            return true;
        }
        if (s_.k >= p_.max_iters) {
            out_.result.terminated_by = Termination::max_iters;
            return true;
        }
        return false;
    }

    double residual() const { return (s_.x - apply_T(pair_, s_.x)).norm(); }

    void log(EventKind kind, double t, int agent, double checksum)
    {
        out_.trace.events.push_back({kind, t, agent, s_.k, checksum});
    }

    void read(int i, double t)
    {
        const auto payload = coordinator_read(s_, i, pair_);
        agent_receive(agents_[std::size_t(i)], payload.y_write, payload.y_B);
        log(EventKind::read, t, i, payload.y_B.sum());
    }

    void agent_done(int i, double t)
    {
        const Vec z = agent_step(agents_[std::size_t(i)], pair_.backward[i], p_.beta);
        log(EventKind::agent_compute, t, i, z.sum());
    }

    void receive(int i, double t)
    {
        coordinator_receive(s_, i, agents_[std::size_t(i)].z);
        log(EventKind::write_receive, t, i, agents_[std::size_t(i)].z.sum());
    }

    void compute(int i, double t)
    {
        const long k_before = s_.k;
        double checksum = 0;
        if (i == kAllAgents) {
            coordinator_compute_all(s_, p_.eta);
            checksum = s_.x.sum();
            for (int j = 0; j < n_; ++j) {
                last_consume_[std::size_t(j)] = k_before;
                ++out_.updates[std::size_t(j)];
            }
        } else {
            coordinator_compute(s_, i, p_.eta, p_.mode);
            checksum = block(s_.x, pair_.partition, i).sum();
            last_consume_[std::size_t(i)] = k_before;
            ++out_.updates[std::size_t(i)];
        }
        out_.trace.events.push_back({EventKind::coordinator_compute, t, i, k_before, checksum});
    }

    void run_round_robin()
    {
        for (;;) {
            const int i = int(s_.k % n_);
            read(i, 0.0);
            agent_done(i, 0.0);
            receive(i, 0.0);
            compute(i, 0.0);
            if (record(0.0)) return;
        }
    }

    /// Agent to pull from W now, or nullopt to wait.
    std::optional<int> choose(double t)
    {
        if (s_.W.empty()) return std::nullopt;
        if (p_.mode == UpdateMode::barrier) {
            if (int(s_.W.size()) == n_) return kAllAgents;
            return std::nullopt;
        }
        int pick = s_.W.front();
        if (cfg_.policy == BufferPolicy::priority) {
            pick = *std::min_element(s_.W.begin(), s_.W.end());
        } else if (cfg_.policy == BufferPolicy::random) {
            std::uniform_int_distribution<std::size_t> u(0, s_.W.size() - 1);
            pick = s_.W[u(pick_rng_)];
        }
        if (tau_ == 0) return pick;

        // EDF over deadlines last_consume + tau. The agent at deadline rank m (from 0)
        // cannot be served before k + m, so the first tight rank fixes who must go next.
        std::vector<int> order(static_cast<std::size_t>(n_));
        for (int j = 0; j < n_; ++j) order[std::size_t(j)] = j;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return last_consume_[std::size_t(a)] < last_consume_[std::size_t(b)];
        });
        const auto deadline = [&](int j) { return last_consume_[std::size_t(j)] + tau_; };
        const int first = order.front();
        if (deadline(first) < s_.k) {
            throw BoundedDelayViolation("run_async: agent " + std::to_string(first) + " missed its deadline at epoch "
                                            + std::to_string(s_.k),
                                        first, s_.k);
        }
        int tight = -1;
        for (int m = 0; m < n_; ++m) {
            if (deadline(order[std::size_t(m)]) <= s_.k + m) {
                tight = m;
                break;
            }
        }
        if (tight < 0) return pick;
        auto waiting = [&](int j) { return s_.where[std::size_t(j)] == AgentLocation::write_buffer; };
        for (int m = 0; m <= tight; ++m) {
            if (order[std::size_t(m)] == pick) return pick;
        }
        for (int m = 0; m <= tight; ++m) {
            const int j = order[std::size_t(m)];
            if (waiting(j)) {
                out_.trace.interventions.push_back({s_.k, j, t, false});
                return j;
            }
        }
        auto& iv = out_.trace.interventions;
        if (iv.empty() || iv.back().k != s_.k || !iv.back().stalled) iv.push_back({s_.k, first, t, true});
        return std::nullopt;
    }

    void wake_at(double t) { queue_.push(t, -1, kWake); }

    // returns true when the run should stop
    bool drain(double t)
    {
        for (;;) {
            bool progressed = false;
            while (compute_free_at_ <= t) {
                const auto pick = choose(t);
                if (!pick) break;
                compute(*pick, t);
                if (record(t)) return true;
                progressed = true;
                if (cfg_.coordinator_service_s > 0) {
                    compute_free_at_ = t + cfg_.coordinator_service_s;
                    wake_at(compute_free_at_);
                }
            }
            while (read_free_at_ <= t && !s_.R.empty()) {
                const int i = s_.R.front();
                read(i, t);
                queue_.push(t + cfg_.latency_s + sampler_.next(i), i, kAgentDone);
                progressed = true;
                if (cfg_.coordinator_service_s > 0) {
                    read_free_at_ = t + cfg_.coordinator_service_s;
                    wake_at(read_free_at_);
                }
            }
            if (!progressed) return false;
        }
    }

    void run_events()
    {
        if (drain(0.0)) return;
        for (;;) {
            const auto ev = queue_.next_event();
            if (!ev) throw ContractViolation("run_async: event queue ran dry before termination");
            if (ev->time > p_.max_sim_time) {
                out_.result.terminated_by = Termination::budget;
                now_ = p_.max_sim_time;
                return;
            }
            now_ = ev->time;
            switch (ev->tag) {
            case kAgentDone:
                agent_done(ev->agent, now_);
                queue_.push(now_ + cfg_.latency_s, ev->agent, kWriteArrive);
                break;
            case kWriteArrive: receive(ev->agent, now_); break;
            default: break;
            }
            if (drain(now_)) return;
        }
    }

    AsyncRun finish(double t)
    {
        auto& r = out_.result;
        const double res = residual();
        if (!r.iteration.empty() && r.iteration.back() == s_.k) {
            r.residuals.back() = res;
        } else {
            r.record_final(s_.k, s_.x, res, reference_, t);
        }
        r.iterations = s_.k;
        out_.end_time = t;
        auto& tr = out_.trace;
        tr.dense = r.dense;
        if (tr.dense) tr.history = r.iterates;
        return std::move(out_);
    }

    const Pair& pair_;
    const AsyncParams& p_;
    const ScheduleConfig& cfg_;
    const Vec* reference_;
    CoordinatorState s_;
    DurationSampler sampler_;
    std::mt19937_64 pick_rng_;
    EventQueue queue_;
    std::vector<AgentState> agents_;
    std::vector<long> last_consume_;
    AsyncRun out_;
    int n_ = 0;
    long stride_ = 1;
    long tau_ = 0;
    double now_ = 0;
    double compute_free_at_ = 0;
    double read_free_at_ = 0;
};

} // namespace

AsyncRun run_async(const Pair& pair, const AsyncParams& params, const ScheduleConfig& schedule, const Vec* reference)
{
    params.validate();
    schedule.validate();
    pair.partition.check_conforms(params.x0, "run_async");
    if (Index(schedule.profiles.size()) != pair.partition.size()) {
        throw ContractViolation("run_async: need one agent profile per block");
    }
    if (params.mode == UpdateMode::barrier && schedule.mode == ScheduleMode::round_robin_zero_latency) {
        throw ParameterError("run_async: barrier mode needs the simulated schedule");
    }
    if (reference) pair.partition.check_conforms(*reference, "run_async reference");
    Simulation sim(pair, params, schedule, reference);
    return sim.run();
}

// ---------------------------------------------------------------------------
// trace analysis

TraceWalker::TraceWalker(const Trace& trace)
    : trace_(trace)
{
    const auto n = std::size_t(trace.partition.size());
    last_consume_.assign(n, -1);
    last_read_write_.assign(n, std::nullopt);
    inflight_.assign(n, std::nullopt);
    staged_.assign(n, std::nullopt);
}

bool TraceWalker::advance_to(long k)
{
    if (k <= k_) throw ContractViolation("TraceWalker: can only move forward");
    const int n = int(staged_.size());
    while (pos_ < trace_.events.size()) {
        const auto& e = trace_.events[pos_++];
        if (e.agent != kAllAgents && (e.agent < 0 || e.agent >= n)) {
            throw FormatError("trace: agent id " + std::to_string(e.agent) + " out of range");
        }
        if (e.kind == EventKind::read) {
            const auto j = std::size_t(e.agent);
            const long write = last_consume_[j] >= 0 ? last_consume_[j] + 1 : 0;
            const long prev = last_read_write_[j].value_or(write);
            inflight_[j] = SnapshotRefs{e.k, write, prev};
            last_read_write_[j] = write;
        } else if (e.kind == EventKind::coordinator_compute) {
            if (e.k != k_ + 1) throw FormatError("trace: compute events out of order at k = " + std::to_string(e.k));
            auto consume = [&](std::size_t j) {
                if (!inflight_[j]) {
                    throw FormatError("trace: agent " + std::to_string(j) + " consumed without a prior read");
                }
                staged_[j] = inflight_[j];
                inflight_[j].reset();
                last_consume_[j] = e.k;
            };
            if (e.agent == kAllAgents) {
                for (int j = 0; j < n; ++j) consume(std::size_t(j));
            } else {
                consume(std::size_t(e.agent));
            }
            consumed_ = e.agent;
            k_ = e.k;
            if (k_ == k) return true;
        }
    }
    return false;
}

namespace {

void require_dense(const Trace& trace, long k, const char* who)
{
    if (!trace.dense) throw ContractViolation(std::string(who) + ": trace history is thinned");
    if (k < 0 || std::size_t(k) >= trace.history.size()) {
        throw ContractViolation(std::string(who) + ": iteration " + std::to_string(k) + " not in history");
    }
}

} // namespace

ErrorDecomposition reconstruct_error(const Trace& trace, const Pair& pair, const TraceWalker& walker)
{
    const long k = walker.k();
    require_dense(trace, k, "reconstruct_error");
    const auto& P = pair.partition;
    const int n = int(P.size());
    const Vec& xk = trace.history[std::size_t(k)];
    const Vec& x0 = trace.history.front();

    ErrorDecomposition out;
    out.k = k;
    out.consumed = walker.consumed();
    out.delays.assign(std::size_t(n), AgentDelays{});
    const Index dim = P.total();
    out.e = Vec::Zero(dim);
    out.a = Vec::Zero(dim);
    out.b = Vec::Zero(dim);
    out.c = Vec::Zero(dim);
    out.d = Vec::Zero(dim);

    const Vec tbx = apply_forward_step(pair, xk);
    out.Tx = apply_backward(pair, tbx);
    const bool has_b = pair.gamma != 0;
    const Vec bx = has_b ? Vec(pair.forward(xk)) : Vec();

    out.all_written = true;
    for (int j = 0; j < n; ++j) {
        const auto& refs = walker.staged()[std::size_t(j)];
        if (!refs) {
            // z[j] still holds x_0[j]
            out.all_written = false;
            block(out.e, P, j) = block(x0, P, j) - block(out.Tx, P, j);
            continue;
        }
        for (long idx : {refs->read, refs->write, refs->prev}) require_dense(trace, idx, "reconstruct_error");
        // each is the telescoping sum of x_{m+1} - x_m over the stale window
        const Vec a_full = xk - trace.history[std::size_t(refs->read)];
        block(out.a, P, j) = block(a_full, P, j);
        block(out.b, P, j) = block(xk, P, j) - block(trace.history[std::size_t(refs->write)], P, j);
        block(out.c, P, j) = block(xk, P, j) - block(trace.history[std::size_t(refs->prev)], P, j);
        if (has_b) {
            const Vec b_stale = pair.forward(Vec(xk - a_full));
            block(out.d, P, j) = pair.gamma * block(bx, P, j) - pair.gamma * block(b_stale, P, j) - block(a_full, P, j);
        } else {
            block(out.d, P, j) = -block(a_full, P, j);
        }
        const Vec arg = block(tbx, P, j) + block(out.d, P, j)
                        + trace.beta * (block(out.c, P, j) - block(out.b, P, j));
        block(out.e, P, j) = pair.backward.apply(j, arg) - block(out.Tx, P, j);
        out.delays[std::size_t(j)] = {k + 1 - refs->read, k + 1 - refs->write, k + 1 - refs->prev};
    }
    return out;
}

ErrorDecomposition reconstruct_error(const Trace& trace, const Pair& pair, long k)
{
    require_dense(trace, k, "reconstruct_error");
    if (!(trace.partition == pair.partition)) throw ContractViolation("reconstruct_error: partition mismatch");
    TraceWalker w(trace);
    if (!w.advance_to(k)) throw ContractViolation("reconstruct_error: trace has no compute " + std::to_string(k));
    return reconstruct_error(trace, pair, w);
}

IdentityReport check_error_identity(const Trace& trace, const Pair& pair, double tol)
{
    if (!trace.dense) throw ContractViolation("check_error_identity: trace history is thinned");
    if (!(trace.partition == pair.partition)) throw ContractViolation("check_error_identity: partition mismatch");
    const auto& P = pair.partition;
    IdentityReport rep;
    TraceWalker w(trace);
    const long K = long(trace.history.size()) - 1;
    for (long k = 0; k < K; ++k) {
        if (!w.advance_to(k)) throw FormatError("check_error_identity: history longer than the event log");
        const auto dec = reconstruct_error(trace, pair, w);
        const Vec& xk = trace.history[std::size_t(k)];
        const Vec& xn = trace.history[std::size_t(k + 1)];
        const Vec predicted = xk - trace.eta * ((xk - dec.Tx) - dec.e);
        const double scale = 1 + xk.norm();

        double viol = 0;
        double e_norm = 0, bound = 0;
        bool check_bound = false;
        if (trace.mode == UpdateMode::coordinate) {
            const int i = dec.consumed;
            Vec diff = xn - xk;
            block(diff, P, i) = block(xn, P, i) - block(predicted, P, i);
            viol = diff.norm();
            e_norm = block(dec.e, P, i).norm();
            bound = block(dec.d, P, i).norm() + trace.beta * (block(dec.c, P, i) - block(dec.b, P, i)).norm();
            check_bound = true;
        } else {
            viol = (xn - predicted).norm();
            e_norm = dec.e.norm();
            bound = dec.d.norm() + trace.beta * (dec.c - dec.b).norm();
            check_bound = dec.all_written;
        }
        ++rep.checked;
        rep.worst_ratio = std::max(rep.worst_ratio, viol / scale);
        if (!(viol <= tol * scale)) {
            ++rep.failures;
            if (rep.first_failure < 0) rep.first_failure = k;
        }
        if (check_bound) {
            ++rep.bound_checked;
            // inner prox solves are exact only to their own tolerance
            if (!(e_norm <= bound + 1e-8 * scale)) ++rep.bound_failures;
        }
    }
    return rep;
}

DelayReport verify_delay_bounds(const Trace& trace, double tau)
{
    if (!(tau >= 1)) throw ParameterError("verify_delay_bounds: tau must be >= 1");
    DelayReport rep;
    TraceWalker w(trace);
    const int n = int(trace.partition.size());
    for (long k = 0; w.advance_to(k); ++k) {
        auto check = [&](int j) {
            const auto& refs = w.staged()[std::size_t(j)];
            if (!refs) return;
            const long lr = k + 1 - refs->read;
            const long lw = k + 1 - refs->write;
            const long lp = k + 1 - refs->prev;
            rep.max_read = std::max(rep.max_read, lr);
            rep.max_write = std::max(rep.max_write, lw);
            rep.max_prev = std::max(rep.max_prev, lp);
            if (double(lr) > 2 * tau) rep.violations.push_back({k, j, "read", lr, 2 * tau});
            if (double(lw) > 2 * tau) rep.violations.push_back({k, j, "write", lw, 2 * tau});
            if (double(lp) > 3 * tau) rep.violations.push_back({k, j, "prev", lp, 3 * tau});
        };
        if (trace.mode == UpdateMode::coordinate && w.consumed() != kAllAgents) {
            check(w.consumed());
        } else {
            for (int j = 0; j < n; ++j) check(j);
        }
    }
    return rep;
}

std::vector<Vec> replay(const Trace& trace, const Pair& pair, const Vec& x0)
{
    if (!(trace.partition == pair.partition)) throw ContractViolation("replay: partition mismatch");
    CoordinatorState s(pair.partition, x0);
    std::vector<AgentState> agents(std::size_t(s.n_agents()));
    std::vector<Vec> out{x0};
    for (const auto& e : trace.events) {
        if (e.agent != kAllAgents && (e.agent < 0 || e.agent >= s.n_agents())) {
            throw FormatError("replay: agent id out of range");
        }
        const auto i = std::size_t(std::max(e.agent, 0));
        switch (e.kind) {
        case EventKind::read: {
            const auto payload = coordinator_read(s, e.agent, pair);
            agent_receive(agents[i], payload.y_write, payload.y_B);
            break;
        }
        case EventKind::agent_compute: agent_step(agents[i], pair.backward[e.agent], trace.beta); break;
        case EventKind::write_receive: coordinator_receive(s, e.agent, agents[i].z); break;
        case EventKind::coordinator_compute:
            if (e.agent == kAllAgents) {
                coordinator_compute_all(s, trace.eta);
            } else {
                coordinator_compute(s, e.agent, trace.eta, trace.mode);
            }
            out.push_back(s.x);
            break;
        }
    }
    return out;
}

} // namespace asyncfb
