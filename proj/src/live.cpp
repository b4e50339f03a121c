#include <chrono>
#include <condition_variable>
#include <mutex>
#include <queue>
#include <thread>

#include "asyncfb/async.hpp"

namespace asyncfb {

namespace {

template <class T>
class Channel
{
public:
    void send(T v)
    {
        {
            std::lock_guard lk(m_);
            q_.push(std::move(v));
        }
        cv_.notify_one();
    }

    T receive()
    {
        std::unique_lock lk(m_);
        cv_.wait(lk, [&] { return !q_.empty(); });
        T v = std::move(q_.front());
        q_.pop();
        return v;
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    std::queue<T> q_;
};

struct ToAgent
{
    bool stop = false;
    ReadPayload payload;
};

struct ToCoordinator
{
    int agent = 0;
    Vec z;
    double computed_at = 0;
};

} // namespace

AsyncRun run_live(const Pair& pair, const LiveParams& params)
{
    pair.partition.check_conforms(params.x0, "run_live");
    if (params.mode == UpdateMode::barrier) throw ParameterError("run_live: barrier mode is simulated only");
    if (!(params.eta >= 0 && params.eta <= 1) || !(params.beta >= 0 && params.beta < 1)) {
        throw ParameterError("run_live: need eta in [0, 1] and beta in [0, 1)");
    }
    const int n = int(pair.partition.size());
    const auto t0 = std::chrono::steady_clock::now();
    auto clock = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    std::vector<Channel<ToAgent>> to_agent(static_cast<std::size_t>(n));
    Channel<ToCoordinator> to_coord;
    std::vector<std::thread> workers;
    for (int i = 0; i < n; ++i) {
        workers.emplace_back([&, i] {
            AgentState agent;
            agent.id = i;
            for (;;) {
                ToAgent msg = to_agent[std::size_t(i)].receive();
                if (msg.stop) return;
                agent_receive(agent, msg.payload.y_write, msg.payload.y_B);
                Vec z = agent_step(agent, pair.backward[i], params.beta);
                to_coord.send({i, std::move(z), clock()});
            }
        });
    }

    AsyncRun out;
    out.updates.assign(std::size_t(n), 0);
    Trace& tr = out.trace;
    tr.eta = params.eta;
    tr.beta = params.beta;
    tr.gamma = pair.gamma;
    tr.partition = pair.partition;
    tr.mode = params.mode;
    tr.live = true;
    tr.history.push_back(params.x0);

    CoordinatorState s(pair.partition, params.x0);
    double last_t = 0;
    auto stamp = [&](double t) { return last_t = std::max(last_t, t); };
    auto read_all = [&] {
        while (!s.R.empty()) {
            const int i = s.R.front();
            ReadPayload p = coordinator_read(s, i, pair);
            tr.events.push_back({EventKind::read, stamp(clock()), i, s.k, p.y_B.sum()});
            to_agent[std::size_t(i)].send({false, std::move(p)});
        }
    };

    std::exception_ptr failure;
    try {
        read_all();
        while (s.k < params.max_iters) {
            ToCoordinator msg = to_coord.receive();
            const int i = msg.agent;
            tr.events.push_back({EventKind::agent_compute, stamp(msg.computed_at), i, s.k, msg.z.sum()});
            const double zsum = msg.z.sum();
            coordinator_receive(s, i, std::move(msg.z));
            tr.events.push_back({EventKind::write_receive, stamp(clock()), i, s.k, zsum});
            while (!s.W.empty() && s.k < params.max_iters) {
                const int j = s.W.front();
                const long kb = s.k;
                coordinator_compute(s, j, params.eta, params.mode);
                ++out.updates[std::size_t(j)];
                tr.events.push_back({EventKind::coordinator_compute, stamp(clock()), j, kb,
                                     block(s.x, pair.partition, j).sum()});
                tr.history.push_back(s.x);
            }
            if (s.k < params.max_iters) read_all();
        }
    } catch (...) {
        failure = std::current_exception();
    }

    for (int i = 0; i < n; ++i) to_agent[std::size_t(i)].send({true, {}});
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);

    out.end_time = last_t;
    for (std::size_t k = 0; k < tr.history.size(); ++k) {
        out.result.record(long(k), tr.history[k], std::numeric_limits<double>::quiet_NaN(), nullptr);
    }
    out.result.residuals.back() = (s.x - apply_T(pair, s.x)).norm();
    out.result.iterations = s.k;
    return out;
}

} // namespace asyncfb
