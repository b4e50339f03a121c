#include "asyncfb/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "asyncfb/errors.hpp"

namespace asyncfb {

const char* to_string(AgentClass c)
{
    switch (c) {
    case AgentClass::small: return "small";
    case AgentClass::medium: return "medium";
    case AgentClass::large: return "large";
    case AgentClass::battery: return "battery";
    case AgentClass::custom: return "custom";
    }
    return "?";
}

AgentClass parse_agent_class(const std::string& s)
{
    if (s == "small") return AgentClass::small;
    if (s == "medium") return AgentClass::medium;
    if (s == "large") return AgentClass::large;
    if (s == "battery") return AgentClass::battery;
    if (s == "custom") return AgentClass::custom;
    throw FormatError("unknown agent class '" + s + "'");
}

const char* to_string(ScheduleMode m)
{
    return m == ScheduleMode::simulated ? "simulated" : "round_robin_zero_latency";
}

ScheduleMode parse_schedule_mode(const std::string& s)
{
    if (s == "simulated") return ScheduleMode::simulated;
    if (s == "round_robin_zero_latency") return ScheduleMode::round_robin_zero_latency;
    throw FormatError("unknown schedule mode '" + s + "'");
}

const char* to_string(BufferPolicy p)
{
    switch (p) {
    case BufferPolicy::fifo: return "fifo";
    case BufferPolicy::priority: return "priority";
    case BufferPolicy::random: return "random";
    }
    return "?";
}

BufferPolicy parse_buffer_policy(const std::string& s)
{
    if (s == "fifo") return BufferPolicy::fifo;
    if (s == "priority") return BufferPolicy::priority;
    if (s == "random") return BufferPolicy::random;
    throw FormatError("unknown buffer policy '" + s + "'");
}

void AgentProfile::validate() const
{
    if (!(mean_compute_s > 0)) throw ParameterError("AgentProfile: mean must be > 0");
    if (!(std_compute_s >= 0)) throw ParameterError("AgentProfile: std must be >= 0");
    if (!(std_compute_s < mean_compute_s)) throw ParameterError("AgentProfile: std must be < mean");
}

AgentProfile AgentProfile::of_class(AgentClass cls, int id)
{
    switch (cls) {
    case AgentClass::small: return {id, 0.070, 0.010, cls};
    case AgentClass::medium: return {id, 0.243, 0.005, cls};
    case AgentClass::large: return {id, 0.267, 0.001, cls};
    case AgentClass::battery: return {id, 0.023, 0.003, cls};
    case AgentClass::custom: break;
    }
    throw ParameterError("AgentProfile::of_class: custom profiles need explicit timings");
}

void ScheduleConfig::validate() const
{
    if (profiles.empty()) throw ParameterError("ScheduleConfig: no agent profiles");
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        profiles[i].validate();
        if (profiles[i].id != int(i)) throw ParameterError("ScheduleConfig: profile ids must be 0..N-1 in order");
    }
    if (!(coordinator_service_s >= 0)) throw ParameterError("ScheduleConfig: service time must be >= 0");
    if (!(latency_s >= 0)) throw ParameterError("ScheduleConfig: latency must be >= 0");
    if (tau_epochs < 0) throw ParameterError("ScheduleConfig: tau_epochs must be >= 1 (or 0 for auto)");
}

long ScheduleConfig::resolved_tau() const { return tau_epochs > 0 ? tau_epochs : natural_tau(*this); }

long natural_tau(const ScheduleConfig& cfg)
{
    cfg.validate();
    const std::size_t n = cfg.profiles.size();
    if (cfg.mode == ScheduleMode::round_robin_zero_latency) return long(n);
    double window = 0;
    for (const auto& p : cfg.profiles) window = std::max(window, p.mean_compute_s + 3 * p.std_compute_s);
    window += 2 * cfg.latency_s + 2 * cfg.coordinator_service_s;
    long tau = 0;
    for (const auto& p : cfg.profiles) {
        const double dmin = std::max(p.mean_compute_s - 3 * p.std_compute_s, 0.0) + 2 * cfg.latency_s
                            + cfg.coordinator_service_s;
        if (dmin <= 0) return std::numeric_limits<long>::max() / 4; // unbounded in principle
        tau += long(std::floor(window / dmin)) + 1;
    }
    return std::max<long>(tau, 1);
}

DurationSampler::DurationSampler(const ScheduleConfig& cfg)
    : profiles_(cfg.profiles)
{
    rngs_.reserve(profiles_.size());
    for (const auto& p : profiles_) {
        std::seed_seq seq{std::uint64_t(cfg.seed), std::uint64_t(p.id), std::uint64_t(0xd0)};
        rngs_.emplace_back(seq);
    }
}

double DurationSampler::next(int agent)
{
    const auto& p = profiles_.at(std::size_t(agent));
    if (p.std_compute_s == 0) return p.mean_compute_s;
    std::normal_distribution<double> normal(p.mean_compute_s, p.std_compute_s);
    const double lo = std::max(p.mean_compute_s - 3 * p.std_compute_s, 0.0);
    const double hi = p.mean_compute_s + 3 * p.std_compute_s;
    auto& rng = rngs_[std::size_t(agent)];
    for (;;) {
        const double d = normal(rng);
        if (d > lo && d <= hi) return d;
    }
}

bool EventQueue::Later::operator()(const QueuedEvent& a, const QueuedEvent& b) const
{
    if (a.time != b.time) return a.time > b.time;
    if (a.agent != b.agent) return a.agent > b.agent;
    return a.seq > b.seq;
}

void EventQueue::push(double time, int agent, int tag)
{
    heap_.push(QueuedEvent{time, agent, seq_++, tag});
}

std::optional<QueuedEvent> EventQueue::next_event()
{
    if (heap_.empty()) return std::nullopt;
    QueuedEvent e = heap_.top();
    heap_.pop();
    return e;
}

TauReport measure_tau(const Trace& trace)
{
    const int n = int(trace.partition.size());
    TauReport rep;
    rep.per_agent.assign(std::size_t(n), 0);
    std::vector<long> last(std::size_t(n), -1);
    std::vector<long> count(std::size_t(n), 0);
    auto consume = [&](int j, long k) {
        auto& gap = rep.per_agent[std::size_t(j)];
        gap = std::max(gap, double(k - last[std::size_t(j)]));
        last[std::size_t(j)] = k;
        ++count[std::size_t(j)];
    };
    for (const auto& e : trace.events) {
        if (e.kind != EventKind::coordinator_compute) continue;
        if (e.agent == kAllAgents) {
            for (int j = 0; j < n; ++j) consume(j, e.k);
        } else {
            consume(e.agent, e.k);
        }
    }
    for (int j = 0; j < n; ++j) {
        if (count[std::size_t(j)] < 2) {
            rep.per_agent[std::size_t(j)] = std::numeric_limits<double>::infinity();
            rep.warnings.push_back("agent " + std::to_string(j) + " consumed fewer than 2 times; gap unbounded");
        }
        rep.tau_obs = std::max(rep.tau_obs, rep.per_agent[std::size_t(j)]);
    }
    return rep;
}

} // namespace asyncfb
