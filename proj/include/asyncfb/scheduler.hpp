#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "asyncfb/trace.hpp"

namespace asyncfb {

enum class AgentClass { small, medium, large, battery, custom };

const char* to_string(AgentClass c);
AgentClass parse_agent_class(const std::string& s);

struct AgentProfile
{
    int id = 0;
    double mean_compute_s = 0.1;
    double std_compute_s = 0;
    AgentClass cls = AgentClass::custom;

    void validate() const;

    /// Measured prox timings per class (mean, std in seconds).
    static AgentProfile of_class(AgentClass cls, int id);
};

enum class ScheduleMode { simulated, round_robin_zero_latency };
enum class BufferPolicy { fifo, priority, random };

const char* to_string(ScheduleMode m);
ScheduleMode parse_schedule_mode(const std::string& s);
const char* to_string(BufferPolicy p);
BufferPolicy parse_buffer_policy(const std::string& s);

struct ScheduleConfig
{
    std::vector<AgentProfile> profiles;
    double coordinator_service_s = 0;
    double latency_s = 0;
    std::uint64_t seed = 1;
    long tau_epochs = 0; ///< 0 selects natural_tau()
    bool guard = true;
    ScheduleMode mode = ScheduleMode::simulated;
    BufferPolicy policy = BufferPolicy::fifo;

    void validate() const;
    /// tau_epochs, or natural_tau() when it is 0.
    long resolved_tau() const;
};

/**
 * Delay bound implied by the profiles alone: within the longest possible
 * compute window W = max_j (mean_j + 3 std_j) + 2 latency, agent j can finish at
 * most floor(W / dmin_j) + 1 times, dmin_j being its shortest possible round
 * trip. Summing over agents bounds the epochs between two consumptions of
 * any one agent.
 */
long natural_tau(const ScheduleConfig& cfg);

/**
 * Per-agent compute-duration streams, Normal(mean, std) truncated to
 * mean +- 3 std and to positive values. Each agent draws from its own
 * generator so streams do not depend on event interleaving.
 */
class DurationSampler
{
public:
    explicit DurationSampler(const ScheduleConfig& cfg);
    double next(int agent);

private:
    std::vector<AgentProfile> profiles_;
    std::vector<std::mt19937_64> rngs_;
};

struct QueuedEvent
{
    double time = 0;
    int agent = 0;
    long seq = 0;
    int tag = 0; ///< caller-defined event type
};

/// Min-queue on (time, agent, seq).
class EventQueue
{
public:
    void push(double time, int agent, int tag);
    /// Pops the earliest event; empty optional once the simulation is complete.
    std::optional<QueuedEvent> next_event();
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }

private:
    struct Later
    {
        bool operator()(const QueuedEvent& a, const QueuedEvent& b) const;
    };
    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, Later> heap_;
    long seq_ = 0;
};

struct TauReport
{
    std::vector<double> per_agent; ///< max gap in epochs; +inf when fewer than 2 computes
    double tau_obs = 0;
    std::vector<std::string> warnings;
};

/**
 * Largest gap, in coordinator computes, between consecutive consumptions of
 * each agent's writes. The gap before an agent's first consumption counts
 * from the start of the run.
 */
TauReport measure_tau(const Trace& trace);

} // namespace asyncfb
