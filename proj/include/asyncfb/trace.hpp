#pragma once

#include <string>
#include <vector>

#include "asyncfb/block.hpp"

namespace asyncfb {

enum class EventKind { read, agent_compute, write_receive, coordinator_compute };

const char* to_string(EventKind kind);
EventKind parse_event_kind(const std::string& s);

/**
 * How a coordinator compute combines the staged values z.
 *
 * aggregated: x_{k+1} = (1 - eta) x_k + eta z over the full vector.
 * coordinate: only block i moves, x_{k+1}[i] = (1 - eta) x_k[i] + eta z^i.
 * barrier:    the compute waits for every agent and consumes all of W at once
 *             (the synchronous method expressed in the same protocol).
 */
enum class UpdateMode { aggregated, coordinate, barrier };

const char* to_string(UpdateMode m);
UpdateMode parse_update_mode(const std::string& s);

/// Agent id used for barrier computes that consume every agent.
constexpr int kAllAgents = -1;

struct TraceEvent
{
    EventKind kind = EventKind::read;
    double sim_time = 0;
    int agent = 0;
    long k = 0;              ///< global clock when the event happened (before the increment for computes)
    double checksum = 0;     ///< sum of the block moved by the event
};

/// Forced scheduling decision taken by the starvation guard.
struct Intervention
{
    long k = 0;
    int agent = 0;
    double sim_time = 0;
    bool stalled = false; ///< compute waited for the agent rather than reordering W
};

struct Trace
{
    std::vector<TraceEvent> events;
    std::vector<Vector<double>> history; ///< x_0 .. x_K when dense
    bool dense = true;
    double eta = 1;
    double beta = 0;
    double gamma = 0;
    BlockPartition partition;
    UpdateMode mode = UpdateMode::aggregated;
    std::vector<Intervention> interventions;
    bool live = false; ///< real timestamps; not replayable bit for bit

    long n_computes() const;
};

} // namespace asyncfb
