#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "asyncfb/async.hpp"
#include "asyncfb/dispatch.hpp"
#include "asyncfb/scheduler.hpp"
#include "asyncfb/theory.hpp"

namespace asyncfb {

/// Strongly convex quadratic over a box, split into equal blocks.
struct QuadraticSpec
{
    int n_blocks = 4;
    Index block_dim = 3;
    double mu = 0.1;
    double L = 1;
    double box = 0.5; ///< every coordinate in [-box, box]
};

struct ProblemSpec
{
    std::string kind = "dispatch"; ///< dispatch | quadratic
    DispatchParams dispatch;
    QuadraticSpec quadratic;
};

/// name is one of sync, async_coordinate, async_aggregated, async_inertial.
struct AlgorithmSpec
{
    std::string name;
    double eta = 0.9;
    std::optional<double> beta; ///< unset: 0.99 for async_inertial, 0 otherwise

    double resolved_beta() const;
    UpdateMode mode() const;
};

struct ScheduleSpec
{
    double latency_s = 0;
    double coordinator_service_s = 0;
    long tau_epochs = 0;
    bool guard = true;
    BufferPolicy policy = BufferPolicy::fifo;
    std::vector<AgentProfile> profiles; ///< empty: the problem's default profiles
};

struct TheorySpec
{
    double delta = 1;
    double epsilon_fraction = 0.5; ///< epsilon = fraction * nu
    bool grid_search = false;
};

struct ExperimentConfig
{
    std::uint64_t seed = 1;
    ProblemSpec problem;
    double gamma_scale = 1; ///< gamma = gamma_scale / L
    std::vector<AlgorithmSpec> algorithms;
    ScheduleSpec schedule;
    double budget_s = 40; ///< simulated seconds per algorithm
    long max_iters = 100000000;
    double stop_tol = 1e-13;
    double reference_tol = 1e-10;
    bool dense_trace = false;
    TheorySpec theory;

    void validate() const;
};

/// Unknown keys and type errors raise FormatError naming the offending field.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// The operator pair, reference point and agent profiles a config describes.
struct Instance
{
    Pair pair;
    Vec x0;
    Vec x_star;
    double reference_residual = 0;
    std::vector<AgentProfile> profiles;
    std::optional<DispatchProblem> dispatch;
};

Instance build_instance(const ExperimentConfig& cfg);

/// Random quadratic-plus-box instance with spectrum exactly spanning [mu, L].
Instance make_quadratic_instance(const QuadraticSpec& spec, std::uint64_t seed, double gamma_scale,
                                 double reference_tol);

ScheduleConfig schedule_for(const ExperimentConfig& cfg, const Instance& inst);

struct AlgorithmReport
{
    std::string name;
    UpdateMode mode = UpdateMode::aggregated;
    double eta = 0;
    double beta = 0;
    double final_accuracy = 0; ///< ||x - x*|| / ||x*||
    double final_distance = 0;
    double final_residual = 0;
    long iterations = 0;
    double end_time = 0;
    std::string terminated_by;
    std::vector<long> updates;
    long tau_enforced = 0;
    double tau_obs = 0;
    long interventions = 0;
    std::optional<TheoryConstants> theory; ///< unset when nu = 0
    bool guaranteed = false;
};

struct RunSummary
{
    std::vector<AlgorithmReport> algorithms;
    double L = 0;
    double mu = 0;
    double gamma = 0;
    double reference_residual = 0;
    std::vector<std::string> agent_classes;

    std::string to_json() const;
};

/// Theory constants for one algorithm's eta and beta at the instance's N, tau, gamma, L, mu.
std::optional<TheoryConstants> theory_for(const ExperimentConfig& cfg, const Instance& inst, long tau, double eta,
                                          double beta);

/**
 * Runs every configured algorithm for budget_s simulated seconds and writes
 * summary.json plus, per algorithm, <name>/trace.csv, iterates.bin,
 * trace_meta.json and distances.csv (sim_time, k, dist, residual).
 */
RunSummary cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Human-readable constants report; flags every algorithm whose eta exceeds eta_bar.
std::string cmd_theory(const ExperimentConfig& cfg);

struct ValidationReport
{
    IdentityReport identity;
    DelayReport delays;
    double tau_bound = 0;
    double tau_obs = 0;
    std::optional<IssReport> iss; ///< only for runs inside the guarantee
    std::string iss_note;
    bool pass() const;
    std::string to_text() const;
};

/// Identity, delay bounds and, when eta is within eta_bar, the rate envelope on dist^2.
ValidationReport cmd_validate(const std::filesystem::path& trace_dir, const ExperimentConfig& cfg);

} // namespace asyncfb
