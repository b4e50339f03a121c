#include "asyncfb/experiment.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/QR>
#include <json.hpp>

#include "asyncfb/box_qp.hpp"
#include "asyncfb/engines.hpp"
#include "asyncfb/trace_io.hpp"

namespace asyncfb {

namespace {

using json = nlohmann::ordered_json;

// Reads fields from one JSON object, remembering which keys were used so
// that leftovers can be reported as unknown.
class Fields
{
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw FormatError("config: " + where() + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw FormatError("config: " + where(key) + " has the wrong type");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    const json* child(const char* key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string where(const std::string& key = "") const
    {
        std::string p = path_.empty() ? key : (key.empty() ? path_ : path_ + "." + key);
        return p.empty() ? "top level" : "'" + p + "'";
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw FormatError("config: unknown key " + where(it.key()));
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class E, class Parse>
void get_enum(Fields& f, const char* key, E& out, Parse parse)
{
    std::string s;
    f.get(key, s);
    if (!f.has(key)) return;
    try {
        out = parse(s);
    } catch (const std::exception&) {
        throw FormatError("config: " + f.where(key) + " has unknown value '" + s + "'");
    }
}

BufferPolicy parse_policy(const std::string& s)
{
    for (auto p : {BufferPolicy::fifo, BufferPolicy::priority, BufferPolicy::random}) {
        if (s == to_string(p)) return p;
    }
    throw ParameterError("unknown buffer policy");
}

const std::vector<std::string> kAlgorithmNames{"sync", "async_coordinate", "async_aggregated", "async_inertial"};

double rel_or_abs(double d, double ref) { return ref > 0 ? d / ref : d; }

json theory_json(const std::optional<TheoryConstants>& c)
{
    if (!c) return nullptr;
    json j;
    j["nu"] = c->nu;
    j["epsilon"] = c->epsilon;
    j["delta"] = c->inputs.delta;
    j["tau"] = c->inputs.tau;
    j["Y"] = c->Y;
    j["X"] = c->X;
    j["eta_max"] = c->eta_max;
    j["r"] = c->r;
    j["q"] = c->q;
    j["s"] = c->s ? json(*c->s) : json(nullptr);
    return j;
}

void write_distances(const RunResult<double>& r, const std::filesystem::path& path)
{
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write " + path.string());
    os << "sim_time,k,dist,residual\n";
    for (std::size_t j = 0; j < r.iterates.size(); ++j) {
        os << format_double(j < r.sim_times.size() ? r.sim_times[j] : 0.0) << ',' << r.iteration[j] << ','
           << (j < r.distances.size() ? format_double(r.distances[j]) : "") << ',';
        if (j < r.residuals.size() && !std::isnan(r.residuals[j])) os << format_double(r.residuals[j]);
        os << '\n';
    }
}

long theory_tau(long enforced, double tau_obs)
{
    if (enforced > 0) return enforced;
    if (!std::isfinite(tau_obs)) return 0;
    return std::max(1L, long(std::ceil(tau_obs)));
}

} // namespace

// ---------------------------------------------------------------------------
// config

double AlgorithmSpec::resolved_beta() const
{
    if (beta) return *beta;
    return name == "async_inertial" ? 0.99 : 0.0;
}

UpdateMode AlgorithmSpec::mode() const
{
    if (name == "sync") return UpdateMode::barrier;
    if (name == "async_coordinate") return UpdateMode::coordinate;
    if (name == "async_aggregated" || name == "async_inertial") return UpdateMode::aggregated;
    throw ParameterError("unknown algorithm '" + name + "'");
}

void ExperimentConfig::validate() const
{
    if (problem.kind != "dispatch" && problem.kind != "quadratic") {
        throw ParameterError("config: problem.kind must be dispatch or quadratic");
    }
    if (problem.kind == "dispatch") problem.dispatch.validate();
    const auto& qs = problem.quadratic;
    if (problem.kind == "quadratic") {
        if (qs.n_blocks < 1 || qs.block_dim < 1) throw ParameterError("config: quadratic needs n_blocks, block_dim >= 1");
        if (!(qs.mu >= 0 && qs.mu <= qs.L && qs.L > 0)) throw ParameterError("config: quadratic needs 0 <= mu <= L, L > 0");
        if (!(qs.box > 0)) throw ParameterError("config: quadratic.box must be positive");
    }
    if (algorithms.empty()) throw ParameterError("config: at least one algorithm is required");
    std::set<std::string> names;
    for (const auto& a : algorithms) {
        a.mode();
        if (!names.insert(a.name).second) throw ParameterError("config: algorithm '" + a.name + "' listed twice");
        if (!(a.eta > 0 && a.eta <= 1)) throw ParameterError("config: eta must lie in (0, 1]");
        const double b = a.resolved_beta();
        if (!(b >= 0 && b < 1)) throw ParameterError("config: beta must lie in [0, 1)");
    }
    if (!(budget_s > 0)) throw ParameterError("config: budget_s must be positive");
    if (!(gamma_scale > 0 && gamma_scale < 2)) throw ParameterError("config: gamma_scale must lie in (0, 2)");
    if (max_iters < 1) throw ParameterError("config: max_iters must be >= 1");
    if (!(stop_tol > 0)) throw ParameterError("config: stop_tol must be positive");
    if (!(reference_tol > 0 && reference_tol <= 1e-9)) throw ParameterError("config: reference_tol must lie in (0, 1e-9]");
    if (!(theory.delta > 0)) throw ParameterError("config: theory.delta must be positive");
    if (!(theory.epsilon_fraction > 0 && theory.epsilon_fraction < 1)) {
        throw ParameterError("config: theory.epsilon_fraction must lie in (0, 1)");
    }
    if (schedule.latency_s < 0 || schedule.coordinator_service_s < 0) {
        throw ParameterError("config: schedule latencies must be >= 0");
    }
    if (schedule.tau_epochs < 0) throw ParameterError("config: schedule.tau_epochs must be >= 0");
    for (const auto& p : schedule.profiles) p.validate();
}

ExperimentConfig config_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& ex) {
        throw FormatError(std::string("config: ") + ex.what());
    }
    ExperimentConfig c;
    Fields top(j, "");
    top.get("seed", c.seed);
    top.get("gamma_scale", c.gamma_scale);
    top.get("budget_s", c.budget_s);
    top.get("max_iters", c.max_iters);
    top.get("stop_tol", c.stop_tol);
    top.get("reference_tol", c.reference_tol);
    top.get("dense_trace", c.dense_trace);

    if (const json* pj = top.child("problem")) {
        Fields pf(*pj, "problem");
        pf.get("kind", c.problem.kind);
        if (const json* dj = pf.child("dispatch")) {
            Fields df(*dj, "problem.dispatch");
            auto& d = c.problem.dispatch;
            df.get("n_small", d.n_small);
            df.get("n_medium", d.n_medium);
            df.get("n_large", d.n_large);
            df.get("T_h", d.T_h);
            df.get("alpha1", d.alpha1);
            df.get("alpha2", d.alpha2);
            df.get("track_fraction", d.track_fraction);
            df.finish();
        }
        if (const json* qj = pf.child("quadratic")) {
            Fields qf(*qj, "problem.quadratic");
            auto& q = c.problem.quadratic;
            qf.get("n_blocks", q.n_blocks);
            qf.get("block_dim", q.block_dim);
            qf.get("mu", q.mu);
            qf.get("L", q.L);
            qf.get("box", q.box);
            qf.finish();
        }
        pf.finish();
    }

    if (const json* aj = top.child("algorithms")) {
        if (!aj->is_array()) throw FormatError("config: 'algorithms' must be an array");
        for (std::size_t i = 0; i < aj->size(); ++i) {
            Fields af((*aj)[i], "algorithms[" + std::to_string(i) + "]");
            AlgorithmSpec a;
            af.get("name", a.name);
            af.get("eta", a.eta);
            if (af.has("beta")) {
                double b = 0;
                af.get("beta", b);
                a.beta = b;
            } else {
                af.child("beta");
            }
            af.finish();
            if (std::find(kAlgorithmNames.begin(), kAlgorithmNames.end(), a.name) == kAlgorithmNames.end()) {
                throw FormatError("config: " + af.where("name") + " has unknown value '" + a.name + "'");
            }
            c.algorithms.push_back(a);
        }
    }

    if (const json* sj = top.child("schedule")) {
        Fields sf(*sj, "schedule");
        auto& s = c.schedule;
        sf.get("latency_s", s.latency_s);
        sf.get("coordinator_service_s", s.coordinator_service_s);
        sf.get("tau_epochs", s.tau_epochs);
        sf.get("guard", s.guard);
        get_enum(sf, "policy", s.policy, parse_policy);
        if (const json* pj = sf.child("profiles")) {
            if (!pj->is_array()) throw FormatError("config: 'schedule.profiles' must be an array");
            for (std::size_t i = 0; i < pj->size(); ++i) {
                Fields ff((*pj)[i], "schedule.profiles[" + std::to_string(i) + "]");
                AgentProfile p;
                p.id = int(i);
                ff.get("id", p.id);
                get_enum(ff, "class", p.cls, parse_agent_class);
                if (p.cls != AgentClass::custom) p = AgentProfile::of_class(p.cls, p.id);
                ff.get("mean_s", p.mean_compute_s);
                ff.get("std_s", p.std_compute_s);
                ff.finish();
                s.profiles.push_back(p);
            }
        }
        sf.finish();
    }

    if (const json* tj = top.child("theory")) {
        Fields tf(*tj, "theory");
        tf.get("delta", c.theory.delta);
        tf.get("epsilon_fraction", c.theory.epsilon_fraction);
        tf.get("grid_search", c.theory.grid_search);
        tf.finish();
    }
    top.finish();
    try {
        c.validate();
    } catch (const ParameterError& ex) {
        throw FormatError(ex.what());
    }
    return c;
}

std::string config_to_json(const ExperimentConfig& c)
{
    json j;
    j["seed"] = c.seed;
    const auto& d = c.problem.dispatch;
    const auto& q = c.problem.quadratic;
    j["problem"] = {{"kind", c.problem.kind},
                    {"dispatch",
                     {{"n_small", d.n_small},
                      {"n_medium", d.n_medium},
                      {"n_large", d.n_large},
                      {"T_h", d.T_h},
                      {"alpha1", d.alpha1},
                      {"alpha2", d.alpha2},
                      {"track_fraction", d.track_fraction}}},
                    {"quadratic",
                     {{"n_blocks", q.n_blocks}, {"block_dim", q.block_dim}, {"mu", q.mu}, {"L", q.L}, {"box", q.box}}}};
    j["gamma_scale"] = c.gamma_scale;
    json algs = json::array();
    for (const auto& a : c.algorithms) {
        json aj{{"name", a.name}, {"eta", a.eta}};
        if (a.beta) aj["beta"] = *a.beta;
        algs.push_back(aj);
    }
    j["algorithms"] = algs;
    json profiles = json::array();
    for (const auto& p : c.schedule.profiles) {
        profiles.push_back(
            {{"id", p.id}, {"class", to_string(p.cls)}, {"mean_s", p.mean_compute_s}, {"std_s", p.std_compute_s}});
    }
    j["schedule"] = {{"latency_s", c.schedule.latency_s},
                     {"coordinator_service_s", c.schedule.coordinator_service_s},
                     {"tau_epochs", c.schedule.tau_epochs},
                     {"guard", c.schedule.guard},
                     {"policy", to_string(c.schedule.policy)},
                     {"profiles", profiles}};
    j["budget_s"] = c.budget_s;
    j["max_iters"] = c.max_iters;
    j["stop_tol"] = c.stop_tol;
    j["reference_tol"] = c.reference_tol;
    j["dense_trace"] = c.dense_trace;
    j["theory"] = {{"delta", c.theory.delta},
                   {"epsilon_fraction", c.theory.epsilon_fraction},
                   {"grid_search", c.theory.grid_search}};
    return j.dump(2);
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw FormatError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return config_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// instances

Instance make_quadratic_instance(const QuadraticSpec& spec, std::uint64_t seed, double gamma_scale, double reference_tol)
{
    const Index n = Index(spec.n_blocks) * spec.block_dim;
    std::seed_seq seq{seed, std::uint64_t(0x9a)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0, 1);

    Matrix<double> G(n, n);
    for (Index i = 0; i < n * n; ++i) G.data()[i] = nd(rng);
    const Matrix<double> U = Eigen::HouseholderQR<Matrix<double>>(G).householderQ();
    Vec eig(n);
    for (Index i = 0; i < n; ++i) eig[i] = spec.mu + (spec.L - spec.mu) * ud(rng);
    eig[0] = spec.mu;
    if (n > 1) eig[n - 1] = spec.L;
    Matrix<double> Q = U * eig.asDiagonal() * U.transpose();
    Q = (0.5 * (Q + Q.transpose())).eval();
    Vec c(n);
    for (Index i = 0; i < n; ++i) c[i] = spec.L * spec.box * nd(rng);

    ForwardOperator<double> f;
    f.L = spec.L;
    f.mu = spec.mu;
    f.eval = [Q, c](const Vec& x) { return Vec(Q * x + c); };
    std::vector<VectorMap<double>> maps(std::size_t(spec.n_blocks), box_projection<double>(-spec.box, spec.box));
    const auto partition = BlockPartition::uniform(spec.n_blocks, spec.block_dim);

    Instance inst;
    inst.pair = Pair(partition, f, BackwardBlocks<double>(maps), gamma_scale / spec.L);
    inst.x0 = Vec::Zero(n);

    PenalizedBoxQP<double> qp;
    qp.P = Q;
    qp.q = c;
    qp.lo = Vec::Constant(n, -spec.box);
    qp.hi = Vec::Constant(n, spec.box);
    Vec x = Vec::Zero(n);
    NewtonOptions opt;
    opt.tol = 1e-15;
    solve_penalized_box_qp(qp, x, opt);
    SyncParams<double> sp;
    sp.x0 = x;
    sp.stop_tol = reference_tol;
    sp.max_iters = 10000000;
    const auto run = run_sync_fbs(inst.pair, sp);
    if (run.terminated_by != Termination::tolerance) {
        throw ConvergenceFailure("quadratic reference: residual target not reached", run.residuals.back());
    }
    inst.x_star = run.final_iterate();
    inst.reference_residual = run.residuals.back();
    const AgentClass cycle[] = {AgentClass::battery, AgentClass::small, AgentClass::medium, AgentClass::large};
    for (int i = 0; i < spec.n_blocks; ++i) inst.profiles.push_back(AgentProfile::of_class(cycle[i % 4], i));
    return inst;
}

Instance build_instance(const ExperimentConfig& cfg)
{
    cfg.validate();
    if (cfg.problem.kind == "quadratic") {
        return make_quadratic_instance(cfg.problem.quadratic, cfg.seed, cfg.gamma_scale, cfg.reference_tol);
    }
    DispatchParams dp = cfg.problem.dispatch;
    dp.seed = cfg.seed;
    Instance inst;
    inst.dispatch = make_dispatch_problem(dp);
    inst.pair = make_dispatch_pair(*inst.dispatch, cfg.gamma_scale);
    const auto ref = solve_reference(*inst.dispatch, inst.pair, cfg.reference_tol);
    inst.x_star = ref.x_star;
    inst.reference_residual = ref.residual;
    inst.x0 = inst.dispatch->baseline();
    inst.profiles = inst.dispatch->profiles();
    return inst;
}

ScheduleConfig schedule_for(const ExperimentConfig& cfg, const Instance& inst)
{
    ScheduleConfig s;
    s.profiles = cfg.schedule.profiles.empty() ? inst.profiles : cfg.schedule.profiles;
    if (Index(s.profiles.size()) != inst.pair.partition.size()) {
        throw ParameterError("config: schedule.profiles needs one entry per agent ("
                             + std::to_string(inst.pair.partition.size()) + ")");
    }
    s.coordinator_service_s = cfg.schedule.coordinator_service_s;
    s.latency_s = cfg.schedule.latency_s;
    s.seed = cfg.seed;
    s.tau_epochs = cfg.schedule.tau_epochs;
    s.guard = cfg.schedule.guard;
    s.policy = cfg.schedule.policy;
    s.mode = ScheduleMode::simulated;
    s.validate();
    return s;
}

std::optional<TheoryConstants> theory_for(const ExperimentConfig& cfg, const Instance& inst, long tau, double eta,
                                          double beta)
{
    TheoryInputs in;
    in.N = long(inst.pair.partition.size());
    in.tau = std::max(1L, tau);
    in.gamma = inst.pair.gamma;
    in.L = inst.pair.forward.L;
    in.mu = inst.pair.forward.mu;
    in.beta = beta;
    in.delta = cfg.theory.delta;
    const double nu = in.nu();
    if (!(nu > 0)) return std::nullopt;
    in.epsilon = cfg.theory.epsilon_fraction * nu;
    if (cfg.theory.grid_search) {
        const auto g = search_delta_epsilon(in);
        in.delta = g.delta;
        in.epsilon = g.epsilon;
    }
    return make_constants(in, eta);
}

// ---------------------------------------------------------------------------
// run

std::string RunSummary::to_json() const
{
    json j;
    j["L"] = L;
    j["mu"] = mu;
    j["gamma"] = gamma;
    j["reference_residual"] = reference_residual;
    j["agent_classes"] = agent_classes;
    json algs = json::array();
    for (const auto& a : algorithms) {
        json aj;
        aj["name"] = a.name;
        aj["mode"] = to_string(a.mode);
        aj["eta"] = a.eta;
        aj["beta"] = a.beta;
        aj["final_accuracy"] = a.final_accuracy;
        aj["final_distance"] = a.final_distance;
        aj["final_residual"] = a.final_residual;
        aj["iterations"] = a.iterations;
        aj["end_time"] = a.end_time;
        aj["terminated_by"] = a.terminated_by;
        aj["updates_per_agent"] = a.updates;
        std::map<std::string, std::pair<double, int>> by_class;
        for (std::size_t i = 0; i < a.updates.size() && i < agent_classes.size(); ++i) {
            auto& e = by_class[agent_classes[i]];
            e.first += double(a.updates[i]);
            e.second += 1;
        }
        json avg = json::object();
        for (const auto& [cls, e] : by_class) avg[cls] = e.first / e.second;
        aj["mean_updates_per_class"] = avg;
        aj["tau_enforced"] = a.tau_enforced;
        aj["tau_obs"] = std::isfinite(a.tau_obs) ? json(a.tau_obs) : json(nullptr);
        aj["guard_interventions"] = a.interventions;
        aj["theory"] = theory_json(a.theory);
        aj["status"] = a.guaranteed ? "guaranteed" : "unguaranteed";
        algs.push_back(aj);
    }
    j["algorithms"] = algs;
    return j.dump(2) + "\n";
}

RunSummary cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir)
{
    const Instance inst = build_instance(cfg);
    const ScheduleConfig sched = schedule_for(cfg, inst);
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream os(out_dir / "config.json");
        os << config_to_json(cfg) << '\n';
    }

    RunSummary sum;
    sum.L = inst.pair.forward.L;
    sum.mu = inst.pair.forward.mu;
    sum.gamma = inst.pair.gamma;
    sum.reference_residual = inst.reference_residual;
    for (const auto& p : sched.profiles) sum.agent_classes.push_back(to_string(p.cls));
    const double xs = inst.x_star.norm();

    for (const auto& alg : cfg.algorithms) {
        AsyncParams ap;
        ap.eta = alg.eta;
        ap.beta = alg.resolved_beta();
        ap.max_iters = cfg.max_iters;
        ap.stop_tol = cfg.stop_tol;
        ap.x0 = inst.x0;
        ap.mode = alg.mode();
        ap.max_sim_time = cfg.budget_s;
        ap.force_dense = cfg.dense_trace;
        const AsyncRun run = run_async(inst.pair, ap, sched, &inst.x_star);

        const auto dir = out_dir / alg.name;
        save_trace(run.trace, dir);
        write_distances(run.result, dir / "distances.csv");

        AlgorithmReport rep;
        rep.name = alg.name;
        rep.mode = ap.mode;
        rep.eta = ap.eta;
        rep.beta = ap.beta;
        const Vec& xf = run.result.final_iterate();
        rep.final_distance = (xf - inst.x_star).norm();
        rep.final_accuracy = rel_or_abs(rep.final_distance, xs);
        rep.final_residual = apply_S(inst.pair, xf).norm();
        rep.iterations = run.result.iterations;
        rep.end_time = run.end_time;
        rep.terminated_by = to_string(run.result.terminated_by);
        rep.updates = run.updates;
        rep.tau_enforced = run.tau;
        rep.tau_obs = measure_tau(run.trace).tau_obs;
        rep.interventions = long(run.trace.interventions.size());
        const long tau = theory_tau(run.tau, rep.tau_obs);
        if (tau > 0) rep.theory = theory_for(cfg, inst, tau, ap.eta, ap.beta);
        rep.guaranteed = rep.theory && rep.theory->guaranteed;
        sum.algorithms.push_back(rep);
    }
    std::ofstream os(out_dir / "summary.json");
    os << sum.to_json();
    if (!os) throw FormatError("cannot write summary.json");
    return sum;
}

// ---------------------------------------------------------------------------
// theory report

std::string cmd_theory(const ExperimentConfig& cfg)
{
    const Instance inst = build_instance(cfg);
    const long tau = schedule_for(cfg, inst).resolved_tau();
    std::ostringstream os;
    os.precision(6);
    const auto& p = inst.pair;
    os << "N = " << p.partition.size() << ", tau = " << tau << ", gamma = " << p.gamma << ", L = " << p.forward.L
       << ", mu = " << p.forward.mu << "\n";
    const double nu = compute_nu(p.gamma, p.forward.mu, p.forward.L);
    os << "nu = " << nu << "\n";
    if (!(nu > 0)) {
        os << "nu = 0: no linear-rate guarantee for this instance\n";
        return os.str();
    }
    for (const auto& a : cfg.algorithms) {
        const auto c = theory_for(cfg, inst, tau, a.eta, a.resolved_beta());
        os << a.name << ": beta = " << a.resolved_beta() << ", delta = " << c->inputs.delta
           << ", epsilon = " << c->epsilon << ", Y = " << c->Y << ", X = " << c->X << ", eta_bar = " << c->eta_max
           << ", eta = " << a.eta << ", r = " << c->r << ", q = " << c->q;
        if (c->s) os << ", s = " << *c->s;
        os << ", " << (c->guaranteed ? "guaranteed" : "unguaranteed (eta > eta_bar)") << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// validate

bool ValidationReport::pass() const
{
    return identity.pass() && delays.pass() && (!iss || iss->envelope_ok);
}

std::string ValidationReport::to_text() const
{
    std::ostringstream os;
    os << "identity: " << (identity.pass() ? "ok" : "FAIL") << " (" << identity.checked << " steps, "
       << identity.failures << " failures";
    if (identity.first_failure >= 0) os << ", first at k = " << identity.first_failure;
    os << ", worst " << identity.worst_ratio << "; bound on e_k: " << identity.bound_checked << " checked, "
       << identity.bound_failures << " failures)\n";
    os << "delays: " << (delays.pass() ? "ok" : "FAIL") << " (tau = " << tau_bound << ", tau_obs = " << tau_obs
       << ", max read " << delays.max_read << ", write " << delays.max_write << ", prev " << delays.max_prev << ")\n";
    for (std::size_t i = 0; i < delays.violations.size() && i < 10; ++i) {
        const auto& v = delays.violations[i];
        os << "  agent " << v.agent << " at epoch " << v.k << ": " << v.which << " staleness " << v.l << " > "
           << v.bound << "\n";
    }
    if (iss) {
        os << "rate envelope: " << (iss->envelope_ok ? "ok" : "FAIL") << " (s = " << iss->s
           << ", recursion held at " << iss->recursion_fraction << " of steps";
        if (iss->first_violation >= 0) os << ", first violation at k = " << iss->first_violation;
        os << ")\n";
    } else {
        os << "rate envelope: skipped (" << iss_note << ")\n";
    }
    os << (pass() ? "PASS" : "FAIL") << "\n";
    return os.str();
}

ValidationReport cmd_validate(const std::filesystem::path& trace_dir, const ExperimentConfig& cfg)
{
    const Trace trace = load_trace(trace_dir);
    if (!trace.dense) throw FormatError("validate: trace is thinned; rerun with --dense-trace");
    const Instance inst = build_instance(cfg);
    if (trace.partition != inst.pair.partition || trace.gamma != inst.pair.gamma) {
        throw FormatError("validate: trace does not belong to this config");
    }
    ValidationReport rep;
    rep.identity = check_error_identity(trace, inst.pair);
    rep.tau_obs = measure_tau(trace).tau_obs;
    rep.tau_bound = cfg.schedule.tau_epochs > 0 ? double(cfg.schedule.tau_epochs) : rep.tau_obs;
    if (trace.mode == UpdateMode::barrier) {
        rep.tau_bound = std::max(rep.tau_bound, 1.0);
    }
    if (std::isfinite(rep.tau_bound)) {
        rep.delays = verify_delay_bounds(trace, rep.tau_bound);
    } else {
        rep.delays.violations.push_back({0, 0, "read", 0, rep.tau_bound});
    }

    const long tau = theory_tau(0, rep.tau_obs);
    const auto c = tau > 0 ? theory_for(cfg, inst, tau, trace.eta, trace.beta) : std::nullopt;
    if (!c) {
        rep.iss_note = tau > 0 ? "nu = 0" : "tau_obs undefined";
    } else if (!c->guaranteed) {
        rep.iss_note = "eta above eta_bar";
    } else {
        std::vector<double> V;
        V.reserve(trace.history.size());
        for (const auto& x : trace.history) V.push_back((x - inst.x_star).squaredNorm());
        rep.iss = check_iss(V, c->r, c->q, 6 * tau, 1e-9);
    }
    return rep;
}

} // namespace asyncfb
