#include "asyncfb/dispatch.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include <json.hpp>

#include "asyncfb/engines.hpp"

namespace asyncfb {

namespace {

using Mat = Matrix<double>;
using nlohmann::json;

struct ClassShape
{
    Index states;
    Index inputs;
    double u_max; // kW thermal per input
    double gain;  // zone temperature response to one kW over one step
};

ClassShape shape_of(AgentClass cls)
{
    switch (cls) {
    case AgentClass::small: return {3, 1, 12.0, 0.9};
    case AgentClass::medium: return {5, 2, 40.0, 0.35};
    case AgentClass::large: return {6, 2, 60.0, 0.25};
    default: break;
    }
    throw ParameterError("generate_building: class must be small, medium or large");
}

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t a, std::uint64_t tag)
{
    std::seed_seq seq{seed, a, tag};
    return std::mt19937_64(seq);
}

void check_len(const Vec& v, Index n, const char* what)
{
    if (v.size() != n) throw ContractViolation(std::string(what) + ": wrong length");
}

} // namespace

// ---------------------------------------------------------------------------
// agents

void BuildingAgent::validate() const
{
    const Index n = A.rows();
    const Index m = B_u.cols();
    if (n < 1 || A.cols() != n || B_u.rows() != n || B_w.rows() != n || C.cols() != n || C.rows() != m) {
        throw ContractViolation("BuildingAgent: system matrices do not conform");
    }
    if (T_h < 1) throw ParameterError("BuildingAgent: horizon must be >= 1");
    check_len(x_init, n, "BuildingAgent x_init");
    check_len(u_min, m, "BuildingAgent u_min");
    check_len(u_max, m, "BuildingAgent u_max");
    if ((u_min.array() > u_max.array()).any()) throw ParameterError("BuildingAgent: u_min > u_max");
    if (w_hat.rows() != T_h || w_hat.cols() != B_w.cols()) throw ContractViolation("BuildingAgent: w_hat shape");
    check_len(y_ref, m * T_h, "BuildingAgent y_ref");
    check_len(y_min, m * T_h, "BuildingAgent y_min");
    check_len(y_max, m * T_h, "BuildingAgent y_max");
    check_len(u_base, m * T_h, "BuildingAgent u_base");
    check_len(p_hat, T_h, "BuildingAgent p_hat");
    if (!(cop > 0)) throw ParameterError("BuildingAgent: cop must be positive");
    if (temp_weight < 0 || band_weight < 0) throw ParameterError("BuildingAgent: weights must be >= 0");
    const double rho = Eigen::EigenSolver<Mat>(A, false).eigenvalues().cwiseAbs().maxCoeff();
    if (!(rho < 1)) throw ParameterError("BuildingAgent: A is not stable");
}

void BatteryAgent::validate() const
{
    if (T_h < 1) throw ParameterError("BatteryAgent: horizon must be >= 1");
    if (!(soc_min < soc_max)) throw ParameterError("BatteryAgent: soc_min must be < soc_max");
    if (!(p_min < p_max)) throw ParameterError("BatteryAgent: p_min must be < p_max");
    if (soc_weight < 0 || band_weight < 0) throw ParameterError("BatteryAgent: weights must be >= 0");
}

double LocalProgram::cost(const Vec& u) const
{
    const Vec y = outputs(u);
    const Vec ex = (y - y_hi).cwiseMax(0.0) - (y_lo - y).cwiseMax(0.0);
    return 0.5 * weight * (y - y_ref).squaredNorm() + 0.5 * rho * ex.squaredNorm();
}

LocalProgram condense(const BuildingAgent& b)
{
    b.validate();
    const Index T = b.T_h, m = b.n_inputs();
    LocalProgram lp;
    lp.G = Mat::Zero(m * T, m * T);
    // impulse responses C A^k B_u
    std::vector<Mat> markov;
    Mat Ak_B = b.B_u;
    for (Index k = 0; k < T; ++k) {
        markov.push_back(b.C * Ak_B);
        Ak_B = b.A * Ak_B;
    }
    for (Index t = 0; t < T; ++t) {
        for (Index s = 0; s <= t; ++s) lp.G.block(t * m, s * m, m, m) = markov[std::size_t(t - s)];
    }
    lp.y0.resize(m * T);
    Vec x = b.x_init;
    for (Index t = 0; t < T; ++t) {
        x = b.A * x + b.B_w * b.w_hat.row(t).transpose();
        lp.y0.segment(t * m, m) = b.C * x;
    }
    lp.y_ref = b.y_ref;
    lp.y_lo = b.y_min;
    lp.y_hi = b.y_max;
    lp.M = Mat::Zero(T, m * T);
    for (Index t = 0; t < T; ++t) lp.M.block(t, t * m, 1, m).setConstant(1.0 / b.cop);
    lp.u_lo = b.u_min.replicate(T, 1);
    lp.u_hi = b.u_max.replicate(T, 1);
    lp.weight = b.temp_weight;
    lp.rho = b.band_weight;
    return lp;
}

LocalProgram condense(const BatteryAgent& b)
{
    b.validate();
    const Index T = b.T_h;
    LocalProgram lp;
    lp.G = Mat::Zero(T, T);
    for (Index t = 0; t < T; ++t) {
        for (Index s = 0; s <= t; ++s) lp.G(t, s) = b.b * std::pow(b.a, double(t - s));
    }
    lp.y0.resize(T);
    for (Index t = 0; t < T; ++t) lp.y0[t] = std::pow(b.a, double(t + 1)) * b.soc_init;
    lp.y_ref = Vec::Constant(T, b.soc_ref);
    lp.y_lo = Vec::Constant(T, b.soc_min);
    lp.y_hi = Vec::Constant(T, b.soc_max);
    lp.M = Mat::Identity(T, T);
    lp.u_lo = Vec::Constant(T, b.p_min);
    lp.u_hi = Vec::Constant(T, b.p_max);
    lp.weight = b.soc_weight;
    lp.rho = b.band_weight;
    return lp;
}

namespace {

// Everything in the prox program that does not depend on v.
struct PreparedProx
{
    PenalizedBoxQP<double> qp;
    Mat Mt_over_gamma;
    Vec q_fixed;
    Mat M_pinv;
    Mat M;
};

PreparedProx prepare(const LocalProgram& lp, double gamma)
{
    if (!(gamma > 0)) throw ParameterError("local_prox: gamma must be positive");
    PreparedProx pp;
    pp.M = lp.M;
    pp.Mt_over_gamma = lp.M.transpose() / gamma;
    pp.qp.P = lp.weight * lp.G.transpose() * lp.G + pp.Mt_over_gamma * lp.M;
    pp.q_fixed = lp.weight * lp.G.transpose() * (lp.y0 - lp.y_ref);
    pp.qp.C = lp.G;
    pp.qp.c_lo = lp.y_lo - lp.y0;
    pp.qp.c_hi = lp.y_hi - lp.y0;
    pp.qp.rho = lp.rho;
    pp.qp.lo = lp.u_lo;
    pp.qp.hi = lp.u_hi;
    pp.M_pinv = lp.M.transpose() * (lp.M * lp.M.transpose()).inverse();
    return pp;
}

Vec run_prox(PreparedProx& pp, const Vec& v, const NewtonOptions& opt)
{
    if (v.size() != pp.M.rows()) throw ContractViolation("local_prox: input has wrong length");
    pp.qp.q = pp.q_fixed - pp.Mt_over_gamma * v;
    Vec u = pp.M_pinv * v;
    solve_penalized_box_qp(pp.qp, u, opt);
    return pp.M * u;
}

VectorMap<double> prox_map(const LocalProgram& lp, double gamma, NewtonOptions opt = {})
{
    auto pp = std::make_shared<const PreparedProx>(prepare(lp, gamma));
    return [pp, opt](const Vec& v) {
        PreparedProx local = *pp; // q changes per call; keep the map pure and thread-safe
        return run_prox(local, v, opt);
    };
}

} // namespace

Vec local_prox(const LocalProgram& prog, double gamma, const Vec& v, const NewtonOptions& opt)
{
    PreparedProx pp = prepare(prog, gamma);
    return run_prox(pp, v, opt);
}

Vec building_prox(const BuildingAgent& b, double gamma, const Vec& v, double tol)
{
    NewtonOptions opt;
    opt.tol = tol;
    return local_prox(condense(b), gamma, v, opt);
}

Vec battery_prox(const BatteryAgent& b, double gamma, const Vec& v, double tol)
{
    NewtonOptions opt;
    opt.tol = tol;
    return local_prox(condense(b), gamma, v, opt);
}

// ---------------------------------------------------------------------------
// generation

BuildingAgent generate_building(AgentClass cls, Index T_h, std::uint64_t seed)
{
    if (T_h < 1) throw ParameterError("generate_building: T_h must be >= 1");
    const ClassShape sh = shape_of(cls);
    auto rng = seeded(seed, std::uint64_t(cls), 0xb0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal;
    const Index n = sh.states, m = sh.inputs;
    const double two_pi = 2 * std::numbers::pi;

    BuildingAgent b;
    b.cls = cls;
    b.T_h = T_h;

    Mat gauss(n, n);
    for (Index i = 0; i < n * n; ++i) gauss.data()[i] = normal(rng);
    const Mat Q = Eigen::HouseholderQR<Mat>(gauss).householderQ();
    Vec lambda(n);
    for (Index i = 0; i < n; ++i) lambda[i] = 0.7 + 0.28 * unif(rng);
    b.A = Q * lambda.asDiagonal() * Q.transpose();

    // zones are the first m states
    b.B_u = Mat::Zero(n, m);
    b.B_u.topRows(m) = sh.gain * Mat::Identity(m, m);
    for (Index i = m; i < n; ++i) {
        for (Index j = 0; j < m; ++j) b.B_u(i, j) = 0.3 * sh.gain * unif(rng);
    }
    b.C = Mat::Zero(m, n);
    b.C.leftCols(m) = Mat::Identity(m, m);
    b.B_w = Mat(n, 1);
    for (Index i = 0; i < n; ++i) b.B_w(i, 0) = 0.02 + 0.04 * unif(rng);

    b.x_init = Vec(n);
    for (Index i = 0; i < n; ++i) b.x_init[i] = unif(rng) - 0.5;
    b.w_hat = Mat(T_h, 1);
    const double phase_w = two_pi * unif(rng);
    for (Index t = 0; t < T_h; ++t) {
        b.w_hat(t, 0) = 3.0 * std::sin(two_pi * double(t) / double(T_h) + phase_w) + 0.5 * normal(rng);
    }

    b.temp_weight = 3e3;
    b.u_min = Vec::Zero(m);
    b.u_max = Vec::Constant(m, sh.u_max);
    b.u_base.resize(m * T_h);
    for (Index j = 0; j < m; ++j) {
        const double phase = two_pi * unif(rng);
        for (Index t = 0; t < T_h; ++t) {
            const double level = 0.4 + 0.12 * std::sin(two_pi * double(t) / double(T_h) + phase) + 0.03 * normal(rng);
            b.u_base[t * m + j] = sh.u_max * std::clamp(level, 0.1, 0.9);
        }
    }
    b.p_hat.resize(T_h);
    for (Index t = 0; t < T_h; ++t) b.p_hat[t] = b.u_base.segment(t * m, m).sum() / b.cop;

    // reference temperatures are the baseline's own response; comfort band +-1 around it
    b.y_ref = Vec::Zero(m * T_h);
    b.y_min = b.y_ref;
    b.y_max = b.y_ref;
    const LocalProgram lp = condense(b);
    b.y_ref = lp.outputs(b.u_base);
    b.y_min = b.y_ref.array() - 1.0;
    b.y_max = b.y_ref.array() + 1.0;
    b.validate();
    return b;
}

void DispatchParams::validate() const
{
    if (n_small < 0 || n_medium < 0 || n_large < 0 || n_small + n_medium + n_large < 1) {
        throw ParameterError("DispatchParams: need at least one building");
    }
    if (T_h < 1) throw ParameterError("DispatchParams: T_h must be >= 1");
    if (!(alpha1 > 0) || !(alpha2 >= 0)) throw ParameterError("DispatchParams: need alpha1 > 0, alpha2 >= 0");
    if (!(track_fraction >= 0)) throw ParameterError("DispatchParams: track_fraction must be >= 0");
}

Vec DispatchProblem::baseline() const
{
    Vec x = Vec::Zero(partition.total());
    for (std::size_t i = 0; i < buildings.size(); ++i) block(x, partition, Index(i) + 1) = buildings[i].p_hat;
    return x;
}

std::vector<AgentProfile> DispatchProblem::profiles() const
{
    std::vector<AgentProfile> out{AgentProfile::of_class(AgentClass::battery, 0)};
    for (std::size_t i = 0; i < buildings.size(); ++i) {
        out.push_back(AgentProfile::of_class(buildings[i].cls, int(i) + 1));
    }
    return out;
}

void DispatchProblem::validate() const
{
    battery.validate();
    const Index T = battery.T_h;
    for (const auto& b : buildings) {
        b.validate();
        if (b.T_h != T) throw ContractViolation("DispatchProblem: horizons differ");
    }
    check_len(r, T, "DispatchProblem r");
    if (partition != BlockPartition::uniform(n_agents(), T)) {
        throw ContractViolation("DispatchProblem: partition must be one block of T_h per agent");
    }
    if (!(alpha1 > 0) || !(alpha2 >= 0)) throw ParameterError("DispatchProblem: need alpha1 > 0, alpha2 >= 0");
}

DispatchProblem make_dispatch_problem(const DispatchParams& params)
{
    params.validate();
    const Index T = params.T_h;
    DispatchProblem p;
    p.alpha1 = params.alpha1;
    p.alpha2 = params.alpha2;

    // 500 kWh pack, 15 min steps, C-rate 0.2
    auto& bat = p.battery;
    bat.T_h = T;
    bat.a = 0.999;
    bat.b = 0.25;
    bat.soc_max = 500;
    bat.soc_min = 50;
    bat.soc_ref = 0.8 * bat.soc_max;
    bat.soc_init = 0.75 * bat.soc_max;
    bat.p_max = 0.2 * bat.soc_max;
    bat.p_min = -bat.p_max;
    bat.soc_weight = 100;

    std::uint64_t k = 0;
    auto add = [&](AgentClass cls, int count) {
        for (int i = 0; i < count; ++i) p.buildings.push_back(generate_building(cls, T, params.seed * 1000003ULL + k++));
    };
    add(AgentClass::small, params.n_small);
    add(AgentClass::medium, params.n_medium);
    add(AgentClass::large, params.n_large);
    p.partition = BlockPartition::uniform(p.n_agents(), T);

    // band-limited tracking signal: five sinusoids plus noise
    auto rng = seeded(params.seed, 0, 0x7a);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal;
    Vec r = Vec::Zero(T);
    for (int h = 1; h <= 5; ++h) {
        const double amp = unif(rng) / h;
        const double phase = 2 * std::numbers::pi * unif(rng);
        for (Index t = 0; t < T; ++t) r[t] += amp * std::sin(2 * std::numbers::pi * h * double(t) / double(T) + phase);
    }
    for (Index t = 0; t < T; ++t) r[t] += 0.05 * normal(rng);
    double flex = bat.p_max;
    for (const auto& b : p.buildings) {
        const Vec hi = b.u_max.replicate(T, 1), lo = b.u_min.replicate(T, 1);
        const double up = (hi - b.u_base).minCoeff(), down = (b.u_base - lo).minCoeff();
        flex += double(b.n_inputs()) * std::min(up, down) / b.cop;
    }
    const double peak = r.cwiseAbs().maxCoeff();
    p.r = peak > 0 ? Vec(r * (params.track_fraction * flex / peak)) : r;
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// coupling

namespace {

Vec tracking_error(const DispatchProblem& prob, const Vec& p)
{
    prob.partition.check_conforms(p, "coupling");
    Vec s = -prob.r;
    for (Index i = 0; i < prob.n_agents(); ++i) s += block(p, prob.partition, i);
    for (const auto& b : prob.buildings) s -= b.p_hat;
    return s;
}

} // namespace

double coupling_value(const DispatchProblem& prob, const Vec& p)
{
    const Vec s = tracking_error(prob, p);
    return 0.5 * prob.alpha2 * s.squaredNorm() + 0.5 * prob.alpha1 * (p - prob.baseline()).squaredNorm();
}

Vec coupling_gradient(const DispatchProblem& prob, const Vec& p)
{
    const Vec s = tracking_error(prob, p);
    Vec g = prob.alpha1 * (p - prob.baseline());
    for (Index i = 0; i < prob.n_agents(); ++i) block(g, prob.partition, i) += prob.alpha2 * s;
    return g;
}

Matrix<double> coupling_hessian(const DispatchProblem& prob)
{
    const Index T = prob.T_h(), N = prob.n_agents();
    Mat H = prob.alpha1 * Mat::Identity(N * T, N * T);
    for (Index i = 0; i < N; ++i) {
        for (Index j = 0; j < N; ++j) H.block(i * T, j * T, T, T).diagonal().array() += prob.alpha2;
    }
    return H;
}

ForwardOperator<double> coupling_operator(const DispatchProblem& prob)
{
    prob.validate();
    const Mat H = coupling_hessian(prob);
    ForwardOperator<double> f;
    f.L = largest_eigenvalue<double>(H);
    f.mu = std::min(smallest_eigenvalue<double>(H), f.L);
    auto shared = std::make_shared<const DispatchProblem>(prob);
    f.eval = [shared](const Vec& p) { return coupling_gradient(*shared, p); };
    return f;
}

Pair make_dispatch_pair(const DispatchProblem& prob, double gamma_scale)
{
    if (!(gamma_scale > 0 && gamma_scale < 2)) throw ParameterError("make_dispatch_pair: gamma_scale must lie in (0, 2)");
    auto f = coupling_operator(prob);
    const double gamma = gamma_scale / f.L;
    std::vector<VectorMap<double>> maps;
    maps.push_back(prox_map(condense(prob.battery), gamma));
    for (const auto& b : prob.buildings) maps.push_back(prox_map(condense(b), gamma));
    return Pair(prob.partition, std::move(f), BackwardBlocks<double>(std::move(maps)), gamma);
}

// ---------------------------------------------------------------------------
// reference solution

ReferenceSolution solve_reference(const DispatchProblem& prob, const Pair& pair, double tol, long max_iters)
{
    if (!(tol > 0 && tol <= 1e-9)) throw ParameterError("solve_reference: tol must lie in (0, 1e-9]");
    prob.validate();
    std::vector<LocalProgram> progs{condense(prob.battery)};
    for (const auto& b : prob.buildings) progs.push_back(condense(b));

    Index nu = 0, ny = 0;
    for (const auto& lp : progs) {
        nu += lp.n_u();
        ny += lp.G.rows();
    }
    const Index np = prob.partition.total();
    double rho = 0;
    for (const auto& lp : progs) rho = std::max(rho, lp.rho);

    // p = J z with z stacking every agent's inputs
    Mat J = Mat::Zero(np, nu);
    PenalizedBoxQP<double> qp;
    qp.P = Mat::Zero(nu, nu);
    qp.q = Vec::Zero(nu);
    qp.C = Mat::Zero(ny, nu);
    qp.c_lo = Vec::Zero(ny);
    qp.c_hi = Vec::Zero(ny);
    qp.rho = rho;
    qp.lo.resize(nu);
    qp.hi.resize(nu);
    Vec z = Vec::Zero(nu);
    Index ou = 0, oy = 0;
    for (std::size_t i = 0; i < progs.size(); ++i) {
        const auto& lp = progs[i];
        const Index mu_ = lp.n_u(), my = lp.G.rows();
        J.block(prob.partition.offset(Index(i)), ou, lp.n_p(), mu_) = lp.M;
        qp.P.block(ou, ou, mu_, mu_) = lp.weight * lp.G.transpose() * lp.G;
        qp.q.segment(ou, mu_) = lp.weight * lp.G.transpose() * (lp.y0 - lp.y_ref);
        const double sc = rho > 0 ? std::sqrt(lp.rho / rho) : 0.0;
        qp.C.block(oy, ou, my, mu_) = sc * lp.G;
        qp.c_lo.segment(oy, my) = sc * (lp.y_lo - lp.y0);
        qp.c_hi.segment(oy, my) = sc * (lp.y_hi - lp.y0);
        qp.lo.segment(ou, mu_) = lp.u_lo;
        qp.hi.segment(ou, mu_) = lp.u_hi;
        if (i > 0) z.segment(ou, mu_) = prob.buildings[i - 1].u_base;
        ou += mu_;
        oy += my;
    }
    const Mat Hf = coupling_hessian(prob);
    const Vec g0 = coupling_gradient(prob, Vec::Zero(np));
    qp.P += J.transpose() * Hf * J;
    qp.q += J.transpose() * g0;

    NewtonOptions opt;
    opt.tol = 1e-14;
    opt.max_iter = 500;
    solve_penalized_box_qp(qp, z, opt);

    SyncParams<double> sp;
    sp.x0 = J * z;
    sp.eta = 1;
    sp.beta = 0;
    sp.max_iters = max_iters;
    sp.stop_tol = tol;
    const auto run = run_sync_fbs(pair, sp);
    if (run.terminated_by != Termination::tolerance) {
        throw ConvergenceFailure("solve_reference: residual target not reached", run.residuals.back());
    }
    return {run.iterates.back(), run.residuals.back(), run.iterations};
}

// ---------------------------------------------------------------------------
// json

namespace {

json mat_json(const Mat& m)
{
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Mat mat_from(const json& j)
{
    const Index r = Index(j.size());
    const Index c = r > 0 ? Index(j.at(0).size()) : 0;
    Mat m(r, c);
    for (Index i = 0; i < r; ++i) {
        if (Index(j.at(std::size_t(i)).size()) != c) throw FormatError("problem json: ragged matrix");
        for (Index k = 0; k < c; ++k) m(i, k) = j.at(std::size_t(i)).at(std::size_t(k)).get<double>();
    }
    return m;
}

Vec vec_from(const json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(v.data(), Index(v.size()));
}

} // namespace

std::string problem_to_json(const DispatchProblem& prob)
{
    nlohmann::ordered_json out;
    out["alpha1"] = prob.alpha1;
    out["alpha2"] = prob.alpha2;
    out["r"] = vec_json(prob.r);
    const auto& b = prob.battery;
    out["battery"] = {{"a", b.a},           {"b", b.b},           {"soc_init", b.soc_init}, {"soc_min", b.soc_min},
                      {"soc_max", b.soc_max}, {"p_min", b.p_min},   {"p_max", b.p_max},       {"soc_ref", b.soc_ref},
                      {"T_h", b.T_h},       {"soc_weight", b.soc_weight}, {"band_weight", b.band_weight}};
    auto arr = nlohmann::ordered_json::array();
    for (const auto& bd : prob.buildings) {
        nlohmann::ordered_json j;
        j["class"] = to_string(bd.cls);
        j["A"] = mat_json(bd.A);
        j["B_u"] = mat_json(bd.B_u);
        j["B_w"] = mat_json(bd.B_w);
        j["C"] = mat_json(bd.C);
        j["x_init"] = vec_json(bd.x_init);
        j["T_h"] = bd.T_h;
        j["u_min"] = vec_json(bd.u_min);
        j["u_max"] = vec_json(bd.u_max);
        j["w_hat"] = mat_json(bd.w_hat);
        j["y_ref"] = vec_json(bd.y_ref);
        j["y_min"] = vec_json(bd.y_min);
        j["y_max"] = vec_json(bd.y_max);
        j["temp_weight"] = bd.temp_weight;
        j["band_weight"] = bd.band_weight;
        j["cop"] = bd.cop;
        j["u_base"] = vec_json(bd.u_base);
        j["p_hat"] = vec_json(bd.p_hat);
        arr.push_back(std::move(j));
    }
    out["buildings"] = std::move(arr);
    return out.dump(1);
}

DispatchProblem problem_from_json(const std::string& text)
{
    DispatchProblem p;
    try {
        const json in = json::parse(text);
        p.alpha1 = in.at("alpha1").get<double>();
        p.alpha2 = in.at("alpha2").get<double>();
        p.r = vec_from(in.at("r"));
        const auto& jb = in.at("battery");
        auto& b = p.battery;
        b.a = jb.at("a").get<double>();
        b.b = jb.at("b").get<double>();
        b.soc_init = jb.at("soc_init").get<double>();
        b.soc_min = jb.at("soc_min").get<double>();
        b.soc_max = jb.at("soc_max").get<double>();
        b.p_min = jb.at("p_min").get<double>();
        b.p_max = jb.at("p_max").get<double>();
        b.soc_ref = jb.at("soc_ref").get<double>();
        b.T_h = jb.at("T_h").get<Index>();
        b.soc_weight = jb.at("soc_weight").get<double>();
        b.band_weight = jb.at("band_weight").get<double>();
        for (const auto& j : in.at("buildings")) {
            BuildingAgent bd;
            bd.cls = parse_agent_class(j.at("class").get<std::string>());
            bd.A = mat_from(j.at("A"));
            bd.B_u = mat_from(j.at("B_u"));
            bd.B_w = mat_from(j.at("B_w"));
            bd.C = mat_from(j.at("C"));
            bd.x_init = vec_from(j.at("x_init"));
            bd.T_h = j.at("T_h").get<Index>();
            bd.u_min = vec_from(j.at("u_min"));
            bd.u_max = vec_from(j.at("u_max"));
            bd.w_hat = mat_from(j.at("w_hat"));
            bd.y_ref = vec_from(j.at("y_ref"));
            bd.y_min = vec_from(j.at("y_min"));
            bd.y_max = vec_from(j.at("y_max"));
            bd.temp_weight = j.at("temp_weight").get<double>();
            bd.band_weight = j.at("band_weight").get<double>();
            bd.cop = j.at("cop").get<double>();
            bd.u_base = vec_from(j.at("u_base"));
            bd.p_hat = vec_from(j.at("p_hat"));
            p.buildings.push_back(std::move(bd));
        }
    } catch (const json::exception& ex) {
        throw FormatError(std::string("problem json: ") + ex.what());
    }
    p.partition = BlockPartition::uniform(p.n_agents(), p.battery.T_h);
    try {
        p.validate();
    } catch (const ContractViolation& ex) {
        throw FormatError(std::string("problem json: ") + ex.what());
    }
    return p;
}

} // namespace asyncfb
