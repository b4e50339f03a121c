#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace oracle {

Mat random_spd(Eigen::Index n, double mu, double L, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    Mat G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) G(i, j) = normal(rng);
    Eigen::HouseholderQR<Mat> qr(G);
    const Mat Qm = qr.householderQ();
    Vec ev(n);
    std::uniform_real_distribution<double> u(mu, L);
    for (Eigen::Index i = 0; i < n; ++i) ev[i] = u(rng);
    ev[0] = mu;
    if (n > 1) ev[n - 1] = L;
    Mat out = Qm * ev.asDiagonal() * Qm.transpose();
    return 0.5 * (out + out.transpose());
}

Vec box_qp_by_active_sets(const Mat& H, const Vec& h, const Vec& lo, const Vec& hi)
{
    const Eigen::Index n = h.size();
    long combos = 1;
    for (Eigen::Index i = 0; i < n; ++i) combos *= 3;
    double best = std::numeric_limits<double>::infinity();
    Vec best_u = Vec::Zero(n);
    for (long c = 0; c < combos; ++c) {
        Vec u(n);
        std::vector<Eigen::Index> free;
        long code = c;
        bool skip = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int s = int(code % 3);
            code /= 3;
            if (s == 0) {
                if (!std::isfinite(lo[i])) skip = true;
                u[i] = lo[i];
            } else if (s == 1) {
                if (!std::isfinite(hi[i])) skip = true;
                u[i] = hi[i];
            } else {
                free.push_back(i);
            }
        }
        if (skip) continue;
        if (!free.empty()) {
            const auto m = Eigen::Index(free.size());
            Mat Hf(m, m);
            Vec rhs(m);
            for (Eigen::Index a = 0; a < m; ++a) {
                rhs[a] = -h[free[a]];
                for (Eigen::Index i = 0; i < n; ++i) {
                    bool is_free = false;
                    for (auto f : free) is_free |= (f == i);
                    if (!is_free) rhs[a] -= H(free[a], i) * u[i];
                }
                for (Eigen::Index b = 0; b < m; ++b) Hf(a, b) = H(free[a], free[b]);
            }
            Eigen::FullPivLU<Mat> lu(Hf);
            if (!lu.isInvertible()) continue;
            const Vec sol = lu.solve(rhs);
            for (Eigen::Index a = 0; a < m; ++a) u[free[a]] = sol[a];
        }
        if ((u.array() < lo.array() - 1e-12).any() || (u.array() > hi.array() + 1e-12).any()) continue;
        const double obj = 0.5 * u.dot(H * u) + h.dot(u);
        if (obj < best) {
            best = obj;
            best_u = u;
        }
    }
    return best_u;
}

Vec grid_minimize_2d(const std::function<double(const Vec&)>& f, const Vec& lo, const Vec& hi, int n)
{
    Vec best(2), p(2);
    double fb = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a) {
        p[0] = lo[0] + (hi[0] - lo[0]) * a / (n - 1);
        for (int b = 0; b < n; ++b) {
            p[1] = lo[1] + (hi[1] - lo[1]) * b / (n - 1);
            const double v = f(p);
            if (v < fb) {
                fb = v;
                best = p;
            }
        }
    }
    return best;
}

Vec numeric_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h)
{
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2 * h);
    }
    return g;
}

double lambda_max(const Mat& Q) { return Eigen::SelfAdjointEigenSolver<Mat>(Q).eigenvalues().maxCoeff(); }
double lambda_min(const Mat& Q) { return Eigen::SelfAdjointEigenSolver<Mat>(Q).eigenvalues().minCoeff(); }

} // namespace oracle
