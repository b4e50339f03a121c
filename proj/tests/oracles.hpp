#pragma once

// Independent reference computations used only by tests.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>

#include "asyncfb/block.hpp"

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symmetric matrix with eigenvalues spread in [mu, L] (end points included).
Mat random_spd(Eigen::Index n, double mu, double L, std::mt19937_64& rng);

/// min 1/2 u'Hu + h'u over lo <= u <= hi by enumerating all 3^n active sets.
Vec box_qp_by_active_sets(const Mat& H, const Vec& h, const Vec& lo, const Vec& hi);

/// Dense-grid minimizer of f over [lo, hi]^2 with `n` points per axis.
Vec grid_minimize_2d(const std::function<double(const Vec&)>& f, const Vec& lo, const Vec& hi, int n);

/// Central differences with step h.
Vec numeric_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-5);

double lambda_max(const Mat& Q);
double lambda_min(const Mat& Q);

} // namespace oracle
