#pragma once

// Independent reference implementations used by the tests. Nothing here
// calls into the library's likelihood code: every quantity is recomputed by
// brute force from its definition.

#include "coxscreen/dataset.hpp"

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// Term-by-term Breslow log partial likelihood with an O(n^2) risk-set scan.
inline double loglik(const Eigen::MatrixXd& x,
                     const Eigen::VectorXd& time,
                     const std::vector<int>& status,
                     const Eigen::VectorXd& beta)
{
    const Eigen::Index n = x.rows();
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (status[i] == 0) continue;
        double risk = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (time(j) >= time(i)) risk += std::exp(x.row(j).dot(beta));
        }
        total += x.row(i).dot(beta) - std::log(risk);
    }
    return total;
}

/// Gradient sum_i delta_i (x_i - sum_{j in R_i} w_ij x_j), O(n^2 q).
inline Eigen::VectorXd gradient(const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& time,
                                const std::vector<int>& status,
                                const Eigen::VectorXd& beta)
{
    const Eigen::Index n = x.rows();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (status[i] == 0) continue;
        double s0 = 0;
        Eigen::VectorXd s1 = Eigen::VectorXd::Zero(x.cols());
        for (Eigen::Index j = 0; j < n; ++j) {
            if (time(j) < time(i)) continue;
            const double e = std::exp(x.row(j).dot(beta));
            s0 += e;
            s1 += e * x.row(j).transpose();
        }
        g += x.row(i).transpose() - s1 / s0;
    }
    return g;
}

/// Hessian -sum_i delta_i (weighted second moment - mean mean'), O(n^2 q^2).
inline Eigen::MatrixXd hessian(const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& time,
                               const std::vector<int>& status,
                               const Eigen::VectorXd& beta)
{
    const Eigen::Index n = x.rows();
    const Eigen::Index q = x.cols();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(q, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (status[i] == 0) continue;
        double s0 = 0;
        Eigen::VectorXd s1 = Eigen::VectorXd::Zero(q);
        Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(q, q);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (time(j) < time(i)) continue;
            const double e = std::exp(x.row(j).dot(beta));
            const Eigen::VectorXd row = x.row(j).transpose();
            s0 += e;
            s1 += e * row;
            s2 += e * row * row.transpose();
        }
        const Eigen::VectorXd mu = s1 / s0;
        h -= s2 / s0 - mu * mu.transpose();
    }
    return h;
}

/// Central finite-difference gradient of f.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& at,
                                   double step)
{
    Eigen::VectorXd g(at.size());
    for (Eigen::Index j = 0; j < at.size(); ++j) {
        Eigen::VectorXd up = at, down = at;
        up(j) += step;
        down(j) -= step;
        g(j) = (f(up) - f(down)) / (2 * step);
    }
    return g;
}

/// Maximiser of a function on [lo, hi]: coarse grid scan, then successively
/// finer grids around the best point down to the given step.
inline double grid_argmax(const std::function<double(double)>& f, double lo, double hi, double final_step)
{
    double step = (hi - lo) / 2000.0;
    double best = lo;
    double best_val = f(lo);
    for (double b = lo; b <= hi; b += step) {
        const double v = f(b);
        if (v > best_val) {
            best_val = v;
            best = b;
        }
    }
    while (step > final_step) {
        const double left = best - step;
        const double right = best + step;
        step = std::max(step / 20.0, final_step);
        for (double b = left; b <= right; b += step) {
            const double v = f(b);
            if (v > best_val) {
                best_val = v;
                best = b;
            }
        }
    }
    return best;
}

/// Golden-section maximisation of a unimodal function on [lo, hi].
inline double golden_argmax(const std::function<double(double)>& f, double lo, double hi, double tol)
{
    const double r = (std::sqrt(5.0) - 1) / 2;
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return (a + b) / 2;
}

struct RawData {
    Eigen::MatrixXd x;
    Eigen::VectorXd time;
    std::vector<int> status;

    coxscreen::SurvivalDataset dataset() const { return {x, time, status}; }
};

/// Exponential proportional-hazards sample with standard normal covariates,
/// exponential censoring, and optional rounding of times to create ties.
inline RawData random_data(std::mt19937_64& rng,
                           int n,
                           int q,
                           double beta_scale = 0.5,
                           double censor_rate = 0.3,
                           bool ties = false)
{
    std::normal_distribution<double> normal;
    std::exponential_distribution<double> unit(1.0);
    RawData d;
    d.x.resize(n, q);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < q; ++j) d.x(i, j) = normal(rng);
    }
    Eigen::VectorXd beta(q);
    for (int j = 0; j < q; ++j) beta(j) = beta_scale * normal(rng);
    d.time.resize(n);
    d.status.resize(n);
    bool any_event = false;
    for (int i = 0; i < n; ++i) {
        const double t = unit(rng) / std::exp(d.x.row(i).dot(beta));
        const double c = censor_rate > 0 ? unit(rng) / censor_rate : INFINITY;
        double y = std::min(t, c);
        if (ties) y = std::ceil(y * 4.0) / 4.0;
        d.time(i) = y;
        d.status[i] = t <= c ? 1 : 0;
        any_event = any_event || d.status[i] == 1;
    }
    if (!any_event) d.status[0] = 1;
    return d;
}

} // namespace oracle
