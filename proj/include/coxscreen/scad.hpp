#pragma once

#include "coxscreen/cox.hpp"
#include "coxscreen/dataset.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace coxscreen {

/// SCAD penalty parameters: lambda > 0, a > 2.
struct ScadSpec {
    double lambda = 1.0;
    double a = 3.7;

    /// Throws InvalidInput unless lambda > 0 and a > 2.
    void validate() const;
};

/// p'_lambda(|beta|): lambda on [0, lambda], lambda (a lambda - |beta|)_+ / ((a - 1) lambda) beyond.
double scad_derivative(double beta_abs, const ScadSpec& spec);

/// p_lambda(|beta|): linear, then quadratic, then constant (a + 1) lambda^2 / 2 from a lambda on.
double scad_value(double beta_abs, const ScadSpec& spec);

/// Sparse estimate produced by a penalized fit on a covariate subset.
struct PenalizedFit {
    IndexSet covariate_indices;       // fitted columns
    Eigen::VectorXd beta;             // (q,), aligned with covariate_indices
    IndexSet active_set;              // original indices with nonzero beta, ascending
    Eigen::VectorXd penalty_weights;  // weights of the last weighted-L1 problem solved (n p'_lambda)
    double loglik = 0;
    double bic = 0;
    double lambda = 0;
    bool converged = false;
    int iterations = 0;

    /// Coefficients scattered into a length-p vector.
    Eigen::VectorXd full_beta(std::size_t p) const;
};

struct LambdaPath {
    std::vector<double> grid;         // strictly decreasing
    std::vector<PenalizedFit> fits;
    std::size_t selected_index = 0;

    const PenalizedFit& selected() const { return fits.at(selected_index); }
};

struct WeightedL1Options {
    double kkt_tol = 1e-8;
    int max_outer = 200;
    int max_sweeps = 10000;
    double cd_tol = 1e-13;
};

struct WeightedL1Result {
    Eigen::VectorXd beta;
    double loglik = 0;
    double kkt_residual = 0;
    int iterations = 0;
    bool converged = false;
};

/**
 * Solves min_beta -l(beta) + sum_j w_j |beta_j| on the design's subset.
 *
 * Outer loop: quadratic expansion of -l refreshed every cycle, with step
 * halving on the true objective. The expansion is restricted to a working
 * set (nonzero coefficients plus KKT violators) and uses the exact observed
 * information there (proximal Newton); working sets beyond 1000 columns fall
 * back to the expansion in the linear predictor with diagonal curvature
 * (working response / working weights). Inner loop: cyclic coordinate
 * descent with soft-thresholding. Stops when the KKT residual of the true
 * objective is below kkt_tol.
 */
WeightedL1Result weighted_l1_fit(const CoxDesign& design,
                                 const Eigen::VectorXd& weights,
                                 const Eigen::VectorXd& warm_start = {},
                                 const WeightedL1Options& options = {});

/// Max over coordinates of the weighted-L1 KKT violation at beta.
double weighted_l1_kkt_residual(const Eigen::VectorXd& gradient,
                                const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& weights);

struct LlaOptions {
    double tol = 1e-6;        // max |beta^(k+1) - beta^(k)|
    int max_iter = 30;
    double zero_snap = 1e-12;
    WeightedL1Options inner;
};

/**
 * SCAD-penalized fit by local linear approximation.
 *
 * Objective: -l(beta) + n sum_j p_lambda(|beta_j|), i.e. lambda lives on the
 * per-observation scale of the log partial likelihood.
 *
 * Each step solves the weighted-L1 problem with weights n p'_lambda(|beta^(k)|).
 * With an empty `init`, starts from the unpenalized fit when the subset is
 * smaller than n/2 and that fit converges, otherwise from zero (whose first
 * step is the plain L1 solve).
 */
PenalizedFit lla_fit(const SurvivalDataset& data,
                     std::span<const int> subset,
                     const ScadSpec& spec,
                     const Eigen::VectorXd& init = {},
                     const LlaOptions& options = {});

PenalizedFit lla_fit(const CoxDesign& design,
                     const ScadSpec& spec,
                     const Eigen::VectorXd& init,
                     const Eigen::VectorXd& warm_start = {},
                     const LlaOptions& options = {});

/// Default LLA starting point for a design (see lla_fit).
Eigen::VectorXd lla_initial_point(const CoxDesign& design);

/// lambda_max = max_j |d l / d beta_j at 0| / n, then n_lambda log-spaced values down to lambda_max * ratio.
std::vector<double> make_lambda_grid(const SurvivalDataset& data,
                                     std::span<const int> subset,
                                     int n_lambda = 50,
                                     double ratio = 0.01);

std::vector<double> make_lambda_grid(const CoxDesign& design, int n_lambda = 50, double ratio = 0.01);

/// SCAD fits along the grid (warm starts), tuned by BIC with n_effective = n.
LambdaPath scad_path_fit(const SurvivalDataset& data,
                         std::span<const int> subset,
                         const std::vector<double>& grid,
                         double a = 3.7,
                         const LlaOptions& options = {});

/// Plain L1 fits of -l(beta) + n lambda sum_j |beta_j| along the grid (warm starts); selected_index by BIC with n_effective = n.
LambdaPath lasso_path_fit(const SurvivalDataset& data,
                          std::span<const int> subset,
                          const std::vector<double>& grid,
                          const WeightedL1Options& options = {});

/// Fit minimising -2 loglik + df log(n_effective); ties go to the larger lambda.
const PenalizedFit& bic_select(const LambdaPath& path, std::size_t n_effective);
std::size_t bic_select_index(const LambdaPath& path, std::size_t n_effective);

/// Lasso path on the full data with selected_index chosen by K-fold
/// cross-validated negative partial likelihood (validation folds use their
/// own risk sets). Folds come from a seeded shuffle.
LambdaPath cv_lasso(const SurvivalDataset& data,
                    std::span<const int> subset,
                    const std::vector<double>& grid,
                    int folds,
                    std::uint64_t seed,
                    std::vector<double>* cv_loss = nullptr);

} // namespace coxscreen
