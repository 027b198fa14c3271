#pragma once

#include "coxscreen/dataset.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace coxscreen {

/// Log partial likelihood and (optionally) its first two derivatives.
struct CoxDerivatives {
    double loglik = 0;
    Eigen::VectorXd gradient;   // (q,), empty unless requested
    Eigen::MatrixXd hessian;    // (q, q), negative observed information, empty unless requested
};

/**
 * Working representation of a dataset restricted to a covariate subset.
 *
 * Rows are stored in descending-time order and every column is centered.
 * The partial likelihood and its derivatives are invariant under column
 * shifts, so centering only improves conditioning of the risk-set moments.
 * All evaluations are single backward sweeps over tied-time blocks: O(n q)
 * for the gradient and O(n q^2) for the Hessian.
 */
class CoxDesign {
public:
    CoxDesign(const SurvivalDataset& data, std::span<const int> subset);

    Eigen::Index n() const { return x_.rows(); }
    Eigen::Index q() const { return x_.cols(); }
    const IndexSet& subset() const { return subset_; }

    /// Sorted, centered covariates (n, q).
    const Eigen::MatrixXd& x() const { return x_; }
    /// Event indicators in sorted order.
    const Eigen::VectorXd& delta() const { return delta_; }
    const std::vector<int>& blocks() const { return blocks_; }
    /// Number of events in each tied-time block.
    const std::vector<int>& block_events() const { return block_events_; }
    std::size_t n_events() const { return n_events_; }

    /// n_events times the raw (uncentered) mean square of each column.
    /// Reference scale for detecting a degenerate information matrix.
    const Eigen::VectorXd& information_scale() const { return info_scale_; }

    double loglik(const Eigen::VectorXd& beta) const;
    double loglik_from_eta(const Eigen::VectorXd& eta) const;

    /// order 0: loglik only; 1: + gradient; 2: + Hessian.
    CoxDerivatives derivatives(const Eigen::VectorXd& beta, int order) const;

    /// Derivatives of the log partial likelihood with respect to each
    /// observation's linear predictor: gradient d l / d eta_k and the diagonal
    /// of -d^2 l / d eta_k^2 (both in sorted order).
    void eta_derivatives(const Eigen::VectorXd& eta,
                         Eigen::VectorXd& grad,
                         Eigen::VectorXd& weight) const;

    /// True when the observed information is numerically singular.
    bool is_singular(const Eigen::MatrixXd& information) const;

private:
    IndexSet subset_;
    Eigen::MatrixXd x_;
    Eigen::VectorXd delta_;
    std::vector<int> blocks_;
    std::vector<int> block_events_;
    Eigen::VectorXd event_x_sum_;
    Eigen::VectorXd info_scale_;
    std::size_t n_events_ = 0;
};

double partial_loglik(const SurvivalDataset& data,
                      const Eigen::VectorXd& beta,
                      std::span<const int> subset);

Eigen::VectorXd partial_loglik_grad(const SurvivalDataset& data,
                                    const Eigen::VectorXd& beta,
                                    std::span<const int> subset);

Eigen::MatrixXd partial_loglik_hessian(const SurvivalDataset& data,
                                       const Eigen::VectorXd& beta,
                                       std::span<const int> subset);

struct NewtonOptions {
    double tol = 1e-8;           // gradient max-norm
    double rel_loglik_tol = 1e-10;
    int max_iter = 100;
    int max_halvings = 30;
};

/// Unpenalized maximum partial likelihood fit.
struct CoxFit {
    Eigen::VectorXd beta;
    double loglik = 0;
    Eigen::VectorXd std_errors;   // NaN where the final information is singular
    IndexSet covariate_indices;
    bool converged = false;
    int iterations = 0;
};

/**
 * Newton-Raphson with step halving, started at `init` (zeros when empty).
 *
 * Throws FitError("singular information") when the information matrix at the
 * starting point is singular. A diverging fit (monotone likelihood) is
 * returned with converged = false after max_iter steps or once the
 * information degenerates along the path.
 */
CoxFit newton_fit(const SurvivalDataset& data,
                  std::span<const int> subset,
                  const Eigen::VectorXd& init = {},
                  const NewtonOptions& options = {});

CoxFit newton_fit(const CoxDesign& design,
                  const Eigen::VectorXd& init = {},
                  const NewtonOptions& options = {});

/// Breslow estimate of the cumulative baseline hazard.
struct BaselineHazard {
    std::vector<double> event_times;   // distinct failure times, ascending
    std::vector<double> jumps;
    std::vector<double> cumulative;
};

/// Jumps d_j / sum_{i in R(t_j)} exp(x_i' beta) at each distinct failure time t_j.
BaselineHazard breslow_baseline(const SurvivalDataset& data,
                                std::span<const int> subset,
                                const Eigen::VectorXd& beta);

BaselineHazard breslow_baseline(const SurvivalDataset& data, const CoxFit& fit);

/// beta_j / se_j. Throws InvalidInput for a zero or non-finite standard error.
Eigen::VectorXd t_statistics(const CoxFit& fit);

} // namespace coxscreen
