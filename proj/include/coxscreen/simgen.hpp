#pragma once

#include "coxscreen/dataset.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace coxscreen {

enum class CovarianceKind { independent, equicorrelated, hub_case3, hub_case4 };

/// Data-generating design for one of the six simulation cases.
struct SimulationCase {
    int case_id = 1;
    int n = 300;
    int p = 400;
    CovarianceKind covariance = CovarianceKind::independent;
    double rho = 0.0;               // equicorrelated only
    Eigen::VectorXd true_beta;      // (p,)
    double baseline_rate = 0.1;     // constant baseline hazard h0
    double censor_mean = 10.0;      // mean of the exponential censoring law
};

/// Catalog entry for case_id in 1..6 (Cases 1-4: n=300, p=400; 5-6: n=400, p=1000).
SimulationCase make_case(int case_id);

/// Catalog entry with overridden dimensions (p must cover the true support).
SimulationCase make_case(int case_id, int n, int p);

/// Fixed coefficients of case_id as a length-p vector.
Eigen::VectorXd true_beta(int case_id, int p);
Eigen::VectorXd true_beta(int case_id);

/// Fresh draw (4 log n / sqrt(n) + |Z| / 4) U on the first six coordinates,
/// U = +-1 with probability 1/2. Only meaningful for cases 1, 2 and 5.
Eigen::VectorXd random_beta(int n, int p, std::uint64_t seed, std::uint32_t rep = 0);

/// X_j = common_j Z_0 + own_j Z_j with independent standard normals Z.
struct FactorLoadings {
    Eigen::VectorXd common;
    Eigen::VectorXd own;

    /// Implied covariance common common' + diag(own^2).
    Eigen::MatrixXd covariance() const;
};

FactorLoadings factor_loadings(const SimulationCase& sim);

/// n rows of the case's covariate law.
Eigen::MatrixXd gen_covariates(const SimulationCase& sim, std::uint64_t seed, std::uint32_t rep = 0);

struct GeneratedSample {
    SurvivalDataset dataset;
    Eigen::VectorXd latent_event_times;
    Eigen::VectorXd latent_censor_times;
    IndexSet truth;
    Eigen::VectorXd beta_star;
};

/// T_i ~ Exp(rate baseline_rate exp(x_i' beta)), C_i ~ Exp(mean censor_mean), y = min(T, C), delta = 1{T <= C}.
GeneratedSample gen_survival(const Eigen::MatrixXd& covariates,
                             const Eigen::VectorXd& beta_star,
                             double baseline_rate,
                             double censor_mean,
                             std::uint64_t seed,
                             std::uint32_t rep = 0);

GeneratedSample gen_case(const SimulationCase& sim, std::uint64_t seed, std::uint32_t rep = 0);
GeneratedSample gen_case(int case_id, std::uint64_t seed, std::uint32_t rep = 0);

} // namespace coxscreen
