#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coxscreen {

/// Thrown when user-supplied data or parameters violate a precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical fit cannot be carried out (e.g. singular information).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ordered set of covariate column indices (0-based, no duplicates).
using IndexSet = std::vector<int>;

/**
 * Right-censored survival sample.
 *
 * Holds covariates x (n, p), observed times y_i = min(T_i, C_i) and event
 * flags delta_i. Observations are indexed by a permutation that sorts times
 * in descending order, so risk sets {j : y_j >= y_i} are prefixes of that
 * ordering. Tied times form blocks; every member of a block belongs to the
 * risk set of an event in the same block (Breslow convention, censorings at a
 * tied time stay at risk).
 *
 * Instances are immutable after construction.
 */
class SurvivalDataset {
public:
    SurvivalDataset() = default;

    /// Validating constructor. Throws InvalidInput on any violated invariant.
    SurvivalDataset(Eigen::MatrixXd covariates,
                    Eigen::VectorXd times,
                    std::vector<int> status,
                    std::vector<std::string> column_names = {});

    std::size_t n() const { return static_cast<std::size_t>(x_.rows()); }
    std::size_t p() const { return static_cast<std::size_t>(x_.cols()); }
    std::size_t n_events() const { return n_events_; }

    const Eigen::MatrixXd& covariates() const { return x_; }
    const Eigen::VectorXd& times() const { return time_; }
    const std::vector<int>& status() const { return status_; }
    const std::vector<std::string>& column_names() const { return names_; }

    /// Permutation ordering observations by nonincreasing time (ties by index).
    const std::vector<int>& sort_order() const { return order_; }

    /// Start positions (into sort_order) of blocks of tied times, plus n at the end.
    const std::vector<int>& tie_blocks() const { return blocks_; }

    /// New dataset made of the given rows (in the given order).
    SurvivalDataset subset_rows(std::span<const int> rows) const;

    /// Throws InvalidInput unless every index is in [0, p) and unique.
    void check_subset(std::span<const int> subset) const;

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd time_;
    std::vector<int> status_;
    std::vector<std::string> names_;
    std::vector<int> order_;
    std::vector<int> blocks_;
    std::size_t n_events_ = 0;
};

/// Builds a validated dataset; see SurvivalDataset.
SurvivalDataset build_dataset(Eigen::MatrixXd covariates,
                              Eigen::VectorXd times,
                              std::vector<int> status);

/// Copy of the dataset with every covariate column centered and scaled to sd 1.
/// Constant columns are centered only.
SurvivalDataset standardize(const SurvivalDataset& data);

/// Null-model log partial likelihood: -sum_{i: delta_i = 1} log |R(y_i)|.
double null_loglik(const SurvivalDataset& data);

/// Reads the CSV format: header row, a `time` column, a `status` column,
/// all remaining columns are covariates in order.
/// Errors carry the 1-based line number of the offending row.
SurvivalDataset read_csv(const std::string& path);
SurvivalDataset parse_csv(std::istream& in);

/// Writes `time,status,<covariates...>` with round-trip precision.
void write_csv(const SurvivalDataset& data, std::ostream& out);
void write_csv(const SurvivalDataset& data, const std::string& path);

} // namespace coxscreen
