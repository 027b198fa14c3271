#pragma once

#include "coxscreen/dataset.hpp"
#include "coxscreen/scad.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coxscreen {

enum class ScreeningMethod { van_sis, van_isis, var1_sis, var1_isis, var2_sis, var2_isis };

std::string_view method_name(ScreeningMethod method);
/// Parses "van_sis", ..., "var2_isis". Throws InvalidInput otherwise.
ScreeningMethod parse_method(std::string_view name);
bool is_iterative(ScreeningMethod method);

/// floor(n / (4 log n)) for vanilla and second-variant methods, floor(n / log n) for the first variant.
int default_screen_size(ScreeningMethod method, std::size_t n);

/// Lambda grid and SCAD shape used by every penalized refit inside screening.
struct PenaltyPolicy {
    double a = 3.7;
    int n_lambda = 50;
    double lambda_ratio = 0.01;
};

struct ScreeningConfig {
    ScreeningMethod method = ScreeningMethod::van_isis;
    int d = 1;
    int max_isis_iter = 5;
    PenaltyPolicy penalty;
    std::uint64_t seed = 0;
    std::uint32_t stream = 0;   // substream for the random split (bench repetition id)

    void validate(std::size_t p) const;
};

struct IterationRecord {
    IndexSet recruited;            // newly screened covariates I_k
    std::vector<double> utilities; // utilities of `recruited` (pooled or averaged across halves)
    IndexSet candidate_set;        // M_{k-1} union I_k, handed to the penalized refit
    IndexSet model;                // M_k, nonzero coefficients of the refit
    std::size_t intersection_size = 0;  // split variants: |I^(1) cap I^(2)| before any fallback
    bool fallback = false;              // split variants: empty intersection replaced by a union
};

struct ScreeningTrace {
    ScreeningMethod method = ScreeningMethod::van_sis;
    int d = 0;
    std::vector<IterationRecord> iterations;
    IndexSet final_model;
    PenalizedFit final_fit;
    IndexSet sure_screen_candidate;   // union of every candidate set
    bool restarted = false;           // ISIS first step re-run with doubled recruitment
};

/// u_m = max_b of the single-covariate log partial likelihood, for every column.
Eigen::VectorXd marginal_utilities(const SurvivalDataset& data);

/// Joint maximum of the partial likelihood on {m} cup conditioned, for every m
/// not in `conditioned` (entries for conditioned columns are NaN). Singular or
/// failed fits give -infinity. Equals marginal_utilities when conditioned is empty.
Eigen::VectorXd conditional_utilities(const SurvivalDataset& data, const IndexSet& conditioned);

/// Indices sorted by decreasing utility, ties to the lower index. -inf and NaN entries are dropped.
IndexSet rank_by_utility(const Eigen::VectorXd& utilities);

/// SCAD path on `candidates` tuned by BIC; empty candidates give an empty fit.
PenalizedFit penalized_refit(const SurvivalDataset& data,
                             const IndexSet& candidates,
                             const PenaltyPolicy& policy);

ScreeningTrace sis_select(const SurvivalDataset& data, const ScreeningConfig& config);
ScreeningTrace isis_run(const SurvivalDataset& data, const ScreeningConfig& config);
ScreeningTrace split_variant_select(const SurvivalDataset& data, const ScreeningConfig& config);

/// Dispatches on config.method.
ScreeningTrace run_screening(const SurvivalDataset& data, const ScreeningConfig& config);

/// (truth within sure_screen_candidate, truth within final_model).
std::pair<bool, bool> sure_screening_indicator(const ScreeningTrace& trace, const IndexSet& truth);

/// Thrown when ISIS cannot produce a nonempty first-step model.
class ScreeningFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace coxscreen
