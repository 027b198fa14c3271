#pragma once

#include "coxscreen/screening.hpp"
#include "coxscreen/simgen.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace coxscreen {

/// Name used for the cross-validated L1 comparator in configs and tables.
inline constexpr std::string_view kLassoMethod = "lasso";

struct BenchmarkConfig {
    std::vector<int> cases;
    std::vector<std::string> methods;   // screening method names and/or "lasso"
    int reps = 1;
    std::uint64_t base_seed = 1;
    int workers = 1;
    std::string output_path;            // prefix for .csv / .json / .reps.jsonl / .timings.jsonl
    std::optional<int> n;               // dimension overrides applied to every case
    std::optional<int> p;
    std::optional<int> d;               // screening size override for every screening method
    int max_isis_iter = 5;
    PenaltyPolicy penalty;
    int lasso_folds = 5;

    /// Throws InvalidInput with the offending field named.
    void validate() const;
};

struct RepetitionResult {
    int rep_id = 0;
    std::string method;
    int case_id = 0;
    double l1_error = 0;
    double l2sq_error = 0;
    std::optional<bool> p1_event;   // undefined for the lasso comparator
    bool p2_event = false;
    std::size_t model_size = 0;
    IndexSet final_model;
    double wall_time_seconds = 0;
    bool failed = false;
    std::string error;
};

/// l1 = sum |b - b*|, l2sq = sum (b - b*)^2, P1/P2 events from the trace, model size = |final model|.
RepetitionResult compute_metrics(const Eigen::VectorXd& fit_beta,
                                 const Eigen::VectorXd& beta_star,
                                 const ScreeningTrace& trace);

/// Same metrics for a fit without a screening stage (P1 left undefined).
RepetitionResult compute_metrics(const Eigen::VectorXd& fit_beta,
                                 const Eigen::VectorXd& beta_star,
                                 const IndexSet& model);

struct SummaryRow {
    int case_id = 0;
    std::string method;
    double median_l1 = 0;
    double median_l2sq = 0;
    std::optional<double> p1;
    double p2 = 0;
    double mms = 0;
    double mean_time_s = 0;
    int n_reps = 0;     // repetitions attempted, failed ones included
    int n_failed = 0;   // repetitions excluded from the metrics

    bool operator==(const SummaryRow&) const = default;
};

struct SummaryTable {
    std::vector<SummaryRow> rows;

    bool operator==(const SummaryTable&) const = default;
};

/// Median with mid-point averaging for even counts. Throws on empty input.
double median(std::vector<double> values);

/// Aggregates non-failed repetitions per (case, method), in first-seen order.
SummaryTable summarize(const std::vector<RepetitionResult>& results);

struct MonteCarloOutput {
    SummaryTable summary;
    std::vector<RepetitionResult> repetitions;   // ordered by (case, rep, method)
};

/// Seed for a case's samples, derived from the base seed.
std::uint64_t case_seed(std::uint64_t base_seed, int case_id);

/// Runs one method on one generated sample (never throws; failures are flagged).
RepetitionResult run_method(const GeneratedSample& sample,
                            const std::string& method,
                            const BenchmarkConfig& config,
                            std::uint64_t seed,
                            int case_id,
                            int rep);

/// Every (case, rep, method) combination; repetitions run on `config.workers`
/// threads, each with its own random substreams, so the output does not depend
/// on the worker count.
MonteCarloOutput run_monte_carlo(const BenchmarkConfig& config);

/// One JSON object per line, without timings (byte-identical across worker counts).
std::string repetition_log(const std::vector<RepetitionResult>& results);
/// Wall-clock timings, one JSON object per line.
std::string timing_log(const std::vector<RepetitionResult>& results);

enum class TableFormat { csv, json };

/// CSV columns: case, method, median_l1, median_l2sq, P1, P2, MMS, mean_time_s.
std::string render_table(const SummaryTable& summary, TableFormat format);
/// Writes render_table(summary, format) to path.
void emit_table(const SummaryTable& summary, TableFormat format, const std::string& path);
SummaryTable parse_summary_json(const std::string& text);
/// Column-aligned text rendering for terminals (includes failure counts).
std::string render_text_table(const SummaryTable& summary);

struct FiveNumberSummary {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Quartiles by linear interpolation between order statistics.
FiveNumberSummary five_number_summary(std::vector<double> values);

struct OracleTResult {
    std::vector<double> min_abs_t;   // one entry per successful repetition
    std::vector<int> rep_ids;
    int n_skipped = 0;
    FiveNumberSummary summary;
};

/**
 * For each repetition: simulate the case, fit the unpenalized model on the
 * true support plus `noise_extra` randomly chosen unimportant covariates and
 * record min over the true support of |t_j|. Singular or non-converged fits
 * are skipped and counted.
 */
OracleTResult oracle_tstat_experiment(int case_id,
                                      int reps,
                                      int noise_extra,
                                      std::uint64_t seed,
                                      std::optional<int> n = std::nullopt,
                                      std::optional<int> p = std::nullopt);

} // namespace coxscreen
