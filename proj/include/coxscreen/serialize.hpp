#pragma once

#include "coxscreen/bench.hpp"
#include "coxscreen/screening.hpp"

#include <cstdint>
#include <string>

namespace coxscreen {

/// Case definition exchanged as {"case_id", "n", "p", "seed"}.
struct CaseSpec {
    int case_id = 1;
    int n = 300;
    int p = 400;
    std::uint64_t seed = 0;

    bool operator==(const CaseSpec&) const = default;
};

std::string case_spec_to_json(const CaseSpec& spec);
/// Throws InvalidInput naming the offending key (e.g. "/n: expected an integer").
CaseSpec case_spec_from_json(const std::string& text);

/**
 * Screening trace as JSON: method, d, and per iteration the recruited
 * covariates with their utilities, the candidate set and the model, followed
 * by the final model and its coefficients. Covariate indices are written
 * relative to `index_base` (0 internally, 1 for user-facing files); the base
 * is recorded in the document.
 */
std::string trace_to_json(const ScreeningTrace& trace, int index_base = 0);

/**
 * Benchmark configuration from JSON. Recognised keys: cases, methods, reps,
 * base_seed, workers, output_path, n, p, d, max_isis_iter, a, n_lambda,
 * lambda_ratio, lasso_folds. Unknown keys and ill-typed values raise
 * InvalidInput naming the key path; the result is validated.
 */
BenchmarkConfig bench_config_from_json(const std::string& text);

} // namespace coxscreen
