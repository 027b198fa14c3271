#include "coxscreen/screening.hpp"

#include "coxscreen/cox.hpp"
#include "coxscreen/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace coxscreen {

std::string_view method_name(ScreeningMethod method)
{
    switch (method) {
    case ScreeningMethod::van_sis: return "van_sis";
    case ScreeningMethod::van_isis: return "van_isis";
    case ScreeningMethod::var1_sis: return "var1_sis";
    case ScreeningMethod::var1_isis: return "var1_isis";
    case ScreeningMethod::var2_sis: return "var2_sis";
    case ScreeningMethod::var2_isis: return "var2_isis";
    }
    return "unknown";
}

ScreeningMethod parse_method(std::string_view name)
{
    for (auto m : {ScreeningMethod::van_sis, ScreeningMethod::van_isis, ScreeningMethod::var1_sis,
                   ScreeningMethod::var1_isis, ScreeningMethod::var2_sis, ScreeningMethod::var2_isis}) {
        if (method_name(m) == name) return m;
    }
    throw InvalidInput("unknown method '" + std::string(name) + "'");
}

bool is_iterative(ScreeningMethod method)
{
    return method == ScreeningMethod::van_isis || method == ScreeningMethod::var1_isis ||
           method == ScreeningMethod::var2_isis;
}

int default_screen_size(ScreeningMethod method, std::size_t n)
{
    if (n < 2) throw InvalidInput("sample too small for a default screening size");
    const double log_n = std::log(static_cast<double>(n));
    const bool first_variant = method == ScreeningMethod::var1_sis || method == ScreeningMethod::var1_isis;
    const double d = first_variant ? n / log_n : n / (4.0 * log_n);
    return std::max(1, static_cast<int>(std::floor(d)));
}

void ScreeningConfig::validate(std::size_t p) const
{
    if (d < 1) throw InvalidInput("d must be at least 1");
    if (static_cast<std::size_t>(d) > p) throw InvalidInput("d exceeds the number of covariates");
    if (max_isis_iter < 1) throw InvalidInput("max_isis_iter must be at least 1");
    if (!(penalty.a > 2)) throw InvalidInput("SCAD a must exceed 2");
    if (penalty.n_lambda < 1) throw InvalidInput("n_lambda must be at least 1");
    if (!(penalty.lambda_ratio > 0 && penalty.lambda_ratio < 1)) throw InvalidInput("lambda ratio must lie in (0, 1)");
}

namespace {

// Single-covariate log partial likelihood with first and second derivative.
struct ScalarEval {
    double loglik;
    double grad;
    double hess;
};

class ScalarProblem {
public:
    ScalarProblem(const SurvivalDataset& data, const std::vector<int>& block_events, int column)
        : data_(data), block_events_(block_events)
    {
        const auto& order = data.sort_order();
        const auto src = data.covariates().col(column);
        x_.resize(order.size());
        constant_ = src.maxCoeff() == src.minCoeff();
        const double mean = src.mean();
        event_sum_ = 0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            x_[k] = constant_ ? 0.0 : src(order[k]) - mean;
            if (data.status()[order[k]]) event_sum_ += x_[k];
        }
        scale_ = static_cast<double>(data.n_events()) * src.squaredNorm() / static_cast<double>(data.n());
    }

    bool constant() const { return constant_; }
    double scale() const { return scale_; }

    ScalarEval operator()(double b) const
    {
        const auto& blocks = data_.tie_blocks();
        double m = -std::numeric_limits<double>::infinity();
        for (double v : x_) m = std::max(m, b * v);
        double s0 = 0, s1 = 0, s2 = 0;
        ScalarEval out{b * event_sum_, event_sum_, 0.0};
        for (std::size_t blk = 0; blk + 1 < blocks.size(); ++blk) {
            for (int k = blocks[blk]; k < blocks[blk + 1]; ++k) {
                const double e = std::exp(b * x_[k] - m);
                s0 += e;
                s1 += e * x_[k];
                s2 += e * x_[k] * x_[k];
            }
            const int d = block_events_[blk];
            if (d == 0) continue;
            const double mu = s1 / s0;
            out.loglik -= d * (std::log(s0) + m);
            out.grad -= d * mu;
            out.hess -= d * (s2 / s0 - mu * mu);
        }
        return out;
    }

private:
    const SurvivalDataset& data_;
    const std::vector<int>& block_events_;
    std::vector<double> x_;
    double event_sum_ = 0;
    double scale_ = 0;
    bool constant_ = false;
};

// Safeguarded Newton on the concave 1-d profile; returns the best value reached.
double maximize_scalar(const ScalarProblem& problem, double null_value)
{
    if (problem.constant()) return null_value;
    double b = 0;
    ScalarEval f = problem(b);
    if (!(-f.hess > 1e-10 * problem.scale())) return f.loglik;
    double best = f.loglik;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 100; ++it) {
        if (std::abs(f.grad) < 1e-9) break;
        if (f.grad > 0) lo = b; else hi = b;
        double next = b;
        const bool newton_ok = f.hess < 0 && std::isfinite(f.grad / f.hess);
        if (newton_ok) next = b - f.grad / f.hess;
        const bool bracketed = std::isfinite(lo) && std::isfinite(hi);
        if (!newton_ok || next <= lo || next >= hi) {
            if (!bracketed) {
                if (!newton_ok) break;   // flat tail of a divergent profile
            } else {
                next = 0.5 * (lo + hi);
            }
        }
        if (bracketed && hi - lo < 1e-12 * (1.0 + std::abs(b))) break;
        b = next;
        f = problem(b);
        if (std::isfinite(f.loglik)) best = std::max(best, f.loglik);
    }
    return best;
}

std::vector<int> block_event_counts(const SurvivalDataset& data)
{
    const auto& blocks = data.tie_blocks();
    const auto& order = data.sort_order();
    std::vector<int> counts(blocks.size() - 1, 0);
    for (std::size_t b = 0; b + 1 < blocks.size(); ++b) {
        for (int k = blocks[b]; k < blocks[b + 1]; ++k) counts[b] += data.status()[order[k]];
    }
    return counts;
}

IndexSet sorted_union(IndexSet a, const IndexSet& b)
{
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

} // namespace

Eigen::VectorXd marginal_utilities(const SurvivalDataset& data)
{
    const auto counts = block_event_counts(data);
    const double null_value = null_loglik(data);
    Eigen::VectorXd u(data.p());
    for (std::size_t m = 0; m < data.p(); ++m) {
        const ScalarProblem problem(data, counts, static_cast<int>(m));
        u(m) = maximize_scalar(problem, null_value);
    }
    return u;
}

Eigen::VectorXd conditional_utilities(const SurvivalDataset& data, const IndexSet& conditioned)
{
    if (conditioned.empty()) return marginal_utilities(data);
    data.check_subset(conditioned);
    const CoxFit base = newton_fit(data, conditioned);
    const auto q = static_cast<Eigen::Index>(conditioned.size());

    Eigen::VectorXd u = Eigen::VectorXd::Constant(data.p(), std::numeric_limits<double>::quiet_NaN());
    std::vector<char> in_model(data.p(), 0);
    for (int j : conditioned) in_model[j] = 1;

    IndexSet subset = conditioned;
    subset.push_back(0);
    Eigen::VectorXd init = Eigen::VectorXd::Zero(q + 1);
    init.head(q) = base.beta;
    for (std::size_t m = 0; m < data.p(); ++m) {
        if (in_model[m]) continue;
        subset.back() = static_cast<int>(m);
        try {
            const CoxDesign design(data, subset);
            u(m) = newton_fit(design, init).loglik;
            if (!std::isfinite(u(m))) u(m) = -std::numeric_limits<double>::infinity();
        } catch (const FitError&) {
            u(m) = -std::numeric_limits<double>::infinity();
        }
    }
    return u;
}

IndexSet rank_by_utility(const Eigen::VectorXd& utilities)
{
    IndexSet idx;
    for (Eigen::Index j = 0; j < utilities.size(); ++j) {
        if (std::isfinite(utilities(j))) idx.push_back(static_cast<int>(j));
    }
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return utilities(a) > utilities(b); });
    return idx;
}

PenalizedFit penalized_refit(const SurvivalDataset& data,
                             const IndexSet& candidates,
                             const PenaltyPolicy& policy)
{
    if (!candidates.empty()) {
        std::vector<double> grid;
        try {
            grid = make_lambda_grid(data, candidates, policy.n_lambda, policy.lambda_ratio);
        } catch (const InvalidInput&) {
            grid.clear();   // every candidate is flat at zero: the null model is optimal
        }
        if (!grid.empty()) {
            LlaOptions options;
            auto path = scad_path_fit(data, candidates, grid, policy.a, options);
            return path.fits[path.selected_index];
        }
    }
    PenalizedFit empty;
    empty.covariate_indices = candidates;
    empty.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(candidates.size()));
    empty.penalty_weights = Eigen::VectorXd::Zero(empty.beta.size());
    empty.loglik = null_loglik(data);
    empty.bic = -2.0 * empty.loglik;
    empty.converged = true;
    return empty;
}

namespace {

struct ScreenStep {
    IndexSet recruited;
    std::vector<double> utilities;
    std::size_t intersection_size = 0;
    bool fallback = false;
};

// Recruits up to `r` covariates outside `model`.
using Screener = std::function<ScreenStep(const IndexSet& model, int r)>;

Screener pooled_screener(const SurvivalDataset& data)
{
    return [&data](const IndexSet& model, int r) {
        const Eigen::VectorXd u = conditional_utilities(data, model);
        const IndexSet ranked = rank_by_utility(u);
        ScreenStep step;
        for (int j : ranked) {
            if (static_cast<int>(step.recruited.size()) >= r) break;
            step.recruited.push_back(j);
            step.utilities.push_back(u(j));
        }
        step.intersection_size = step.recruited.size();
        return step;
    };
}

struct SplitHalves {
    SurvivalDataset first;
    SurvivalDataset second;
};

SplitHalves split_sample(const SurvivalDataset& data, std::uint64_t seed, std::uint32_t stream)
{
    const int n = static_cast<int>(data.n());
    if (n < 2) throw InvalidInput("sample splitting needs n >= 2");
    auto rng = make_stream(seed, stream, StreamPurpose::sample_split);
    const auto perm = random_permutation(rng, n);
    const int first_size = (n + 1) / 2;
    std::vector<int> a(perm.begin(), perm.begin() + first_size);
    std::vector<int> b(perm.begin() + first_size, perm.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    try {
        return {data.subset_rows(a), data.subset_rows(b)};
    } catch (const InvalidInput& e) {
        throw ScreeningFailure(std::string("sample split produced an invalid half: ") + e.what());
    }
}

Screener split_screener(const SplitHalves& halves, bool grow_to_r)
{
    return [&halves, grow_to_r](const IndexSet& model, int r) {
        const Eigen::VectorXd u1 = conditional_utilities(halves.first, model);
        const Eigen::VectorXd u2 = conditional_utilities(halves.second, model);
        const IndexSet rank1 = rank_by_utility(u1);
        const IndexSet rank2 = rank_by_utility(u2);
        const std::size_t p = static_cast<std::size_t>(u1.size());
        const std::size_t limit = std::max(rank1.size(), rank2.size());

        std::vector<char> in1(p, 0), in2(p, 0);
        std::size_t overlap = 0;
        std::size_t k = 0;
        auto extend_to = [&](std::size_t cutoff) {
            for (; k < cutoff; ++k) {
                if (k < rank1.size()) {
                    const int j = rank1[k];
                    in1[j] = 1;
                    if (in2[j]) ++overlap;
                }
                if (k < rank2.size()) {
                    const int j = rank2[k];
                    in2[j] = 1;
                    if (in1[j]) ++overlap;
                }
            }
        };
        extend_to(std::min<std::size_t>(static_cast<std::size_t>(r), limit));
        if (grow_to_r) {
            while (overlap < static_cast<std::size_t>(r) && k < limit) extend_to(k + 1);
        }

        ScreenStep step;
        for (std::size_t j = 0; j < p; ++j) {
            if (in1[j] && in2[j]) step.recruited.push_back(static_cast<int>(j));
        }
        step.intersection_size = step.recruited.size();
        if (step.recruited.empty()) {
            step.fallback = true;
            const std::size_t half = static_cast<std::size_t>((r + 1) / 2);
            IndexSet top;
            for (std::size_t i = 0; i < half && i < rank1.size(); ++i) top.push_back(rank1[i]);
            for (std::size_t i = 0; i < half && i < rank2.size(); ++i) top.push_back(rank2[i]);
            step.recruited = sorted_union({}, top);
        }
        for (int j : step.recruited) step.utilities.push_back(0.5 * (u1(j) + u2(j)));
        return step;
    };
}

IterationRecord make_record(ScreenStep step, IndexSet candidates, const PenalizedFit& fit)
{
    IterationRecord rec;
    rec.recruited = std::move(step.recruited);
    rec.utilities = std::move(step.utilities);
    rec.candidate_set = std::move(candidates);
    rec.model = fit.active_set;
    rec.intersection_size = step.intersection_size;
    rec.fallback = step.fallback;
    return rec;
}

ScreeningTrace one_shot(const SurvivalDataset& data, const ScreeningConfig& config, const Screener& screen)
{
    ScreeningTrace trace;
    trace.method = config.method;
    trace.d = config.d;
    auto step = screen({}, config.d);
    const IndexSet candidates = sorted_union({}, step.recruited);
    trace.final_fit = penalized_refit(data, candidates, config.penalty);
    trace.final_model = trace.final_fit.active_set;
    trace.sure_screen_candidate = candidates;
    trace.iterations.push_back(make_record(std::move(step), candidates, trace.final_fit));
    return trace;
}

ScreeningTrace iterate(const SurvivalDataset& data, const ScreeningConfig& config, const Screener& screen)
{
    ScreeningTrace trace;
    trace.method = config.method;
    trace.d = config.d;
    const int p = static_cast<int>(data.p());
    int first_size = std::min(p, (2 * config.d + 2) / 3);

    auto step = screen({}, first_size);
    IndexSet candidates = sorted_union({}, step.recruited);
    PenalizedFit fit = penalized_refit(data, candidates, config.penalty);
    if (fit.active_set.empty()) {
        trace.restarted = true;
        trace.sure_screen_candidate = candidates;
        first_size = std::min(p, 2 * first_size);
        step = screen({}, first_size);
        candidates = sorted_union({}, step.recruited);
        fit = penalized_refit(data, candidates, config.penalty);
        if (fit.active_set.empty()) throw ScreeningFailure("first ISIS step selected no covariates");
    }
    trace.sure_screen_candidate = sorted_union(trace.sure_screen_candidate, candidates);
    trace.iterations.push_back(make_record(std::move(step), candidates, fit));
    IndexSet model = fit.active_set;

    for (int it = 1; it < config.max_isis_iter; ++it) {
        const int remaining = config.d - static_cast<int>(model.size());
        if (remaining <= 0) break;
        step = screen(model, remaining);
        if (step.recruited.empty()) break;
        candidates = sorted_union(model, step.recruited);
        PenalizedFit refit = penalized_refit(data, candidates, config.penalty);
        trace.sure_screen_candidate = sorted_union(trace.sure_screen_candidate, candidates);
        trace.iterations.push_back(make_record(std::move(step), candidates, refit));
        const bool unchanged = refit.active_set == model;
        model = refit.active_set;
        fit = std::move(refit);
        if (unchanged || static_cast<int>(model.size()) >= config.d) break;
    }
    trace.final_fit = std::move(fit);
    trace.final_model = model;
    return trace;
}

} // namespace

ScreeningTrace sis_select(const SurvivalDataset& data, const ScreeningConfig& config)
{
    config.validate(data.p());
    return one_shot(data, config, pooled_screener(data));
}

ScreeningTrace isis_run(const SurvivalDataset& data, const ScreeningConfig& config)
{
    config.validate(data.p());
    return iterate(data, config, pooled_screener(data));
}

ScreeningTrace split_variant_select(const SurvivalDataset& data, const ScreeningConfig& config)
{
    config.validate(data.p());
    const bool second_variant = config.method == ScreeningMethod::var2_sis ||
                                config.method == ScreeningMethod::var2_isis;
    const SplitHalves halves = split_sample(data, config.seed, config.stream);
    const Screener screen = split_screener(halves, second_variant);
    return is_iterative(config.method) ? iterate(data, config, screen) : one_shot(data, config, screen);
}

ScreeningTrace run_screening(const SurvivalDataset& data, const ScreeningConfig& config)
{
    switch (config.method) {
    case ScreeningMethod::van_sis: return sis_select(data, config);
    case ScreeningMethod::van_isis: return isis_run(data, config);
    default: return split_variant_select(data, config);
    }
}

std::pair<bool, bool> sure_screening_indicator(const ScreeningTrace& trace, const IndexSet& truth)
{
    IndexSet t = truth;
    std::sort(t.begin(), t.end());
    IndexSet cand = trace.sure_screen_candidate;
    IndexSet model = trace.final_model;
    std::sort(cand.begin(), cand.end());
    std::sort(model.begin(), model.end());
    return {std::includes(cand.begin(), cand.end(), t.begin(), t.end()),
            std::includes(model.begin(), model.end(), t.begin(), t.end())};
}

} // namespace coxscreen
