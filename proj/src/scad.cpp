#include "coxscreen/scad.hpp"

#include "coxscreen/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace coxscreen {

void ScadSpec::validate() const
{
    if (!(lambda > 0) || !std::isfinite(lambda)) throw InvalidInput("SCAD lambda must be positive");
    if (!(a > 2) || !std::isfinite(a)) throw InvalidInput("SCAD a must exceed 2");
}

double scad_derivative(double beta_abs, const ScadSpec& spec)
{
    const double lambda = spec.lambda;
    if (beta_abs <= lambda) return lambda;
    return std::max(spec.a * lambda - beta_abs, 0.0) / (spec.a - 1.0);
}

double scad_value(double beta_abs, const ScadSpec& spec)
{
    const double lambda = spec.lambda;
    const double a = spec.a;
    if (beta_abs <= lambda) return lambda * beta_abs;
    if (beta_abs < a * lambda) {
        return (2.0 * a * lambda * beta_abs - beta_abs * beta_abs - lambda * lambda) / (2.0 * (a - 1.0));
    }
    return (a + 1.0) * lambda * lambda / 2.0;
}

Eigen::VectorXd PenalizedFit::full_beta(std::size_t p) const
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    for (std::size_t j = 0; j < covariate_indices.size(); ++j) out(covariate_indices[j]) = beta(j);
    return out;
}

double weighted_l1_kkt_residual(const Eigen::VectorXd& gradient,
                                const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& weights)
{
    double worst = 0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        double r;
        if (beta(j) == 0) {
            r = std::max(0.0, std::abs(gradient(j)) - weights(j));
        } else {
            r = std::abs(gradient(j) - weights(j) * (beta(j) > 0 ? 1.0 : -1.0));
        }
        worst = std::max(worst, r);
    }
    return worst;
}

namespace {

double penalty_term(const Eigen::VectorXd& beta, const Eigen::VectorXd& weights)
{
    return weights.dot(beta.cwiseAbs());
}

inline double soft_threshold(double u, double t)
{
    if (u > t) return u - t;
    if (u < -t) return u + t;
    return 0.0;
}

// One coordinate-descent pass over `coords` on the weighted least-squares
// model sum_k w_k (r_k)^2 / 2 + sum_j pen_j |b_j|. Returns max |delta_j| v_j.
double cd_pass(const Eigen::MatrixXd& x,
               const Eigen::VectorXd& w,
               const Eigen::VectorXd& curvature,
               const Eigen::VectorXd& pen,
               const std::vector<Eigen::Index>& coords,
               Eigen::VectorXd& beta,
               Eigen::VectorXd& resid)
{
    double worst = 0;
    for (Eigen::Index j : coords) {
        const double v = curvature(j);
        if (v <= 0) {
            if (beta(j) != 0) {
                resid += beta(j) * x.col(j);
                beta(j) = 0;
            }
            continue;
        }
        const double g = (x.col(j).array() * w.array() * resid.array()).sum();
        const double updated = soft_threshold(g + v * beta(j), pen(j)) / v;
        const double delta = updated - beta(j);
        if (delta != 0) {
            resid.noalias() -= delta * x.col(j);
            beta(j) = updated;
            worst = std::max(worst, std::abs(delta) * v);
        }
    }
    return worst;
}

// Coordinate descent on the quadratic expansion of -l in eta with diagonal
// curvature w (working residual g / w), started at beta.
Eigen::VectorXd diagonal_model_step(const Eigen::MatrixXd& x,
                                    const Eigen::VectorXd& g_eta,
                                    const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& pen,
                                    const Eigen::VectorXd& beta,
                                    const std::vector<Eigen::Index>& all,
                                    double tol,
                                    int max_sweeps)
{
    Eigen::VectorXd resid(g_eta.size());
    for (Eigen::Index k = 0; k < g_eta.size(); ++k) resid(k) = w(k) > 0 ? g_eta(k) / w(k) : 0.0;
    const Eigen::VectorXd curvature = (x.array().square().colwise() * w.array()).colwise().sum().transpose();

    Eigen::VectorXd candidate = beta;
    for (int sweep = 0; sweep < max_sweeps;) {
        const double full = cd_pass(x, w, curvature, pen, all, candidate, resid);
        ++sweep;
        if (full < tol) break;
        std::vector<Eigen::Index> active;
        for (Eigen::Index j = 0; j < candidate.size(); ++j) {
            if (candidate(j) != 0) active.push_back(j);
        }
        while (sweep < max_sweeps) {
            const double change = cd_pass(x, w, curvature, pen, active, candidate, resid);
            ++sweep;
            if (change < tol) break;
        }
    }
    return candidate;
}

// Coordinate descent on the quadratic model
//   -g'(b - beta) + (b - beta)' A (b - beta) / 2 + sum_j pen_j |b_j|
// with A the observed information. Returns the minimiser, started at beta.
Eigen::VectorXd cd_quadratic(const Eigen::MatrixXd& info,
                             const Eigen::VectorXd& gradient,
                             const Eigen::VectorXd& pen,
                             const Eigen::VectorXd& beta,
                             double tol,
                             int max_sweeps)
{
    const Eigen::Index q = beta.size();
    Eigen::VectorXd b = beta;
    Eigen::VectorXd r = Eigen::VectorXd::Zero(q);   // A (b - beta)
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double worst = 0;
        for (Eigen::Index j = 0; j < q; ++j) {
            const double v = info(j, j);
            if (v <= 0) {
                if (b(j) != 0) {
                    r -= b(j) * info.col(j);
                    b(j) = 0;
                }
                continue;
            }
            const double updated = soft_threshold(v * b(j) + gradient(j) - r(j), pen(j)) / v;
            const double delta = updated - b(j);
            if (delta != 0) {
                r.noalias() += delta * info.col(j);
                b(j) = updated;
                worst = std::max(worst, std::abs(delta) * v);
            }
        }
        if (worst < tol) break;
    }
    return b;
}

// Observed information -d^2 l / d beta_W d beta_W' for the columns W at the
// linear predictor eta:
//   sum_k e_k a_k x_k x_k' - sum_b d_b mu_b mu_b',
// where a_k = sum over event blocks b whose risk set holds k of d_b / S0_b
// and mu_b = S1_b / S0_b.
Eigen::MatrixXd working_information(const CoxDesign& design,
                                    const Eigen::VectorXd& eta,
                                    const std::vector<Eigen::Index>& cols)
{
    const auto& blocks = design.blocks();
    const auto& events = design.block_events();
    const std::size_t nb = blocks.size() - 1;
    const Eigen::Index n = design.n();
    const auto k_cols = static_cast<Eigen::Index>(cols.size());

    Eigen::MatrixXd xw(n, k_cols);
    for (Eigen::Index c = 0; c < k_cols; ++c) xw.col(c) = design.x().col(cols[c]);

    const double m = eta.maxCoeff();
    const Eigen::VectorXd e = (eta.array() - m).exp();
    std::vector<double> s0(nb);
    double acc = 0;
    for (std::size_t b = 0; b < nb; ++b) {
        for (int k = blocks[b]; k < blocks[b + 1]; ++k) acc += e(k);
        s0[b] = acc;
    }
    Eigen::VectorXd diag(n);
    double a1 = 0;
    std::size_t n_event_blocks = 0;
    for (std::size_t b = nb; b-- > 0;) {
        if (events[b] > 0) {
            a1 += events[b] / s0[b];
            ++n_event_blocks;
        }
        for (int k = blocks[b]; k < blocks[b + 1]; ++k) diag(k) = e(k) * a1;
    }

    Eigen::MatrixXd means(static_cast<Eigen::Index>(n_event_blocks), k_cols);
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(k_cols);
    Eigen::Index r = 0;
    for (std::size_t b = 0; b < nb; ++b) {
        for (int k = blocks[b]; k < blocks[b + 1]; ++k) s1.noalias() += e(k) * xw.row(k).transpose();
        if (events[b] > 0) means.row(r++) = (std::sqrt(static_cast<double>(events[b])) / s0[b]) * s1.transpose();
    }

    const Eigen::MatrixXd scaled = diag.cwiseSqrt().asDiagonal() * xw;
    Eigen::MatrixXd info(k_cols, k_cols);
    info.setZero();
    info.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
    info.selfadjointView<Eigen::Lower>().rankUpdate(means.transpose(), -1.0);
    return Eigen::MatrixXd(info.selfadjointView<Eigen::Lower>());
}

// Working sets up to this size use the exact information in the quadratic
// model (proximal Newton); larger ones use the diagonal expansion in eta.
constexpr std::size_t kDenseLimit = 1000;

} // namespace

WeightedL1Result weighted_l1_fit(const CoxDesign& design,
                                 const Eigen::VectorXd& weights,
                                 const Eigen::VectorXd& warm_start,
                                 const WeightedL1Options& options)
{
    const Eigen::Index q = design.q();
    if (weights.size() != q) throw InvalidInput("penalty weights length mismatch");
    WeightedL1Result out;
    out.beta = warm_start.size() == 0 ? Eigen::VectorXd::Zero(q) : warm_start;
    if (out.beta.size() != q) throw InvalidInput("warm start length mismatch");
    if (q == 0) {
        out.loglik = design.loglik(out.beta);
        out.converged = true;
        return out;
    }

    const Eigen::MatrixXd& x = design.x();
    Eigen::VectorXd beta = out.beta;
    Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd g_eta, w;
    double loglik = design.loglik_from_eta(eta);
    const double cd_tol = std::max(options.cd_tol, 0.1 * options.kkt_tol);

    std::vector<Eigen::Index> all(q);
    for (Eigen::Index j = 0; j < q; ++j) all[j] = j;

    for (int it = 0; it < options.max_outer; ++it) {
        design.eta_derivatives(eta, g_eta, w);
        const Eigen::VectorXd gradient = x.transpose() * g_eta;
        out.kkt_residual = weighted_l1_kkt_residual(gradient, beta, weights);
        if (out.kkt_residual < options.kkt_tol) {
            out.converged = true;
            break;
        }
        ++out.iterations;

        // working set: nonzero coefficients plus coordinates violating their KKT condition
        std::vector<Eigen::Index> working;
        for (Eigen::Index j = 0; j < q; ++j) {
            if (beta(j) != 0 || std::abs(gradient(j)) > weights(j)) working.push_back(j);
        }
        Eigen::VectorXd candidate;
        if (working.size() <= kDenseLimit) {
            const Eigen::MatrixXd info = working_information(design, eta, working);
            const auto k = static_cast<Eigen::Index>(working.size());
            Eigen::VectorXd g_w(k), pen_w(k), b_w(k);
            for (Eigen::Index c = 0; c < k; ++c) {
                g_w(c) = gradient(working[c]);
                pen_w(c) = weights(working[c]);
                b_w(c) = beta(working[c]);
            }
            const Eigen::VectorXd solved = cd_quadratic(info, g_w, pen_w, b_w, cd_tol, options.max_sweeps);
            candidate = beta;
            for (Eigen::Index c = 0; c < k; ++c) candidate(working[c]) = solved(c);
        } else {
            candidate = diagonal_model_step(x, g_eta, w, weights, beta, all, cd_tol, options.max_sweeps);
        }

        // step halving on the true objective
        const double objective = -loglik + penalty_term(beta, weights);
        Eigen::VectorXd direction = candidate - beta;
        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd next_eta;
        double next_ll = 0;
        for (int h = 0; h <= 30; ++h, t *= 0.5) {
            candidate = beta + t * direction;
            next_eta = x * candidate;
            next_ll = design.loglik_from_eta(next_eta);
            const double next_obj = -next_ll + penalty_term(candidate, weights);
            if (std::isfinite(next_obj) && next_obj <= objective + 1e-12 * (1.0 + std::abs(objective))) {
                accepted = true;
                break;
            }
        }
        if (!accepted || (candidate - beta).lpNorm<Eigen::Infinity>() == 0) break;
        beta = candidate;
        eta = next_eta;
        loglik = next_ll;
    }
    if (!out.converged) {
        design.eta_derivatives(eta, g_eta, w);
        out.kkt_residual = weighted_l1_kkt_residual(x.transpose() * g_eta, beta, weights);
        out.converged = out.kkt_residual < options.kkt_tol;
    }
    out.beta = beta;
    out.loglik = loglik;
    return out;
}

namespace {

PenalizedFit make_penalized_fit(const CoxDesign& design,
                                Eigen::VectorXd beta,
                                Eigen::VectorXd weights,
                                double lambda,
                                double zero_snap)
{
    PenalizedFit fit;
    fit.covariate_indices = design.subset();
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (std::abs(beta(j)) < zero_snap) beta(j) = 0;
        if (beta(j) != 0) fit.active_set.push_back(design.subset()[j]);
    }
    std::sort(fit.active_set.begin(), fit.active_set.end());
    fit.loglik = design.loglik(beta);
    fit.beta = std::move(beta);
    fit.penalty_weights = std::move(weights);
    fit.lambda = lambda;
    fit.bic = -2.0 * fit.loglik +
              static_cast<double>(fit.active_set.size()) * std::log(static_cast<double>(design.n()));
    return fit;
}

} // namespace

Eigen::VectorXd lla_initial_point(const CoxDesign& design)
{
    const Eigen::Index q = design.q();
    if (q > 0 && 2 * q < design.n()) {
        try {
            CoxFit mle = newton_fit(design);
            if (mle.converged && mle.beta.allFinite()) return mle.beta;
        } catch (const FitError&) {
        }
    }
    return Eigen::VectorXd::Zero(q);
}

PenalizedFit lla_fit(const CoxDesign& design,
                     const ScadSpec& spec,
                     const Eigen::VectorXd& init,
                     const Eigen::VectorXd& warm_start,
                     const LlaOptions& options)
{
    spec.validate();
    const Eigen::Index q = design.q();
    Eigen::VectorXd current = init.size() == 0 ? Eigen::VectorXd::Zero(q) : init;
    if (current.size() != q) throw InvalidInput("LLA initial point length mismatch");
    Eigen::VectorXd warm = warm_start.size() == q ? warm_start : current;
    // the penalty enters as n * sum_j p_lambda(|beta_j|) against the summed log partial likelihood
    const double scale = static_cast<double>(design.n());
    Eigen::VectorXd weights = Eigen::VectorXd::Constant(q, scale * spec.lambda);

    bool converged = q == 0;
    bool inner_ok = true;
    int iterations = 0;
    for (int it = 0; it < options.max_iter && q > 0; ++it) {
        for (Eigen::Index j = 0; j < q; ++j) weights(j) = scale * scad_derivative(std::abs(current(j)), spec);
        const auto solved = weighted_l1_fit(design, weights, warm, options.inner);
        inner_ok = solved.converged;
        ++iterations;
        const double diff = (solved.beta - current).lpNorm<Eigen::Infinity>();
        current = solved.beta;
        warm = solved.beta;
        if (diff < options.tol) {
            converged = true;
            break;
        }
    }
    auto fit = make_penalized_fit(design, current, weights, spec.lambda, options.zero_snap);
    fit.converged = converged && inner_ok;
    fit.iterations = iterations;
    return fit;
}

PenalizedFit lla_fit(const SurvivalDataset& data,
                     std::span<const int> subset,
                     const ScadSpec& spec,
                     const Eigen::VectorXd& init,
                     const LlaOptions& options)
{
    const CoxDesign design(data, subset);
    const Eigen::VectorXd start = init.size() == 0 ? lla_initial_point(design) : init;
    return lla_fit(design, spec, start, {}, options);
}

std::vector<double> make_lambda_grid(const CoxDesign& design, int n_lambda, double ratio)
{
    if (n_lambda < 1) throw InvalidInput("n_lambda must be at least 1");
    if (!(ratio > 0 && ratio < 1)) throw InvalidInput("lambda ratio must lie in (0, 1)");
    if (design.q() == 0) throw InvalidInput("empty subset has no lambda grid");
    const auto d = design.derivatives(Eigen::VectorXd::Zero(design.q()), 1);
    const double lambda_max = d.gradient.lpNorm<Eigen::Infinity>() / static_cast<double>(design.n());
    if (!(lambda_max > 1e-15)) throw InvalidInput("zero gradient at 0: no lambda grid");
    std::vector<double> grid(n_lambda);
    for (int i = 0; i < n_lambda; ++i) {
        const double frac = n_lambda == 1 ? 0.0 : static_cast<double>(i) / (n_lambda - 1);
        grid[i] = lambda_max * std::pow(ratio, frac);
    }
    return grid;
}

std::vector<double> make_lambda_grid(const SurvivalDataset& data,
                                     std::span<const int> subset,
                                     int n_lambda,
                                     double ratio)
{
    return make_lambda_grid(CoxDesign(data, subset), n_lambda, ratio);
}

namespace {

void check_grid(const std::vector<double>& grid)
{
    if (grid.empty()) throw InvalidInput("empty lambda grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0)) throw InvalidInput("lambda grid values must be positive");
        if (i > 0 && !(grid[i] < grid[i - 1])) throw InvalidInput("lambda grid must be strictly decreasing");
    }
}

} // namespace

LambdaPath scad_path_fit(const SurvivalDataset& data,
                         std::span<const int> subset,
                         const std::vector<double>& grid,
                         double a,
                         const LlaOptions& options)
{
    check_grid(grid);
    const CoxDesign design(data, subset);
    const Eigen::VectorXd init = lla_initial_point(design);
    LambdaPath path;
    path.grid = grid;
    Eigen::VectorXd warm = init;
    for (double lambda : grid) {
        auto fit = lla_fit(design, ScadSpec{lambda, a}, init, warm, options);
        warm = fit.beta;
        path.fits.push_back(std::move(fit));
    }
    path.selected_index = bic_select_index(path, data.n());
    return path;
}

LambdaPath lasso_path_fit(const SurvivalDataset& data,
                          std::span<const int> subset,
                          const std::vector<double>& grid,
                          const WeightedL1Options& options)
{
    check_grid(grid);
    const CoxDesign design(data, subset);
    LambdaPath path;
    path.grid = grid;
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(design.q());
    for (double lambda : grid) {
        Eigen::VectorXd weights = Eigen::VectorXd::Constant(design.q(), static_cast<double>(design.n()) * lambda);
        const auto solved = weighted_l1_fit(design, weights, warm, options);
        auto fit = make_penalized_fit(design, solved.beta, weights, lambda, 1e-12);
        fit.converged = solved.converged;
        fit.iterations = solved.iterations;
        warm = fit.beta;
        path.fits.push_back(std::move(fit));
    }
    path.selected_index = bic_select_index(path, data.n());
    return path;
}

std::size_t bic_select_index(const LambdaPath& path, std::size_t n_effective)
{
    if (path.fits.empty()) throw InvalidInput("empty lambda path");
    const double log_n = std::log(static_cast<double>(n_effective));
    std::size_t best = 0;
    double best_bic = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < path.fits.size(); ++i) {
        const auto& fit = path.fits[i];
        const double bic = -2.0 * fit.loglik + static_cast<double>(fit.active_set.size()) * log_n;
        if (i == 0 || bic < best_bic - 1e-12 * std::max(1.0, std::abs(best_bic))) {
            best = i;
            best_bic = bic;
        }
    }
    return best;
}

const PenalizedFit& bic_select(const LambdaPath& path, std::size_t n_effective)
{
    return path.fits[bic_select_index(path, n_effective)];
}

LambdaPath cv_lasso(const SurvivalDataset& data,
                    std::span<const int> subset,
                    const std::vector<double>& grid,
                    int folds,
                    std::uint64_t seed,
                    std::vector<double>* cv_loss)
{
    if (folds < 2) throw InvalidInput("cross-validation needs at least 2 folds");
    check_grid(grid);
    const int n = static_cast<int>(data.n());
    auto rng = make_stream(seed, 0, StreamPurpose::cv_folds);
    const auto perm = random_permutation(rng, n);
    std::vector<int> fold_of(n);
    for (int i = 0; i < n; ++i) fold_of[perm[i]] = i % folds;

    std::vector<double> loss(grid.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        std::vector<int> train, valid;
        for (int i = 0; i < n; ++i) (fold_of[i] == f ? valid : train).push_back(i);
        SurvivalDataset train_data, valid_data;
        try {
            train_data = data.subset_rows(train);
            valid_data = data.subset_rows(valid);
        } catch (const InvalidInput&) {
            continue;   // a fold without events carries no partial likelihood
        }
        const auto path = lasso_path_fit(train_data, subset, grid);
        const CoxDesign valid_design(valid_data, subset);
        for (std::size_t i = 0; i < grid.size(); ++i) loss[i] -= valid_design.loglik(path.fits[i].beta);
    }

    auto path = lasso_path_fit(data, subset, grid);
    std::size_t best = 0;
    for (std::size_t i = 1; i < loss.size(); ++i) {
        if (loss[i] < loss[best] - 1e-12 * std::max(1.0, std::abs(loss[best]))) best = i;
    }
    path.selected_index = best;
    if (cv_loss) *cv_loss = loss;
    return path;
}

} // namespace coxscreen
