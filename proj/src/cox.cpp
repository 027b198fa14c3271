#include "coxscreen/cox.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace coxscreen {

CoxDesign::CoxDesign(const SurvivalDataset& data, std::span<const int> subset)
    : subset_(subset.begin(), subset.end())
{
    data.check_subset(subset);
    const auto n = static_cast<Eigen::Index>(data.n());
    const auto q = static_cast<Eigen::Index>(subset_.size());
    const auto& order = data.sort_order();
    const auto& raw = data.covariates();

    x_.resize(n, q);
    delta_.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) delta_(k) = data.status()[order[k]];
    n_events_ = data.n_events();

    info_scale_.resize(q);
    for (Eigen::Index j = 0; j < q; ++j) {
        const auto src = raw.col(subset_[j]);
        info_scale_(j) = static_cast<double>(n_events_) * src.squaredNorm() / static_cast<double>(n);
        auto dst = x_.col(j);
        if (src.maxCoeff() == src.minCoeff()) {
            dst.setZero();
            continue;
        }
        const double mean = src.mean();
        for (Eigen::Index k = 0; k < n; ++k) dst(k) = src(order[k]) - mean;
    }

    blocks_ = data.tie_blocks();
    block_events_.assign(blocks_.size() - 1, 0);
    for (std::size_t b = 0; b + 1 < blocks_.size(); ++b) {
        for (int k = blocks_[b]; k < blocks_[b + 1]; ++k) block_events_[b] += static_cast<int>(delta_(k));
    }
    event_x_sum_ = x_.transpose() * delta_;
}

double CoxDesign::loglik_from_eta(const Eigen::VectorXd& eta) const
{
    const double m = eta.maxCoeff();
    double s0 = 0;
    double ll = delta_.dot(eta);
    for (std::size_t b = 0; b + 1 < blocks_.size(); ++b) {
        for (int k = blocks_[b]; k < blocks_[b + 1]; ++k) s0 += std::exp(eta(k) - m);
        if (block_events_[b] > 0) ll -= block_events_[b] * (std::log(s0) + m);
    }
    return ll;
}

double CoxDesign::loglik(const Eigen::VectorXd& beta) const
{
    if (q() == 0) return loglik_from_eta(Eigen::VectorXd::Zero(n()));
    return loglik_from_eta(x_ * beta);
}

CoxDerivatives CoxDesign::derivatives(const Eigen::VectorXd& beta, int order) const
{
    const Eigen::Index q = this->q();
    const Eigen::VectorXd eta = q > 0 ? Eigen::VectorXd(x_ * beta) : Eigen::VectorXd::Zero(n());
    const double m = eta.maxCoeff();

    CoxDerivatives out;
    out.loglik = delta_.dot(eta);
    if (order >= 1) out.gradient = event_x_sum_;
    if (order >= 2) out.hessian = Eigen::MatrixXd::Zero(q, q);

    double s0 = 0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(q);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(q, q);
    Eigen::VectorXd mu(q);
    Eigen::VectorXd row(q);

    for (std::size_t b = 0; b + 1 < blocks_.size(); ++b) {
        for (int k = blocks_[b]; k < blocks_[b + 1]; ++k) {
            const double e = std::exp(eta(k) - m);
            s0 += e;
            if (order >= 1) {
                row = x_.row(k).transpose();
                s1.noalias() += e * row;
                if (order >= 2) s2.selfadjointView<Eigen::Lower>().rankUpdate(row, e);
            }
        }
        const int d = block_events_[b];
        if (d == 0) continue;
        out.loglik -= d * (std::log(s0) + m);
        if (order >= 1) {
            mu = s1 / s0;
            out.gradient.noalias() -= d * mu;
            if (order >= 2) {
                out.hessian.triangularView<Eigen::Lower>() -=
                    (d / s0) * s2 - (static_cast<double>(d) * mu) * mu.transpose();
            }
        }
    }
    if (order >= 2) {
        out.hessian = Eigen::MatrixXd(out.hessian.selfadjointView<Eigen::Lower>());
    }
    return out;
}

void CoxDesign::eta_derivatives(const Eigen::VectorXd& eta,
                                Eigen::VectorXd& grad,
                                Eigen::VectorXd& weight) const
{
    const Eigen::Index n = this->n();
    const double m = eta.maxCoeff();
    const Eigen::VectorXd e = (eta.array() - m).exp();

    // risk-set sums per block, then accumulate event contributions from the
    // smallest time upward: observation k is at risk for every event at or
    // before its own time.
    const std::size_t nb = blocks_.size() - 1;
    std::vector<double> s0(nb);
    double acc = 0;
    for (std::size_t b = 0; b < nb; ++b) {
        for (int k = blocks_[b]; k < blocks_[b + 1]; ++k) acc += e(k);
        s0[b] = acc;
    }
    grad.resize(n);
    weight.resize(n);
    double a1 = 0;
    double a2 = 0;
    for (std::size_t bb = nb; bb-- > 0;) {
        const int d = block_events_[bb];
        if (d > 0) {
            a1 += d / s0[bb];
            a2 += d / (s0[bb] * s0[bb]);
        }
        for (int k = blocks_[bb]; k < blocks_[bb + 1]; ++k) {
            grad(k) = delta_(k) - e(k) * a1;
            weight(k) = std::max(0.0, e(k) * a1 - e(k) * e(k) * a2);
        }
    }
}

bool CoxDesign::is_singular(const Eigen::MatrixXd& information) const
{
    const Eigen::Index q = information.rows();
    if (q == 0) return false;
    Eigen::VectorXd inv_sd(q);
    for (Eigen::Index j = 0; j < q; ++j) {
        const double d = information(j, j);
        if (!(d > 1e-10 * info_scale_(j)) || !(d > 0)) return true;
        inv_sd(j) = 1.0 / std::sqrt(d);
    }
    const Eigen::MatrixXd corr = inv_sd.asDiagonal() * information * inv_sd.asDiagonal();
    if (!corr.allFinite()) return true;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr, Eigen::EigenvaluesOnly);
    return eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < 1e-10;
}

namespace {

void check_beta(const Eigen::VectorXd& beta, std::span<const int> subset)
{
    if (beta.size() != static_cast<Eigen::Index>(subset.size())) {
        throw InvalidInput("beta length " + std::to_string(beta.size()) +
                           " does not match subset size " + std::to_string(subset.size()));
    }
    if (!beta.allFinite()) throw InvalidInput("non-finite beta");
}

Eigen::VectorXd standard_errors(const CoxDesign& design, const Eigen::MatrixXd& information)
{
    const Eigen::Index q = information.rows();
    Eigen::VectorXd se = Eigen::VectorXd::Constant(q, std::numeric_limits<double>::quiet_NaN());
    if (design.is_singular(information)) return se;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(q, q));
    for (Eigen::Index j = 0; j < q; ++j) {
        if (inv(j, j) > 0) se(j) = std::sqrt(inv(j, j));
    }
    return se;
}

} // namespace

double partial_loglik(const SurvivalDataset& data,
                      const Eigen::VectorXd& beta,
                      std::span<const int> subset)
{
    data.check_subset(subset);
    check_beta(beta, subset);
    return CoxDesign(data, subset).loglik(beta);
}

Eigen::VectorXd partial_loglik_grad(const SurvivalDataset& data,
                                    const Eigen::VectorXd& beta,
                                    std::span<const int> subset)
{
    data.check_subset(subset);
    check_beta(beta, subset);
    return CoxDesign(data, subset).derivatives(beta, 1).gradient;
}

Eigen::MatrixXd partial_loglik_hessian(const SurvivalDataset& data,
                                       const Eigen::VectorXd& beta,
                                       std::span<const int> subset)
{
    data.check_subset(subset);
    check_beta(beta, subset);
    return CoxDesign(data, subset).derivatives(beta, 2).hessian;
}

CoxFit newton_fit(const SurvivalDataset& data,
                  std::span<const int> subset,
                  const Eigen::VectorXd& init,
                  const NewtonOptions& options)
{
    if (subset.empty()) throw InvalidInput("newton_fit requires a nonempty subset");
    return newton_fit(CoxDesign(data, subset), init, options);
}

CoxFit newton_fit(const CoxDesign& design,
                  const Eigen::VectorXd& init,
                  const NewtonOptions& options)
{
    const Eigen::Index q = design.q();
    if (q == 0) throw InvalidInput("newton_fit requires a nonempty subset");
    Eigen::VectorXd beta = init.size() == 0 ? Eigen::VectorXd::Zero(q) : init;
    check_beta(beta, design.subset());

    CoxFit fit;
    fit.covariate_indices = design.subset();

    auto d = design.derivatives(beta, 2);
    Eigen::MatrixXd info = -d.hessian;
    if (design.is_singular(info)) throw FitError("singular information");

    for (int it = 0; it < options.max_iter; ++it) {
        if (d.gradient.lpNorm<Eigen::Infinity>() < options.tol) {
            fit.converged = true;
            break;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        const Eigen::VectorXd step = ldlt.solve(d.gradient);
        if (!step.allFinite()) break;

        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd candidate;
        double ll = 0;
        for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
            candidate = beta + t * step;
            ll = design.loglik(candidate);
            if (std::isfinite(ll) && ll >= d.loglik - 1e-13 * (1.0 + std::abs(d.loglik))) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // no ascent along the Newton direction: numerical optimum
            fit.converged = d.gradient.lpNorm<Eigen::Infinity>() < std::sqrt(options.tol);
            break;
        }
        ++fit.iterations;
        const double previous = d.loglik;
        const double step_size = t * step.lpNorm<Eigen::Infinity>();
        beta = candidate;
        d = design.derivatives(beta, 2);
        info = -d.hessian;

        if (d.gradient.lpNorm<Eigen::Infinity>() < options.tol) {
            fit.converged = true;
            break;
        }
        const double rel = std::abs(d.loglik - previous) / std::max(std::abs(previous), 1e-300);
        if (rel < options.rel_loglik_tol && step_size < 1e-4 * (1.0 + beta.lpNorm<Eigen::Infinity>())) {
            fit.converged = true;
            break;
        }
        if (design.is_singular(info)) break;   // information vanished along the path
    }

    fit.beta = beta;
    fit.loglik = d.loglik;
    fit.std_errors = standard_errors(design, info);
    return fit;
}

BaselineHazard breslow_baseline(const SurvivalDataset& data,
                                std::span<const int> subset,
                                const Eigen::VectorXd& beta)
{
    data.check_subset(subset);
    check_beta(beta, subset);
    const auto n = static_cast<Eigen::Index>(data.n());
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
    for (std::size_t j = 0; j < subset.size(); ++j) eta += beta(j) * data.covariates().col(subset[j]);

    const auto& order = data.sort_order();
    const auto& blocks = data.tie_blocks();
    BaselineHazard out;
    double s0 = 0;
    for (std::size_t b = 0; b + 1 < blocks.size(); ++b) {
        int d = 0;
        for (int k = blocks[b]; k < blocks[b + 1]; ++k) {
            s0 += std::exp(eta(order[k]));
            d += data.status()[order[k]];
        }
        if (d > 0) {
            out.event_times.push_back(data.times()(order[blocks[b]]));
            out.jumps.push_back(d / s0);
        }
    }
    std::reverse(out.event_times.begin(), out.event_times.end());
    std::reverse(out.jumps.begin(), out.jumps.end());
    out.cumulative.resize(out.jumps.size());
    double cum = 0;
    for (std::size_t j = 0; j < out.jumps.size(); ++j) {
        cum += out.jumps[j];
        out.cumulative[j] = cum;
    }
    return out;
}

BaselineHazard breslow_baseline(const SurvivalDataset& data, const CoxFit& fit)
{
    return breslow_baseline(data, fit.covariate_indices, fit.beta);
}

Eigen::VectorXd t_statistics(const CoxFit& fit)
{
    if (fit.std_errors.size() != fit.beta.size()) throw InvalidInput("standard errors unavailable");
    Eigen::VectorXd t(fit.beta.size());
    for (Eigen::Index j = 0; j < t.size(); ++j) {
        const double se = fit.std_errors(j);
        if (!std::isfinite(se) || se <= 0) throw InvalidInput("zero standard error");
        t(j) = fit.beta(j) / se;
    }
    return t;
}

} // namespace coxscreen
