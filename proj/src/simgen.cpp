#include "coxscreen/simgen.hpp"

#include "coxscreen/random.hpp"

#include <cmath>
#include <random>

namespace coxscreen {

namespace {

constexpr double kCase1Beta[] = {-1.6328, 1.3988, -1.6497, 1.6353, -1.4209, 1.7022};
constexpr double kCase5Beta[] = {-1.5140, 1.2799, -1.5307, 1.5164, -1.3020, 1.5833};

void check_case(int case_id)
{
    if (case_id < 1 || case_id > 6) throw InvalidInput("invalid case " + std::to_string(case_id) + " (expected 1..6)");
}

int support_size(int case_id)
{
    switch (case_id) {
    case 3: return 4;
    case 4:
    case 6: return 5;
    default: return 6;
    }
}

} // namespace

Eigen::VectorXd true_beta(int case_id, int p)
{
    check_case(case_id);
    if (p < support_size(case_id)) throw InvalidInput("p too small for the case's true support");
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    switch (case_id) {
    case 1:
    case 2:
        for (int j = 0; j < 6; ++j) beta(j) = kCase1Beta[j];
        break;
    case 5:
        for (int j = 0; j < 6; ++j) beta(j) = kCase5Beta[j];
        break;
    case 3:
    case 4:
    case 6:
        beta(0) = beta(1) = beta(2) = 4.0;
        beta(3) = -6.0 * std::sqrt(2.0);
        if (case_id != 3) beta(4) = 4.0 / 3.0;
        break;
    }
    return beta;
}

Eigen::VectorXd true_beta(int case_id)
{
    return true_beta(case_id, make_case(case_id).p);
}

SimulationCase make_case(int case_id)
{
    check_case(case_id);
    const bool large = case_id >= 5;
    return make_case(case_id, large ? 400 : 300, large ? 1000 : 400);
}

SimulationCase make_case(int case_id, int n, int p)
{
    check_case(case_id);
    if (n < 2) throw InvalidInput("n must be at least 2");
    SimulationCase sim;
    sim.case_id = case_id;
    sim.n = n;
    sim.p = p;
    switch (case_id) {
    case 1: sim.covariance = CovarianceKind::independent; break;
    case 2:
    case 5:
        sim.covariance = CovarianceKind::equicorrelated;
        sim.rho = 0.5;
        break;
    case 3: sim.covariance = CovarianceKind::hub_case3; break;
    default: sim.covariance = CovarianceKind::hub_case4; break;
    }
    sim.true_beta = true_beta(case_id, p);
    return sim;
}

Eigen::VectorXd random_beta(int n, int p, std::uint64_t seed, std::uint32_t rep)
{
    if (p < 6) throw InvalidInput("p too small for six random coefficients");
    auto rng = make_stream(seed, rep, StreamPurpose::coefficients);
    std::normal_distribution<double> normal;
    const double base = 4.0 * std::log(static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < 6; ++j) {
        const double z = normal(rng);
        const double sign = (rng() & 1u) ? 1.0 : -1.0;
        beta(j) = (base + std::abs(z) / 4.0) * sign;
    }
    return beta;
}

Eigen::MatrixXd FactorLoadings::covariance() const
{
    Eigen::MatrixXd cov = common * common.transpose();
    cov.diagonal() += own.array().square().matrix();
    return cov;
}

FactorLoadings factor_loadings(const SimulationCase& sim)
{
    FactorLoadings f;
    f.common = Eigen::VectorXd::Zero(sim.p);
    f.own = Eigen::VectorXd::Ones(sim.p);
    const double half = std::sqrt(0.5);
    switch (sim.covariance) {
    case CovarianceKind::independent: break;
    case CovarianceKind::equicorrelated:
        f.common.setConstant(std::sqrt(sim.rho));
        f.own.setConstant(std::sqrt(1.0 - sim.rho));
        break;
    case CovarianceKind::hub_case3:
    case CovarianceKind::hub_case4:
        f.common.setConstant(half);
        f.own.setConstant(half);
        // X4 is the hub itself
        f.common(3) = 1.0;
        f.own(3) = 0.0;
        if (sim.covariance == CovarianceKind::hub_case4) {
            // X5 is independent of everything else
            f.common(4) = 0.0;
            f.own(4) = 1.0;
        }
        break;
    }
    return f;
}

Eigen::MatrixXd gen_covariates(const SimulationCase& sim, std::uint64_t seed, std::uint32_t rep)
{
    const FactorLoadings f = factor_loadings(sim);
    auto rng = make_stream(seed, rep, StreamPurpose::covariates);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(sim.n, sim.p);
    for (int i = 0; i < sim.n; ++i) {
        const double z0 = normal(rng);
        for (int j = 0; j < sim.p; ++j) x(i, j) = f.common(j) * z0 + f.own(j) * normal(rng);
    }
    return x;
}

GeneratedSample gen_survival(const Eigen::MatrixXd& covariates,
                             const Eigen::VectorXd& beta_star,
                             double baseline_rate,
                             double censor_mean,
                             std::uint64_t seed,
                             std::uint32_t rep)
{
    if (!(baseline_rate > 0)) throw InvalidInput("baseline rate must be positive");
    if (!(censor_mean > 0)) throw InvalidInput("censoring mean must be positive");
    if (beta_star.size() != covariates.cols()) throw InvalidInput("beta_star length does not match covariates");
    const Eigen::Index n = covariates.rows();
    const Eigen::VectorXd eta = covariates * beta_star;

    auto event_rng = make_stream(seed, rep, StreamPurpose::event_times);
    auto censor_rng = make_stream(seed, rep, StreamPurpose::censor_times);
    std::exponential_distribution<double> unit_exp(1.0);

    GeneratedSample out;
    out.latent_event_times.resize(n);
    out.latent_censor_times.resize(n);
    Eigen::VectorXd y(n);
    std::vector<int> status(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = unit_exp(event_rng) / (baseline_rate * std::exp(eta(i)));
        const double c = censor_mean * unit_exp(censor_rng);
        out.latent_event_times(i) = t;
        out.latent_censor_times(i) = c;
        status[i] = t <= c ? 1 : 0;
        y(i) = std::min(t, c);
    }
    out.dataset = SurvivalDataset(covariates, std::move(y), std::move(status));
    out.beta_star = beta_star;
    for (Eigen::Index j = 0; j < beta_star.size(); ++j) {
        if (beta_star(j) != 0) out.truth.push_back(static_cast<int>(j));
    }
    return out;
}

GeneratedSample gen_case(const SimulationCase& sim, std::uint64_t seed, std::uint32_t rep)
{
    const Eigen::MatrixXd x = gen_covariates(sim, seed, rep);
    return gen_survival(x, sim.true_beta, sim.baseline_rate, sim.censor_mean, seed, rep);
}

GeneratedSample gen_case(int case_id, std::uint64_t seed, std::uint32_t rep)
{
    return gen_case(make_case(case_id), seed, rep);
}

} // namespace coxscreen
