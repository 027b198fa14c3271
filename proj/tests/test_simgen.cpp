#include "coxscreen/serialize.hpp"
#include "coxscreen/simgen.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace coxscreen;

namespace {

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const Eigen::ArrayXd ca = a.array() - a.mean();
    const Eigen::ArrayXd cb = b.array() - b.mean();
    return (ca * cb).sum() / std::sqrt(ca.square().sum() * cb.square().sum());
}

double variance(const Eigen::VectorXd& a)
{
    return (a.array() - a.mean()).square().sum() / (a.size() - 1);
}

} // namespace

TEST_CASE("catalog dimensions and designs")
{
    for (int c = 1; c <= 4; ++c) {
        const auto sim = make_case(c);
        CHECK(sim.case_id == c);
        CHECK(sim.n == 300);
        CHECK(sim.p == 400);
        CHECK(sim.baseline_rate == 0.1);
        CHECK(sim.censor_mean == 10.0);
    }
    CHECK(make_case(5).n == 400);
    CHECK(make_case(5).p == 1000);
    CHECK(make_case(6).n == 400);
    CHECK(make_case(6).p == 1000);
    CHECK(make_case(1).covariance == CovarianceKind::independent);
    CHECK(make_case(2).covariance == CovarianceKind::equicorrelated);
    CHECK(make_case(2).rho == 0.5);
    CHECK(make_case(5).covariance == CovarianceKind::equicorrelated);
    CHECK(make_case(3).covariance == CovarianceKind::hub_case3);
    CHECK(make_case(4).covariance == CovarianceKind::hub_case4);
    CHECK(make_case(6).covariance == CovarianceKind::hub_case4);
    CHECK_THROWS_AS(make_case(0), InvalidInput);
    CHECK_THROWS_AS(make_case(7), InvalidInput);
    CHECK_THROWS_AS(make_case(4, 100, 4), InvalidInput);
    CHECK_THROWS_AS(gen_case(9, 1), InvalidInput);
}

TEST_CASE("fixed coefficient vectors")
{
    const auto b1 = true_beta(1);
    CHECK(b1.size() == 400);
    const double case1[] = {-1.6328, 1.3988, -1.6497, 1.6353, -1.4209, 1.7022};
    for (int j = 0; j < 6; ++j) CHECK(b1(j) == case1[j]);
    CHECK(b1.tail(394).cwiseAbs().maxCoeff() == 0.0);
    CHECK(true_beta(2) == b1);

    const auto b5 = true_beta(5);
    CHECK(b5.size() == 1000);
    const double case5[] = {-1.5140, 1.2799, -1.5307, 1.5164, -1.3020, 1.5833};
    for (int j = 0; j < 6; ++j) CHECK(b5(j) == case5[j]);
    CHECK(b5.tail(994).cwiseAbs().maxCoeff() == 0.0);

    const auto b3 = true_beta(3);
    CHECK(b3.head(4) == Eigen::Vector4d(4, 4, 4, -6 * std::sqrt(2.0)));
    CHECK(b3.tail(396).cwiseAbs().maxCoeff() == 0.0);
    const auto b4 = true_beta(4);
    CHECK(b4(4) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(b4.tail(395).cwiseAbs().maxCoeff() == 0.0);
    CHECK(true_beta(6).head(5) == b4.head(5));
    CHECK(true_beta(6).size() == 1000);
}

TEST_CASE("factor construction implies the catalog correlations exactly")
{
    const double r = 1 / std::sqrt(2.0);
    // small-p designs expand every factor covariance entry
    {
        const auto cov = factor_loadings(make_case(2, 50, 8)).covariance();
        for (int i = 0; i < 8; ++i) {
            for (int j = 0; j < 8; ++j) CHECK(cov(i, j) == doctest::Approx(i == j ? 1.0 : 0.5).epsilon(1e-15));
        }
    }
    {
        const auto cov = factor_loadings(make_case(1, 50, 8)).covariance();
        CHECK((cov - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() == 0.0);
    }
    {
        const auto cov = factor_loadings(make_case(3, 50, 8)).covariance();
        for (int i = 0; i < 8; ++i) {
            CHECK(cov(i, i) == doctest::Approx(1.0).epsilon(1e-15));
            if (i != 3) CHECK(cov(i, 3) == doctest::Approx(r).epsilon(1e-15));
            for (int j = 0; j < 8; ++j) {
                if (i != j && i != 3 && j != 3) CHECK(cov(i, j) == doctest::Approx(0.5).epsilon(1e-15));
            }
        }
    }
    {
        const auto cov = factor_loadings(make_case(4, 50, 8)).covariance();
        for (int i = 0; i < 8; ++i) {
            CHECK(cov(i, i) == doctest::Approx(1.0).epsilon(1e-15));
            if (i != 4) CHECK(cov(i, 4) == 0.0);
            if (i != 3 && i != 4) CHECK(cov(i, 3) == doctest::Approx(r).epsilon(1e-15));
        }
    }
}

TEST_CASE("the hub covariate is uncorrelated with the linear predictor")
{
    for (int c : {3, 4, 6}) {
        const auto sim = make_case(c);
        const auto cov = factor_loadings(sim).covariance();
        // cov(X4, x' beta) = sum_j cov(X4, X_j) beta_j
        CHECK(std::abs(cov.row(3).dot(sim.true_beta)) < 1e-12);
    }
    auto sim = make_case(3, 10000, 10);
    const auto x = gen_covariates(sim, 123);
    const Eigen::VectorXd eta = x * sim.true_beta;
    CHECK(std::abs(correlation(x.col(3), eta)) < 0.03);
}

TEST_CASE("empirical correlations and variances at large n")
{
    const auto eq = gen_covariates(make_case(2, 10000, 6), 5);
    CHECK(std::abs(correlation(eq.col(0), eq.col(1)) - 0.5) < 0.02);
    const auto hub = gen_covariates(make_case(3, 10000, 8), 6);
    for (int i : {0, 1, 2, 4, 7}) CHECK(std::abs(correlation(hub.col(i), hub.col(3)) - 1 / std::sqrt(2.0)) < 0.02);
    const auto hub4 = gen_covariates(make_case(4, 10000, 8), 7);
    for (int i : {0, 3, 6}) CHECK(std::abs(correlation(hub4.col(i), hub4.col(4))) < 0.03);
    for (const auto* x : {&eq, &hub, &hub4}) {
        for (Eigen::Index j = 0; j < x->cols(); ++j) CHECK(std::abs(variance(x->col(j)) - 1.0) < 0.05);
    }
}

TEST_CASE("survival law with a null predictor")
{
    const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10000, 1);
    const auto s = gen_survival(x, Eigen::VectorXd::Zero(1), 0.1, 10.0, 8);
    CHECK(std::abs(s.latent_event_times.mean() - 10.0) < 0.3);
    CHECK(std::abs(s.latent_censor_times.mean() - 10.0) < 0.3);
    const double censored = 1.0 - static_cast<double>(s.dataset.n_events()) / 10000.0;
    CHECK(std::abs(censored - 0.5) < 0.02);
    CHECK(s.truth.empty());
}

TEST_CASE("observed data are the minimum of independent latent times")
{
    const auto sample = gen_case(1, 9, 3);
    const auto& d = sample.dataset;
    for (std::size_t i = 0; i < d.n(); ++i) {
        const double t = sample.latent_event_times(i), c = sample.latent_censor_times(i);
        CHECK(d.times()(i) == std::min(t, c));
        CHECK(d.status()[i] == (t <= c ? 1 : 0));
    }
    CHECK(sample.truth == IndexSet{0, 1, 2, 3, 4, 5});
    CHECK(sample.beta_star == true_beta(1));

    // censoring latents do not depend on the covariates, event latents do
    const auto big = gen_case(make_case(1, 5000, 6), 10);
    const Eigen::VectorXd eta = big.dataset.covariates() * big.beta_star;
    const Eigen::VectorXd log_c = big.latent_censor_times.array().log();
    const Eigen::VectorXd log_t = big.latent_event_times.array().log();
    CHECK(std::abs(correlation(log_c, eta)) < 0.05);
    CHECK(correlation(log_t, eta) < -0.5);
    // given eta, the residual log event time is uncorrelated with the censoring time
    const Eigen::VectorXd resid = log_t + eta;
    CHECK(std::abs(correlation(resid, log_c)) < 0.05);
}

TEST_CASE("censoring under the symmetric design is one half")
{
    // x' beta is symmetric about 0 with independent exponential censoring at rate 0.1,
    // so P(C < T) = E[1 / (1 + exp(eta))] = 1/2
    double total = 0;
    int count = 0;
    for (std::uint32_t rep = 0; rep < 20; ++rep) {
        const auto s = gen_case(1, 11, rep);
        total += 1.0 - static_cast<double>(s.dataset.n_events()) / s.dataset.n();
        ++count;
    }
    CHECK(std::abs(total / count - 0.5) < 0.03);
}

TEST_CASE("generation is deterministic per seed and repetition")
{
    const auto a = gen_case(4, 77, 2);
    const auto b = gen_case(4, 77, 2);
    CHECK(a.dataset.covariates() == b.dataset.covariates());
    CHECK(a.dataset.times() == b.dataset.times());
    CHECK(a.dataset.status() == b.dataset.status());
    const auto c = gen_case(4, 77, 3);
    CHECK(a.dataset.covariates() != c.dataset.covariates());
    const auto d = gen_case(4, 78, 2);
    CHECK(a.dataset.times() != d.dataset.times());
    CHECK(gen_case(5, 1).dataset.p() == 1000);
    CHECK(gen_case(5, 1).dataset.n() == 400);
}

TEST_CASE("fresh coefficient draws")
{
    const auto b = random_beta(300, 400, 5, 1);
    CHECK(b.size() == 400);
    const double base = 4 * std::log(300.0) / std::sqrt(300.0);
    for (int j = 0; j < 6; ++j) CHECK(std::abs(b(j)) >= base);
    CHECK(b.tail(394).cwiseAbs().maxCoeff() == 0.0);
    CHECK(random_beta(300, 400, 5, 1) == b);
    CHECK(random_beta(300, 400, 5, 2) != b);
    int positive = 0;
    for (std::uint32_t rep = 0; rep < 50; ++rep) {
        const auto r = random_beta(300, 400, 5, rep);
        for (int j = 0; j < 6; ++j) positive += r(j) > 0;
    }
    CHECK(positive > 100);
    CHECK(positive < 200);
    CHECK_THROWS_AS(random_beta(300, 5, 1), InvalidInput);
}

TEST_CASE("case definitions round-trip through JSON")
{
    const CaseSpec spec{3, 250, 320, 18446744073709551615ull};
    const auto back = case_spec_from_json(case_spec_to_json(spec));
    CHECK(back.case_id == 3);
    CHECK(back.n == 250);
    CHECK(back.p == 320);
    CHECK(back.seed == spec.seed);
    CHECK_THROWS_WITH_AS(case_spec_from_json(R"({"case_id": 1, "n": 300, "p": 400})"), "/seed: missing", InvalidInput);
    CHECK_THROWS_WITH_AS(case_spec_from_json(R"({"case_id": 8, "n": 300, "p": 400, "seed": 1})"),
                         "/case_id: value out of range", InvalidInput);
    CHECK_THROWS_WITH_AS(case_spec_from_json(R"({"case_id": 1, "n": 3.5, "p": 400, "seed": 1})"),
                         "/n: expected an integer", InvalidInput);
    CHECK_THROWS_WITH_AS(case_spec_from_json(R"({"case_id": 1, "n": 30, "p": 40, "seed": 1, "x": 0})"),
                         "/x: unknown key", InvalidInput);
    CHECK_THROWS_AS(case_spec_from_json("[1, 2]"), InvalidInput);
    CHECK_THROWS_AS(case_spec_from_json("{"), InvalidInput);
}
