#include "coxscreen/cox.hpp"
#include "coxscreen/dataset.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace coxscreen;

namespace {

IndexSet iota_set(int q)
{
    IndexSet s(q);
    std::iota(s.begin(), s.end(), 0);
    return s;
}

SurvivalDataset toy3()
{
    Eigen::MatrixXd x(3, 2);
    x << 1, 0, 0, 1, 1, 1;
    return build_dataset(x, Eigen::Vector3d(1, 2, 3), {1, 1, 0});
}

std::string error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("dataset construction validates its invariants")
{
    const auto data = toy3();
    CHECK(data.n() == 3);
    CHECK(data.p() == 2);
    CHECK(data.n_events() == 2);
    CHECK(data.sort_order() == std::vector<int>{2, 1, 0});
    CHECK(data.column_names() == std::vector<std::string>{"x1", "x2"});

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 1);
    CHECK(error_of([&] { build_dataset(x, Eigen::Vector3d(0, 1, 2), {1, 1, 1}); }) == "nonpositive time");
    CHECK(error_of([&] { build_dataset(x, Eigen::Vector3d(1, 2, 3), {0, 0, 0}); }) == "no events");
    CHECK(error_of([&] { build_dataset(x, Eigen::Vector3d(1, 2, 3), {0, 2, 1}); }) == "status must be 0 or 1");
    CHECK(error_of([&] { build_dataset(x, Eigen::Vector2d(1, 2), {1, 1}); }).rfind("dimension mismatch", 0) == 0);
    x(1, 0) = NAN;
    CHECK(error_of([&] { build_dataset(x, Eigen::Vector3d(1, 2, 3), {1, 1, 1}); }) == "non-finite covariate value");
    CHECK_THROWS_AS(build_dataset(Eigen::MatrixXd::Zero(2, 1), Eigen::Vector2d(1, INFINITY), {1, 1}), InvalidInput);
}

TEST_CASE("sort order is nonincreasing in time and tie blocks partition it")
{
    std::mt19937_64 rng(11);
    const auto raw = oracle::random_data(rng, 60, 2, 0.5, 0.3, true);
    const auto data = raw.dataset();
    const auto& order = data.sort_order();
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == iota_set(60));
    for (std::size_t k = 1; k < order.size(); ++k) CHECK(raw.time(order[k - 1]) >= raw.time(order[k]));
    const auto& blocks = data.tie_blocks();
    CHECK(blocks.front() == 0);
    CHECK(blocks.back() == 60);
    for (std::size_t b = 0; b + 1 < blocks.size(); ++b) {
        for (int k = blocks[b]; k < blocks[b + 1]; ++k) CHECK(raw.time(order[k]) == raw.time(order[blocks[b]]));
        if (b + 2 < blocks.size()) CHECK(raw.time(order[blocks[b]]) > raw.time(order[blocks[b + 1]]));
    }
}

TEST_CASE("subset validation")
{
    const auto data = toy3();
    CHECK(error_of([&] { partial_loglik(data, Eigen::VectorXd::Zero(1), IndexSet{2}); }) ==
          "covariate index out of range: 2");
    CHECK(error_of([&] { partial_loglik(data, Eigen::VectorXd::Zero(2), IndexSet{0, 0}); }) ==
          "duplicate covariate index: 0");
    CHECK_THROWS_AS(partial_loglik(data, Eigen::VectorXd::Zero(1), IndexSet{0, 1}), InvalidInput);
    CHECK_THROWS_AS(partial_loglik(data, Eigen::Vector2d(NAN, 0), IndexSet{0, 1}), InvalidInput);
}

TEST_CASE("log partial likelihood at zero counts risk sets")
{
    const auto data = toy3();
    const double expected = -std::log(3.0) - std::log(2.0);
    CHECK(partial_loglik(data, Eigen::Vector2d::Zero(), IndexSet{0, 1}) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(null_loglik(data) == doctest::Approx(-1.791759469228055).epsilon(1e-12));
}

TEST_CASE("log partial likelihood matches term-by-term summation")
{
    Eigen::MatrixXd x(4, 1);
    x << 1, 0, 1, 0;
    const Eigen::Vector4d t(1, 2, 3, 4);
    const std::vector<int> status{1, 1, 1, 0};
    const auto data = build_dataset(x, t, status);
    const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, 0.5);
    CHECK(std::abs(partial_loglik(data, beta, IndexSet{0}) - oracle::loglik(x, t, status, beta)) < 1e-12);

    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const auto raw = oracle::random_data(rng, 40, 3, 0.7, 0.4, rep % 2 == 0);
        const auto ds = raw.dataset();
        std::normal_distribution<double> normal;
        Eigen::VectorXd b(3);
        for (int j = 0; j < 3; ++j) b(j) = normal(rng);
        CHECK(std::abs(partial_loglik(ds, b, iota_set(3)) - oracle::loglik(raw.x, raw.time, raw.status, b)) < 1e-10);
    }
}

TEST_CASE("constant covariates do not change the likelihood")
{
    std::mt19937_64 rng(5);
    auto raw = oracle::random_data(rng, 30, 2);
    raw.x.col(1).setConstant(2.5);
    const auto data = raw.dataset();
    const Eigen::Vector2d beta(0.3, -1.7);
    CHECK(partial_loglik(data, beta, IndexSet{0, 1}) ==
          doctest::Approx(partial_loglik(data, Eigen::Vector2d(0.3, 0.0), IndexSet{0, 1})).epsilon(1e-12));
    const auto g = partial_loglik_grad(data, beta, IndexSet{0, 1});
    CHECK(std::abs(g(1)) < 1e-12);
    const auto h = partial_loglik_hessian(data, Eigen::VectorXd::Constant(1, 0.4), IndexSet{1});
    CHECK(std::abs(h(0, 0)) < 1e-12);
}

TEST_CASE("shifting a covariate column leaves the likelihood unchanged")
{
    std::mt19937_64 rng(6);
    auto raw = oracle::random_data(rng, 50, 3);
    const auto a = raw.dataset();
    raw.x.col(1).array() += 17.0;
    const auto b = raw.dataset();
    for (int rep = 0; rep < 5; ++rep) {
        std::normal_distribution<double> normal;
        const Eigen::Vector3d beta(normal(rng), normal(rng), normal(rng));
        CHECK(partial_loglik(a, beta, iota_set(3)) == doctest::Approx(partial_loglik(b, beta, iota_set(3))).epsilon(1e-11));
    }
}

TEST_CASE("gradient and Hessian equal the naive double-loop computation")
{
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        const auto raw = oracle::random_data(rng, 80 + 12 * rep, 4, 0.5, 0.3, rep % 3 == 0);
        const auto data = raw.dataset();
        std::normal_distribution<double> normal;
        Eigen::VectorXd beta(4);
        for (int j = 0; j < 4; ++j) beta(j) = 0.5 * normal(rng);
        const auto g = partial_loglik_grad(data, beta, iota_set(4));
        const auto h = partial_loglik_hessian(data, beta, iota_set(4));
        const auto g_ref = oracle::gradient(raw.x, raw.time, raw.status, beta);
        const auto h_ref = oracle::hessian(raw.x, raw.time, raw.status, beta);
        CHECK((g - g_ref).lpNorm<Eigen::Infinity>() < 1e-10 * std::max(1.0, g_ref.lpNorm<Eigen::Infinity>()));
        CHECK((h - h_ref).lpNorm<Eigen::Infinity>() < 1e-10 * std::max(1.0, h_ref.lpNorm<Eigen::Infinity>()));
    }
}

TEST_CASE("gradient and Hessian agree with finite differences")
{
    std::mt19937_64 rng(8);
    const auto raw = oracle::random_data(rng, 50, 5);
    const auto data = raw.dataset();
    const auto subset = iota_set(5);
    Eigen::VectorXd beta(5);
    beta << 0.2, -0.4, 0.1, 0.3, -0.2;
    const auto f = [&](const Eigen::VectorXd& b) { return partial_loglik(data, b, subset); };
    const auto g = partial_loglik_grad(data, beta, subset);
    const auto fd = oracle::fd_gradient(f, beta, 1e-5);
    CHECK((g - fd).lpNorm<Eigen::Infinity>() / g.lpNorm<Eigen::Infinity>() < 1e-6);

    const auto h = partial_loglik_hessian(data, beta, subset);
    for (int j = 0; j < 5; ++j) {
        Eigen::VectorXd up = beta, down = beta;
        up(j) += 1e-5;
        down(j) -= 1e-5;
        const Eigen::VectorXd col = (partial_loglik_grad(data, up, subset) - partial_loglik_grad(data, down, subset)) / 2e-5;
        CHECK((h.col(j) - col).lpNorm<Eigen::Infinity>() / h.lpNorm<Eigen::Infinity>() < 1e-5);
    }
    CHECK((h - h.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-h);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("log partial likelihood is concave")
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 20; ++rep) {
        const auto raw = oracle::random_data(rng, 40, 3, 0.5, 0.3, rep % 2 == 1);
        const auto data = raw.dataset();
        Eigen::Vector3d b1, b2;
        for (int j = 0; j < 3; ++j) {
            b1(j) = 2 * normal(rng);
            b2(j) = 2 * normal(rng);
        }
        const auto l = [&](const Eigen::Vector3d& b) { return partial_loglik(data, b, iota_set(3)); };
        CHECK(l(0.5 * (b1 + b2)) >= 0.5 * (l(b1) + l(b2)) - 1e-10);
    }
}

TEST_CASE("permuting observations changes nothing")
{
    std::mt19937_64 rng(10);
    const auto raw = oracle::random_data(rng, 70, 3, 0.5, 0.3, true);
    std::vector<int> perm = iota_set(70);
    std::shuffle(perm.begin(), perm.end(), rng);
    oracle::RawData shuffled;
    shuffled.x.resize(70, 3);
    shuffled.time.resize(70);
    for (int i = 0; i < 70; ++i) {
        shuffled.x.row(i) = raw.x.row(perm[i]);
        shuffled.time(i) = raw.time(perm[i]);
        shuffled.status.push_back(raw.status[perm[i]]);
    }
    const auto a = raw.dataset();
    const auto b = shuffled.dataset();
    const Eigen::Vector3d beta(0.4, -0.3, 0.8);
    CHECK(std::abs(partial_loglik(a, beta, iota_set(3)) - partial_loglik(b, beta, iota_set(3))) < 1e-12);
    CHECK((partial_loglik_grad(a, beta, iota_set(3)) - partial_loglik_grad(b, beta, iota_set(3))).norm() < 1e-12);
    const auto fa = newton_fit(a, iota_set(3));
    const auto fb = newton_fit(b, iota_set(3));
    CHECK((fa.beta - fb.beta).norm() < 1e-12);
    const auto ha = breslow_baseline(a, fa);
    const auto hb = breslow_baseline(b, fb);
    REQUIRE(ha.jumps.size() == hb.jumps.size());
    for (std::size_t k = 0; k < ha.jumps.size(); ++k) CHECK(std::abs(ha.jumps[k] - hb.jumps[k]) < 1e-12);
}

TEST_CASE("Newton fit of one covariate matches a brute-force maximiser")
{
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 10; ++rep) {
        const auto raw = oracle::random_data(rng, 60, 1, 0.8);
        const auto data = raw.dataset();
        const auto fit = newton_fit(data, IndexSet{0});
        REQUIRE(fit.converged);
        const auto f = [&](double b) {
            return oracle::loglik(raw.x, raw.time, raw.status, Eigen::VectorXd::Constant(1, b));
        };
        CHECK(std::abs(fit.beta(0) - oracle::golden_argmax(f, -10, 10, 1e-9)) < 1e-4);
        CHECK(fit.loglik >= f(fit.beta(0) + 1e-3));
        CHECK(fit.loglik >= f(fit.beta(0) - 1e-3));
        CHECK(fit.std_errors(0) > 0);
    }
}

TEST_CASE("Newton fit satisfies the first-order condition and is a fixed point")
{
    std::mt19937_64 rng(13);
    const auto raw = oracle::random_data(rng, 120, 4);
    const auto data = raw.dataset();
    const auto fit = newton_fit(data, iota_set(4));
    REQUIRE(fit.converged);
    CHECK(partial_loglik_grad(data, fit.beta, iota_set(4)).lpNorm<Eigen::Infinity>() < 1e-8);
    const Eigen::MatrixXd info = -partial_loglik_hessian(data, fit.beta, iota_set(4));
    const Eigen::VectorXd se = info.inverse().diagonal().cwiseSqrt();
    CHECK((se - fit.std_errors).norm() < 1e-10);
    const auto again = newton_fit(data, iota_set(4), fit.beta);
    CHECK(again.iterations <= 1);
    CHECK((again.beta - fit.beta).norm() < 1e-9);
    CHECK(fit.covariate_indices == iota_set(4));
}

TEST_CASE("singular information is reported")
{
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(5, 1);
    const auto data = build_dataset(x, Eigen::VectorXd::LinSpaced(5, 1, 5), {1, 1, 0, 1, 1});
    CHECK(error_of([&] { newton_fit(data, IndexSet{0}); }) == "singular information");

    std::mt19937_64 rng(14);
    auto raw = oracle::random_data(rng, 40, 3);
    raw.x.col(2) = raw.x.col(0) - 2.0 * raw.x.col(1);
    CHECK_THROWS_AS(newton_fit(raw.dataset(), iota_set(3)), FitError);
}

TEST_CASE("monotone likelihood returns a non-converged fit")
{
    // the covariate orders the failure times perfectly: beta diverges to -infinity
    const int n = 20;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = i;
        t(i) = i + 1;
    }
    const auto data = build_dataset(x, t, std::vector<int>(n, 1));
    CoxFit fit;
    CHECK_NOTHROW(fit = newton_fit(data, IndexSet{0}));
    CHECK_FALSE(fit.converged);
    CHECK(fit.beta(0) < -5);
}

TEST_CASE("Breslow jumps at zero coefficients are inverse risk-set sizes")
{
    const auto data = toy3();
    const auto h = breslow_baseline(data, IndexSet{0, 1}, Eigen::Vector2d::Zero());
    CHECK(h.event_times == std::vector<double>{1, 2});
    CHECK(h.jumps[0] == doctest::Approx(1.0 / 3));
    CHECK(h.jumps[1] == doctest::Approx(1.0 / 2));
    CHECK(h.cumulative[1] == doctest::Approx(5.0 / 6));

    const int n = 12;
    const auto big = build_dataset(Eigen::MatrixXd::Ones(n, 1), Eigen::VectorXd::LinSpaced(n, 1, n), std::vector<int>(n, 1));
    const auto hb = breslow_baseline(big, IndexSet{0}, Eigen::VectorXd::Zero(1));
    for (int k = 0; k < n; ++k) CHECK(hb.jumps[k] == 1.0 / (n - k));

    // tied events share the risk set: jump = d / |R|
    const auto tied = build_dataset(Eigen::MatrixXd::Zero(4, 1), Eigen::Vector4d(1, 1, 2, 3), {1, 1, 1, 0});
    const auto ht = breslow_baseline(tied, IndexSet{0}, Eigen::VectorXd::Zero(1));
    CHECK(ht.jumps[0] == 2.0 / 4);
    CHECK(ht.jumps[1] == 1.0 / 2);
}

TEST_CASE("Breslow baseline is increasing and profiles out the hazard")
{
    std::mt19937_64 rng(15);
    const auto raw = oracle::random_data(rng, 80, 2, 0.5, 0.3, true);
    const auto data = raw.dataset();
    const auto fit = newton_fit(data, iota_set(2));
    const auto h = breslow_baseline(data, fit);
    for (std::size_t k = 0; k < h.jumps.size(); ++k) {
        CHECK(h.jumps[k] > 0);
        if (k > 0) {
            CHECK(h.cumulative[k] > h.cumulative[k - 1]);
            CHECK(h.event_times[k] > h.event_times[k - 1]);
        }
    }

    // full log-likelihood with the plug-in hazard minus the partial likelihood
    // must not depend on beta
    std::normal_distribution<double> normal;
    std::vector<double> differences;
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::Vector2d beta(normal(rng), normal(rng));
        const auto hz = breslow_baseline(data, iota_set(2), beta);
        double full = 0;
        for (Eigen::Index i = 0; i < raw.x.rows(); ++i) {
            const double eta = raw.x.row(i).dot(beta);
            const auto pos = std::upper_bound(hz.event_times.begin(), hz.event_times.end(), raw.time(i)) - hz.event_times.begin();
            const double cum = pos > 0 ? hz.cumulative[pos - 1] : 0.0;
            if (raw.status[i] == 1) {
                const auto at = std::lower_bound(hz.event_times.begin(), hz.event_times.end(), raw.time(i)) - hz.event_times.begin();
                full += std::log(hz.jumps[at]) + eta;
            }
            full -= cum * std::exp(eta);
        }
        differences.push_back(full - partial_loglik(data, beta, iota_set(2)));
    }
    for (double d : differences) CHECK(d == doctest::Approx(differences.front()).epsilon(1e-10));
}

TEST_CASE("t statistics")
{
    CoxFit fit;
    fit.beta = Eigen::Vector2d(2.0, -1.295);
    fit.std_errors = Eigen::Vector2d(0.5, 0.185);
    const auto t = t_statistics(fit);
    CHECK(t(0) == doctest::Approx(4.0));
    CHECK(t(1) == doctest::Approx(-7.0));
    // two-sided normal p-value of |t| = 7 is about 2.6e-12
    CHECK(std::erfc(std::abs(t(1)) / std::sqrt(2.0)) == doctest::Approx(2.56e-12).epsilon(0.02));
    fit.std_errors(1) = 0;
    CHECK_THROWS_AS(t_statistics(fit), InvalidInput);
}

TEST_CASE("standardize centres and scales columns")
{
    std::mt19937_64 rng(16);
    auto raw = oracle::random_data(rng, 40, 3);
    raw.x.col(0) = 3.0 * raw.x.col(0).array() + 5.0;
    raw.x.col(2).setConstant(4.0);
    const auto s = standardize(raw.dataset());
    const auto& x = s.covariates();
    for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(x.col(j).mean()) < 1e-12);
        const double var = (x.col(j).array() - x.col(j).mean()).square().sum() / (x.rows() - 1);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(x.col(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("CSV round trip and parse errors")
{
    std::mt19937_64 rng(17);
    const auto raw = oracle::random_data(rng, 25, 3);
    const auto data = raw.dataset();
    std::stringstream buffer;
    write_csv(data, buffer);
    const auto back = parse_csv(buffer);
    CHECK(back.covariates() == data.covariates());
    CHECK(back.times() == data.times());
    CHECK(back.status() == data.status());
    CHECK(back.column_names() == data.column_names());

    std::istringstream bom("\xEF\xBB\xBFstatus,a,time\n1,0.5,2\n0,1.5,3\n");
    const auto parsed = parse_csv(bom);
    CHECK(parsed.column_names() == std::vector<std::string>{"a"});
    CHECK(parsed.times()(1) == 3.0);

    std::istringstream bad("time,status,a\n1,1,0.5\n2,1,oops\n");
    CHECK(error_of([&] { parse_csv(bad); }).rfind("line 3:", 0) == 0);
    std::istringstream short_row("time,status,a\n1,1\n");
    CHECK(error_of([&] { parse_csv(short_row); }).rfind("line 2:", 0) == 0);
    std::istringstream no_time("status,a\n1,2\n");
    CHECK(error_of([&] { parse_csv(no_time); }).find("time") != std::string::npos);
    std::istringstream no_events("time,status,a\n1,0,2\n2,0,3\n");
    CHECK(error_of([&] { parse_csv(no_events); }) == "no events");
}
