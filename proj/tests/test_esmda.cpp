#include <cmath>

#include "doctest.h"

#include "chda/esmda.hpp"

using namespace chda;
using namespace chda::da;

namespace {

flow::ObservationSet make_obs(const Eigen::VectorXd& values, const Eigen::VectorXd& variances) {
    flow::ObservationSet obs;
    obs.d_obs.n_wells = 1;
    for (Eigen::Index c = 0; c < values.size(); ++c) {
        obs.d_obs.times_days.push_back(static_cast<double>(c + 1));
        obs.d_obs.values_bar.push_back(values[c]);
        obs.cd_diagonal.push_back(variances[c]);
    }
    return obs;
}

Ensemble gaussian_ensemble(const GridSpec& g, int n, std::uint64_t seed, double mean = 0.0,
                           double std = 1.0) {
    RngStream rng(seed, 0);
    Ensemble e;
    e.members.reserve(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
        auto s = rng.fork(static_cast<std::uint64_t>(m));
        LogPermField f(g);
        for (auto& v : f.values) v = mean + std * s.normal();
        e.members.push_back(std::move(f));
    }
    return e;
}

const Bounds kWide{-100.0, 100.0};

}  // namespace

TEST_CASE("config invariant: inverse inflation coefficients sum to one") {
    EsmdaConfig ok;
    CHECK_NOTHROW(ok.validate());

    EsmdaConfig two;
    two.n_assimilations = 2;
    two.alphas = {2.0, 2.0};
    CHECK_NOTHROW(two.validate());

    EsmdaConfig bad;
    bad.alphas = {4.0, 4.0, 4.0, 5.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    EsmdaConfig low;
    low.n_assimilations = 1;
    low.alphas = {0.5};
    CHECK_THROWS_AS(low.validate(), std::invalid_argument);
}

TEST_CASE("scalar conjugate-Gaussian update recovers mean 1/2 and variance 1/2") {
    GridSpec g{2, 2, 5.0, 5.0, 10.0};
    const int n_e = 100000;
    Ensemble prior = gaussian_ensemble(g, n_e, 2024);

    Eigen::MatrixXd d(n_e, 1);
    for (int j = 0; j < n_e; ++j) d(j, 0) = prior.members[static_cast<std::size_t>(j)].values[0];

    auto obs = make_obs(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
    RngStream rng(5, 0);
    Ensemble post = esmda_update(prior, d, obs, 1.0, nullptr, kWide, rng);

    double mean = 0.0, var = 0.0;
    for (const auto& m : post.members) mean += m.values[0];
    mean /= n_e;
    for (const auto& m : post.members) var += std::pow(m.values[0] - mean, 2);
    var /= (n_e - 1);

    CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
    CHECK(var == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("all-ones taper is bitwise identical to no localization") {
    GridSpec g{4, 4, 5.0, 5.0, 10.0};
    Ensemble prior = gaussian_ensemble(g, 30, 7, 2.0, 0.3);
    Eigen::MatrixXd d(30, 3);
    RngStream drng(8, 0);
    for (int j = 0; j < 30; ++j)
        for (int c = 0; c < 3; ++c)
            d(j, c) = prior.members[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(c)] +
                      0.05 * drng.normal();
    auto obs = make_obs(Eigen::VectorXd::Constant(3, 2.1), Eigen::VectorXd::Constant(3, 0.01));

    local::LocalizationMatrix ones;
    ones.entries = Eigen::MatrixXd::Ones(16, 3);
    ones.method = "ones";

    RngStream r1(9, 0), r2(9, 0);
    Ensemble a = esmda_update(prior, d, obs, 4.0, nullptr, kWide, r1);
    Ensemble b = esmda_update(prior, d, obs, 4.0, &ones, kWide, r2);
    for (std::size_t m = 0; m < a.size(); ++m) CHECK(a.members[m].values == b.members[m].values);
}

TEST_CASE("all-zeros taper returns the prior unchanged") {
    GridSpec g{4, 4, 5.0, 5.0, 10.0};
    Ensemble prior = gaussian_ensemble(g, 25, 17, 2.0, 0.3);
    Eigen::MatrixXd d(25, 2);
    for (int j = 0; j < 25; ++j)
        for (int c = 0; c < 2; ++c)
            d(j, c) = prior.members[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(c)];
    auto obs = make_obs(Eigen::VectorXd::Constant(2, 2.5), Eigen::VectorXd::Constant(2, 0.01));

    local::LocalizationMatrix zeros;
    zeros.entries = Eigen::MatrixXd::Zero(16, 2);
    RngStream rng(18, 0);
    Ensemble post = esmda_update(prior, d, obs, 4.0, &zeros, kWide, rng);
    for (std::size_t m = 0; m < post.size(); ++m)
        CHECK(post.members[m].values == prior.members[m].values);
}

TEST_CASE("single-step alpha-1 update equals a perturbed-observation Kalman analysis") {
    GridSpec g{3, 3, 5.0, 5.0, 10.0};
    const int n_e = 40, n_d = 4;
    Ensemble prior = gaussian_ensemble(g, n_e, 77, 1.5, 0.4);
    Eigen::MatrixXd a_map = Eigen::MatrixXd::Random(9, n_d);
    Eigen::MatrixXd z = prior.as_matrix();
    Eigen::MatrixXd d = z * a_map;
    auto obs = make_obs(Eigen::VectorXd::Constant(n_d, 1.0), Eigen::VectorXd::Constant(n_d, 0.04));

    RngStream rng(78, 0);
    Ensemble post = esmda_update(prior, d, obs, 1.0, nullptr, kWide, rng);

    // Oracle: textbook EnKF with an explicit inverse and the same forked
    // perturbation streams.
    Eigen::RowVectorXd zm = z.colwise().mean();
    Eigen::RowVectorXd dm = d.colwise().mean();
    Eigen::MatrixXd zc = z.rowwise() - zm;
    Eigen::MatrixXd dc = d.rowwise() - dm;
    Eigen::MatrixXd c_zd = zc.transpose() * dc / (n_e - 1);
    Eigen::MatrixXd c_dd = dc.transpose() * dc / (n_e - 1);
    Eigen::MatrixXd s = c_dd;
    for (int c = 0; c < n_d; ++c) s(c, c) += obs.cd_diagonal[static_cast<std::size_t>(c)];
    Eigen::MatrixXd gain = c_zd * s.inverse();

    RngStream oracle_rng(78, 0);
    double max_err = 0.0;
    for (int j = 0; j < n_e; ++j) {
        RngStream member = oracle_rng.fork(static_cast<std::uint64_t>(j));
        Eigen::VectorXd innov(n_d);
        for (int c = 0; c < n_d; ++c)
            innov[c] = obs.d_obs.values_bar[static_cast<std::size_t>(c)] +
                       std::sqrt(obs.cd_diagonal[static_cast<std::size_t>(c)]) * member.normal() -
                       d(j, c);
        Eigen::VectorXd expect = z.row(j).transpose() + gain * innov;
        for (int c = 0; c < 9; ++c)
            max_err = std::max(max_err,
                               std::abs(expect[c] -
                                        post.members[static_cast<std::size_t>(j)]
                                            .values[static_cast<std::size_t>(c)]));
    }
    CHECK(max_err < 1e-10);
}

TEST_CASE("four-step schedule matches the analytic Kalman posterior mean") {
    GridSpec g{2, 2, 5.0, 5.0, 10.0};
    const int n_e = 10000, n_z = 4, n_d = 3;
    Ensemble prior = gaussian_ensemble(g, n_e, 99, 1.0, 1.0);

    Eigen::MatrixXd a_map(n_z, n_d);
    a_map << 1.0, 0.2, 0.0, 0.5, 1.0, 0.3, 0.0, 0.4, 1.0, 0.2, 0.0, 0.6;
    Eigen::VectorXd y(n_d);
    y << 2.0, 1.5, 2.5;
    const double r = 0.25;  // observation variance
    auto obs = make_obs(y, Eigen::VectorXd::Constant(n_d, r));

    auto forward = [&](const LogPermField& f) -> Eigen::VectorXd {
        Eigen::Map<const Eigen::VectorXd> zv(f.values.data(), n_z);
        return a_map.transpose() * zv;
    };

    EsmdaConfig cfg;
    cfg.bounds = kWide;
    RngStream rng(100, 0);
    auto result = run_esmda(cfg, prior, forward, nullptr, obs, rng);
    REQUIRE(result.records.size() == 5);

    // Analytic Kalman posterior for prior N(mu0, I).
    Eigen::VectorXd mu0 = Eigen::VectorXd::Constant(n_z, 1.0);
    Eigen::MatrixXd s = a_map.transpose() * a_map + r * Eigen::MatrixXd::Identity(n_d, n_d);
    Eigen::VectorXd mu_post = mu0 + a_map * s.ldlt().solve(y - a_map.transpose() * mu0);

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n_z);
    for (const auto& m : result.posterior.members)
        mean += Eigen::Map<const Eigen::VectorXd>(m.values.data(), n_z);
    mean /= static_cast<double>(result.posterior.size());

    CHECK((mean - mu_post).norm() / mu_post.norm() < 0.05);
}

TEST_CASE("consistent data improves the data match") {
    GridSpec g{3, 3, 5.0, 5.0, 10.0};
    const int n_e = 200;
    Ensemble prior = gaussian_ensemble(g, n_e, 300, 2.0, 0.5);
    Eigen::MatrixXd a_map = Eigen::MatrixXd::Random(9, 5);
    auto forward = [&](const LogPermField& f) -> Eigen::VectorXd {
        Eigen::Map<const Eigen::VectorXd> zv(f.values.data(), 9);
        return a_map.transpose() * zv;
    };

    // Truth inside the prior: observe member 0 noise-free.
    Eigen::VectorXd y = forward(prior.members[0]);
    auto obs = make_obs(y, Eigen::VectorXd::Constant(5, 1e-4));

    EsmdaConfig cfg;
    cfg.bounds = kWide;
    RngStream rng(301, 0);
    auto result = run_esmda(cfg, prior, forward, nullptr, obs, rng);
    CHECK(result.records.back().rmse < result.records.front().rmse);
}

TEST_CASE("default bounds clip every posterior value into [1, 4]") {
    GridSpec g{4, 4, 5.0, 5.0, 10.0};
    Ensemble prior = gaussian_ensemble(g, 30, 55, 2.5, 1.2);
    for (auto& m : prior.members)
        for (auto& v : m.values) v = std::clamp(v, 1.0, 4.0);

    Eigen::MatrixXd d(30, 2);
    for (int j = 0; j < 30; ++j)
        for (int c = 0; c < 2; ++c)
            d(j, c) = prior.members[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(c)];
    auto obs = make_obs(Eigen::VectorXd::Constant(2, 8.0), Eigen::VectorXd::Constant(2, 1e-6));

    RngStream rng(56, 0);
    Ensemble post = esmda_update(prior, d, obs, 4.0, nullptr, Bounds{1.0, 4.0}, rng);
    for (const auto& m : post.members)
        for (double v : m.values) {
            CHECK(v >= 1.0);
            CHECK(v <= 4.0);
        }
}

TEST_CASE("normalized variance: identity, quadratic scaling, zero-variance error") {
    GridSpec g{4, 4, 5.0, 5.0, 10.0};
    Ensemble prior = gaussian_ensemble(g, 50, 400, 2.0, 0.7);
    CHECK(normalized_variance(prior, prior) == doctest::Approx(1.0).epsilon(1e-12));

    auto [mean, dev] = ensemble_mean_and_deviations(prior);
    Ensemble half = prior;
    for (std::size_t m = 0; m < half.size(); ++m)
        for (std::size_t c = 0; c < half.members[m].values.size(); ++c)
            half.members[m].values[c] =
                mean.values[c] + 0.5 * dev(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(c));
    CHECK(normalized_variance(prior, half) == doctest::Approx(0.25).epsilon(1e-10));

    Ensemble flat;
    for (int m = 0; m < 5; ++m) flat.members.emplace_back(g, 2.0);
    CHECK_THROWS_AS(normalized_variance(flat, prior), std::invalid_argument);
}

TEST_CASE("data rmse: exact rows, single offset, independent recomputation") {
    auto obs = make_obs(Eigen::VectorXd::Constant(3, 2.0), Eigen::VectorXd::Constant(3, 1.0));
    Eigen::MatrixXd exact = Eigen::MatrixXd::Constant(4, 3, 2.0);
    CHECK(data_rmse(exact, obs) == 0.0);

    auto obs1 = make_obs(Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 1.0));
    Eigen::MatrixXd off(1, 1);
    off(0, 0) = 3.0;
    CHECK(data_rmse(off, obs1) == doctest::Approx(2.0).epsilon(1e-15));

    RngStream rng(500, 0);
    Eigen::MatrixXd d(7, 3);
    for (int j = 0; j < 7; ++j)
        for (int c = 0; c < 3; ++c) d(j, c) = 2.0 + rng.normal();
    double acc = 0.0;
    for (int j = 0; j < 7; ++j)
        for (int c = 0; c < 3; ++c) acc += (d(j, c) - 2.0) * (d(j, c) - 2.0);
    CHECK(data_rmse(d, obs) == doctest::Approx(std::sqrt(acc / 21.0)).epsilon(1e-12));
}

TEST_CASE("forward failure reports the member index") {
    GridSpec g{2, 2, 5.0, 5.0, 10.0};
    Ensemble prior = gaussian_ensemble(g, 12, 600);
    auto obs = make_obs(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
    auto forward = [&](const LogPermField& f) -> Eigen::VectorXd {
        if (f.values[0] == prior.members[3].values[0]) throw std::runtime_error("boom");
        return Eigen::VectorXd::Ones(1);
    };
    EsmdaConfig cfg;
    cfg.bounds = kWide;
    RngStream rng(601, 0);
    CHECK_THROWS_WITH_AS(run_esmda(cfg, prior, forward, nullptr, obs, rng),
                         doctest::Contains("member 3"), std::runtime_error);
}
