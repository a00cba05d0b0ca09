#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "retas/error.hpp"
#include "retas/estimation.hpp"
#include "retas/simulate.hpp"

#include <cmath>

using namespace retas;

namespace {

constexpr auto idx = [](Param p) { return static_cast<std::size_t>(p); };

SimConfig exponential_config() {
    SimConfig cfg;
    cfg.theta.hazard = {HazardFamily::exponential, 1.0, 0.4};
    cfg.theta.omori = {1.8, 0.02};
    cfg.theta.spatial = {0.02, 0.03};
    cfg.theta.boost = {0.4, 1.0, 3.0};
    cfg.theta.magnitude = {2.5, 3.0};
    cfg.horizon = 140.0;
    cfg.region = fixtures::unit_square();
    cfg.background = fixtures::square_background();
    cfg.seed = 77;
    return cfg;
}

} // namespace

TEST_CASE("parameter vectors") {
    Theta th;
    th.hazard = {HazardFamily::gamma, 1.7, 0.3};
    th.omori = {2.2, 0.04};
    th.spatial = {0.1, 0.2};
    th.boost = {0.3, 0.9, 4.0};
    const ParamVector v = to_vector(th);
    CHECK(v[idx(Param::alpha)] == 1.7);
    CHECK(v[idx(Param::delta)] == 0.9);
    const Theta back = from_vector(v, HazardFamily::gamma, th.magnitude);
    CHECK(to_vector(back) == v);
    CHECK(from_vector(v, HazardFamily::exponential, th.magnitude).hazard.alpha == 1.0);
    CHECK_FALSE(free_parameters(HazardFamily::exponential)[idx(Param::alpha)]);
    CHECK(free_parameters(HazardFamily::weibull)[idx(Param::alpha)]);
}

TEST_CASE("aic") {
    FitResult f;
    f.loglik = 0.0;
    f.n_params = 8;
    CHECK(aic(f) == 16.0);
    f.loglik = -100.5;
    CHECK(aic(f) == doctest::Approx(217.0));
}

TEST_CASE("hessian of a quadratic") {
    const std::vector<double> a{1.0, -2.0, 0.5};
    const Objective q = [&](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t k = 0; k < 3; ++k) s += (x[k] - a[k]) * (x[k] - a[k]);
        return -0.5 * s;
    };
    const Eigen::MatrixXd H = hessian_fd(q, std::vector<double>{0.0, 0.0, 0.0});
    CHECK((H + Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(H.isApprox(H.transpose()));
    const auto se = standard_errors(H);
    REQUIRE(se);
    for (int k = 0; k < 3; ++k) CHECK((*se)(k) == doctest::Approx(1.0).epsilon(1e-6));

    const Objective flat = [](std::span<const double> x) { return -x[0] * x[0]; };
    CHECK_FALSE(standard_errors(hessian_fd(flat, std::vector<double>{1.0, 2.0})));

    // step limited near a boundary
    const Objective logb = [](std::span<const double> x) { return std::log(x[0]) - x[0]; };
    const std::vector<double> lim{1e-5};
    const Eigen::MatrixXd Hb = hessian_fd(logb, std::vector<double>{1e-3}, lim);
    CHECK(Hb(0, 0) == doctest::Approx(-1e6).epsilon(1e-3));
}

TEST_CASE("empty catalog cannot be fitted") {
    const Catalog empty({}, fixtures::unit_square(), 10.0, 3.0);
    CHECK_THROWS_AS(fit(empty, fixtures::square_background(), HazardFamily::exponential), ModelError);
}

TEST_CASE("infeasible init is reported") {
    const Catalog cat({{0.5, 0.5, 0.5, 3.4}, {0.6, 0.5, 0.5, 3.0}}, fixtures::unit_square(), 1.0, 3.0);
    const BackgroundDensity bg({{0.05, 0.05}}, 1e-3, 1e-3, fixtures::unit_square());
    Theta th;
    th.boost = {0.0, 0.0, 3.0};
    CHECK_THROWS_WITH_AS(fit(cat, bg, HazardFamily::exponential, th), doctest::Contains("-inf"), ModelError);
}

TEST_CASE("exponential recovery") {
    const SimConfig cfg = exponential_config();
    const Catalog cat = simulate_catalog(cfg);
    MESSAGE("events: " << cat.size());
    CHECK(cat.size() > 800);
    const FitResult f = fit(cat, cfg.background, HazardFamily::exponential, cfg.theta);
    CHECK(f.convergence.converged);
    CHECK(f.n_params == 8);
    REQUIRE(f.se);
    const ParamVector truth = to_vector(cfg.theta), est = to_vector(f.theta_hat);
    for (std::size_t k = 1; k < kNumParams; ++k) {
        INFO(kParamNames[k] << " est " << est[k] << " se " << (*f.se)[k]);
        CHECK(std::abs(est[k] - truth[k]) <= 3.0 * (*f.se)[k]);
    }
    CHECK(std::isnan((*f.se)[idx(Param::alpha)]));

    const BackgroundDensity& bg = cfg.background;
    const double at_truth = log_likelihood(cfg.theta, cat, bg).total;
    const double at_hat = log_likelihood(f.theta_hat, cat, bg).total;
    CHECK(at_hat >= at_truth);
    CHECK(f.loglik == doctest::Approx(at_hat).epsilon(1e-12));

    // nested comparison: the extra shape parameter buys little
    const FitResult w = fit(cat, cfg.background, HazardFamily::weibull, f.theta_hat);
    CHECK(w.n_params == 9);
    CHECK(w.loglik >= f.loglik - 1e-6);
    CHECK(f.aic <= w.aic + 2.0);
}

TEST_CASE("warm-start ladder") {
    SimConfig cfg = exponential_config();
    cfg.horizon = 60.0;
    const Catalog cat = simulate_catalog(cfg);
    const Theta e = warm_start_ladder(cat, cfg.background, HazardFamily::exponential);
    CHECK(e.hazard.family == HazardFamily::exponential);
    CHECK(std::isfinite(log_likelihood(e, cat, cfg.background).total));
    const Theta w = warm_start_ladder(cat, cfg.background, HazardFamily::weibull);
    CHECK(w.hazard.family == HazardFamily::weibull);
    CHECK(std::isfinite(log_likelihood(w, cat, cfg.background).total));

    SimConfig quiet = cfg;
    quiet.theta.boost.A = 0.0;
    quiet.horizon = 200.0;
    const Catalog q = simulate_catalog(quiet);
    const Theta z = warm_start_ladder(q, quiet.background, HazardFamily::exponential);
    CHECK(z.boost.A < 0.05);
}

TEST_CASE("nearest neighbour dispersion") {
    const Catalog one({{1.0, 0.5, 0.5, 3.0}}, fixtures::unit_square(), 2.0, 3.0);
    const auto [a, b] = nearest_neighbour_dispersion(one);
    CHECK(a == 0.01);
    CHECK(b == 0.01);
    const Catalog grid({{1.0, 0.1, 0.1, 3.0}, {2.0, 0.3, 0.1, 3.0}, {3.0, 0.3, 0.2, 3.0}}, fixtures::unit_square(), 4.0,
                       3.0);
    const auto [sx, sy] = nearest_neighbour_dispersion(grid);
    CHECK(sx > 0.0);
    CHECK(sy > 0.0);
}
