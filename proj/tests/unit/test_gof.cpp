#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "retas/error.hpp"
#include "retas/gof.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

using namespace retas;

TEST_CASE("first event residual") {
    Theta th;
    th.hazard = {HazardFamily::weibull, 0.7, 1.3};
    const Catalog cat({{0.9, 0.4, 0.6, 3.0}}, fixtures::unit_square(), 2.0, 3.0);
    const ResidualSet r = compute_residuals(th, cat, fixtures::square_background());
    CHECK(r.U[0] == doctest::Approx(1.0 - std::exp(-std::pow(0.9 / 1.3, 0.7))).epsilon(1e-14));
}

TEST_CASE("renewal reduction") {
    SimConfig cfg;
    cfg.theta.hazard = {HazardFamily::exponential, 1.0, 0.5};
    cfg.theta.boost = {0.0, 1.0, 3.0};
    cfg.theta.magnitude = {2.0, 3.0};
    cfg.horizon = 40.0;
    cfg.region = fixtures::unit_square();
    cfg.background = fixtures::square_background();
    const Catalog cat = simulate_catalog(cfg);
    const auto U = temporal_residuals(cfg.theta, cat, cfg.background);
    double prev = 0.0;
    for (std::size_t i = 0; i < cat.size(); ++i) {
        CHECK(U[i] == doctest::Approx(1.0 - std::exp(-(cat[i].time - prev) / 0.5)).epsilon(1e-12));
        prev = cat[i].time;
    }
}

TEST_CASE("residuals against the branching oracle") {
    std::mt19937_64 rng(12);
    for (int k = 0; k < 6; ++k) {
        const Theta th = fixtures::random_theta(rng, k);
        const Catalog cat = oracle::truncate(fixtures::random_catalog(rng, th, false, 20.0), 8);
        const auto& bg = fixtures::background_for(cat);
        const ResidualSet r = compute_residuals(th, cat, bg);
        CHECK(r.max_posterior_error < 1e-12);
        CHECK(fixtures::normalization_error(th, cat, bg) <= 1e-12);
        for (std::size_t i = 0; i < cat.size(); ++i) {
            const auto o = oracle::residual_oracle(th, cat, bg, i);
            CHECK(std::abs(r.U[i] - o.U) < 1e-6);
            CHECK(std::abs(r.V[i] - o.V) < 1e-6);
            CHECK(std::abs(r.W[i] - o.W) < 1e-6);
            if (i >= 1) {
                const auto p = posterior_tau(th, cat, bg, i);
                REQUIRE(p.size() == o.p_tau.size());
                double s = 0.0;
                for (std::size_t j = 0; j < p.size(); ++j) {
                    CHECK(p[j] >= 0.0);
                    CHECK(std::abs(p[j] - o.p_tau[j]) < 1e-6);
                    s += p[j];
                }
                CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("posterior index") {
    std::mt19937_64 rng(4);
    const Theta th = fixtures::random_theta(rng, 1);
    const Catalog cat = oracle::truncate(fixtures::random_catalog(rng, th, false, 20.0), 5);
    const auto& bg = fixtures::background_for(cat);
    CHECK(posterior_tau(th, cat, bg, 1) == std::vector<double>{1.0});
    CHECK_THROWS_AS(posterior_tau(th, cat, bg, 0), InputError);
    CHECK_THROWS_AS(posterior_tau(th, cat, bg, cat.size()), InputError);
}

TEST_CASE("region edges") {
    Theta th;
    th.hazard = {HazardFamily::exponential, 1.0, 1.0};
    th.spatial = {0.05, 0.05};
    th.boost = {0.3, 0.5, 3.0};
    th.magnitude = {2.0, 3.0};
    const Catalog cat({{0.4, 0.5, 0.5, 3.2}, {0.8, 0.0, 1.0, 3.0}, {1.1, 1.0, 0.0, 3.1}}, fixtures::unit_square(), 2.0,
                      3.0);
    const ResidualSet r = compute_residuals(th, cat, fixtures::square_background());
    CHECK(r.V[1] == doctest::Approx(0.0));
    CHECK(r.W[1] == doctest::Approx(1.0));
    CHECK(r.V[2] == doctest::Approx(1.0));
    CHECK(r.W[2] == doctest::Approx(0.0));
    REQUIRE(r.combined.size() == 9);
    CHECK(r.combined[3] == r.U[1]);
    CHECK(r.combined[4] == r.V[1]);
    CHECK(r.combined[5] == r.W[1]);
}

TEST_CASE("K-S") {
    std::vector<double> eq;
    const int n = 40;
    for (int k = 1; k <= n; ++k) eq.push_back((2.0 * k - 1.0) / (2.0 * n));
    CHECK(ks_uniform(eq).stat == doctest::Approx(1.0 / (2 * n)));
    CHECK(ks_uniform(std::vector<double>(25, 0.5)).stat == doctest::Approx(0.5));
    CHECK_THROWS_AS(ks_uniform({}), ModelError);

    // p-values of uniform samples are uniform
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::array<int, 10> bins{};
    for (int s = 0; s < 1000; ++s) {
        std::vector<double> x(100);
        for (double& v : x) v = u(rng);
        const double p = ks_uniform(x).p;
        bins[std::min(9, static_cast<int>(p * 10))]++;
    }
    double chi2 = 0.0;
    for (int b : bins) chi2 += (b - 100.0) * (b - 100.0) / 100.0;
    CHECK(chi2 < 27.88);  // chi-square(9) upper 0.1%
}

TEST_CASE("Ljung-Box") {
    CHECK_THROWS_WITH_AS(ljung_box(std::vector<double>(50, 0.3), 10), doctest::Contains("zero variance"), ModelError);
    CHECK_THROWS_AS(ljung_box(std::vector<double>{0.1, 0.2, 0.3}, 10), ModelError);

    std::mt19937_64 rng(99);
    std::normal_distribution<double> z;
    double qsum = 0.0;
    for (int s = 0; s < 1000; ++s) {
        std::vector<double> x(1000);
        for (double& v : x) v = z(rng);
        qsum += ljung_box(x, 10).stat;
    }
    CHECK(std::abs(qsum / 1000.0 - 10.0) < 0.6);

    std::vector<double> alt;
    for (int k = 0; k < 200; ++k) alt.push_back(k % 2 ? 0.9 : 0.1);
    CHECK(acf(alt, 1)[0] < -0.99);
    CHECK(ljung_box(alt, 10).p < 1e-12);
}

TEST_CASE("artifacts") {
    std::mt19937_64 rng(8);
    const Theta th = fixtures::random_theta(rng, 2);
    const Catalog cat = fixtures::random_catalog(rng, th, false, 40.0);
    const auto& bg = fixtures::background_for(cat);
    const GofReport rep = gof_report(th, cat, bg, 5);
    for (const auto* s : {&rep.residuals.U, &rep.residuals.V, &rep.residuals.W})
        for (double v : *s) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    const auto dir = std::filesystem::temp_directory_path() / ("retas_gof_" + std::to_string(::getpid()));
    write_gof_artifacts(rep, dir.string(), "{\"seed\": 3}");
    for (const char* f : {"residuals.csv", "tests.json", "qq.csv", "acf.csv"}) CHECK(std::filesystem::exists(dir / f));
    std::ifstream in(dir / "tests.json");
    const auto j = nlohmann::json::parse(in);
    for (const char* s : {"U", "V", "W", "Combined"}) {
        CHECK(j["tests"][s]["KS"].contains("p"));
        CHECK(j["tests"][s]["LB"]["lags"] == 5);
    }
    CHECK(j["provenance"]["seed"] == 3);
    std::ifstream rc(dir / "residuals.csv");
    std::string header;
    std::getline(rc, header);
    CHECK(header == "i,U,V,W");
    std::filesystem::remove_all(dir);
}
