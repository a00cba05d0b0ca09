#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "retas/error.hpp"
#include "retas/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace retas;

namespace {

Theta table_theta() {
    Theta th;
    th.hazard = {HazardFamily::weibull, 0.8, 0.7};
    th.omori = {1.8, 0.02};
    th.spatial = {0.05, 0.08};
    th.boost = {0.4, 0.8, 3.0};
    th.magnitude = {3.0, 3.0};
    return th;
}

Catalog five_events() {
    return Catalog({{0.3, 0.2, 0.3, 3.4}, {0.35, 0.22, 0.31, 3.1}, {1.1, 0.7, 0.6, 4.0}, {1.5, 0.68, 0.55, 3.0},
                    {2.2, 0.4, 0.8, 3.3}},
                   fixtures::unit_square(), 3.0, 3.0);
}

} // namespace

TEST_CASE("phi") {
    const Catalog cat = five_events();
    Theta th = table_theta();
    CHECK(phi(th, cat, 2.0, 0.5, 0.5) > 0.0);
    Theta zero = th;
    zero.boost.A = 0.0;
    CHECK(phi(zero, cat, 2.0, 0.5, 0.5) == 0.0);
    CHECK(phi_spatial_marginal(zero, cat, 2.0) == 0.0);

    const double one = phi(th, cat, 0.32, 0.2, 0.3);
    const double want = oracle::kappa(th.with_m0(3.0), 3.4) * oracle::omori(th.omori, 0.02) / (2 * std::numbers::pi * 0.05 * 0.08);
    CHECK(one == doctest::Approx(want).epsilon(1e-14));

    double direct = 0.0;
    const Theta t3 = th.with_m0(3.0);
    for (const Event& e : cat.events())
        direct += oracle::kappa(t3, e.magnitude) * oracle::omori(th.omori, 2.9 - e.time) *
                  oracle::kernel(th.spatial, 0.45 - e.lon, 0.5 - e.lat);
    CHECK(std::abs(phi(th, cat, 2.9, 0.45, 0.5) - direct) <= 1e-14 * direct);
}

TEST_CASE("spatially integrated phi") {
    const Theta th = table_theta();
    const Catalog plane({{0.5, 0.0, 0.0, 3.7}}, Region::plane(), 2.0, 3.0);
    CHECK(phi_spatial_marginal(th, plane, 1.0) ==
          doctest::Approx(oracle::kappa(th.with_m0(3.0), 3.7) * oracle::omori(th.omori, 0.5)));

    const Catalog cat = five_events();
    auto inner = [&](double x) {
        return oracle::integrate([&](double y) { return phi(th, cat, 2.5, x, y); }, 0.0, 1.0, {0.3, 0.31, 0.6, 0.55, 0.8});
    };
    const double ref = oracle::integrate(inner, 0.0, 1.0, {0.2, 0.22, 0.7, 0.68, 0.4});
    CHECK(std::abs(phi_spatial_marginal(th, cat, 2.5) - ref) <= 1e-8 * ref);
}

TEST_CASE("triggered mass") {
    const Theta th = table_theta();
    const Catalog cat = five_events();
    CHECK(triggered_mass(th, cat, 1.2, 1.2, cat.region()) == 0.0);
    const Catalog plane({{0.5, 0.0, 0.0, 3.7}, {0.9, 1.0, 1.0, 3.2}}, Region::plane(), 2.0, 3.0);
    const Theta t3 = th.with_m0(3.0);
    CHECK(triggered_mass(th, plane, 0.0, 1e12, Region::plane()) ==
          doctest::Approx(oracle::kappa(t3, 3.7) + oracle::kappa(t3, 3.2)).epsilon(1e-9));
    std::vector<double> cuts;
    for (const Event& e : cat.events()) cuts.insert(cuts.end(), {e.time, e.time + 0.02, e.time + 0.2});
    const double ref = oracle::integrate([&](double t) { return phi_spatial_marginal(th, cat, t); }, 0.2, 2.8, cuts);
    CHECK(std::abs(triggered_mass(th, cat, 0.2, 2.8, cat.region()) - ref) <= 1e-8 * ref);
}

TEST_CASE("single event likelihood") {
    Theta th;
    th.hazard = {HazardFamily::exponential, 1.0, 2.0};
    th.boost = {0.0, 1.0, 5.0};
    th.magnitude = {2.0, 5.0};
    const BackgroundDensity bg({{0.0, 0.0}}, 1.0, 1.0, Region::plane());
    const Catalog cat({{1.5, 0.3, -0.2, 5.0}}, Region::plane(), 10.0, 5.0);
    const LogLikResult r = log_likelihood(th, cat, bg);
    CHECK(r.spatiotemporal == doctest::Approx(std::log(bg.density(0.3, -0.2) / 2.0) - 10.0 / 2.0).epsilon(1e-14));
    CHECK(r.magnitude == doctest::Approx(std::log(2.0)));
    CHECK(r.total == doctest::Approx(r.spatiotemporal + r.magnitude));
}

TEST_CASE("exponential hazard matches classical ETAS and exhaustive sum") {
    std::mt19937_64 rng(9);
    for (int k = 0; k < 6; ++k) {
        const Theta th = fixtures::random_theta(rng, k);
        const Catalog full = fixtures::random_catalog(rng, th, k % 2 == 0, 20.0);
        const Catalog cat = oracle::truncate(full, 9);
        const auto& bg = fixtures::background_for(cat);
        const double got = log_likelihood(th, cat, bg).total;
        CHECK(std::abs(got - oracle::exhaustive_loglik(th, cat, bg)) < 1e-9);
        if (th.hazard.family == HazardFamily::exponential)
            CHECK(std::abs(got - oracle::classical_etas_loglik(th, cat, bg)) < 1e-9);
        CHECK(fixtures::normalization_error(th, cat, bg) <= 1e-12);
    }
}

TEST_CASE("retained forward state") {
    const Catalog cat = five_events();
    const BackgroundDensity bg = fixtures::square_background();
    const LogLikResult r = log_likelihood(table_theta(), cat, bg, true);
    REQUIRE(r.forward);
    CHECK(r.forward->p.size() == cat.size());
    for (const auto& row : r.forward->p) {
        double s = 0.0;
        for (double p : row) s += p;
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("vanishing density is reported") {
    Theta th = table_theta();
    th.boost.A = 0.0;
    const Catalog cat({{0.5, 0.5, 0.5, 3.0}, {0.6, 0.5, 0.5, 3.0}}, fixtures::unit_square(), 1.0, 3.0);
    const BackgroundDensity bg({{0.2, 0.2}}, 1e-3, 1e-3, Region::rectangle(0.0, 1.0, 0.0, 1.0));
    const LogLikResult r = log_likelihood(th, cat, bg);
    CHECK_FALSE(r.finite());
    CHECK(r.total == -INFINITY);
}

TEST_CASE("ground intensity") {
    Theta th = table_theta();
    th.hazard = {HazardFamily::exponential, 1.0, 0.8};
    const Catalog cat = five_events();
    const BackgroundDensity bg = fixtures::square_background();
    CHECK(ground_intensity(th, cat, bg, 1.7, 0.5, 0.5) ==
          doctest::Approx(bg.density(0.5, 0.5) / 0.8 + phi(th, cat, 1.7, 0.5, 0.5)).epsilon(1e-12));

    th = table_theta();
    CHECK(ground_intensity(th, cat, bg, 0.31, 0.4, 0.4) ==
          doctest::Approx(oracle::mu_ref(th.hazard, 0.01) * bg.density(0.4, 0.4) + phi(th, cat, 0.31, 0.4, 0.4))
              .epsilon(1e-12));

    // generic time against branching-vector enumeration over the history
    const Theta t3 = th.with_m0(3.0);
    const double t = 1.9;
    const auto ev = cat.events();
    const std::size_t h = 4;  // events before t
    std::vector<double> nu(h), ph(h);
    for (std::size_t i = 0; i < h; ++i) {
        nu[i] = bg.density(ev[i].lon, ev[i].lat);
        ph[i] = oracle::phi_at(t3, ev, i);
    }
    double num = 0.0, den = 0.0;
    for (unsigned mask = 0; mask < (1u << (h - 1)); ++mask) {
        double lm = 0.0;
        const double lw = oracle::branch_log_weight(t3, ev, h, mask, nu, ph, t, &lm);
        if (!std::isfinite(lw)) continue;
        num += std::exp(lw) * oracle::mu_ref(t3.hazard, t - lm);
        den += std::exp(lw);
    }
    const double want = num / den * bg.density(0.5, 0.6) + phi(th, cat, t, 0.5, 0.6);
    CHECK(ground_intensity(th, cat, bg, t, 0.5, 0.6) == doctest::Approx(want).epsilon(1e-10));
}
