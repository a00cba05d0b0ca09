#pragma once

#include "retas/background.hpp"
#include "retas/likelihood.hpp"
#include "retas/random.hpp"
#include "retas/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace fixtures {

inline retas::Region unit_square() { return retas::Region::rectangle(0.0, 1.0, 0.0, 1.0); }

inline retas::BackgroundDensity square_background() {
    return retas::BackgroundDensity({{0.3, 0.4}, {0.7, 0.65}, {0.5, 0.2}}, 0.12, 0.15, unit_square());
}

inline double draw(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * retas::uniform01(rng); }

/// Random subcritical theta; family cycles with k.
inline retas::Theta random_theta(std::mt19937_64& rng, int k, double sigma_lo = 0.03, double sigma_hi = 0.15) {
    retas::Theta th;
    switch (k % 3) {
    case 0:
        th.hazard = {retas::HazardFamily::exponential, 1.0, draw(rng, 0.4, 2.0)};
        break;
    case 1:
        th.hazard = {retas::HazardFamily::weibull, draw(rng, 0.5, 2.0), draw(rng, 0.4, 2.0)};
        break;
    default:
        th.hazard = {retas::HazardFamily::gamma, draw(rng, 0.6, 2.5), draw(rng, 0.3, 1.5)};
        break;
    }
    th.omori = {draw(rng, 1.3, 2.5), draw(rng, 0.005, 0.1)};
    th.spatial = {draw(rng, sigma_lo, sigma_hi), draw(rng, sigma_lo, sigma_hi)};
    th.boost = {draw(rng, 0.2, 0.6), draw(rng, 0.3, 1.0), 3.0};
    th.magnitude = {3.0, 3.0};
    return th;
}

/// Simulated catalog on the unit square (even k) or the plane (odd k).
inline retas::Catalog random_catalog(std::mt19937_64& rng, const retas::Theta& th, bool plane, double horizon) {
    retas::SimConfig cfg;
    cfg.theta = th;
    cfg.horizon = horizon;
    if (plane) {
        cfg.region = retas::Region::plane();
        cfg.background = retas::BackgroundDensity({{0.0, 0.0}}, 0.25, 0.5, retas::Region::plane());
    } else {
        cfg.region = unit_square();
        cfg.background = square_background();
    }
    return retas::simulate_catalog(cfg, rng);
}

inline const retas::BackgroundDensity& background_for(const retas::Catalog& cat) {
    static const retas::BackgroundDensity square = square_background();
    static const retas::BackgroundDensity plane({{0.0, 0.0}}, 0.25, 0.5, retas::Region::plane());
    return cat.region().unbounded ? plane : square;
}

/// Largest violation of sum_j p_ij = 1 and p_ij in [0, 1] over the forward
/// recursion.
inline double normalization_error(const retas::Theta& th, const retas::Catalog& cat,
                                  const retas::BackgroundDensity& bg) {
    retas::LikelihoodEvaluator ev(cat, bg);
    double worst = 0.0;
    retas::ForwardVisitor visit = [&](const retas::ForwardStep& s) {
        double sum = 0.0;
        for (double p : s.p) {
            sum += p;
            if (p < 0.0) worst = std::max(worst, -p);
            if (p > 1.0) worst = std::max(worst, p - 1.0);
            if (!std::isfinite(p)) worst = INFINITY;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    };
    ev.forward_pass(th.with_m0(cat.m0()), &visit);
    return worst;
}

} // namespace fixtures
