#pragma once

#include "retas/catalog.hpp"

#include <random>
#include <span>
#include <string>
#include <utility>

namespace retas {

enum class HazardFamily { exponential, weibull, gamma };

std::string to_string(HazardFamily family);
HazardFamily parse_family(const std::string& name);

/// Main-shock renewal hazard. `alpha` is the shape (fixed to 1 for the
/// exponential family), `beta` the scale in days.
struct HazardParams {
    HazardFamily family{HazardFamily::exponential};
    double alpha{1.0};
    double beta{1.0};

    void validate() const;
};

/// Modified Omori law g(t) = (p - 1)/c (1 + t/c)^-p.
struct OmoriParams {
    double p{2.0};
    double c{0.01};

    void validate() const;
};

/// Independent-marginal bivariate normal aftershock spread, in degrees.
struct SpatialKernelParams {
    double sigma1{0.01};
    double sigma2{0.01};

    void validate() const;
};

/// kappa(m) = A exp(delta (m - m0)).
struct BoostParams {
    double A{0.5};
    double delta{1.0};
    double m0{0.0};

    void validate() const;
};

/// Gutenberg-Richter law J(m) = gamma exp(-gamma (m - m0)), gamma a rate.
struct MagnitudeParams {
    double gamma_rate{1.0};
    double m0{0.0};

    void validate() const;
};

// -- renewal hazard ---------------------------------------------------------

/// mu(t); throws ModelError for t <= 0.
double hazard(const HazardParams& h, double t);

/// Integral of mu over [t0, t1], 0 <= t0 <= t1.
double cumulative_hazard(const HazardParams& h, double t0, double t1);

/// Integral of mu over [0, t].
double cumulative_hazard(const HazardParams& h, double t);

/// Expected waiting time between main-shocks.
double mean_waiting_time(const HazardParams& h);

// -- aftershock response ----------------------------------------------------

double omori_density(const OmoriParams& o, double t);
double omori_cdf(const OmoriParams& o, double t);
/// 1 - omori_cdf, computed without cancellation.
double omori_survival(const OmoriParams& o, double t);

double spatial_density(const SpatialKernelParams& s, double dx, double dy);

/// Mass of the kernel centred at `center` that falls inside `rect`.
double spatial_rect_integral(const SpatialKernelParams& s, std::pair<double, double> center, const Region& rect);

double boost(const BoostParams& b, double m);

// -- magnitudes -------------------------------------------------------------

double magnitude_density(const MagnitudeParams& mp, double m);
double magnitude_sample(const MagnitudeParams& mp, std::mt19937_64& rng);
/// Closed-form MLE 1 / mean(m_i - m0).
double magnitude_rate_mle(std::span<const Event> events, double m0);
double magnitude_rate_mle(const Catalog& catalog);
/// sum_i log J(m_i).
double magnitude_loglik(const MagnitudeParams& mp, std::span<const Event> events);

/// E[kappa(M)], M ~ J: A gamma / (gamma - delta). Throws when gamma <= delta.
double branching_ratio(const BoostParams& b, const MagnitudeParams& mp);

} // namespace retas
