#include "retas/kernels.hpp"

#include "retas/error.hpp"
#include "retas/random.hpp"
#include "retas/special.hpp"

#include <cmath>
#include <numbers>

namespace retas {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw ModelError(message);
}

} // namespace

std::string to_string(HazardFamily family) {
    switch (family) {
    case HazardFamily::exponential: return "exponential";
    case HazardFamily::weibull: return "weibull";
    case HazardFamily::gamma: return "gamma";
    }
    return "unknown";
}

HazardFamily parse_family(const std::string& name) {
    if (name == "exponential" || name == "etas") return HazardFamily::exponential;
    if (name == "weibull") return HazardFamily::weibull;
    if (name == "gamma") return HazardFamily::gamma;
    throw InputError("unknown hazard family '" + name + "' (expected exponential, weibull or gamma)");
}

void HazardParams::validate() const {
    require(alpha > 0.0 && std::isfinite(alpha), "hazard shape alpha must be positive");
    require(beta > 0.0 && std::isfinite(beta), "hazard scale beta must be positive");
    require(family != HazardFamily::exponential || alpha == 1.0, "exponential hazard requires alpha = 1");
}

void OmoriParams::validate() const {
    require(p > 1.0 && std::isfinite(p), "Omori shape p must exceed 1");
    require(c > 0.0 && std::isfinite(c), "Omori scale c must be positive");
}

void SpatialKernelParams::validate() const {
    require(sigma1 > 0.0 && std::isfinite(sigma1), "spatial sigma1 must be positive");
    require(sigma2 > 0.0 && std::isfinite(sigma2), "spatial sigma2 must be positive");
}

void BoostParams::validate() const {
    require(A >= 0.0 && std::isfinite(A), "boost scale A must be nonnegative");
    require(delta >= 0.0 && std::isfinite(delta), "boost exponent delta must be nonnegative");
}

void MagnitudeParams::validate() const {
    require(gamma_rate > 0.0 && std::isfinite(gamma_rate), "magnitude rate gamma must be positive");
}

double hazard(const HazardParams& h, double t) {
    if (!(t > 0.0)) throw ModelError("hazard evaluated at non-positive time " + std::to_string(t));
    switch (h.family) {
    case HazardFamily::exponential: return 1.0 / h.beta;
    case HazardFamily::weibull: return h.alpha / h.beta * std::pow(t / h.beta, h.alpha - 1.0);
    case HazardFamily::gamma: {
        const double x = t / h.beta;
        const double log_num = (h.alpha - 1.0) * std::log(x) - x - std::lgamma(h.alpha);
        return std::exp(log_num - special::log_regularized_upper_gamma(h.alpha, x)) / h.beta;
    }
    }
    return 0.0;
}

double cumulative_hazard(const HazardParams& h, double t) {
    if (!(t >= 0.0)) throw ModelError("cumulative hazard requires t >= 0");
    switch (h.family) {
    case HazardFamily::exponential: return t / h.beta;
    case HazardFamily::weibull: return std::pow(t / h.beta, h.alpha);
    case HazardFamily::gamma: return -special::log_regularized_upper_gamma(h.alpha, t / h.beta);
    }
    return 0.0;
}

double cumulative_hazard(const HazardParams& h, double t0, double t1) {
    if (!(t0 >= 0.0) || !(t1 >= t0)) throw ModelError("cumulative hazard requires 0 <= t0 <= t1");
    if (t0 == t1) return 0.0;
    if (h.family == HazardFamily::exponential) return (t1 - t0) / h.beta;
    return cumulative_hazard(h, t1) - cumulative_hazard(h, t0);
}

double mean_waiting_time(const HazardParams& h) {
    switch (h.family) {
    case HazardFamily::exponential: return h.beta;
    case HazardFamily::weibull: return h.beta * std::tgamma(1.0 + 1.0 / h.alpha);
    case HazardFamily::gamma: return h.alpha * h.beta;
    }
    return 0.0;
}

double omori_density(const OmoriParams& o, double t) {
    if (t < 0.0) return 0.0;
    return (o.p - 1.0) / o.c * std::exp(-o.p * std::log1p(t / o.c));
}

double omori_survival(const OmoriParams& o, double t) {
    if (t <= 0.0) return 1.0;
    return std::exp((1.0 - o.p) * std::log1p(t / o.c));
}

double omori_cdf(const OmoriParams& o, double t) {
    if (t <= 0.0) return 0.0;
    return -std::expm1((1.0 - o.p) * std::log1p(t / o.c));
}

double spatial_density(const SpatialKernelParams& s, double dx, double dy) {
    const double zx = dx / s.sigma1;
    const double zy = dy / s.sigma2;
    return std::exp(-0.5 * (zx * zx + zy * zy)) / (2.0 * std::numbers::pi * s.sigma1 * s.sigma2);
}

double spatial_rect_integral(const SpatialKernelParams& s, std::pair<double, double> center, const Region& rect) {
    if (rect.unbounded) return 1.0;
    const auto [cx, cy] = center;
    return special::normal_interval((rect.lon_min - cx) / s.sigma1, (rect.lon_max - cx) / s.sigma1) *
           special::normal_interval((rect.lat_min - cy) / s.sigma2, (rect.lat_max - cy) / s.sigma2);
}

double boost(const BoostParams& b, double m) { return b.A * std::exp(b.delta * (m - b.m0)); }

double magnitude_density(const MagnitudeParams& mp, double m) {
    if (m < mp.m0) return 0.0;
    return mp.gamma_rate * std::exp(-mp.gamma_rate * (m - mp.m0));
}

double magnitude_sample(const MagnitudeParams& mp, std::mt19937_64& rng) {
    return mp.m0 - std::log1p(-uniform01(rng)) / mp.gamma_rate;
}

double magnitude_rate_mle(std::span<const Event> events, double m0) {
    if (events.empty()) throw ModelError("magnitude rate MLE needs at least one event");
    double excess = 0.0;
    for (const Event& e : events) excess += e.magnitude - m0;
    if (!(excess > 0.0)) throw ModelError("magnitude rate MLE undefined: all magnitudes equal the threshold");
    return static_cast<double>(events.size()) / excess;
}

double magnitude_rate_mle(const Catalog& catalog) { return magnitude_rate_mle(catalog.events(), catalog.m0()); }

double magnitude_loglik(const MagnitudeParams& mp, std::span<const Event> events) {
    double sum = 0.0;
    const double log_rate = std::log(mp.gamma_rate);
    for (const Event& e : events) sum += log_rate - mp.gamma_rate * (e.magnitude - mp.m0);
    return sum;
}

double branching_ratio(const BoostParams& b, const MagnitudeParams& mp) {
    if (!(mp.gamma_rate > b.delta))
        throw ModelError("infinite expected offspring: magnitude rate gamma must exceed boost exponent delta");
    return b.A * mp.gamma_rate / (mp.gamma_rate - b.delta);
}

} // namespace retas
