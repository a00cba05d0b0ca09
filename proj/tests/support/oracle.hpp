#pragma once

// Independent reference implementations used by the unit, oracle and
// acceptance tests. Nothing here calls the closed forms under test: hazards,
// Omori terms, kernel masses and CDFs are re-derived with Boost.Math, and
// marginal quantities are summed over branching vectors or integrated by
// quadrature.

#include "retas/background.hpp"
#include "retas/catalog.hpp"
#include "retas/likelihood.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

using retas::Event;
using retas::HazardFamily;
using retas::Region;
using retas::Theta;

inline double mu_ref(const retas::HazardParams& h, double t) {
    switch (h.family) {
    case HazardFamily::exponential:
        return 1.0 / h.beta;
    case HazardFamily::weibull:
        return h.alpha / h.beta * std::pow(t / h.beta, h.alpha - 1.0);
    case HazardFamily::gamma: {
        const double x = t / h.beta;
        const double log_pdf = (h.alpha - 1.0) * std::log(x) - x - boost::math::lgamma(h.alpha) - std::log(h.beta);
        return std::exp(log_pdf - std::log(boost::math::gamma_q(h.alpha, x)));
    }
    }
    return 0.0;
}

inline double cum_hazard(const retas::HazardParams& h, double t) {
    if (t <= 0.0) return 0.0;
    switch (h.family) {
    case HazardFamily::exponential:
        return t / h.beta;
    case HazardFamily::weibull:
        return std::pow(t / h.beta, h.alpha);
    case HazardFamily::gamma:
        return -std::log(boost::math::gamma_q(h.alpha, t / h.beta));
    }
    return 0.0;
}

inline double omori(const retas::OmoriParams& o, double t) { return (o.p - 1.0) / o.c * std::pow(1.0 + t / o.c, -o.p); }

inline double omori_mass(const retas::OmoriParams& o, double t) {
    return t <= 0.0 ? 0.0 : 1.0 - std::pow(1.0 + t / o.c, 1.0 - o.p);
}

inline double gauss(double z, double s) { return std::exp(-0.5 * z * z / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi)); }

inline double kernel(const retas::SpatialKernelParams& s, double dx, double dy) {
    return gauss(dx, s.sigma1) * gauss(dy, s.sigma2);
}

inline double axis_cdf_mass(double c, double s, double lo, double hi) {
    const double r = s * std::numbers::sqrt2;
    return 0.5 * (boost::math::erf((hi - c) / r) - boost::math::erf((lo - c) / r));
}

inline double kernel_mass(const retas::SpatialKernelParams& s, double x, double y, const Region& reg) {
    if (reg.unbounded) return 1.0;
    return axis_cdf_mass(x, s.sigma1, reg.lon_min, reg.lon_max) * axis_cdf_mass(y, s.sigma2, reg.lat_min, reg.lat_max);
}

inline double kappa(const Theta& th, double m) { return th.boost.A * std::exp(th.boost.delta * (m - th.boost.m0)); }

inline double log_j(const Theta& th, double m) {
    return std::log(th.magnitude.gamma_rate) - th.magnitude.gamma_rate * (m - th.magnitude.m0);
}

inline double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

/// Triggering density at event i from events before it.
inline double phi_at(const Theta& th, std::span<const Event> ev, std::size_t i) {
    double s = 0.0;
    for (std::size_t k = 0; k < i; ++k)
        s += kappa(th, ev[k].magnitude) * omori(th.omori, ev[i].time - ev[k].time) *
             kernel(th.spatial, ev[i].lon - ev[k].lon, ev[i].lat - ev[k].lat);
    return s;
}

/// Log of the complete-data density for the branching vector encoded in
/// `mains` (event 0 always a main-shock), renewal survival up to `until`.
/// Returns -inf for impossible vectors. Excludes the common exp(-Phi) and
/// magnitude factors.
inline double branch_log_weight(const Theta& th, std::span<const Event> ev, std::size_t upto, unsigned mask,
                                const std::vector<double>& nu, const std::vector<double>& phi, double until,
                                double* last_main) {
    double lw = 0.0, lm = 0.0;
    for (std::size_t i = 0; i < upto; ++i) {
        const bool main = i == 0 || (mask >> (i - 1)) & 1u;
        if (main) {
            const double gap = ev[i].time - lm;
            lw += std::log(mu_ref(th.hazard, gap)) + std::log(nu[i]) - cum_hazard(th.hazard, gap);
            lm = ev[i].time;
        } else {
            if (!(phi[i] > 0.0)) return -std::numeric_limits<double>::infinity();
            lw += std::log(phi[i]);
        }
    }
    lw -= cum_hazard(th.hazard, until - lm);
    if (last_main) *last_main = lm;
    return lw;
}

/// Log-likelihood by summing the complete-data density over every
/// admissible branching vector (2^(n-1) of them).
inline double exhaustive_loglik(const Theta& theta, const retas::Catalog& cat, const retas::BackgroundDensity& bg) {
    const Theta th = theta.with_m0(cat.m0());
    const auto ev = cat.events();
    const std::size_t n = ev.size();
    std::vector<double> nu(n), phi(n);
    for (std::size_t i = 0; i < n; ++i) {
        nu[i] = bg.density(ev[i].lon, ev[i].lat);
        phi[i] = phi_at(th, ev, i);
    }
    double mags = 0.0, trig = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mags += log_j(th, ev[k].magnitude);
        trig += kappa(th, ev[k].magnitude) * omori_mass(th.omori, cat.horizon() - ev[k].time) *
                kernel_mass(th.spatial, ev[k].lon, ev[k].lat, cat.region());
    }
    if (n == 0) return -cum_hazard(th.hazard, cat.horizon());
    std::vector<double> terms;
    for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask)
        terms.push_back(branch_log_weight(th, ev, n, mask, nu, phi, cat.horizon(), nullptr));
    return log_sum_exp(terms) - trig + mags;
}

/// Classical ETAS log-likelihood: sum log lambda_g - integral of lambda_g,
/// valid for the exponential hazard only.
inline double classical_etas_loglik(const Theta& theta, const retas::Catalog& cat, const retas::BackgroundDensity& bg) {
    const Theta th = theta.with_m0(cat.m0());
    const auto ev = cat.events();
    double s = 0.0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        s += std::log(bg.density(ev[i].lon, ev[i].lat) / th.hazard.beta + phi_at(th, ev, i));
        s += log_j(th, ev[i].magnitude);
        s -= kappa(th, ev[i].magnitude) * omori_mass(th.omori, cat.horizon() - ev[i].time) *
             kernel_mass(th.spatial, ev[i].lon, ev[i].lat, cat.region());
    }
    return s - cat.horizon() / th.hazard.beta;
}

/// Adaptive Gauss-Kronrod over [a, b], split at every breakpoint inside.
inline double integrate(const std::function<double(double)>& f, double a, double b, std::vector<double> cuts = {}) {
    cuts.push_back(a);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double lo = std::max(a, cuts[k]), hi = std::min(b, cuts[k + 1]);
        if (!(hi > lo)) continue;
        s += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 10, 1e-12);
    }
    return s;
}

inline double integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b) {
    static boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, a, b, 1e-12);
}

/// Residuals of event i (0-based) from exact conditional densities built by
/// enumerating the branching vectors of events 0..i-1 and integrating
/// numerically. Region must be bounded.
struct ResidualOracle {
    double U{0.0}, V{0.0}, W{0.0};
    std::vector<double> p_tau;  // posterior of the most recent main-shock index
};

inline ResidualOracle residual_oracle(const Theta& theta, const retas::Catalog& cat, const retas::BackgroundDensity& bg,
                                      std::size_t i) {
    const Theta th = theta.with_m0(cat.m0());
    const auto ev = cat.events();
    const Region& reg = cat.region();
    const std::size_t n = ev.size();
    std::vector<double> nu(n), phi(n);
    for (std::size_t k = 0; k < n; ++k) {
        nu[k] = bg.density(ev[k].lon, ev[k].lat);
        phi[k] = phi_at(th, ev, k);
    }
    ResidualOracle out;
    const double ti = ev[i].time, xi = ev[i].lon, yi = ev[i].lat;

    // Background pieces along each axis, integrated numerically per mixture
    // component (the mixture is separable in x and y).
    const auto& centers = bg.centers();
    auto nu_x_mass = [&](double lo, double hi) {
        // integral over x in [lo, hi] and y over the region of nu
        if (bg.is_uniform()) return (hi - lo) / (reg.lon_max - reg.lon_min);
        double s = 0.0;
        for (const auto& [cx, cy] : centers) {
            const double hx = bg.bandwidth_x(), hy = bg.bandwidth_y();
            auto fx = [&](double x) { return gauss(x - cx, hx); };
            auto fy = [&](double y) { return gauss(y - cy, hy); };
            s += integrate(fx, lo, hi, {cx - 3 * hx, cx, cx + 3 * hx}) *
                 integrate(fy, reg.lat_min, reg.lat_max, {cy - 3 * hy, cy, cy + 3 * hy});
        }
        return s / (static_cast<double>(centers.size()) * bg.norm_const());
    };

    if (i == 0) {
        out.U = integrate_endpoint_singular([&](double t) { return mu_ref(th.hazard, t) * std::exp(-cum_hazard(th.hazard, t)); },
                                            0.0, ti);
        out.V = nu_x_mass(reg.lon_min, xi);
        auto g = [&](double y) { return bg.density(xi, y); };
        std::vector<double> cuts;
        for (const auto& [cx, cy] : centers) cuts.insert(cuts.end(), {cy - 3 * bg.bandwidth_y(), cy, cy + 3 * bg.bandwidth_y()});
        out.W = integrate(g, reg.lat_min, yi, cuts) / integrate(g, reg.lat_min, reg.lat_max, cuts);
        return out;
    }

    const double tp = ev[i - 1].time;
    // Configurations of events 0..i-1 with their last main-shock.
    struct Config {
        double w;
        double lm;
        std::size_t lm_index;
    };
    std::vector<Config> configs;
    std::vector<double> logs;
    std::vector<std::pair<double, std::size_t>> lms;
    for (unsigned mask = 0; mask < (1u << (i - 1)); ++mask) {
        double lm = 0.0;
        const double lw = branch_log_weight(th, ev, i, mask, nu, phi, tp, &lm);
        logs.push_back(lw);
        std::size_t idx = 0;
        for (std::size_t k = 0; k < i; ++k)
            if (k == 0 || (mask >> (k - 1)) & 1u) idx = k;
        lms.push_back({lm, idx});
    }
    const double norm = log_sum_exp(logs);
    for (std::size_t c = 0; c < logs.size(); ++c)
        if (std::isfinite(logs[c])) configs.push_back({std::exp(logs[c] - norm), lms[c].first, lms[c].second});

    std::vector<double> kap(i), rmass(i);
    for (std::size_t k = 0; k < i; ++k) {
        kap[k] = kappa(th, ev[k].magnitude);
        rmass[k] = kernel_mass(th.spatial, ev[k].lon, ev[k].lat, reg);
    }
    // time enters as the offset s = t - tau_{i-1} so the clocks near zero stay exact
    auto phi_marginal = [&](double s) {
        double v = 0.0;
        for (std::size_t k = 0; k < i; ++k) v += kap[k] * omori(th.omori, (tp - ev[k].time) + s) * rmass[k];
        return v;
    };
    auto phi_integral = [&](double s) {
        double v = 0.0;
        for (std::size_t k = 0; k < i; ++k)
            v += kap[k] * (omori_mass(th.omori, (tp - ev[k].time) + s) - omori_mass(th.omori, tp - ev[k].time)) *
                 rmass[k];
        return v;
    };
    auto survival = [&](const Config& c, double s) {
        const double a = tp - c.lm;
        return std::exp(-(cum_hazard(th.hazard, a + s) - cum_hazard(th.hazard, a)) - phi_integral(s));
    };
    auto density = [&](double s) {
        double v = 0.0;
        for (const Config& c : configs)
            v += c.w * (mu_ref(th.hazard, (tp - c.lm) + s) + phi_marginal(s)) * survival(c, s);
        return v;
    };
    const double gap = ti - tp;
    out.U = integrate_endpoint_singular(density, 0.0, gap);

    // Mixture weights at tau_i: M multiplies nu, Wt multiplies phi.
    double M = 0.0, Wt = 0.0;
    out.p_tau.assign(i, 0.0);
    for (const Config& c : configs) {
        const double sv = c.w * survival(c, gap);
        const double mu = mu_ref(th.hazard, ti - c.lm);
        M += sv * mu;
        Wt += sv;
        out.p_tau[c.lm_index] += sv * (mu + phi_marginal(gap));
    }
    double pt = 0.0;
    for (double v : out.p_tau) pt += v;
    for (double& v : out.p_tau) v /= pt;

    // V: longitude CDF of the (t = tau_i) spatial density.
    std::vector<double> a(i);
    for (std::size_t k = 0; k < i; ++k) a[k] = kap[k] * omori(th.omori, ti - ev[k].time);
    auto phi_x_mass = [&](double lo, double hi) {
        double s = 0.0;
        for (std::size_t k = 0; k < i; ++k) {
            const double s1 = th.spatial.sigma1, s2 = th.spatial.sigma2;
            const double cx = ev[k].lon, cy = ev[k].lat;
            auto fx = [&](double x) { return gauss(x - cx, s1); };
            auto fy = [&](double y) { return gauss(y - cy, s2); };
            s += a[k] * integrate(fx, lo, hi, {cx - 6 * s1, cx - 2 * s1, cx, cx + 2 * s1, cx + 6 * s1}) *
                 integrate(fy, reg.lat_min, reg.lat_max, {cy - 6 * s2, cy - 2 * s2, cy, cy + 2 * s2, cy + 6 * s2});
        }
        return s;
    };
    out.V = (M * nu_x_mass(reg.lon_min, xi) + Wt * phi_x_mass(reg.lon_min, xi)) /
            (M * nu_x_mass(reg.lon_min, reg.lon_max) + Wt * phi_x_mass(reg.lon_min, reg.lon_max));

    // W: latitude CDF along the line x = x_i.
    std::vector<double> cuts;
    for (std::size_t k = 0; k < i; ++k) {
        const double s2 = th.spatial.sigma2, cy = ev[k].lat;
        cuts.insert(cuts.end(), {cy - 6 * s2, cy - 2 * s2, cy, cy + 2 * s2, cy + 6 * s2});
    }
    for (const auto& [cx, cy] : centers) cuts.insert(cuts.end(), {cy - 3 * bg.bandwidth_y(), cy, cy + 3 * bg.bandwidth_y()});
    auto line = [&](double y) {
        double trig = 0.0;
        for (std::size_t k = 0; k < i; ++k) trig += a[k] * kernel(th.spatial, xi - ev[k].lon, y - ev[k].lat);
        return M * bg.density(xi, y) + Wt * trig;
    };
    out.W = integrate(line, reg.lat_min, yi, cuts) / integrate(line, reg.lat_min, reg.lat_max, cuts);
    return out;
}

/// First `n` events of a catalog, censored midway to the next event.
inline retas::Catalog truncate(const retas::Catalog& cat, std::size_t n) {
    if (cat.size() <= n) return cat;
    std::vector<Event> ev(cat.events().begin(), cat.events().begin() + static_cast<std::ptrdiff_t>(n));
    const double T = 0.5 * (cat[n - 1].time + cat[n].time);
    return retas::Catalog(std::move(ev), cat.region(), T, cat.m0());
}

} // namespace oracle
