#include "retas/likelihood.hpp"

#include "retas/error.hpp"
#include "retas/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace retas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cumulative hazard from 0 and hazard at the same lag, sharing the
// expensive part of the evaluation.
struct RenewalClock {
    explicit RenewalClock(const HazardParams& h)
        : h_(h), inv_beta_(1.0 / h.beta), lgamma_alpha_(std::lgamma(h.alpha)) {}

    // Returns Lambda(0, dt) and stores mu(dt) in `mu`. dt > 0.
    double operator()(double dt, double& mu) const {
        switch (h_.family) {
        case HazardFamily::exponential:
            mu = inv_beta_;
            return dt * inv_beta_;
        case HazardFamily::weibull: {
            const double lam = std::exp(h_.alpha * std::log(dt * inv_beta_));
            mu = h_.alpha * lam / dt;
            return lam;
        }
        case HazardFamily::gamma: {
            const double x = dt * inv_beta_;
            const double log_q = special::log_regularized_upper_gamma(h_.alpha, x);
            mu = std::exp((h_.alpha - 1.0) * std::log(x) - x - lgamma_alpha_ - log_q) * inv_beta_;
            return -log_q;
        }
        }
        return 0.0;
    }

    const HazardParams& h_;
    double inv_beta_;
    double lgamma_alpha_;
};

double rect_mass(const Theta& th, double x, double y, const Region& region) {
    return spatial_rect_integral(th.spatial, {x, y}, region);
}

} // namespace

void Theta::validate() const {
    hazard.validate();
    omori.validate();
    spatial.validate();
    boost.validate();
    magnitude.validate();
}

double Theta::branching() const {
    if (!(magnitude.gamma_rate > boost.delta)) return kInf;
    return branching_ratio(boost, magnitude);
}

Theta Theta::with_m0(double m0) const {
    Theta out = *this;
    out.boost.m0 = m0;
    out.magnitude.m0 = m0;
    return out;
}

LikelihoodEvaluator::LikelihoodEvaluator(const Catalog& catalog, const BackgroundDensity& background,
                                         bool temporal_only)
    : catalog_(catalog), background_(background), temporal_only_(temporal_only) {
    if (!temporal_only_ && !(background.region() == catalog.region()))
        throw InputError("background density region differs from the catalog region");
    const std::size_t n = catalog.size();
    nu_.resize(n);
    t_.resize(n);
    x_.resize(n);
    y_.resize(n);
    m_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Event& e = catalog[i];
        t_[i] = e.time;
        x_[i] = e.lon;
        y_[i] = e.lat;
        m_[i] = e.magnitude;
        nu_[i] = temporal_only_ ? 1.0 : background.density(e.lon, e.lat);
    }
}

double LikelihoodEvaluator::phi_at_event(const Theta& th, std::size_t i) const {
    if (th.boost.A == 0.0) return 0.0;
    const double p = th.omori.p;
    const double inv_c = 1.0 / th.omori.c;
    const double log_a = std::log(th.boost.A);
    const double delta = th.boost.delta;
    const double m0 = th.boost.m0;
    const double ti = t_[i];
    double sum = 0.0;
    if (temporal_only_) {
        for (std::size_t k = 0; k < i; ++k)
            sum += std::exp(log_a + delta * (m_[k] - m0) - p * std::log1p((ti - t_[k]) * inv_c));
        return sum * (p - 1.0) * inv_c;
    }
    const double h1 = 0.5 / (th.spatial.sigma1 * th.spatial.sigma1);
    const double h2 = 0.5 / (th.spatial.sigma2 * th.spatial.sigma2);
    const double xi = x_[i], yi = y_[i];
    for (std::size_t k = 0; k < i; ++k) {
        const double dx = xi - x_[k];
        const double dy = yi - y_[k];
        sum += std::exp(log_a + delta * (m_[k] - m0) - p * std::log1p((ti - t_[k]) * inv_c) - h1 * dx * dx -
                        h2 * dy * dy);
    }
    return sum * (p - 1.0) * inv_c / (2.0 * std::numbers::pi * th.spatial.sigma1 * th.spatial.sigma2);
}

double LikelihoodEvaluator::phi(const Theta& theta, double t, double x, double y) const {
    const Theta th = theta.with_m0(catalog_.m0());
    double sum = 0.0;
    for (std::size_t k = 0; k < t_.size() && t_[k] < t; ++k) {
        const double f = temporal_only_ ? 1.0 : spatial_density(th.spatial, x - x_[k], y - y_[k]);
        sum += boost(th.boost, m_[k]) * omori_density(th.omori, t - t_[k]) * f;
    }
    return sum;
}

double LikelihoodEvaluator::triggered_total(const Theta& th) const {
    if (th.boost.A == 0.0) return 0.0;
    const double T = catalog_.horizon();
    const Region& region = catalog_.region();
    double sum = 0.0;
    for (std::size_t j = 0; j < t_.size(); ++j) {
        const double r = (temporal_only_ || region.unbounded) ? 1.0 : rect_mass(th, x_[j], y_[j], region);
        sum += boost(th.boost, m_[j]) * omori_cdf(th.omori, T - t_[j]) * r;
    }
    return sum;
}

double LikelihoodEvaluator::forward_pass(const Theta& theta, const ForwardVisitor* visit,
                                         std::string* diagnostic) const {
    const Theta th = theta.with_m0(catalog_.m0());
    th.validate();
    const std::size_t n = t_.size();
    const double T = catalog_.horizon();
    auto fail = [&](const std::string& msg) {
        if (diagnostic) *diagnostic = msg;
        return -kInf;
    };

    if (n == 0) {
        const double ls = -cumulative_hazard(th.hazard, T);
        if (visit) {
            ForwardStep step{0, {}, {}, {}, 0.0, 0.0};
            (*visit)(step);
        }
        return ls;
    }
    if (!(t_[0] > 0.0)) return fail("event 0 occurs at time 0, where the renewal hazard is undefined");

    const RenewalClock clock(th.hazard);
    double mu_first = 0.0;
    const double lam_first = clock(t_[0], mu_first);
    double ls = std::log(mu_first) + std::log(nu_[0]) - lam_first;
    if (!std::isfinite(ls)) return fail("event 0: main-shock density vanishes at its epicenter (nu = 0)");

    std::vector<double> p(n, 0.0), lam_prev(n, 0.0), gap(n, 0.0), S(n, 0.0), mu(n, 0.0), trig(n, 0.0);
    p[0] = 1.0;
    std::size_t first_live = 0;

    for (std::size_t i = 1; i <= n; ++i) {
        const bool terminal = (i == n);
        const double ti = terminal ? T : t_[i];
        const double phi_i = terminal ? 0.0 : phi_at_event(th, i);
        const double nu_i = terminal ? 0.0 : nu_[i];
        lam_prev[i - 1] = 0.0;

        // Survival of each live renewal clock over (tau_{i-1}, tau_i], shifted
        // by the smallest integrated hazard so that long gaps do not underflow.
        double shift = kInf;
        for (std::size_t j = first_live; j < i; ++j) {
            const double lam = clock(ti - t_[j], mu[j]);
            gap[j] = lam - lam_prev[j];
            lam_prev[j] = lam;
            shift = std::min(shift, gap[j]);
        }
        double main_sum = 0.0;
        double total = 0.0;
        for (std::size_t j = first_live; j < i; ++j) {
            const double s = std::exp(-(gap[j] - shift));
            S[j] = s;
            if (terminal) {
                total += p[j] * s;
            } else {
                const double a = p[j] * mu[j] * nu_i * s;
                const double b = p[j] * phi_i * s;
                main_sum += a;
                trig[j] = b;
                total += a + b;
            }
        }
        if (visit) {
            std::fill(S.begin(), S.begin() + static_cast<std::ptrdiff_t>(first_live), 0.0);
            std::fill(mu.begin(), mu.begin() + static_cast<std::ptrdiff_t>(first_live), 0.0);
            ForwardStep step{i,
                             std::span<const double>(p.data(), i),
                             std::span<const double>(S.data(), i),
                             terminal ? std::span<const double>{} : std::span<const double>(mu.data(), i),
                             phi_i,
                             nu_i};
            step.log_scale = -shift;
            (*visit)(step);
        }
        if (!(total > 0.0) || !std::isfinite(total)) {
            if (terminal) return fail("censoring interval: survival probability vanishes");
            return fail("event " + std::to_string(i) + ": conditional density vanishes (nu = 0 and phi = 0)");
        }
        ls += std::log(total) - shift;
        if (terminal) break;

        const double inv = 1.0 / total;
        for (std::size_t j = first_live; j < i; ++j) p[j] = trig[j] * inv;
        p[i] = main_sum * inv;
        while (first_live < i && p[first_live] == 0.0) ++first_live;
    }
    return ls - triggered_total(th);
}

LogLikResult LikelihoodEvaluator::evaluate(const Theta& theta, bool retain_forward) const {
    const Theta th = theta.with_m0(catalog_.m0());
    LogLikResult out;
    ForwardState state;
    ForwardVisitor keep = [&](const ForwardStep& step) {
        const double scale = std::exp(step.log_scale);
        std::vector<double> s(step.S.begin(), step.S.end());
        double sum = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            const double rate = step.mu.empty() ? 1.0 : step.mu[j] * step.nu + step.phi;
            sum += step.p[j] * rate * s[j];
            s[j] *= scale;
        }
        state.p.emplace_back(step.p.begin(), step.p.end());
        state.S.push_back(std::move(s));
        state.log_terms.push_back(std::log(sum) + step.log_scale);
    };
    if (retain_forward && !t_.empty() && t_[0] > 0.0) {
        double mu0 = 0.0;
        const double lam0 = RenewalClock(th.hazard)(t_[0], mu0);
        state.log_terms.push_back(std::log(mu0) + std::log(nu_[0]) - lam0);
    }
    out.spatiotemporal = forward_pass(th, retain_forward ? &keep : nullptr, &out.diagnostic);
    out.magnitude = magnitude_loglik(th.magnitude, catalog_.events());
    out.triggered_mass = triggered_total(th);
    out.total = out.spatiotemporal + out.magnitude;
    if (retain_forward) out.forward = std::move(state);
    return out;
}

std::vector<double> LikelihoodEvaluator::mainshock_probabilities(const Theta& theta, double t) const {
    const Theta th = theta.with_m0(catalog_.m0());
    const std::size_t m = static_cast<std::size_t>(std::lower_bound(t_.begin(), t_.end(), t) - t_.begin());
    if (m == 0) return {};
    std::vector<double> post;
    ForwardVisitor grab = [&](const ForwardStep& step) {
        if (step.index == m) post.assign(step.p.begin(), step.p.end());
    };
    forward_pass(th, &grab, nullptr);
    if (post.empty()) return post;
    // Age each clock from tau_{m-1} to t.
    std::vector<double> gap(m);
    double shift = kInf;
    for (std::size_t j = 0; j < m; ++j) {
        const double from = t_[m - 1] - t_[j];
        gap[j] = cumulative_hazard(th.hazard, from, t - t_[j]);
        shift = std::min(shift, gap[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        post[j] *= std::exp(-(gap[j] - shift));
        sum += post[j];
    }
    for (double& v : post) v /= sum;
    return post;
}

LogLikResult log_likelihood(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background,
                            bool retain_forward) {
    return LikelihoodEvaluator(catalog, background).evaluate(theta, retain_forward);
}

double phi(const Theta& theta, const Catalog& catalog, double t, double x, double y) {
    const Theta th = theta.with_m0(catalog.m0());
    double sum = 0.0;
    for (const Event& e : catalog.events()) {
        if (!(e.time < t)) break;
        sum += boost(th.boost, e.magnitude) * omori_density(th.omori, t - e.time) *
               spatial_density(th.spatial, x - e.lon, y - e.lat);
    }
    return sum;
}

double phi_spatial_marginal(const Theta& theta, const Catalog& catalog, double t) {
    const Theta th = theta.with_m0(catalog.m0());
    double sum = 0.0;
    for (const Event& e : catalog.events()) {
        if (!(e.time < t)) break;
        sum += boost(th.boost, e.magnitude) * omori_density(th.omori, t - e.time) *
               rect_mass(th, e.lon, e.lat, catalog.region());
    }
    return sum;
}

double triggered_mass(const Theta& theta, const Catalog& catalog, double t0, double t1, const Region& region) {
    if (!(t1 >= t0)) throw ModelError("triggered_mass requires t0 <= t1");
    const Theta th = theta.with_m0(catalog.m0());
    double sum = 0.0;
    for (const Event& e : catalog.events()) {
        if (!(e.time < t1)) break;
        const double from = std::max(t0, e.time) - e.time;
        const double mass = omori_survival(th.omori, from) - omori_survival(th.omori, t1 - e.time);
        sum += boost(th.boost, e.magnitude) * mass * rect_mass(th, e.lon, e.lat, region);
    }
    return sum;
}

double ground_intensity(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background, double t,
                        double x, double y) {
    const Theta th = theta.with_m0(catalog.m0());
    if (!(t > 0.0)) throw ModelError("ground intensity requires t > 0");
    const LikelihoodEvaluator eval(catalog, background);
    const auto probs = eval.mainshock_probabilities(th, t);
    double renewal = 0.0;
    if (probs.empty()) {
        renewal = hazard(th.hazard, t);
    } else {
        for (std::size_t j = 0; j < probs.size(); ++j)
            if (probs[j] > 0.0) renewal += probs[j] * hazard(th.hazard, t - catalog[j].time);
    }
    return renewal * background.density(x, y) + phi(th, catalog, t, x, y);
}

} // namespace retas
