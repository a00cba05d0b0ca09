#pragma once

#include "retas/background.hpp"
#include "retas/catalog.hpp"
#include "retas/kernels.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace retas {

/// Full RETAS parameter set. Boost and magnitude laws share the catalog m0.
struct Theta {
    HazardParams hazard;
    OmoriParams omori;
    SpatialKernelParams spatial;
    BoostParams boost;
    MagnitudeParams magnitude;

    void validate() const;
    /// Expected direct offspring per event; +inf when gamma <= delta.
    double branching() const;
    /// Copy with both m0 fields set.
    Theta with_m0(double m0) const;
};

/// Forward-recursion quantities retained for diagnostics and residuals.
/// Row i (i = 1..n-1) holds the most-recent-main-shock probabilities p_i.
/// over j < i and the interval survival factors S_i.; row n is the
/// censoring step over (tau_n, T].
struct ForwardState {
    std::vector<std::vector<double>> p;
    std::vector<std::vector<double>> S;
    std::vector<double> log_terms;  // log d_1, log sum_j p_ij d_ij, ..., log sum_j p_nj S_nj
};

struct LogLikResult {
    double total{0.0};
    double spatiotemporal{0.0};
    double magnitude{0.0};
    double triggered_mass{0.0};
    std::optional<ForwardState> forward;
    /// Names the first event at which the density vanished, if any.
    std::string diagnostic;

    bool finite() const { return diagnostic.empty(); }
};

/// What the forward recursion exposes at each step. `index` is the event
/// being entered (1..n-1) or n for the censoring interval.
struct ForwardStep {
    std::size_t index;
    std::span<const double> p;       // p over j < index, before the update
    std::span<const double> S;       // survival of each renewal clock over the interval
    std::span<const double> mu;      // hazard at the event for each j (empty at n)
    double phi{0.0};                 // triggering intensity at the event (0 at n)
    double nu{0.0};                  // background density at the event (0 at n)
    double log_scale{0.0};           // true survival factors are S * exp(log_scale)
};

using ForwardVisitor = std::function<void(const ForwardStep&)>;

/// Log-likelihood of a fixed catalog under varying parameters. Precomputes
/// everything that does not depend on Theta (background values at the
/// epicenters). With `temporal_only`, spatial factors are dropped
/// (nu = f = 1, no region truncation), giving the purely temporal model used
/// by the warm-start ladder.
class LikelihoodEvaluator {
public:
    LikelihoodEvaluator(const Catalog& catalog, const BackgroundDensity& background, bool temporal_only = false);

    LogLikResult evaluate(const Theta& theta, bool retain_forward = false) const;

    /// Run the recursion, calling `visit` at each step. Returns the
    /// spatiotemporal log-likelihood (or -inf).
    double forward_pass(const Theta& theta, const ForwardVisitor* visit, std::string* diagnostic = nullptr) const;

    /// P(I(t) = j | H_t-) for the j < events-before-t, at time t.
    std::vector<double> mainshock_probabilities(const Theta& theta, double t) const;

    const Catalog& catalog() const { return catalog_; }
    const BackgroundDensity& background() const { return background_; }
    bool temporal_only() const { return temporal_only_; }
    std::span<const double> nu() const { return nu_; }

    /// kappa(m_k) g(t - tau_k) f(x - x_k, y - y_k) summed over tau_k < t.
    double phi(const Theta& theta, double t, double x, double y) const;

private:
    double phi_at_event(const Theta& theta, std::size_t i) const;
    double triggered_total(const Theta& theta) const;

    const Catalog& catalog_;
    const BackgroundDensity& background_;
    bool temporal_only_;
    std::vector<double> nu_;
    std::vector<double> t_, x_, y_, m_;
};

/// One-shot evaluation.
LogLikResult log_likelihood(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background,
                            bool retain_forward = false);

double phi(const Theta& theta, const Catalog& catalog, double t, double x, double y);

/// Triggering rate integrated over the catalog region at time t.
double phi_spatial_marginal(const Theta& theta, const Catalog& catalog, double t);

/// Expected number of triggered events in [t0, t1] x region from events
/// before t1.
double triggered_mass(const Theta& theta, const Catalog& catalog, double t0, double t1, const Region& region);

/// History-conditional ground intensity lambda_g(t, x, y | H_t-).
double ground_intensity(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background, double t,
                        double x, double y);

} // namespace retas
