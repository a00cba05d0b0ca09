#include "retas/estimation.hpp"

#include "retas/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace retas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Unconstrained search coordinate for each natural parameter.
double to_search(std::size_t k, double v) {
    return k == static_cast<std::size_t>(Param::p) ? std::log(v - 1.0) : std::log(v);
}

double from_search(std::size_t k, double z) {
    return k == static_cast<std::size_t>(Param::p) ? 1.0 + std::exp(z) : std::exp(z);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
}

} // namespace

ParamVector to_vector(const Theta& t) {
    return {t.hazard.alpha, t.hazard.beta, t.omori.p, t.omori.c, t.spatial.sigma1, t.spatial.sigma2,
            t.boost.A,      t.boost.delta};
}

Theta from_vector(const ParamVector& v, HazardFamily family, const MagnitudeParams& magnitude) {
    Theta t;
    t.hazard = {family, family == HazardFamily::exponential ? 1.0 : v[0], v[1]};
    t.omori = {v[2], v[3]};
    t.spatial = {v[4], v[5]};
    t.boost = {v[6], v[7], magnitude.m0};
    t.magnitude = magnitude;
    return t;
}

ParamMask free_parameters(HazardFamily family) {
    ParamMask m;
    m.fill(true);
    m[static_cast<std::size_t>(Param::alpha)] = family != HazardFamily::exponential;
    return m;
}

Eigen::MatrixXd hessian_fd(const Objective& f, std::span<const double> x, std::span<const double> max_step) {
    const std::size_t n = x.size();
    std::vector<double> h(n);
    for (std::size_t k = 0; k < n; ++k) {
        h[k] = 1e-4 * (1.0 + std::fabs(x[k]));
        if (k < max_step.size()) h[k] = std::min(h[k], max_step[k]);
    }
    std::vector<double> z(x.begin(), x.end());
    const double f0 = f(z);
    Eigen::MatrixXd H(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = x[i] + h[i];
        const double fp = f(z);
        z[i] = x[i] - h[i];
        const double fm = f(z);
        z[i] = x[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for (std::size_t j = 0; j < i; ++j) {
            auto at = [&](double si, double sj) {
                z[i] = x[i] + si * h[i];
                z[j] = x[j] + sj * h[j];
                const double v = f(z);
                z[i] = x[i];
                z[j] = x[j];
                return v;
            };
            const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h[i] * h[j]);
            H(i, j) = v;
            H(j, i) = v;
        }
    }
    return 0.5 * (H + H.transpose());
}

std::optional<Eigen::VectorXd> standard_errors(const Eigen::MatrixXd& hessian) {
    if (hessian.size() == 0 || !hessian.allFinite()) return std::nullopt;
    const Eigen::MatrixXd info = -hessian;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    if (eig.info() != Eigen::Success) return std::nullopt;
    const auto& ev = eig.eigenvalues();
    if (!(ev.minCoeff() > 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff()))) return std::nullopt;
    const Eigen::MatrixXd cov = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    Eigen::VectorXd se = cov.diagonal();
    if (!(se.minCoeff() > 0.0)) return std::nullopt;
    return se.cwiseSqrt();
}

double aic(const FitResult& fit) { return 2.0 * fit.n_params - 2.0 * fit.loglik; }

std::pair<double, double> nearest_neighbour_dispersion(const Catalog& catalog) {
    const auto ev = catalog.events();
    std::vector<double> dxs, dys;
    for (std::size_t i = 1; i < ev.size(); ++i) {
        double best = kInf;
        std::size_t arg = 0;
        for (std::size_t k = 0; k < i; ++k) {
            const double dx = ev[i].lon - ev[k].lon, dy = ev[i].lat - ev[k].lat;
            const double d2 = dx * dx + dy * dy;
            if (d2 < best) {
                best = d2;
                arg = k;
            }
        }
        dxs.push_back(std::fabs(ev[i].lon - ev[arg].lon));
        dys.push_back(std::fabs(ev[i].lat - ev[arg].lat));
    }
    if (dxs.empty()) return {0.01, 0.01};
    // 1.4826 * median absolute offset estimates a normal scale
    return {std::max(1.4826 * median(dxs), 1e-4), std::max(1.4826 * median(dys), 1e-4)};
}

FitResult fit(const Catalog& catalog, const BackgroundDensity& background, HazardFamily family,
              std::optional<Theta> init, const FitOptions& options) {
    if (catalog.empty()) throw ModelError("cannot fit an empty catalog");
    if (!init) init = warm_start_ladder(catalog, background, family, options.optimizer);

    MagnitudeParams magnitude{magnitude_rate_mle(catalog), catalog.m0()};
    Theta start = init->with_m0(catalog.m0());
    start.hazard.family = family;
    if (family == HazardFamily::exponential) start.hazard.alpha = 1.0;
    start.magnitude = magnitude;

    const LikelihoodEvaluator eval(catalog, background, options.temporal_only);
    ParamMask mask = free_parameters(family);
    for (std::size_t k = 0; k < kNumParams; ++k) mask[k] = mask[k] && !options.fixed[k];
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < kNumParams; ++k)
        if (mask[k]) idx.push_back(k);

    const ParamVector base = to_vector(start);
    auto spatiotemporal = [&](const ParamVector& v) {
        try {
            return eval.forward_pass(from_vector(v, family, magnitude), nullptr);
        } catch (const ModelError&) {
            return -kInf;
        }
    };
    const Objective search = [&](std::span<const double> z) {
        ParamVector v = base;
        for (std::size_t r = 0; r < idx.size(); ++r) v[idx[r]] = from_search(idx[r], z[r]);
        return -spatiotemporal(v);
    };

    std::vector<double> z0(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) z0[r] = to_search(idx[r], base[idx[r]]);
    {
        std::string diag;
        double l0 = -kInf;
        try {
            l0 = eval.forward_pass(start, nullptr, &diag);
        } catch (const ModelError& e) {
            diag = e.what();
        }
        if (!std::isfinite(l0))
            throw ModelError("log-likelihood is -inf at the initial parameters (" + diag +
                             "); choose a different init");
    }

    const OptimizeResult opt = minimize(search, z0, options.optimizer);
    ParamVector best = base;
    for (std::size_t r = 0; r < idx.size(); ++r) best[idx[r]] = from_search(idx[r], opt.x[r]);

    FitResult out;
    out.family = family;
    out.theta_hat = from_vector(best, family, magnitude);
    out.estimated = mask;
    out.loglik = -opt.value + magnitude_loglik(magnitude, catalog.events());
    out.n_params = static_cast<int>(idx.size()) + 1;
    out.aic = aic(out);
    out.convergence = {opt.converged, opt.simplex_iterations, opt.polish_iterations, opt.gradient_norm,
                       opt.simplex_spread, opt.evaluations};
    out.se_gamma = magnitude.gamma_rate / std::sqrt(static_cast<double>(catalog.size()));

    if (options.compute_standard_errors && !idx.empty()) {
        std::vector<double> x(idx.size()), limit(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const double v = best[idx[r]];
            x[r] = v;
            limit[r] = 0.5 * (idx[r] == static_cast<std::size_t>(Param::p) ? v - 1.0 : v);
        }
        const Objective natural = [&](std::span<const double> xs) {
            ParamVector v = best;
            for (std::size_t r = 0; r < idx.size(); ++r) v[idx[r]] = xs[r];
            return spatiotemporal(v);
        };
        const auto se = standard_errors(hessian_fd(natural, x, limit));
        out.hessian_invertible = se.has_value();
        if (se) {
            ParamVector full;
            full.fill(std::numeric_limits<double>::quiet_NaN());
            for (std::size_t r = 0; r < idx.size(); ++r) full[idx[r]] = (*se)(static_cast<Eigen::Index>(r));
            out.se = full;
        } else {
            out.warnings.push_back("Hessian not negative definite; standard errors unavailable");
        }
    }
    if (!opt.converged) out.warnings.push_back("optimizer stopped at the iteration cap before converging");
    if (out.theta_hat.branching() >= 1.0)
        out.warnings.push_back("fitted branching ratio is not below 1 (supercritical)");
    return out;
}

Theta warm_start_ladder(const Catalog& catalog, const BackgroundDensity& background, HazardFamily family,
                        const OptimizeOptions& optimizer) {
    const std::size_t n = catalog.size();
    if (n < 2) throw ModelError("the warm-start ladder needs at least two events");
    const double T = catalog.horizon();
    const MagnitudeParams magnitude{magnitude_rate_mle(catalog), catalog.m0()};
    const auto [s1, s2] = nearest_neighbour_dispersion(catalog);

    auto rung = [&](const Theta& init, HazardFamily fam, std::initializer_list<Param> fixed, bool temporal) {
        FitOptions o;
        o.optimizer = optimizer;
        o.compute_standard_errors = false;
        o.temporal_only = temporal;
        for (Param p : fixed) o.fixed[static_cast<std::size_t>(p)] = true;
        return fit(catalog, background, fam, init, o).theta_hat;
    };

    // Poisson: closed-form rate with no triggering.
    Theta theta;
    theta.hazard = {HazardFamily::exponential, 1.0, T / static_cast<double>(n)};
    theta.omori = {1.5, 0.01};
    theta.spatial = {s1, s2};
    theta.boost = {0.0, 0.0, catalog.m0()};
    theta.magnitude = magnitude;

    // Temporal Hawkes: constant productivity.
    theta.boost.A = 0.3;
    theta.hazard.beta = T / (0.7 * static_cast<double>(n));
    theta = rung(theta, HazardFamily::exponential, {Param::sigma1, Param::sigma2, Param::delta}, true);

    // Temporal ETAS: magnitude-dependent productivity.
    theta.boost.delta = std::min(1.0, 0.5 * magnitude.gamma_rate);
    theta = rung(theta, HazardFamily::exponential, {Param::sigma1, Param::sigma2}, true);

    // Spatiotemporal ETAS.
    theta.spatial = {s1, s2};
    theta = rung(theta, HazardFamily::exponential, {}, false);
    if (family == HazardFamily::exponential) return theta;

    // Renewal shape enters at alpha = 1, where every family is exponential.
    theta.hazard.family = family;
    theta.hazard.alpha = 1.0;
    return rung(theta, family, {Param::p, Param::c, Param::sigma1, Param::sigma2, Param::A, Param::delta}, false);
}

} // namespace retas
