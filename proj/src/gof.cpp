#include "retas/gof.hpp"

#include "retas/error.hpp"
#include "retas/special.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <sstream>

namespace retas {

using special::normal_interval;
using special::normal_pdf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Everything the residual pass needs, walked once through the forward
// recursion. `capture` selects an event whose posteriors are kept.
struct ResidualPass {
    const Theta& th;
    const Catalog& cat;
    const BackgroundDensity& bg;
    std::size_t capture{0};

    ResidualSet out;
    PosteriorVectors captured;

    void run() {
        const std::size_t n = cat.size();
        out.U.assign(n, 0.0);
        out.V.assign(n, 0.0);
        out.W.assign(n, 0.0);
        if (n == 0) return;

        const Region& reg = cat.region();
        const double lon_lo = reg.unbounded ? -kInf : reg.lon_min;
        const double lat_lo = reg.unbounded ? -kInf : reg.lat_min;
        const double lat_hi = reg.unbounded ? kInf : reg.lat_max;
        const double s1 = th.spatial.sigma1, s2 = th.spatial.sigma2;

        std::vector<double> kappa(n), r_lat(n), r_full(n);
        for (std::size_t k = 0; k < n; ++k) {
            const Event& e = cat[k];
            kappa[k] = boost(th.boost, e.magnitude);
            r_lat[k] = normal_interval((lat_lo - e.lat) / s2, (lat_hi - e.lat) / s2);
            r_full[k] = spatial_rect_integral(th.spatial, {e.lon, e.lat}, reg);
        }

        const Event& e0 = cat[0];
        out.U[0] = clamp01(-std::expm1(-cumulative_hazard(th.hazard, e0.time)));
        out.V[0] = clamp01(bg.halfplane_integral(e0.lon));
        const LineIntegrals l0 = bg.line_slice_integrals(e0.lon, e0.lat);
        out.W[0] = l0.full > 0.0 ? clamp01(l0.partial / l0.full) : 0.0;

        std::vector<double> w;
        ForwardVisitor visit = [&](const ForwardStep& step) {
            const std::size_t i = step.index;
            if (i == 0 || i >= n) return;
            const Event& ei = cat[i];
            const double ti = ei.time, tprev = cat[i - 1].time;

            double d_phi = 0.0, phi_m = 0.0, phi_h = 0.0, line_full = 0.0, line_part = 0.0;
            if (th.boost.A > 0.0) {
                for (std::size_t k = 0; k < i; ++k) {
                    const Event& ek = cat[k];
                    d_phi += kappa[k] *
                             (omori_survival(th.omori, tprev - ek.time) - omori_survival(th.omori, ti - ek.time)) *
                             r_full[k];
                    const double a = kappa[k] * omori_density(th.omori, ti - ek.time);
                    const double zx = (ei.lon - ek.lon) / s1;
                    const double lx = normal_pdf(zx) / s1;
                    phi_m += a * r_full[k];
                    phi_h += a * normal_interval((lon_lo - ek.lon) / s1, zx) * r_lat[k];
                    line_full += a * lx * r_lat[k];
                    line_part += a * lx * normal_interval((lat_lo - ek.lat) / s2, (ei.lat - ek.lat) / s2);
                }
            }

            double surv = 0.0;
            for (std::size_t j = 0; j < i; ++j) surv += step.p[j] * step.S[j];
            out.U[i] = clamp01(-std::expm1(std::log(surv) + step.log_scale - d_phi));

            const double nu_h = bg.halfplane_integral(ei.lon);
            const LineIntegrals nl = bg.line_slice_integrals(ei.lon, ei.lat);

            // p^tau weights, then V.
            w.assign(i, 0.0);
            double wsum = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                w[j] = step.p[j] * step.S[j] * (step.mu[j] + phi_m);
                wsum += w[j];
            }
            double v = 0.0;
            std::vector<double> p_tau(i, 0.0);
            for (std::size_t j = 0; j < i; ++j) {
                if (w[j] == 0.0) continue;
                p_tau[j] = w[j] / wsum;
                v += p_tau[j] * (step.mu[j] * nu_h + phi_h) / (step.mu[j] + phi_m);
            }
            out.V[i] = clamp01(v);

            // p^x weights, then W.
            double xsum = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                w[j] = step.p[j] * step.S[j] * (step.mu[j] * nl.full + line_full);
                xsum += w[j];
            }
            double wres = 0.0;
            std::vector<double> p_x(i, 0.0);
            for (std::size_t j = 0; j < i; ++j) {
                if (w[j] == 0.0) continue;
                p_x[j] = w[j] / xsum;
                wres += p_x[j] * (step.mu[j] * nl.partial + line_part) / (step.mu[j] * nl.full + line_full);
            }
            out.W[i] = clamp01(wres);

            double st = 0.0, sx = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                st += p_tau[j];
                sx += p_x[j];
            }
            out.max_posterior_error =
                std::max({out.max_posterior_error, std::fabs(st - 1.0), std::fabs(sx - 1.0)});
            if (i == capture) {
                captured.p_tau = std::move(p_tau);
                captured.p_x = std::move(p_x);
            }
        };

        const LikelihoodEvaluator eval(cat, bg);
        std::string diag;
        const double ls = eval.forward_pass(th, &visit, &diag);
        if (!std::isfinite(ls)) throw ModelError("residuals undefined: " + diag);

        out.combined.reserve(3 * n);
        for (std::size_t i = 0; i < n; ++i) {
            out.combined.push_back(out.U[i]);
            out.combined.push_back(out.V[i]);
            out.combined.push_back(out.W[i]);
        }
    }
};

// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x) {
    if (!(x > 0.0)) return 1.0;
    if (x < 1.18) {
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int k = 1; k < 100; ++k) {
            const double term = std::exp(-(2.0 * k - 1) * (2.0 * k - 1) * pi2 / (8.0 * x * x));
            cdf += term;
            if (term < 1e-17 * cdf) break;
        }
        cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int k = 1; k < 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 ? term : -term);
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path.string());
    f << text;
    if (!f) throw InputError("failed writing " + path.string());
}

} // namespace

ResidualSet compute_residuals(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background) {
    const Theta th = theta.with_m0(catalog.m0());
    th.validate();
    ResidualPass pass{th, catalog, background, 0, {}, {}};
    pass.run();
    return std::move(pass.out);
}

std::vector<double> temporal_residuals(const Theta& theta, const Catalog& catalog,
                                       const BackgroundDensity& background) {
    return compute_residuals(theta, catalog, background).U;
}

std::vector<double> longitudinal_residuals(const Theta& theta, const Catalog& catalog,
                                           const BackgroundDensity& background) {
    return compute_residuals(theta, catalog, background).V;
}

std::vector<double> latitudinal_residuals(const Theta& theta, const Catalog& catalog,
                                          const BackgroundDensity& background) {
    return compute_residuals(theta, catalog, background).W;
}

PosteriorVectors posterior_vectors(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background,
                                   std::size_t i) {
    if (i == 0 || i >= catalog.size()) throw InputError("posterior index must be in [1, n)");
    const Theta th = theta.with_m0(catalog.m0());
    th.validate();
    ResidualPass pass{th, catalog, background, i, {}, {}};
    pass.run();
    return std::move(pass.captured);
}

std::vector<double> posterior_tau(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background,
                                  std::size_t i) {
    return posterior_vectors(theta, catalog, background, i).p_tau;
}

TestResult ks_uniform(std::vector<double> series) {
    if (series.empty()) throw ModelError("K-S test on an empty series");
    std::sort(series.begin(), series.end());
    const double n = static_cast<double>(series.size());
    double d = 0.0;
    for (std::size_t k = 0; k < series.size(); ++k) {
        const double u = series[k];
        d = std::max({d, (static_cast<double>(k) + 1.0) / n - u, u - static_cast<double>(k) / n});
    }
    return {d, kolmogorov_survival(std::sqrt(n) * d)};
}

std::vector<double> acf(const std::vector<double>& series, int lags) {
    const std::size_t n = series.size();
    if (lags < 1) throw InputError("lag count must be at least 1");
    if (n <= static_cast<std::size_t>(lags)) throw ModelError("series too short for the requested lags");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : series) c0 += (v - mean) * (v - mean);
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    if (*lo == *hi || !(c0 > 0.0)) throw ModelError("zero variance: autocorrelations undefined");
    std::vector<double> r(static_cast<std::size_t>(lags));
    for (int k = 1; k <= lags; ++k) {
        double ck = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) ck += (series[t] - mean) * (series[t + k] - mean);
        r[k - 1] = ck / c0;
    }
    return r;
}

TestResult ljung_box(const std::vector<double>& series, int lags) {
    const auto r = acf(series, lags);
    const double n = static_cast<double>(series.size());
    double q = 0.0;
    for (int k = 1; k <= lags; ++k) q += r[k - 1] * r[k - 1] / (n - k);
    q *= n * (n + 2.0);
    return {q, special::regularized_upper_gamma(0.5 * lags, 0.5 * q)};
}

GofReport gof_report(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background, int lags) {
    GofReport rep;
    rep.lags = lags;
    rep.residuals = compute_residuals(theta, catalog, background);
    const std::array<const std::vector<double>*, 4> series{&rep.residuals.U, &rep.residuals.V, &rep.residuals.W,
                                                           &rep.residuals.combined};
    for (std::size_t s = 0; s < 4; ++s) {
        rep.tests[s].ks = ks_uniform(*series[s]);
        rep.tests[s].lb = ljung_box(*series[s], lags);
        rep.tests[s].lb_lags = lags;
    }
    return rep;
}

std::string tests_json(const GofReport& report, const std::string& provenance) {
    nlohmann::ordered_json j;
    j["n"] = report.residuals.U.size();
    j["lags"] = report.lags;
    nlohmann::ordered_json tests;
    for (std::size_t s = 0; s < 4; ++s) {
        const SeriesTests& t = report.tests[s];
        tests[kSeriesNames[s]] = {{"KS", {{"stat", t.ks.stat}, {"p", t.ks.p}}},
                                  {"LB", {{"stat", t.lb.stat}, {"p", t.lb.p}, {"lags", t.lb_lags}}}};
    }
    j["tests"] = tests;
    if (!provenance.empty()) {
        auto p = nlohmann::ordered_json::parse(provenance, nullptr, false);
        if (p.is_object()) j["provenance"] = p;
    }
    return j.dump(2) + "\n";
}

void write_gof_artifacts(const GofReport& report, const std::string& dir, const std::string& provenance) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory " + dir);
    const fs::path base(dir);
    const ResidualSet& r = report.residuals;

    std::ostringstream res;
    res << "i,U,V,W\n";
    for (std::size_t i = 0; i < r.U.size(); ++i)
        res << i + 1 << ',' << fmt(r.U[i]) << ',' << fmt(r.V[i]) << ',' << fmt(r.W[i]) << '\n';
    write_file(base / "residuals.csv", res.str());

    write_file(base / "tests.json", tests_json(report, provenance));

    const std::array<const std::vector<double>*, 4> series{&r.U, &r.V, &r.W, &r.combined};
    std::ostringstream qq, ac;
    qq << "series,theoretical,empirical\n";
    ac << "series,lag,acf\n";
    for (std::size_t s = 0; s < 4; ++s) {
        std::vector<double> v = *series[s];
        std::sort(v.begin(), v.end());
        const double n = static_cast<double>(v.size());
        for (std::size_t k = 0; k < v.size(); ++k)
            qq << kSeriesNames[s] << ',' << fmt((static_cast<double>(k) + 0.5) / n) << ',' << fmt(v[k]) << '\n';
        const auto rho = acf(*series[s], report.lags);
        for (std::size_t k = 0; k < rho.size(); ++k) ac << kSeriesNames[s] << ',' << k + 1 << ',' << fmt(rho[k]) << '\n';
    }
    write_file(base / "qq.csv", qq.str());
    write_file(base / "acf.csv", ac.str());
}

} // namespace retas
