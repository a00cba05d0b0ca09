#include "retas/simulate.hpp"

#include "retas/error.hpp"
#include "retas/random.hpp"
#include "retas/serialize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace retas {

namespace {

double open_uniform(std::mt19937_64& rng) {
    double u = 0.0;
    while (u == 0.0) u = uniform01(rng);
    return u;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void SimConfig::validate() const {
    theta.validate();
    region.validate();
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InputError("simulation horizon must be positive");
    if (!(background.region() == region)) throw InputError("background region differs from the simulation region");
    if (replicates < 0) throw InputError("replicate count must be non-negative");
    const double br = theta.branching();
    if (!(br < 1.0)) {
        std::ostringstream msg;
        msg << "supercritical configuration: branching ratio A*gamma/(gamma-delta) = " << br << " >= 1";
        throw ModelError(msg.str());
    }
}

SimConfig table1_config(int model, std::uint64_t seed) {
    if (model != 1 && model != 2) throw InputError("preset model must be 1 or 2");
    SimConfig c;
    c.theta.hazard = model == 1 ? HazardParams{HazardFamily::weibull, 0.5, 0.5}
                                : HazardParams{HazardFamily::weibull, 2.0, 1.0};
    c.theta.omori = {2.0, 0.01};
    c.theta.spatial = {0.01, 0.02};
    c.theta.boost = {0.5, 1.0, 6.0};
    c.theta.magnitude = {5.0, 6.0};
    c.horizon = 200.0;
    c.region = Region::plane();
    c.background = BackgroundDensity({{0.0, 0.0}}, 0.25, 0.5, Region::plane());
    c.seed = seed;
    return c;
}

double draw_renewal_waiting(const HazardParams& h, std::mt19937_64& rng) {
    switch (h.family) {
    case HazardFamily::exponential:
        return -h.beta * std::log(open_uniform(rng));
    case HazardFamily::weibull:
        return h.beta * std::pow(-std::log(open_uniform(rng)), 1.0 / h.alpha);
    case HazardFamily::gamma: {
        std::gamma_distribution<double> g(h.alpha, h.beta);
        return g(rng);
    }
    }
    return 0.0;
}

Catalog simulate_catalog(const SimConfig& config) {
    std::mt19937_64 rng(config.seed);
    return simulate_catalog(config, rng);
}

Catalog simulate_catalog(const SimConfig& config, std::mt19937_64& rng) {
    config.validate();
    const Theta th = config.theta.with_m0(config.theta.magnitude.m0);
    const double T = config.horizon;

    std::vector<Event> generation;
    for (double t = draw_renewal_waiting(th.hazard, rng); t < T; t += draw_renewal_waiting(th.hazard, rng)) {
        const auto [x, y] = config.background.sample(rng);
        generation.push_back({t, x, y, magnitude_sample(th.magnitude, rng)});
    }

    std::vector<Event> all = generation;
    std::normal_distribution<double> z(0.0, 1.0);
    const double inv = 1.0 / (1.0 - th.omori.p);
    while (!generation.empty()) {
        std::vector<Event> next;
        for (const Event& parent : generation) {
            std::poisson_distribution<int> count(boost(th.boost, parent.magnitude));
            const int k = count(rng);
            for (int c = 0; c < k; ++c) {
                const double u = open_uniform(rng);
                const double dt = th.omori.c * (std::pow(1.0 - u, inv) - 1.0);
                const double dx = th.spatial.sigma1 * z(rng);
                const double dy = th.spatial.sigma2 * z(rng);
                const double m = magnitude_sample(th.magnitude, rng);
                const double t = parent.time + dt;
                if (!(t < T)) continue;
                if (!config.region.contains(parent.lon + dx, parent.lat + dy)) continue;
                next.push_back({t, parent.lon + dx, parent.lat + dy, m});
            }
        }
        all.insert(all.end(), next.begin(), next.end());
        generation = std::move(next);
    }
    std::sort(all.begin(), all.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
    return Catalog(std::move(all), config.region, T, th.magnitude.m0);
}

namespace {

ReplicateResult run_replicate(const SimConfig& config, const StudyOptions& options, std::uint64_t seed) {
    ReplicateResult r;
    r.seed = seed;
    try {
        SimConfig c = config;
        c.seed = seed;
        const Catalog cat = simulate_catalog(c);
        r.n_events = cat.size();
        const Theta truth = config.theta.with_m0(cat.m0());

        auto pvalues = [&](const Theta& th, std::array<std::array<double, 2>, 3>& out) {
            const ResidualSet res = compute_residuals(th, cat, config.background);
            const std::array<const std::vector<double>*, 3> s{&res.U, &res.V, &res.W};
            for (std::size_t k = 0; k < 3; ++k) {
                out[k][0] = ks_uniform(*s[k]).p;
                out[k][1] = ljung_box(*s[k], options.lags).p;
            }
        };
        pvalues(truth, r.p_true);
        r.have_true_gof = true;

        if (options.fit) {
            const FitResult f = fit(cat, config.background, truth.hazard.family, truth, options.fit_options);
            r.fitted = true;
            r.converged = f.convergence.converged;
            r.theta_hat = to_vector(f.theta_hat);
            r.gamma_hat = f.theta_hat.magnitude.gamma_rate;
            r.se = f.se;
            r.se_gamma = f.se_gamma.value_or(0.0);
            r.loglik = f.loglik;
            pvalues(f.theta_hat, r.p_fit);
            r.have_fit_gof = true;
        }
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

} // namespace

StudyReport run_study(const SimConfig& config, const StudyOptions& options, int workers) {
    config.validate();
    StudyReport rep;
    rep.config = config;
    rep.options = options;
    const int n = config.replicates;
    rep.replicates.resize(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int r = next++; r < n; r = next++)
            rep.replicates[static_cast<std::size_t>(r)] =
                run_replicate(config, options, derive_seed(config.seed, static_cast<std::uint64_t>(r)));
    };
    const int w = std::clamp(workers, 1, std::max(1, n));
    if (w == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < w; ++k) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    summarize(rep);
    return rep;
}

void summarize(StudyReport& rep) {
    const Theta& truth = rep.config.theta;
    const ParamVector tv = to_vector(truth);
    const ParamMask free = free_parameters(truth.hazard.family);

    rep.params.clear();
    rep.failures = 0;
    rep.gof_count = {0, 0};
    for (auto& a : rep.rejection)
        for (auto& b : a)
            for (auto& c : b) c = {0.0, 0.0};
    double count_sum = 0.0;
    int simulated = 0;
    rep.min_events = 0;
    rep.max_events = 0;
    for (const auto& r : rep.replicates) {
        if (!r.error.empty()) ++rep.failures;
        if (r.n_events == 0 && !r.error.empty()) continue;
        count_sum += static_cast<double>(r.n_events);
        rep.min_events = simulated == 0 ? r.n_events : std::min(rep.min_events, r.n_events);
        rep.max_events = std::max(rep.max_events, r.n_events);
        ++simulated;
    }
    rep.mean_events = simulated ? count_sum / simulated : 0.0;

    auto add_param = [&](const std::string& name, double t, auto value, auto se) {
        ParamSummary s;
        s.name = name;
        s.truth = t;
        std::vector<double> est;
        double se_sum = 0.0;
        int covered = 0;
        for (const auto& r : rep.replicates) {
            if (!r.fitted) continue;
            const double v = value(r);
            est.push_back(v);
            const std::optional<double> e = se(r);
            if (e && *e > 0.0 && std::isfinite(*e)) {
                ++s.se_count;
                se_sum += *e;
                if (std::fabs(v - t) <= 1.959963984540054 * *e) ++covered;
            }
        }
        s.count = static_cast<int>(est.size());
        if (s.count > 0) {
            double m = 0.0;
            for (double v : est) m += v;
            m /= s.count;
            double ss = 0.0;
            for (double v : est) ss += (v - m) * (v - m);
            s.mean = m;
            s.empirical_se = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
        }
        if (s.se_count > 0) {
            s.mean_se = se_sum / s.se_count;
            s.coverage = static_cast<double>(covered) / s.se_count;
        }
        rep.params.push_back(s);
    };
    if (rep.options.fit) {
        for (std::size_t k = 0; k < kNumParams; ++k) {
            if (!free[k]) continue;
            add_param(
                kParamNames[k], tv[k], [k](const ReplicateResult& r) { return r.theta_hat[k]; },
                [k](const ReplicateResult& r) -> std::optional<double> {
                    if (!r.se) return std::nullopt;
                    return (*r.se)[k];
                });
        }
        add_param(
            "gamma", truth.magnitude.gamma_rate, [](const ReplicateResult& r) { return r.gamma_hat; },
            [](const ReplicateResult& r) -> std::optional<double> { return r.se_gamma; });
    }

    constexpr std::array<double, 2> levels{0.05, 0.01};
    for (const auto& r : rep.replicates) {
        for (int kind = 0; kind < 2; ++kind) {
            const bool have = kind == 0 ? r.have_fit_gof : r.have_true_gof;
            if (!have) continue;
            ++rep.gof_count[kind];
            const auto& p = kind == 0 ? r.p_fit : r.p_true;
            for (std::size_t s = 0; s < 3; ++s)
                for (std::size_t t = 0; t < 2; ++t)
                    for (std::size_t l = 0; l < 2; ++l)
                        if (p[s][t] < levels[l]) rep.rejection[kind][s][t][l] += 1.0;
        }
    }
    for (int kind = 0; kind < 2; ++kind)
        if (rep.gof_count[kind] > 0)
            for (auto& s : rep.rejection[kind])
                for (auto& t : s)
                    for (double& l : t) l /= rep.gof_count[kind];
}

std::string study_json(const StudyReport& rep, const std::string& prov) {
    json j;
    j["config"] = sim_config_to_json(rep.config);
    j["config"]["fit"] = rep.options.fit;
    j["config"]["lags"] = rep.options.lags;
    j["events"] = {{"mean", rep.mean_events}, {"min", rep.min_events}, {"max", rep.max_events}};
    j["failures"] = rep.failures;

    json params = json::array();
    for (const auto& s : rep.params)
        params.push_back({{"name", s.name},
                          {"true", s.truth},
                          {"mean", s.mean},
                          {"empirical_se", s.empirical_se},
                          {"mean_se", s.mean_se},
                          {"coverage", s.coverage},
                          {"count", s.count},
                          {"se_count", s.se_count}});
    j["parameters"] = params;

    static constexpr std::array<const char*, 2> kinds{"estimated", "true"};
    static constexpr std::array<const char*, 2> tests{"KS", "LB"};
    static constexpr std::array<const char*, 2> levels{"5%", "1%"};
    json rej;
    for (int k = 0; k < 2; ++k) {
        json block;
        block["replicates"] = rep.gof_count[k];
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t t = 0; t < 2; ++t)
                for (std::size_t l = 0; l < 2; ++l)
                    block[kSeriesNames[s]][tests[t]][levels[l]] = rep.rejection[k][s][t][l];
        rej[kinds[k]] = block;
    }
    j["rejection_rates"] = rej;

    json reps = json::array();
    for (const auto& r : rep.replicates) {
        json e{{"seed", r.seed}, {"n_events", r.n_events}};
        if (!r.error.empty()) e["error"] = r.error;
        if (r.fitted) {
            e["converged"] = r.converged;
            json th = json::object();
            for (std::size_t k = 0; k < kNumParams; ++k) th[kParamNames[k]] = r.theta_hat[k];
            th["gamma"] = r.gamma_hat;
            e["theta_hat"] = th;
            e["loglik"] = r.loglik;
        }
        reps.push_back(e);
    }
    j["replicate_results"] = reps;
    if (!prov.empty()) {
        auto p = json::parse(prov, nullptr, false);
        if (p.is_object()) j["provenance"] = p;
    }
    return j.dump(2) + "\n";
}

std::string table1_csv(const StudyReport& rep) {
    std::ostringstream out;
    out << "parameter,true,mean,empirical_se,mean_se,coverage\n";
    for (const auto& s : rep.params)
        out << s.name << ',' << fmt(s.truth) << ',' << fmt(s.mean) << ',' << fmt(s.empirical_se) << ','
            << fmt(s.mean_se) << ',' << fmt(s.coverage) << '\n';
    return out.str();
}

std::string table2_csv(const StudyReport& rep) {
    static constexpr std::array<const char*, 2> kinds{"estimated", "true"};
    static constexpr std::array<const char*, 2> tests{"KS", "LB"};
    static constexpr std::array<const char*, 2> levels{"0.05", "0.01"};
    std::ostringstream out;
    out << "parameters,test,level,U,V,W\n";
    for (int k = 0; k < 2; ++k) {
        if (rep.gof_count[k] == 0) continue;
        for (std::size_t t = 0; t < 2; ++t)
            for (std::size_t l = 0; l < 2; ++l)
                out << kinds[k] << ',' << tests[t] << ',' << levels[l] << ',' << fmt(rep.rejection[k][0][t][l]) << ','
                    << fmt(rep.rejection[k][1][t][l]) << ',' << fmt(rep.rejection[k][2][t][l]) << '\n';
    }
    return out.str();
}

} // namespace retas
