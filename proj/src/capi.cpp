#include "retas/retas.h"

#include "retas/error.hpp"
#include "retas/gof.hpp"
#include "retas/serialize.hpp"
#include "retas/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

struct retas_catalog {
    retas::Catalog value;
};

struct retas_background {
    retas::BackgroundDensity value;
};

struct retas_fit {
    retas::FitResult value;
};

struct retas_sim_config {
    retas::SimConfig value;
};

struct retas_study {
    retas::StudyReport value;
};

namespace {

thread_local std::string last_error;

template <class F>
retas_status guarded(F&& f) {
    try {
        last_error.clear();
        f();
        return RETAS_OK;
    } catch (const retas::InputError& e) {
        last_error = e.what();
        return RETAS_ERR_INPUT;
    } catch (const nlohmann::json::exception& e) {
        last_error = std::string("invalid JSON: ") + e.what();
        return RETAS_ERR_INPUT;
    } catch (const retas::ModelError& e) {
        last_error = e.what();
        return RETAS_ERR_MODEL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return RETAS_ERR_MODEL;
    }
}

retas_status null_arg(const char* what) {
    last_error = std::string("null argument: ") + what;
    return RETAS_ERR_INPUT;
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

retas::json parse_json(const char* text, const char* what) {
    if (!text) throw retas::InputError(std::string("missing ") + what);
    auto j = retas::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw retas::InputError(std::string("invalid JSON in ") + what);
    return j;
}

retas::Theta parse_theta(const char* text) { return retas::theta_from_json(parse_json(text, "theta")); }

void write_text(const char* path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw retas::InputError(std::string("cannot write ") + path);
    f << text;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

extern "C" {

const char* retas_version(void) { return RETAS_VERSION; }

const char* retas_last_error(void) { return last_error.c_str(); }

void retas_string_free(char* s) { std::free(s); }

retas_catalog_options retas_catalog_options_default(void) {
    retas_catalog_options o{};
    return o;
}

retas_status retas_catalog_load(const char* csv_path, const retas_catalog_options* options, retas_catalog** out) {
    if (!csv_path) return null_arg("csv_path");
    if (!out) return null_arg("out");
    return guarded([&] {
        const retas_catalog_options o = options ? *options : retas_catalog_options_default();
        retas::CatalogConfig cfg = o.config_path ? retas::load_config(o.config_path) : retas::CatalogConfig{};
        if (o.region) cfg.region = retas::parse_region(o.region);
        if (o.has_m0) cfg.m0 = o.m0;
        if (o.has_horizon) cfg.horizon = o.horizon;
        if (o.origin) cfg.origin = o.origin;
        if (o.drop_outside) cfg.drop_outside = true;
        *out = new retas_catalog{retas::load_csv(csv_path, cfg)};
    });
}

retas_status retas_catalog_save(const retas_catalog* catalog, const char* csv_path) {
    if (!catalog) return null_arg("catalog");
    if (!csv_path) return null_arg("csv_path");
    return guarded([&] { retas::save_csv(catalog->value, csv_path); });
}

retas_status retas_catalog_save_config(const retas_catalog* catalog, const char* config_path) {
    if (!catalog) return null_arg("catalog");
    if (!config_path) return null_arg("config_path");
    return guarded([&] { retas::save_config(catalog->value, config_path); });
}

size_t retas_catalog_size(const retas_catalog* catalog) { return catalog ? catalog->value.size() : 0; }

double retas_catalog_horizon(const retas_catalog* catalog) { return catalog ? catalog->value.horizon() : NAN; }

double retas_catalog_m0(const retas_catalog* catalog) { return catalog ? catalog->value.m0() : NAN; }

retas_status retas_catalog_event(const retas_catalog* catalog, size_t i, double* time, double* lon, double* lat,
                                 double* magnitude) {
    if (!catalog) return null_arg("catalog");
    if (i >= catalog->value.size()) {
        last_error = "event index out of range";
        return RETAS_ERR_INPUT;
    }
    const retas::Event& e = catalog->value[i];
    if (time) *time = e.time;
    if (lon) *lon = e.lon;
    if (lat) *lat = e.lat;
    if (magnitude) *magnitude = e.magnitude;
    return RETAS_OK;
}

void retas_catalog_free(retas_catalog* catalog) { delete catalog; }

retas_status retas_background_kde(const retas_catalog* training, const retas_catalog* target, double bandwidth_x,
                                  double bandwidth_y, retas_background** out) {
    if (!training) return null_arg("training");
    if (!target) return null_arg("target");
    if (!out) return null_arg("out");
    return guarded([&] {
        std::optional<std::pair<double, double>> bw;
        if (bandwidth_x > 0.0 && bandwidth_y > 0.0) bw = std::make_pair(bandwidth_x, bandwidth_y);
        *out = new retas_background{
            retas::BackgroundDensity::fit_kde(training->value.events(), target->value.region(), bw)};
    });
}

retas_status retas_background_uniform(const retas_catalog* target, retas_background** out) {
    if (!target) return null_arg("target");
    if (!out) return null_arg("out");
    return guarded([&] { *out = new retas_background{retas::BackgroundDensity::uniform(target->value.region())}; });
}

retas_status retas_background_load(const char* json_path, retas_background** out) {
    if (!json_path) return null_arg("json_path");
    if (!out) return null_arg("out");
    return guarded([&] { *out = new retas_background{retas::BackgroundDensity::load_json(json_path)}; });
}

retas_status retas_background_save(const retas_background* background, const char* json_path,
                                   const char* provenance_json) {
    if (!background) return null_arg("background");
    if (!json_path) return null_arg("json_path");
    return guarded([&] {
        retas::json j = retas::json::parse(background->value.to_json());
        if (provenance_json) j["provenance"] = parse_json(provenance_json, "provenance");
        write_text(json_path, j.dump(2) + "\n");
    });
}

void retas_background_free(retas_background* background) { delete background; }

retas_fit_options retas_fit_options_default(void) {
    const retas::OptimizeOptions d;
    return {d.max_simplex_iterations, d.max_polish_iterations, d.rel_tol, 1};
}

retas_status retas_fit_catalog(const retas_catalog* catalog, const retas_background* background, const char* family,
                               const char* init_json, const retas_fit_options* options, retas_fit** out) {
    if (!catalog) return null_arg("catalog");
    if (!background) return null_arg("background");
    if (!family) return null_arg("family");
    if (!out) return null_arg("out");
    return guarded([&] {
        const retas_fit_options o = options ? *options : retas_fit_options_default();
        retas::FitOptions fo;
        fo.optimizer.max_simplex_iterations = o.max_simplex_iterations;
        fo.optimizer.max_polish_iterations = o.max_polish_iterations;
        fo.optimizer.rel_tol = o.rel_tol;
        fo.compute_standard_errors = o.compute_standard_errors != 0;
        std::optional<retas::Theta> init;
        if (init_json) init = parse_theta(init_json);
        *out = new retas_fit{
            retas::fit(catalog->value, background->value, retas::parse_family(family), init, fo)};
    });
}

int retas_fit_converged(const retas_fit* fit) { return fit && fit->value.convergence.converged ? 1 : 0; }

int retas_fit_hessian_invertible(const retas_fit* fit) { return fit && fit->value.hessian_invertible ? 1 : 0; }

double retas_fit_loglik(const retas_fit* fit) { return fit ? fit->value.loglik : NAN; }

double retas_fit_aic(const retas_fit* fit) { return fit ? fit->value.aic : NAN; }

int retas_fit_n_params(const retas_fit* fit) { return fit ? fit->value.n_params : 0; }

retas_status retas_fit_json(const retas_fit* fit, const char* provenance_json, char** out) {
    if (!fit) return null_arg("fit");
    if (!out) return null_arg("out");
    return guarded([&] {
        retas::json prov = provenance_json ? parse_json(provenance_json, "provenance") : retas::json::object();
        *out = dup(retas::fit_to_json(fit->value, prov).dump(2) + "\n");
    });
}

retas_status retas_fit_theta_json(const retas_fit* fit, char** out) {
    if (!fit) return null_arg("fit");
    if (!out) return null_arg("out");
    return guarded([&] { *out = dup(retas::theta_to_json(fit->value.theta_hat).dump(2) + "\n"); });
}

retas_status retas_fit_table_row(const retas_fit* fit, char** out) {
    if (!fit) return null_arg("fit");
    if (!out) return null_arg("out");
    return guarded([&] {
        const retas::FitResult& f = fit->value;
        const retas::ParamVector v = retas::to_vector(f.theta_hat);
        std::ostringstream row;
        row << retas::to_string(f.family);
        char buf[64];
        for (std::size_t k = 0; k < retas::kNumParams; ++k) {
            if (!f.estimated[k]) continue;
            std::snprintf(buf, sizeof buf, "  %s=%.4g", retas::kParamNames[k], v[k]);
            row << buf;
            if (f.se) {
                std::snprintf(buf, sizeof buf, " (%.3g)", (*f.se)[k]);
                row << buf;
            }
        }
        std::snprintf(buf, sizeof buf, "  gamma=%.4g", f.theta_hat.magnitude.gamma_rate);
        row << buf;
        if (f.se_gamma) {
            std::snprintf(buf, sizeof buf, " (%.3g)", *f.se_gamma);
            row << buf;
        }
        std::snprintf(buf, sizeof buf, "  loglik=%.3f  AIC=%.3f", f.loglik, f.aic);
        row << buf;
        if (!f.convergence.converged) row << "  [not converged]";
        *out = dup(row.str());
    });
}

void retas_fit_free(retas_fit* fit) { delete fit; }

retas_status retas_loglik(const retas_catalog* catalog, const retas_background* background, const char* theta_json,
                          double* out) {
    if (!catalog) return null_arg("catalog");
    if (!background) return null_arg("background");
    if (!out) return null_arg("out");
    return guarded([&] {
        const retas::Theta th = parse_theta(theta_json);
        *out = retas::log_likelihood(th, catalog->value, background->value).total;
    });
}

retas_status retas_dump_p(const retas_catalog* catalog, const retas_background* background, const char* theta_json,
                          const char* csv_path) {
    if (!catalog) return null_arg("catalog");
    if (!background) return null_arg("background");
    if (!csv_path) return null_arg("csv_path");
    return guarded([&] {
        const retas::Theta th = parse_theta(theta_json);
        const retas::LogLikResult r = retas::log_likelihood(th, catalog->value, background->value, true);
        if (!r.finite()) throw retas::ModelError(r.diagnostic);
        std::ostringstream out;
        out << "i,j,p\n";
        const auto& rows = r.forward->p;
        // row r holds p for event r + 1 (the last row is the censoring step)
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                if (rows[i][j] > 0.0) out << i + 2 << ',' << j + 1 << ',' << fmt(rows[i][j]) << '\n';
        write_text(csv_path, out.str());
    });
}

retas_status retas_intensity_samples(const retas_catalog* catalog, const retas_background* background,
                                     const char* theta_json, int points, const char* csv_path) {
    if (!catalog) return null_arg("catalog");
    if (!background) return null_arg("background");
    if (!csv_path) return null_arg("csv_path");
    return guarded([&] {
        if (points < 2) throw retas::InputError("need at least two intensity sample points");
        const retas::Theta th = parse_theta(theta_json).with_m0(catalog->value.m0());
        const retas::LikelihoodEvaluator eval(catalog->value, background->value);
        const double T = catalog->value.horizon();
        std::ostringstream out;
        out << "t,intensity\n";
        for (int k = 1; k <= points; ++k) {
            const double t = T * k / points;
            const auto probs = eval.mainshock_probabilities(th, t);
            double renewal = 0.0;
            if (probs.empty()) {
                renewal = retas::hazard(th.hazard, t);
            } else {
                for (std::size_t j = 0; j < probs.size(); ++j)
                    if (probs[j] > 0.0) renewal += probs[j] * retas::hazard(th.hazard, t - catalog->value[j].time);
            }
            out << fmt(t) << ',' << fmt(renewal + retas::phi_spatial_marginal(th, catalog->value, t)) << '\n';
        }
        write_text(csv_path, out.str());
    });
}

retas_status retas_gof(const retas_catalog* catalog, const retas_background* background, const char* theta_json,
                       int lags, const char* out_dir, const char* provenance_json, char** tests_json) {
    if (!catalog) return null_arg("catalog");
    if (!background) return null_arg("background");
    return guarded([&] {
        const retas::Theta th = parse_theta(theta_json);
        const retas::GofReport rep = retas::gof_report(th, catalog->value, background->value, lags);
        const std::string prov = provenance_json ? provenance_json : "";
        if (out_dir) retas::write_gof_artifacts(rep, out_dir, prov);
        if (tests_json) *tests_json = dup(retas::tests_json(rep, prov));
    });
}

retas_status retas_sim_config_preset(int model, retas_sim_config** out) {
    if (!out) return null_arg("out");
    return guarded([&] { *out = new retas_sim_config{retas::table1_config(model)}; });
}

retas_status retas_sim_config_from_json(const char* json, retas_sim_config** out) {
    if (!out) return null_arg("out");
    return guarded([&] { *out = new retas_sim_config{retas::sim_config_from_json(parse_json(json, "config"))}; });
}

retas_status retas_sim_config_to_json(const retas_sim_config* config, const char* provenance_json, char** out) {
    if (!config) return null_arg("config");
    if (!out) return null_arg("out");
    return guarded([&] {
        retas::json j = retas::sim_config_to_json(config->value);
        if (provenance_json) j["provenance"] = parse_json(provenance_json, "provenance");
        *out = dup(j.dump(2) + "\n");
    });
}

void retas_sim_config_set_seed(retas_sim_config* config, uint64_t seed) {
    if (config) config->value.seed = seed;
}

void retas_sim_config_set_replicates(retas_sim_config* config, int replicates) {
    if (config) config->value.replicates = replicates;
}

void retas_sim_config_free(retas_sim_config* config) { delete config; }

retas_status retas_simulate(const retas_sim_config* config, retas_catalog** out) {
    if (!config) return null_arg("config");
    if (!out) return null_arg("out");
    return guarded([&] { *out = new retas_catalog{retas::simulate_catalog(config->value)}; });
}

retas_status retas_study_run(const retas_sim_config* config, int fit, int lags, int workers, retas_study** out) {
    if (!config) return null_arg("config");
    if (!out) return null_arg("out");
    return guarded([&] {
        retas::StudyOptions o;
        o.fit = fit != 0;
        o.lags = lags;
        *out = new retas_study{retas::run_study(config->value, o, workers)};
    });
}

retas_status retas_study_json(const retas_study* study, const char* provenance_json, char** out) {
    if (!study) return null_arg("study");
    if (!out) return null_arg("out");
    return guarded([&] { *out = dup(retas::study_json(study->value, provenance_json ? provenance_json : "")); });
}

retas_status retas_study_table1_csv(const retas_study* study, char** out) {
    if (!study) return null_arg("study");
    if (!out) return null_arg("out");
    return guarded([&] { *out = dup(retas::table1_csv(study->value)); });
}

retas_status retas_study_table2_csv(const retas_study* study, char** out) {
    if (!study) return null_arg("study");
    if (!out) return null_arg("out");
    return guarded([&] { *out = dup(retas::table2_csv(study->value)); });
}

void retas_study_free(retas_study* study) { delete study; }

retas_status retas_provenance_json(const char* config_text, uint64_t seed, char** out) {
    if (!out) return null_arg("out");
    return guarded([&] { *out = dup(retas::provenance(config_text ? config_text : "", seed).dump()); });
}

} // extern "C"
