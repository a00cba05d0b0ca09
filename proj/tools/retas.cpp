// retas: fit, simulate, gof, study and compare on top of the C API.

#include "retas/retas.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Failure {
    int code;
};

// Owning wrapper for strings handed back by the library.
struct Text {
    char* p{nullptr};
    ~Text() { retas_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

void check(retas_status st) {
    if (st != RETAS_OK) {
        std::cerr << "retas: " << retas_last_error() << "\n";
        throw Failure{static_cast<int>(st)};
    }
}

[[noreturn]] void input_error(const std::string& msg) {
    std::cerr << "retas: " << msg << "\n";
    throw Failure{RETAS_ERR_INPUT};
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) input_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) input_error("cannot write " + path.string());
    f << text;
}

void make_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) input_error("cannot create output directory " + dir);
}

template <class T, void (*Free)(T*)>
struct Handle {
    T* p{nullptr};
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(p); }
};

using Catalog = Handle<retas_catalog, retas_catalog_free>;
using Background = Handle<retas_background, retas_background_free>;
using Fit = Handle<retas_fit, retas_fit_free>;
using SimConfig = Handle<retas_sim_config, retas_sim_config_free>;
using Study = Handle<retas_study, retas_study_free>;

struct CatalogArgs {
    std::string catalog;
    std::string region;
    std::string config;
    std::string origin;
    double m0{NAN};
    double horizon{NAN};
    bool drop_outside{false};

    void add(CLI::App* app) {
        app->add_option("--catalog", catalog, "Catalog CSV (time,lon,lat,magnitude)")->required();
        app->add_option("--region", region, "plane or lon_min,lon_max,lat_min,lat_max");
        app->add_option("--catalog-config", config, "key = value catalog config file");
        app->add_option("--m0", m0, "Threshold magnitude (default: smallest in file)");
        app->add_option("--horizon", horizon, "Censoring time T in days (default: floor(last)+1)");
        app->add_option("--origin", origin, "ISO-8601 time zero for timestamp columns");
        app->add_flag("--drop-outside", drop_outside, "Drop rows outside the region or window");
    }

    void load(const std::string& path, Catalog& out) const {
        retas_catalog_options o = retas_catalog_options_default();
        if (!region.empty()) o.region = region.c_str();
        if (!config.empty()) o.config_path = config.c_str();
        if (!origin.empty()) o.origin = origin.c_str();
        if (!std::isnan(m0)) {
            o.has_m0 = 1;
            o.m0 = m0;
        }
        if (!std::isnan(horizon)) {
            o.has_horizon = 1;
            o.horizon = horizon;
        }
        o.drop_outside = drop_outside ? 1 : 0;
        check(retas_catalog_load(path.c_str(), &o, &out.p));
    }
};

struct BackgroundArgs {
    std::string kind{"kde"};
    std::string bandwidth{"auto"};
    std::string train;

    void add(CLI::App* app) {
        app->add_option("--background", kind, "kde, uniform, or a background JSON file")->capture_default_str();
        app->add_option("--bandwidth", bandwidth, "auto, <h> or <hx>,<hy> in degrees")->capture_default_str();
        app->add_option("--train-catalog", train, "Historical events for the KDE (default: the catalog itself)");
    }

    void build(const CatalogArgs& cat_args, const Catalog& cat, Background& out) const {
        if (kind == "uniform") {
            check(retas_background_uniform(cat.p, &out.p));
            return;
        }
        if (kind != "kde") {
            check(retas_background_load(kind.c_str(), &out.p));
            return;
        }
        double hx = 0.0, hy = 0.0;
        if (bandwidth != "auto") {
            const auto comma = bandwidth.find(',');
            try {
                hx = std::stod(bandwidth.substr(0, comma));
                hy = comma == std::string::npos ? hx : std::stod(bandwidth.substr(comma + 1));
            } catch (const std::exception&) {
                input_error("--bandwidth must be auto, <h> or <hx>,<hy>");
            }
            if (!(hx > 0.0) || !(hy > 0.0)) input_error("--bandwidth values must be positive");
        }
        if (train.empty()) {
            check(retas_background_kde(cat.p, cat.p, hx, hy, &out.p));
            return;
        }
        CatalogArgs t = cat_args;
        t.m0 = NAN;
        t.horizon = NAN;
        t.drop_outside = true;
        Catalog training;
        t.load(train, training);
        check(retas_background_kde(training.p, cat.p, hx, hy, &out.p));
    }
};

std::string provenance_for(CLI::App* sub, std::uint64_t seed) {
    Text t;
    // --workers and --out left out
    std::istringstream in(sub->config_to_str(true, false));
    std::string cfg = std::string(sub->get_name()) + "\n", line;
    while (std::getline(in, line))
        if (line.rfind("workers", 0) != 0 && line.rfind("out", 0) != 0) cfg += line + "\n";
    check(retas_provenance_json(cfg.c_str(), seed, &t.p));
    return t.str();
}

std::string load_init(const std::string& init) {
    if (init.empty() || init == "auto") return {};
    return read_file(init);
}

int run_fit(CLI::App* sub, const CatalogArgs& ca, const BackgroundArgs& ba, const std::string& family,
            const std::string& init, const std::string& out_dir, bool dump_p) {
    Catalog cat;
    ca.load(ca.catalog, cat);
    Background bg;
    ba.build(ca, cat, bg);
    const std::string init_json = load_init(init);
    make_dir(out_dir);
    const std::string prov = provenance_for(sub, 0);

    Fit fit;
    const retas_fit_options opts = retas_fit_options_default();
    check(retas_fit_catalog(cat.p, bg.p, family.c_str(), init_json.empty() ? nullptr : init_json.c_str(), &opts,
                            &fit.p));
    Text json, row;
    check(retas_fit_json(fit.p, prov.c_str(), &json.p));
    write_file(fs::path(out_dir) / "fit.json", json.str());
    check(retas_background_save(bg.p, (fs::path(out_dir) / "background.json").c_str(), prov.c_str()));
    if (dump_p) {
        Text theta;
        check(retas_fit_theta_json(fit.p, &theta.p));
        check(retas_dump_p(cat.p, bg.p, theta.p, (fs::path(out_dir) / "p.csv").c_str()));
    }
    check(retas_fit_table_row(fit.p, &row.p));
    std::cout << row.str() << "\n";
    if (!retas_fit_converged(fit.p)) {
        std::cerr << "retas: optimizer did not converge; result written and flagged\n";
        return RETAS_ERR_MODEL;
    }
    return 0;
}

int run_gof(CLI::App* sub, const CatalogArgs& ca, const BackgroundArgs& ba, const std::string& fit_path, int lags,
            const std::string& out_dir, int intensity_points) {
    Catalog cat;
    ca.load(ca.catalog, cat);
    Background bg;
    ba.build(ca, cat, bg);
    const std::string theta = read_file(fit_path);
    make_dir(out_dir);
    const std::string prov = provenance_for(sub, 0);
    Text tests;
    check(retas_gof(cat.p, bg.p, theta.c_str(), lags, out_dir.c_str(), prov.c_str(), &tests.p));
    if (intensity_points > 1)
        check(retas_intensity_samples(cat.p, bg.p, theta.c_str(), intensity_points,
                                      (fs::path(out_dir) / "intensity.csv").c_str()));
    std::cout << tests.str();
    return 0;
}

void load_sim_config(const std::string& preset, const std::string& config, SimConfig& out) {
    if (!config.empty()) {
        const std::string text = read_file(config);
        check(retas_sim_config_from_json(text.c_str(), &out.p));
        return;
    }
    if (preset == "table1-model1")
        check(retas_sim_config_preset(1, &out.p));
    else if (preset == "table1-model2")
        check(retas_sim_config_preset(2, &out.p));
    else
        input_error("--preset must be table1-model1 or table1-model2");
}

int run_simulate(CLI::App* sub, const std::string& preset, const std::string& config, std::uint64_t seed,
                 const std::string& out_dir) {
    SimConfig cfg;
    load_sim_config(preset, config, cfg);
    retas_sim_config_set_seed(cfg.p, seed);
    make_dir(out_dir);
    const std::string prov = provenance_for(sub, seed);
    Catalog cat;
    check(retas_simulate(cfg.p, &cat.p));
    check(retas_catalog_save(cat.p, (fs::path(out_dir) / "catalog.csv").c_str()));
    check(retas_catalog_save_config(cat.p, (fs::path(out_dir) / "catalog.cfg").c_str()));
    Text json;
    check(retas_sim_config_to_json(cfg.p, prov.c_str(), &json.p));
    write_file(fs::path(out_dir) / "simulation.json", json.str());
    std::cout << "simulated " << retas_catalog_size(cat.p) << " events\n";
    return 0;
}

int run_study(CLI::App* sub, const std::string& preset, const std::string& config, std::uint64_t seed,
              int replicates, int workers, int lags, bool no_fit, const std::string& out_dir) {
    SimConfig cfg;
    load_sim_config(preset, config, cfg);
    retas_sim_config_set_seed(cfg.p, seed);
    retas_sim_config_set_replicates(cfg.p, replicates);
    make_dir(out_dir);
    const std::string prov = provenance_for(sub, seed);
    Study study;
    check(retas_study_run(cfg.p, no_fit ? 0 : 1, lags, workers, &study.p));
    Text json, t1, t2;
    check(retas_study_json(study.p, prov.c_str(), &json.p));
    check(retas_study_table1_csv(study.p, &t1.p));
    check(retas_study_table2_csv(study.p, &t2.p));
    write_file(fs::path(out_dir) / "study.json", json.str());
    write_file(fs::path(out_dir) / "table1.csv", t1.str());
    write_file(fs::path(out_dir) / "table2.csv", t2.str());
    std::cout << t1.str() << t2.str();
    return 0;
}

int run_compare(CLI::App* sub, const CatalogArgs& ca, const BackgroundArgs& ba, const std::vector<std::string>& families,
                const std::string& init, const std::string& out_dir) {
    Catalog cat;
    ca.load(ca.catalog, cat);
    Background bg;
    ba.build(ca, cat, bg);
    const std::string init_json = load_init(init);
    make_dir(out_dir);
    const std::string prov = provenance_for(sub, 0);

    struct Row {
        std::string family;
        int k;
        double loglik, aic;
        bool converged;
    };
    std::vector<Row> rows;
    for (const std::string& fam : families) {
        Fit fit;
        const retas_fit_options opts = retas_fit_options_default();
        check(retas_fit_catalog(cat.p, bg.p, fam.c_str(), init_json.empty() ? nullptr : init_json.c_str(), &opts,
                                &fit.p));
        Text json, row;
        check(retas_fit_json(fit.p, prov.c_str(), &json.p));
        write_file(fs::path(out_dir) / ("fit_" + fam + ".json"), json.str());
        check(retas_fit_table_row(fit.p, &row.p));
        std::cout << row.str() << "\n";
        rows.push_back({fam, retas_fit_n_params(fit.p), retas_fit_loglik(fit.p), retas_fit_aic(fit.p),
                        retas_fit_converged(fit.p) != 0});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.aic < b.aic; });
    std::ostringstream csv;
    csv << "rank,family,n_params,loglik,aic,delta_aic,converged\n";
    std::cout << "\nrank  family       k   loglik        AIC           dAIC\n";
    bool all_converged = true;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Row& x = rows[r];
        char buf[160];
        std::snprintf(buf, sizeof buf, "%zu,%s,%d,%.17g,%.17g,%.17g,%s\n", r + 1, x.family.c_str(), x.k, x.loglik,
                      x.aic, x.aic - rows[0].aic, x.converged ? "true" : "false");
        csv << buf;
        std::snprintf(buf, sizeof buf, "%-5zu %-12s %-3d %-13.3f %-13.3f %.3f\n", r + 1, x.family.c_str(), x.k,
                      x.loglik, x.aic, x.aic - rows[0].aic);
        std::cout << buf;
        all_converged = all_converged && x.converged;
    }
    write_file(fs::path(out_dir) / "compare.csv", csv.str());
    return all_converged ? 0 : RETAS_ERR_MODEL;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Renewal ETAS models for earthquake catalogs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(retas_version()));

    CatalogArgs ca;
    BackgroundArgs ba;
    std::string family = "weibull";
    std::string init = "auto";
    std::string out_dir = ".";
    std::string fit_path;
    std::string preset = "table1-model1";
    std::string sim_config;
    std::vector<std::string> families{"exponential", "weibull", "gamma"};
    std::uint64_t seed = 0;
    int replicates = 10;
    int workers = 1;
    int lags = 10;
    int intensity_points = 200;
    bool dump_p = false;
    bool no_fit = false;
    auto family_check = CLI::IsMember({"exponential", "etas", "weibull", "gamma"});

    auto* fit = app.add_subcommand("fit", "Maximum-likelihood fit of one hazard family");
    ca.add(fit);
    ba.add(fit);
    fit->add_option("--family", family, "exponential, weibull or gamma")->check(family_check)->capture_default_str();
    fit->add_option("--init", init, "auto (warm-start ladder) or a theta/fit JSON file")->capture_default_str();
    fit->add_option("--out", out_dir, "Output directory")->capture_default_str();
    fit->add_flag("--dump-p", dump_p, "Also write the main-shock probabilities p.csv");

    auto* gof = app.add_subcommand("gof", "Rosenblatt residuals and K-S / Ljung-Box tests");
    ca.add(gof);
    ba.add(gof);
    gof->add_option("--fit", fit_path, "fit.json or theta JSON")->required();
    gof->add_option("--lags", lags, "Ljung-Box lags")->check(CLI::PositiveNumber)->capture_default_str();
    gof->add_option("--intensity-points", intensity_points, "Samples in intensity.csv (0 to skip)")
        ->capture_default_str();
    gof->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "Simulate one catalog");
    sim->add_option("--preset", preset, "table1-model1 or table1-model2")->capture_default_str();
    sim->add_option("--config", sim_config, "Simulation config JSON (overrides --preset)");
    sim->add_option("--seed", seed, "Random seed")->required();
    sim->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* study = app.add_subcommand("study", "Replicated simulate-fit-test study");
    study->add_option("--preset", preset, "table1-model1 or table1-model2")->capture_default_str();
    study->add_option("--config", sim_config, "Simulation config JSON (overrides --preset)");
    study->add_option("--seed", seed, "Master seed")->required();
    study->add_option("--replicates", replicates, "Number of replicates")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    study->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    study->add_option("--lags", lags, "Ljung-Box lags")->check(CLI::PositiveNumber)->capture_default_str();
    study->add_flag("--no-fit", no_fit, "Residuals at the true parameters only");
    study->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* cmp = app.add_subcommand("compare", "Fit several families and rank them by AIC");
    ca.add(cmp);
    ba.add(cmp);
    cmp->add_option("--families", families, "Families to fit")->delimiter(',')->check(family_check);
    cmp->add_option("--init", init, "auto or a theta/fit JSON file")->capture_default_str();
    cmp->add_option("--out", out_dir, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : RETAS_ERR_INPUT;
    }

    try {
        if (fit->parsed()) return run_fit(fit, ca, ba, family, init, out_dir, dump_p);
        if (gof->parsed()) return run_gof(gof, ca, ba, fit_path, lags, out_dir, intensity_points);
        if (sim->parsed()) return run_simulate(sim, preset, sim_config, seed, out_dir);
        if (study->parsed())
            return run_study(study, preset, sim_config, seed, replicates, workers, lags, no_fit, out_dir);
        if (cmp->parsed()) return run_compare(cmp, ca, ba, families, init, out_dir);
    } catch (const Failure& f) {
        return f.code;
    }
    return 0;
}
