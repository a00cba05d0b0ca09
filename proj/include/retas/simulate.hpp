#pragma once

#include "retas/background.hpp"
#include "retas/catalog.hpp"
#include "retas/estimation.hpp"
#include "retas/gof.hpp"
#include "retas/likelihood.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace retas {

struct SimConfig {
    Theta theta;
    double horizon{200.0};
    Region region{Region::plane()};
    /// Main-shock location law; its region must equal `region`.
    BackgroundDensity background{{{0.0, 0.0}}, 0.25, 0.5, Region::plane()};
    std::uint64_t seed{1};
    int replicates{1};

    void validate() const;
};

/// Study preset settings; model 1 is Weibull(0.5, 0.5), model 2 is
/// Weibull(2, 1). Background N(0, diag(0.25^2, 0.5^2)) on the whole plane.
SimConfig table1_config(int model, std::uint64_t seed = 1);

double draw_renewal_waiting(const HazardParams& h, std::mt19937_64& rng);

/// Branching-structure simulation with `config.seed`. Throws ModelError for
/// a supercritical theta before any sampling.
Catalog simulate_catalog(const SimConfig& config);
Catalog simulate_catalog(const SimConfig& config, std::mt19937_64& rng);

struct StudyOptions {
    bool fit{true};
    FitOptions fit_options;
    int lags{10};
};

/// Per-replicate outcome. p-values index [series U,V,W][test K-S, L-B].
struct ReplicateResult {
    std::uint64_t seed{0};
    std::size_t n_events{0};
    std::string error;
    bool fitted{false};
    bool converged{false};
    ParamVector theta_hat{};
    double gamma_hat{0.0};
    std::optional<ParamVector> se;
    double se_gamma{0.0};
    double loglik{0.0};
    bool have_true_gof{false};
    bool have_fit_gof{false};
    std::array<std::array<double, 2>, 3> p_true{};
    std::array<std::array<double, 2>, 3> p_fit{};
};

struct ParamSummary {
    std::string name;
    double truth{0.0};
    double mean{0.0};
    double empirical_se{0.0};
    double mean_se{0.0};
    double coverage{0.0};
    int count{0};
    int se_count{0};
};

struct StudyReport {
    SimConfig config;
    StudyOptions options;
    std::vector<ReplicateResult> replicates;
    std::vector<ParamSummary> params;  // estimated parameters then gamma
    /// rejection[kind][series][test][level]; kind 0 estimated, 1 true;
    /// level 0 is 5%, 1 is 1%.
    std::array<std::array<std::array<std::array<double, 2>, 2>, 3>, 2> rejection{};
    std::array<int, 2> gof_count{};
    double mean_events{0.0};
    std::size_t min_events{0};
    std::size_t max_events{0};
    int failures{0};
};

/// Replicate r uses seed derive_seed(config.seed, r). Results do not depend
/// on `workers`.
StudyReport run_study(const SimConfig& config, const StudyOptions& options = {}, int workers = 1);

/// Fill the aggregate fields of a report from its replicates.
void summarize(StudyReport& report);

std::string study_json(const StudyReport& report, const std::string& provenance = "");
std::string table1_csv(const StudyReport& report);
std::string table2_csv(const StudyReport& report);

} // namespace retas
