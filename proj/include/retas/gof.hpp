#pragma once

#include "retas/background.hpp"
#include "retas/catalog.hpp"
#include "retas/likelihood.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace retas {

struct TestResult {
    double stat{0.0};
    double p{1.0};
};

struct SeriesTests {
    TestResult ks;
    TestResult lb;
    int lb_lags{0};
};

/// Sequential Rosenblatt residuals of a catalog under theta.
struct ResidualSet {
    std::vector<double> U;  // event times
    std::vector<double> V;  // longitudes given time
    std::vector<double> W;  // latitudes given time and longitude
    /// U_1, V_1, W_1, U_2, ... in event order.
    std::vector<double> combined;
    /// Largest |sum - 1| over the p^tau and p^x vectors.
    double max_posterior_error{0.0};
};

/// Most-recent-main-shock probabilities updated with tau_i, then with x_i.
struct PosteriorVectors {
    std::vector<double> p_tau;
    std::vector<double> p_x;
};

ResidualSet compute_residuals(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background);

std::vector<double> temporal_residuals(const Theta& theta, const Catalog& catalog,
                                       const BackgroundDensity& background);
std::vector<double> longitudinal_residuals(const Theta& theta, const Catalog& catalog,
                                           const BackgroundDensity& background);
std::vector<double> latitudinal_residuals(const Theta& theta, const Catalog& catalog,
                                          const BackgroundDensity& background);

/// Posterior over j < i for event i (0-based, i >= 1); event 1 gives {1}.
PosteriorVectors posterior_vectors(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background,
                                   std::size_t i);
std::vector<double> posterior_tau(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background,
                                  std::size_t i);

/// One-sample K-S against Uniform(0,1), asymptotic Kolmogorov p-value.
TestResult ks_uniform(std::vector<double> series);

/// Sample autocorrelations at lags 1..lags. Throws ModelError on zero variance.
std::vector<double> acf(const std::vector<double>& series, int lags);

/// Ljung-Box Q over lags 1..lags with a chi-square(lags) p-value.
TestResult ljung_box(const std::vector<double>& series, int lags = 10);

struct GofReport {
    ResidualSet residuals;
    /// U, V, W, Combined.
    std::array<SeriesTests, 4> tests;
    int lags{10};
};

inline constexpr std::array<const char*, 4> kSeriesNames{"U", "V", "W", "Combined"};

GofReport gof_report(const Theta& theta, const Catalog& catalog, const BackgroundDensity& background,
                     int lags = 10);

/// residuals.csv (i,U,V,W), tests.json, qq.csv and acf.csv in `dir`.
/// `provenance` is embedded in tests.json when it is a JSON object.
void write_gof_artifacts(const GofReport& report, const std::string& dir, const std::string& provenance = "");

std::string tests_json(const GofReport& report, const std::string& provenance = "");

} // namespace retas
