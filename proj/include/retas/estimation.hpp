#pragma once

#include "retas/background.hpp"
#include "retas/catalog.hpp"
#include "retas/likelihood.hpp"
#include "retas/optimize.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace retas {

/// Spatiotemporal parameters in their natural order.
enum class Param : std::size_t { alpha, beta, p, c, sigma1, sigma2, A, delta };
inline constexpr std::size_t kNumParams = 8;
inline constexpr std::array<const char*, kNumParams> kParamNames{"alpha", "beta", "p", "c",
                                                                 "sigma1", "sigma2", "A", "delta"};
inline constexpr std::array<const char*, kNumParams> kParamUnits{"1", "days", "1", "days",
                                                                 "degrees", "degrees", "events", "per magnitude"};

using ParamVector = std::array<double, kNumParams>;
using ParamMask = std::array<bool, kNumParams>;

ParamVector to_vector(const Theta& theta);
Theta from_vector(const ParamVector& v, HazardFamily family, const MagnitudeParams& magnitude);

/// Parameters searched for a given family: alpha is free only for renewal
/// families.
ParamMask free_parameters(HazardFamily family);

struct Convergence {
    bool converged{false};
    int simplex_iterations{0};
    int polish_iterations{0};
    double final_gradient_norm{0.0};
    double simplex_spread{0.0};
    long evaluations{0};
};

struct FitOptions {
    OptimizeOptions optimizer;
    bool compute_standard_errors{true};
    /// Parameters held at their init values (in addition to alpha for the
    /// exponential family).
    ParamMask fixed{};
    /// Drop the spatial factors (temporal-only rungs of the ladder).
    bool temporal_only{false};
};

struct FitResult {
    HazardFamily family{HazardFamily::exponential};
    Theta theta_hat;
    ParamMask estimated{};
    /// Natural-scale standard errors for estimated parameters, then gamma.
    /// Absent when the negated Hessian is not positive definite.
    std::optional<ParamVector> se;
    std::optional<double> se_gamma;
    double loglik{0.0};
    double aic{0.0};
    int n_params{0};
    Convergence convergence;
    bool hessian_invertible{false};
    std::vector<std::string> warnings;
};

/// Maximum-likelihood fit. With no init, the warm-start ladder supplies one.
/// Throws ModelError if the log-likelihood is -inf at the init.
FitResult fit(const Catalog& catalog, const BackgroundDensity& background, HazardFamily family,
              std::optional<Theta> init = std::nullopt, const FitOptions& options = {});

/// Poisson -> temporal Hawkes -> temporal ETAS -> spatiotemporal ETAS
/// (-> renewal shape for Weibull/gamma), each rung fitted from the previous.
Theta warm_start_ladder(const Catalog& catalog, const BackgroundDensity& background, HazardFamily family,
                        const OptimizeOptions& optimizer = {});

/// Central-difference Hessian; step h_k = 1e-4 (1 + |x_k|), limited by
/// `max_step` when given (keeps evaluations feasible near a boundary).
Eigen::MatrixXd hessian_fd(const Objective& objective, std::span<const double> x,
                           std::span<const double> max_step = {});

/// sqrt(diag((-H)^-1)), or nullopt when -H is not positive definite.
std::optional<Eigen::VectorXd> standard_errors(const Eigen::MatrixXd& hessian);

double aic(const FitResult& fit);

/// Spread of epicenters around their nearest earlier neighbour, per axis,
/// used to seed sigma1/sigma2.
std::pair<double, double> nearest_neighbour_dispersion(const Catalog& catalog);

} // namespace retas
