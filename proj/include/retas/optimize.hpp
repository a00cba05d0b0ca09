#pragma once

#include <functional>
#include <span>
#include <vector>

namespace retas {

using Objective = std::function<double(std::span<const double>)>;

struct OptimizeOptions {
    int max_simplex_iterations{2000};
    int max_polish_iterations{200};
    /// Stop when the objective spread (simplex) or per-iteration decrease
    /// (polish) falls below rel_tol * (|f| + rel_tol).
    double rel_tol{1e-8};
    /// Initial simplex edge length in the search coordinates.
    double initial_step{0.1};
};

struct OptimizeResult {
    std::vector<double> x;
    double value{0.0};
    bool converged{false};
    int simplex_iterations{0};
    int polish_iterations{0};
    double simplex_spread{0.0};
    double gradient_norm{0.0};
    long evaluations{0};
};

/// Nelder-Mead simplex search followed by a BFGS polish on central
/// finite-difference gradients. Non-finite objective values are treated
/// as +inf and never accepted.
OptimizeResult minimize(const Objective& f, std::vector<double> x0, const OptimizeOptions& options = {});

/// Central-difference gradient with per-coordinate step h * (1 + |x_k|).
std::vector<double> fd_gradient(const Objective& f, std::span<const double> x, double h = 1e-5);

} // namespace retas
