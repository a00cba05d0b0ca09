#pragma once

#include "retas/catalog.hpp"

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace retas {

struct LineIntegrals {
    double partial{0.0};  // integral over y <= y_max along the line
    double full{0.0};     // integral over the whole line within the region
};

/// Main-shock spatial density nu: an equal-weight Gaussian mixture
/// renormalised to integrate to one over its region, or the uniform density
/// when there are no centers.
class BackgroundDensity {
public:
    /// Gaussian mixture with shared per-axis bandwidths. Also used for the
    /// parametric single-normal background of the simulation study.
    BackgroundDensity(std::vector<std::pair<double, double>> centers, double bandwidth_x, double bandwidth_y,
                      Region region);

    /// Uniform density 1/area over a bounded region.
    static BackgroundDensity uniform(const Region& region);

    /// Kernel density estimate from training epicenters. Points outside the
    /// region are dropped (count in dropped_points()). Bandwidth defaults to
    /// Silverman's rule 1.06 sd n^(-1/5) per axis. No usable points gives the
    /// uniform fallback.
    static BackgroundDensity fit_kde(std::span<const Event> training, const Region& region,
                                     std::optional<std::pair<double, double>> bandwidth = std::nullopt);

    double density(double x, double y) const;

    /// Mass of the region left of x_max.
    double halfplane_integral(double x_max) const;

    /// Integrals of nu(x, .) along the vertical line through x.
    LineIntegrals line_slice_integrals(double x, double y_max) const;

    /// Draw one location (mixture component, then rejection into the region).
    std::pair<double, double> sample(std::mt19937_64& rng) const;

    const std::vector<std::pair<double, double>>& centers() const { return centers_; }
    double bandwidth_x() const { return hx_; }
    double bandwidth_y() const { return hy_; }
    const Region& region() const { return region_; }
    double norm_const() const { return norm_const_; }
    bool is_uniform() const { return centers_.empty(); }
    std::size_t dropped_points() const { return dropped_; }

    std::string to_json() const;
    static BackgroundDensity from_json(const std::string& text);
    void save_json(const std::string& path) const;
    static BackgroundDensity load_json(const std::string& path);

private:
    BackgroundDensity() = default;
    void compute_norm();

    std::vector<std::pair<double, double>> centers_;
    double hx_{0.0};
    double hy_{0.0};
    Region region_;
    double norm_const_{1.0};
    std::size_t dropped_{0};
};

} // namespace retas
