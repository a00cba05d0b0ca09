#include "retas/background.hpp"

#include "retas/error.hpp"
#include "retas/random.hpp"
#include "retas/special.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace retas {

using special::normal_cdf;
using special::normal_interval;
using special::normal_pdf;

namespace {

double silverman(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return 1.06 * sd * std::pow(n, -0.2);
}

// Mass of N(c, h) on [lo, hi] where either bound may be infinite.
double axis_mass(double c, double h, double lo, double hi) {
    return normal_interval((lo - c) / h, (hi - c) / h);
}

} // namespace

BackgroundDensity::BackgroundDensity(std::vector<std::pair<double, double>> centers, double bandwidth_x,
                                     double bandwidth_y, Region region)
    : centers_(std::move(centers)), hx_(bandwidth_x), hy_(bandwidth_y), region_(region) {
    region_.validate();
    if (centers_.empty()) {
        if (region_.unbounded) throw InputError("a uniform background needs a bounded region");
        hx_ = hy_ = 0.0;
    } else if (!(hx_ > 0.0) || !(hy_ > 0.0) || !std::isfinite(hx_) || !std::isfinite(hy_)) {
        throw InputError("background bandwidths must be positive and finite");
    }
    compute_norm();
}

BackgroundDensity BackgroundDensity::uniform(const Region& region) { return BackgroundDensity({}, 0.0, 0.0, region); }

void BackgroundDensity::compute_norm() {
    if (centers_.empty() || region_.unbounded) {
        norm_const_ = 1.0;
        return;
    }
    double sum = 0.0;
    for (const auto& [cx, cy] : centers_)
        sum += axis_mass(cx, hx_, region_.lon_min, region_.lon_max) * axis_mass(cy, hy_, region_.lat_min, region_.lat_max);
    norm_const_ = sum / static_cast<double>(centers_.size());
    if (!(norm_const_ > 0.0))
        throw ModelError("background kernels carry no mass inside the region (bandwidth too small?)");
}

BackgroundDensity BackgroundDensity::fit_kde(std::span<const Event> training, const Region& region,
                                             std::optional<std::pair<double, double>> bandwidth) {
    if (region.unbounded) throw InputError("kernel density background requires a bounded region");
    std::vector<std::pair<double, double>> centers;
    std::vector<double> xs, ys;
    std::size_t dropped = 0;
    for (const Event& e : training) {
        if (!region.contains(e.lon, e.lat)) {
            ++dropped;
            continue;
        }
        centers.emplace_back(e.lon, e.lat);
        xs.push_back(e.lon);
        ys.push_back(e.lat);
    }
    BackgroundDensity out;
    if (centers.empty()) {
        out = uniform(region);
    } else {
        double hx = 0.0, hy = 0.0;
        if (bandwidth) {
            std::tie(hx, hy) = *bandwidth;
        } else {
            if (centers.size() < 2)
                throw InputError("automatic bandwidth needs at least two training points; pass an explicit bandwidth");
            hx = silverman(xs);
            hy = silverman(ys);
            if (!(hx > 0.0) || !(hy > 0.0))
                throw InputError("training points have zero spread on one axis; pass an explicit bandwidth");
        }
        out = BackgroundDensity(std::move(centers), hx, hy, region);
    }
    out.dropped_ = dropped;
    return out;
}

double BackgroundDensity::density(double x, double y) const {
    if (!region_.contains(x, y)) return 0.0;
    if (centers_.empty()) return 1.0 / region_.area();
    double sum = 0.0;
    for (const auto& [cx, cy] : centers_) sum += normal_pdf((x - cx) / hx_) * normal_pdf((y - cy) / hy_);
    return sum / (hx_ * hy_ * static_cast<double>(centers_.size()) * norm_const_);
}

double BackgroundDensity::halfplane_integral(double x_max) const {
    const double inf = std::numeric_limits<double>::infinity();
    const double lo = region_.unbounded ? -inf : region_.lon_min;
    const double hi = region_.unbounded ? inf : region_.lon_max;
    if (x_max <= lo) return 0.0;
    if (x_max >= hi) return 1.0;
    if (centers_.empty()) return (x_max - lo) / (hi - lo);
    const double ylo = region_.unbounded ? -inf : region_.lat_min;
    const double yhi = region_.unbounded ? inf : region_.lat_max;
    double sum = 0.0;
    for (const auto& [cx, cy] : centers_) sum += axis_mass(cx, hx_, lo, x_max) * axis_mass(cy, hy_, ylo, yhi);
    return std::min(1.0, sum / (static_cast<double>(centers_.size()) * norm_const_));
}

LineIntegrals BackgroundDensity::line_slice_integrals(double x, double y_max) const {
    const double inf = std::numeric_limits<double>::infinity();
    if (!region_.unbounded && (x < region_.lon_min || x > region_.lon_max)) return {};
    const double ylo = region_.unbounded ? -inf : region_.lat_min;
    const double yhi = region_.unbounded ? inf : region_.lat_max;
    const double ycut = std::clamp(y_max, ylo, yhi);
    if (centers_.empty()) {
        const double a = region_.area();
        return {(ycut - ylo) / a, (yhi - ylo) / a};
    }
    double partial = 0.0, full = 0.0;
    for (const auto& [cx, cy] : centers_) {
        const double wx = normal_pdf((x - cx) / hx_) / hx_;
        full += wx * axis_mass(cy, hy_, ylo, yhi);
        partial += wx * axis_mass(cy, hy_, ylo, ycut);
    }
    const double scale = static_cast<double>(centers_.size()) * norm_const_;
    return {std::min(partial, full) / scale, full / scale};
}

std::pair<double, double> BackgroundDensity::sample(std::mt19937_64& rng) const {
    if (centers_.empty()) {
        return {region_.lon_min + uniform01(rng) * (region_.lon_max - region_.lon_min),
                region_.lat_min + uniform01(rng) * (region_.lat_max - region_.lat_min)};
    }
    std::normal_distribution<double> z(0.0, 1.0);
    for (int attempt = 0; attempt < 10'000'000; ++attempt) {
        const auto k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(centers_.size()));
        const auto [cx, cy] = centers_[std::min(k, centers_.size() - 1)];
        const double x = cx + hx_ * z(rng);
        const double y = cy + hy_ * z(rng);
        if (region_.contains(x, y)) return {x, y};
    }
    throw ModelError("background sampling rejected too many draws");
}

std::string BackgroundDensity::to_json() const {
    nlohmann::json j;
    j["kind"] = centers_.empty() ? "uniform" : "gaussian_mixture";
    auto& c = j["centers"] = nlohmann::json::array();
    for (const auto& [x, y] : centers_) c.push_back({x, y});
    j["bandwidths"] = {hx_, hy_};
    if (region_.unbounded) {
        j["region"] = "plane";
    } else {
        j["region"] = {{"lon_min", region_.lon_min},
                       {"lon_max", region_.lon_max},
                       {"lat_min", region_.lat_min},
                       {"lat_max", region_.lat_max}};
    }
    j["norm_const"] = norm_const_;
    j["dropped_points"] = dropped_;
    return j.dump(2);
}

BackgroundDensity BackgroundDensity::from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        // also accept a document that embeds the density, e.g. a simulation config
        const auto& j = doc.contains("background") ? doc.at("background") : doc;
        Region region = Region::plane();
        if (!(j.at("region").is_string() && j.at("region") == "plane")) {
            const auto& r = j.at("region");
            region = Region::rectangle(r.at("lon_min"), r.at("lon_max"), r.at("lat_min"), r.at("lat_max"));
        }
        std::vector<std::pair<double, double>> centers;
        for (const auto& c : j.at("centers")) centers.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
        const auto& bw = j.at("bandwidths");
        BackgroundDensity out(std::move(centers), bw.at(0), bw.at(1), region);
        out.dropped_ = j.value("dropped_points", std::size_t{0});
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed background JSON: ") + e.what());
    }
}

void BackgroundDensity::save_json(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << to_json() << '\n';
}

BackgroundDensity BackgroundDensity::load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

} // namespace retas
