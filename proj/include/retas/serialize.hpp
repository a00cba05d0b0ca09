#pragma once

#include "retas/estimation.hpp"
#include "retas/likelihood.hpp"
#include "retas/simulate.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace retas {

using json = nlohmann::ordered_json;

/// {"family", "alpha", "beta", "p", "c", "sigma1", "sigma2", "A", "delta",
/// "gamma", "m0"}.
json theta_to_json(const Theta& theta);
/// Accepts a bare theta object or a fit result (uses its "theta" block).
/// Missing magnitude fields default to gamma = 1, m0 = 0.
Theta theta_from_json(const json& j);
Theta load_theta(const std::string& path);

json region_to_json(const Region& region);
Region region_from_json(const json& j);

/// Parses a region flag: "plane" or "lon_min,lon_max,lat_min,lat_max".
Region parse_region(const std::string& text);

json sim_config_to_json(const SimConfig& config);
/// Optional "preset" ("table1-model1" / "table1-model2") supplies defaults
/// that the other keys override. "background" may be an object, "uniform",
/// or omitted (preset background, else uniform on a bounded region).
SimConfig sim_config_from_json(const json& j);

json fit_to_json(const FitResult& fit, const json& provenance = json::object());

/// Provenance block: {config_hash, seed, version}.
json provenance(const std::string& config_text, std::uint64_t seed);

/// 64-bit FNV-1a, hex-formatted.
std::string fnv1a_hex(const std::string& text);

} // namespace retas
