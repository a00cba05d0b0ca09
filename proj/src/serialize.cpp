#include "retas/serialize.hpp"

#include "retas/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace retas {

namespace {

double number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw InputError(std::string("missing numeric field '") + key + "'");
    return j[key].get<double>();
}

} // namespace

json theta_to_json(const Theta& t) {
    return json{{"family", to_string(t.hazard.family)},
                {"alpha", t.hazard.alpha},
                {"beta", t.hazard.beta},
                {"p", t.omori.p},
                {"c", t.omori.c},
                {"sigma1", t.spatial.sigma1},
                {"sigma2", t.spatial.sigma2},
                {"A", t.boost.A},
                {"delta", t.boost.delta},
                {"gamma", t.magnitude.gamma_rate},
                {"m0", t.magnitude.m0}};
}

Theta theta_from_json(const json& in) {
    if (!in.is_object()) throw InputError("theta must be a JSON object");
    const json& j = in.contains("theta") ? in["theta"] : in;
    // fit results carry {value, se, units} per parameter
    auto get = [&](const char* key) {
        if (j.contains(key) && j[key].is_object()) return number(j[key], "value");
        return number(j, key);
    };
    Theta t;
    const std::string fam = j.contains("family") ? j["family"].get<std::string>()
                                                 : (in.contains("family") ? in["family"].get<std::string>() : "");
    if (fam.empty()) throw InputError("theta is missing 'family'");
    t.hazard.family = parse_family(fam);
    t.hazard.alpha = t.hazard.family == HazardFamily::exponential && !j.contains("alpha") ? 1.0 : get("alpha");
    t.hazard.beta = get("beta");
    t.omori = {get("p"), get("c")};
    t.spatial = {get("sigma1"), get("sigma2")};
    const double m0 = j.contains("m0") ? get("m0") : 0.0;
    t.boost = {get("A"), get("delta"), m0};
    t.magnitude = {j.contains("gamma") ? get("gamma") : 1.0, m0};
    return t;
}

Theta load_theta(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path);
    json j = json::parse(f, nullptr, false);
    if (j.is_discarded()) throw InputError("invalid JSON in " + path);
    return theta_from_json(j);
}

json region_to_json(const Region& r) {
    if (r.unbounded) return "plane";
    return json{{"lon_min", r.lon_min}, {"lon_max", r.lon_max}, {"lat_min", r.lat_min}, {"lat_max", r.lat_max}};
}

Region region_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "plane") return Region::plane();
        return parse_region(j.get<std::string>());
    }
    if (!j.is_object()) throw InputError("region must be \"plane\" or an object");
    return Region::rectangle(number(j, "lon_min"), number(j, "lon_max"), number(j, "lat_min"), number(j, "lat_max"));
}

Region parse_region(const std::string& text) {
    if (text == "plane") return Region::plane();
    std::istringstream in(text);
    double v[4];
    char sep = 0;
    for (int k = 0; k < 4; ++k) {
        if (!(in >> v[k])) throw InputError("region must be 'plane' or lon_min,lon_max,lat_min,lat_max: " + text);
        if (k < 3 && !(in >> sep && sep == ','))
            throw InputError("region must be 'plane' or lon_min,lon_max,lat_min,lat_max: " + text);
    }
    in >> std::ws;
    if (!in.eof()) throw InputError("trailing characters in region: " + text);
    return Region::rectangle(v[0], v[1], v[2], v[3]);
}

json sim_config_to_json(const SimConfig& c) {
    return json{{"theta", theta_to_json(c.theta)},
                {"horizon", c.horizon},
                {"region", region_to_json(c.region)},
                {"background", json::parse(c.background.to_json())},
                {"seed", c.seed},
                {"replicates", c.replicates}};
}

SimConfig sim_config_from_json(const json& j) {
    if (!j.is_object()) throw InputError("simulation config must be a JSON object");
    SimConfig c;
    bool have_bg = false;
    if (j.contains("preset")) {
        const std::string p = j["preset"].get<std::string>();
        if (p == "table1-model1")
            c = table1_config(1);
        else if (p == "table1-model2")
            c = table1_config(2);
        else
            throw InputError("unknown preset '" + p + "' (expected table1-model1 or table1-model2)");
        have_bg = true;
    }
    if (j.contains("theta")) {
        const json& t = j["theta"];
        c.theta = theta_from_json(t);
        if (!t.contains("gamma") || !t.contains("m0")) throw InputError("simulation theta needs 'gamma' and 'm0'");
    }
    if (j.contains("horizon")) c.horizon = number(j, "horizon");
    if (j.contains("region")) {
        c.region = region_from_json(j["region"]);
        have_bg = false;
    }
    if (j.contains("background")) {
        const json& b = j["background"];
        if (b.is_string() && b.get<std::string>() == "uniform") {
            c.background = BackgroundDensity::uniform(c.region);
        } else {
            c.background = BackgroundDensity::from_json(b.dump());
        }
        have_bg = true;
    }
    if (!have_bg) {
        if (c.region.unbounded) throw InputError("simulation config on the whole plane needs a 'background'");
        c.background = BackgroundDensity::uniform(c.region);
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("replicates")) c.replicates = j["replicates"].get<int>();
    return c;
}

json fit_to_json(const FitResult& fit, const json& prov) {
    const ParamVector v = to_vector(fit.theta_hat);
    json theta = json::object();
    theta["family"] = to_string(fit.family);
    for (std::size_t k = 0; k < kNumParams; ++k) {
        if (k == static_cast<std::size_t>(Param::alpha) && fit.family == HazardFamily::exponential) continue;
        json e{{"value", v[k]}, {"units", kParamUnits[k]}, {"estimated", fit.estimated[k]}};
        theta[kParamNames[k]] = e;
    }
    theta["gamma"] = json{{"value", fit.theta_hat.magnitude.gamma_rate}, {"units", "per magnitude"}, {"estimated", true}};
    theta["m0"] = json{{"value", fit.theta_hat.magnitude.m0}, {"units", "magnitude"}, {"estimated", false}};

    json se = nullptr;
    if (fit.se) {
        se = json::object();
        for (std::size_t k = 0; k < kNumParams; ++k)
            if (fit.estimated[k]) se[kParamNames[k]] = (*fit.se)[k];
    }
    if (fit.se_gamma) {
        if (se.is_null()) se = json::object();
        se["gamma"] = *fit.se_gamma;
    }

    json out;
    out["family"] = to_string(fit.family);
    out["theta"] = theta;
    out["se"] = se;
    out["loglik"] = fit.loglik;
    out["aic"] = fit.aic;
    out["n_params"] = fit.n_params;
    out["branching_ratio"] = fit.theta_hat.branching();
    out["convergence"] = {{"converged", fit.convergence.converged},
                          {"simplex_iterations", fit.convergence.simplex_iterations},
                          {"polish_iterations", fit.convergence.polish_iterations},
                          {"final_gradient_norm", fit.convergence.final_gradient_norm},
                          {"simplex_spread", fit.convergence.simplex_spread},
                          {"evaluations", fit.convergence.evaluations}};
    out["hessian_invertible"] = fit.hessian_invertible;
    out["warnings"] = fit.warnings;
    out["provenance"] = prov;
    return out;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json provenance(const std::string& config_text, std::uint64_t seed) {
    return json{{"config_hash", fnv1a_hex(config_text)}, {"seed", seed}, {"version", RETAS_VERSION}};
}

} // namespace retas
