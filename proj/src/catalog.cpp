#include "retas/catalog.hpp"

#include "retas/error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace retas {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(trim(field));
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    out.push_back(trim(field));
    return out;
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return v;
}

double require_double(const std::string& s, const std::string& what) {
    auto v = parse_double(s);
    if (!v) throw InputError("cannot parse " + what + " value '" + s + "'");
    return *v;
}

// Seconds-resolution ISO-8601 to fractional days since 1970-01-01.
double iso_to_days(const std::string& text) {
    const std::string s = trim(text);
    int y = 0, mo = 0, d = 0, hh = 0, mm = 0;
    double ss = 0.0;
    int consumed = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d%n", &y, &mo, &d, &consumed) != 3)
        throw InputError("not an ISO-8601 timestamp: '" + s + "'");
    std::string rest = s.substr(static_cast<std::size_t>(consumed));
    if (!rest.empty() && (rest[0] == 'T' || rest[0] == ' ')) {
        rest = rest.substr(1);
        int c2 = 0;
        if (std::sscanf(rest.c_str(), "%d:%d%n", &hh, &mm, &c2) != 2)
            throw InputError("not an ISO-8601 timestamp: '" + s + "'");
        rest = rest.substr(static_cast<std::size_t>(c2));
        if (!rest.empty() && rest[0] == ':') {
            std::size_t end = 1;
            while (end < rest.size() && (std::isdigit(static_cast<unsigned char>(rest[end])) || rest[end] == '.'))
                ++end;
            ss = require_double(rest.substr(1, end - 1), "seconds");
            rest = rest.substr(end);
        }
    }
    if (!rest.empty() && rest != "Z")
        throw InputError("unsupported ISO-8601 suffix in '" + s + "'");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0.0 || ss >= 61.0)
        throw InputError("invalid calendar timestamp '" + s + "'");
    const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) + (hh * 3600.0 + mm * 60.0 + ss) / 86400.0;
}

std::string format_rows(const std::vector<std::size_t>& rows) {
    std::string out;
    const std::size_t shown = std::min<std::size_t>(rows.size(), 20);
    for (std::size_t k = 0; k < shown; ++k) {
        if (k) out += ", ";
        out += std::to_string(rows[k]);
    }
    if (rows.size() > shown) out += ", ... (" + std::to_string(rows.size()) + " total)";
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

Region Region::rectangle(double lon_min, double lon_max, double lat_min, double lat_max) {
    Region r{lon_min, lon_max, lat_min, lat_max, false};
    r.validate();
    return r;
}

bool Region::contains(double lon, double lat) const {
    if (unbounded) return std::isfinite(lon) && std::isfinite(lat);
    return lon >= lon_min && lon <= lon_max && lat >= lat_min && lat <= lat_max;
}

double Region::area() const {
    if (unbounded) return std::numeric_limits<double>::infinity();
    return (lon_max - lon_min) * (lat_max - lat_min);
}

void Region::validate() const {
    if (unbounded) return;
    if (!(lon_min < lon_max) || !(lat_min < lat_max))
        throw InputError("region requires lon_min < lon_max and lat_min < lat_max");
}

Catalog::Catalog(std::vector<Event> events, Region region, double horizon, double m0, std::string origin,
                 double offset_days)
    : events_(std::move(events)), region_(region), horizon_(horizon), m0_(m0), origin_(std::move(origin)),
      offset_days_(offset_days) {
    region_.validate();
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw InputError("catalog horizon must be positive and finite");
    if (!std::isfinite(m0_)) throw InputError("catalog threshold magnitude must be finite");
    for (std::size_t i = 0; i < events_.size(); ++i) {
        const Event& e = events_[i];
        if (!(e.time >= 0.0)) throw InputError("event " + std::to_string(i) + " has negative time");
        if (i > 0 && !(e.time > events_[i - 1].time))
            throw InputError("event times must be strictly increasing (events " + std::to_string(i - 1) + " and " +
                             std::to_string(i) + ")");
        if (!(e.magnitude >= m0_)) throw InputError("event " + std::to_string(i) + " is below the threshold magnitude");
        if (!region_.contains(e.lon, e.lat)) throw InputError("event " + std::to_string(i) + " lies outside the region");
    }
    if (!events_.empty() && !(events_.back().time < horizon_))
        throw InputError("last event time must be before the horizon");
}

CatalogConfig parse_config(const std::string& text) {
    CatalogConfig cfg;
    std::optional<double> lon_min, lon_max, lat_min, lat_max;
    bool plane = false;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "lon_min") lon_min = require_double(value, key);
        else if (key == "lon_max") lon_max = require_double(value, key);
        else if (key == "lat_min") lat_min = require_double(value, key);
        else if (key == "lat_max") lat_max = require_double(value, key);
        else if (key == "region") {
            if (value != "plane") throw InputError("config: region must be 'plane' (use lon_min/... for rectangles)");
            plane = true;
        } else if (key == "m0") cfg.m0 = require_double(value, key);
        else if (key == "horizon") cfg.horizon = require_double(value, key);
        else if (key == "origin") cfg.origin = value;
        else if (key == "drop_outside") cfg.drop_outside = (value == "true" || value == "1" || value == "yes");
        else throw InputError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    const int given = lon_min.has_value() + lon_max.has_value() + lat_min.has_value() + lat_max.has_value();
    if (given != 0 && given != 4) throw InputError("config: all four of lon_min, lon_max, lat_min, lat_max are required");
    if (given == 4 && plane) throw InputError("config: region = plane conflicts with rectangle bounds");
    if (given == 4) cfg.region = Region::rectangle(*lon_min, *lon_max, *lat_min, *lat_max);
    return cfg;
}

CatalogConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

double days_between(const std::string& origin, const std::string& timestamp) {
    return iso_to_days(timestamp) - iso_to_days(origin);
}

Catalog parse_csv(const std::string& text, const CatalogConfig& config, const CsvFormat& format) {
    config.region.validate();
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InputError("catalog CSV is empty (missing header row)");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw InputError("catalog CSV has no column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t ct = column(format.time_column), cx = column(format.lon_column),
                      cy = column(format.lat_column), cm = column(format.magnitude_column);
    const std::size_t needed = std::max({ct, cx, cy, cm}) + 1;

    struct Row {
        Event event;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() < needed) throw InputError("catalog CSV row " + std::to_string(lineno) + ": too few columns");
        Event e;
        if (auto t = parse_double(f[ct])) {
            e.time = *t;
        } else if (!config.origin.empty()) {
            e.time = days_between(config.origin, f[ct]);
        } else {
            throw InputError("catalog CSV row " + std::to_string(lineno) + ": time '" + f[ct] +
                             "' is not decimal days (supply an origin for ISO-8601 times)");
        }
        e.lon = require_double(f[cx], "lon");
        e.lat = require_double(f[cy], "lat");
        e.magnitude = require_double(f[cm], "magnitude");
        rows.push_back({e, lineno});
    }

    double m0 = 0.0;
    if (config.m0) {
        m0 = *config.m0;
    } else if (!rows.empty()) {
        m0 = std::min_element(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
                 return a.event.magnitude < b.event.magnitude;
             })->event.magnitude;
    }
    std::erase_if(rows, [&](const Row& r) { return r.event.magnitude < m0; });

    double horizon = 1.0;
    if (config.horizon) {
        horizon = *config.horizon;
    } else if (!rows.empty()) {
        double last = 0.0;
        for (const auto& r : rows) last = std::max(last, r.event.time);
        horizon = std::floor(last) + 1.0;
    }

    std::vector<std::size_t> outside;
    for (const auto& r : rows)
        if (!config.region.contains(r.event.lon, r.event.lat) || !(r.event.time >= 0.0) || !(r.event.time < horizon))
            outside.push_back(r.line);
    if (!outside.empty()) {
        if (!config.drop_outside)
            throw InputError("catalog rows outside the region or time window: " + format_rows(outside));
        std::erase_if(rows, [&](const Row& r) {
            return !config.region.contains(r.event.lon, r.event.lat) || !(r.event.time >= 0.0) ||
                   !(r.event.time < horizon);
        });
    }

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.event.time < b.event.time; });
    std::vector<std::string> ties;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].event.time == rows[i - 1].event.time)
            ties.push_back("rows " + std::to_string(rows[i - 1].line) + " and " + std::to_string(rows[i].line));
    if (!ties.empty()) {
        std::string msg = "tied event times (strictly increasing times are required): ";
        for (std::size_t k = 0; k < ties.size() && k < 20; ++k) msg += (k ? "; " : "") + ties[k];
        throw InputError(msg);
    }

    std::vector<Event> events;
    events.reserve(rows.size());
    for (const auto& r : rows) events.push_back(r.event);
    return Catalog(std::move(events), config.region, horizon, m0, config.origin);
}

Catalog load_csv(const std::string& path, const CatalogConfig& config, const CsvFormat& format) {
    return parse_csv(read_file(path), config, format);
}

std::string to_csv(const Catalog& catalog) {
    std::string out = "time,lon,lat,magnitude\n";
    char buf[128];
    for (const Event& e : catalog.events()) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", e.time, e.lon, e.lat, e.magnitude);
        out += buf;
    }
    return out;
}

void save_csv(const Catalog& catalog, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << to_csv(catalog);
    if (!out) throw InputError("failed writing file: " + path);
}

std::string config_text(const Catalog& catalog) {
    std::string out;
    char buf[96];
    const Region& r = catalog.region();
    if (r.unbounded) {
        out += "region = plane\n";
    } else {
        std::snprintf(buf, sizeof buf, "lon_min = %.17g\nlon_max = %.17g\n", r.lon_min, r.lon_max);
        out += buf;
        std::snprintf(buf, sizeof buf, "lat_min = %.17g\nlat_max = %.17g\n", r.lat_min, r.lat_max);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "m0 = %.17g\nhorizon = %.17g\n", catalog.m0(), catalog.horizon());
    out += buf;
    if (!catalog.origin().empty()) out += "origin = " + catalog.origin() + "\n";
    return out;
}

void save_config(const Catalog& catalog, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << config_text(catalog);
    if (!out) throw InputError("failed writing file: " + path);
}

Catalog filter(const Catalog& catalog, double m0, double t0, double t1, const Region& region) {
    region.validate();
    const double off = catalog.offset_days();
    if (!(t0 < t1)) throw InputError("filter window requires t0 < t1");
    if (t1 > off + catalog.horizon()) throw InputError("filter window ends after the catalog horizon");
    if (t0 < off) throw InputError("filter window starts before the catalog time origin");
    // Work relative to the current time zero so that re-applying the same
    // window (t0 == offset) leaves times bit-identical.
    const double rel_start = t0 - off;
    const double rel_end = t1 - off;
    std::vector<Event> kept;
    for (const Event& e : catalog.events()) {
        if (e.magnitude >= m0 && e.time >= rel_start && e.time < rel_end && region.contains(e.lon, e.lat)) {
            Event shifted = e;
            shifted.time = e.time - rel_start;
            kept.push_back(shifted);
        }
    }
    // Re-offsetting can in principle merge two distinct times; the Catalog
    // constructor rejects that rather than silently reordering.
    return Catalog(std::move(kept), region, t1 - t0, m0, catalog.origin(), t0);
}

} // namespace retas
