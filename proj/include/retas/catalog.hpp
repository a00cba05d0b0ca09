#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace retas {

/// Axis-aligned study rectangle in planar lon/lat degrees, or the whole plane.
struct Region {
    double lon_min{0.0};
    double lon_max{0.0};
    double lat_min{0.0};
    double lat_max{0.0};
    bool unbounded{true};

    static Region plane() { return Region{}; }
    static Region rectangle(double lon_min, double lon_max, double lat_min, double lat_max);

    bool contains(double lon, double lat) const;
    double area() const;
    void validate() const;

    bool operator==(const Region&) const = default;
};

struct Event {
    double time{0.0};  // days since the catalog origin
    double lon{0.0};
    double lat{0.0};
    double magnitude{0.0};

    bool operator==(const Event&) const = default;
};

/// Time-ordered marked events on a region, censored at horizon().
///
/// Immutable once constructed. The constructor enforces every invariant the
/// likelihood relies on: strictly increasing times in [0, horizon), all
/// epicenters inside the region and all magnitudes at or above m0.
class Catalog {
public:
    Catalog(std::vector<Event> events, Region region, double horizon, double m0,
            std::string origin = {}, double offset_days = 0.0);

    std::span<const Event> events() const { return events_; }
    const Event& operator[](std::size_t i) const { return events_[i]; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

    const Region& region() const { return region_; }
    double horizon() const { return horizon_; }
    double m0() const { return m0_; }
    /// Calendar timestamp of time zero (metadata only).
    const std::string& origin() const { return origin_; }
    /// Position of time zero on the timeline of the source file, in days.
    double offset_days() const { return offset_days_; }

    bool operator==(const Catalog&) const = default;

private:
    std::vector<Event> events_;
    Region region_;
    double horizon_;
    double m0_;
    std::string origin_;
    double offset_days_;
};

/// Column names of the four required fields.
struct CsvFormat {
    std::string time_column{"time"};
    std::string lon_column{"lon"};
    std::string lat_column{"lat"};
    std::string magnitude_column{"magnitude"};
};

/// Everything besides the rows needed to build a Catalog.
struct CatalogConfig {
    Region region{Region::plane()};
    std::optional<double> m0;       // default: smallest magnitude in the file
    std::optional<double> horizon;  // default: floor(last time) + 1
    std::string origin;             // ISO-8601; required for ISO time columns
    bool drop_outside{false};       // drop out-of-region / out-of-window rows
};

/// Parse a `key = value` config file (`#` starts a comment). Recognised keys:
/// lon_min, lon_max, lat_min, lat_max, region (= plane), m0, horizon, origin,
/// drop_outside.
CatalogConfig load_config(const std::string& path);
CatalogConfig parse_config(const std::string& text);

/// Days from `origin` to `timestamp`; both ISO-8601
/// (YYYY-MM-DD[(T| )hh:mm[:ss[.fff]]][Z]).
double days_between(const std::string& origin, const std::string& timestamp);

Catalog load_csv(const std::string& path, const CatalogConfig& config, const CsvFormat& format = {});
Catalog parse_csv(const std::string& text, const CatalogConfig& config, const CsvFormat& format = {});

/// Write `time,lon,lat,magnitude` with 17 significant digits.
void save_csv(const Catalog& catalog, const std::string& path);
std::string to_csv(const Catalog& catalog);

/// key = value config restoring region, m0, horizon and origin on reload.
std::string config_text(const Catalog& catalog);
void save_config(const Catalog& catalog, const std::string& path);

/// Keep events with magnitude >= m0, inside `region`, and with file-timeline
/// time in [t0, t1). Window bounds are on the source-file timeline
/// (time + offset_days), so filtering is idempotent. The result's time zero
/// is t0 and its horizon is t1 - t0.
Catalog filter(const Catalog& catalog, double m0, double t0, double t1, const Region& region);

} // namespace retas
