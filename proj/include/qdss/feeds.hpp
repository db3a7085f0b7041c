#pragma once

// Simulated external information systems: the early-warning alert stream,
// demography and health registries, and a replay engine for alert scripts.

#include "qdss/planner.hpp"
#include "qdss/warehouse.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qdss {

struct Alert {
  std::string alert_id;
  Timestamp issued_at;
  double magnitude = 0;
  double epicenter_lat = 0;
  double epicenter_lon = 0;
  double depth_km = 0;
  double radius_km = 0;
  bool high_risk = false;

  LatLon epicenter() const { return {epicenter_lat, epicenter_lon}; }
  friend bool operator==(const Alert&, const Alert&) = default;
};

void validate(const Alert& alert);

/// Parses one wire-format line. Malformed json or a missing/mistyped field is
/// a parse error (json errors carry the byte offset); a bound violation is a
/// validation error naming the field.
Alert parse_alert(std::string_view line);
std::string serialize_alert(const Alert& alert);

void to_json(json& j, const Alert& a);
void from_json(const json& j, Alert& a);

struct RiskThresholds {
  double high_risk_magnitude = 7.0;
  std::int64_t high_risk_population = 1'000'000;
};

/// High risk: strong enough, or a populous regency lies within the alert radius.
bool is_high_risk(const Alert& alert, std::span<const Regency> regencies, const RiskThresholds& thresholds);

struct ScriptConfig {
  Timestamp start = from_civil(2008, 5, 12);
  RiskThresholds thresholds;
  double high_risk_fraction = 0.1;
  double min_magnitude = 3.0;
  double max_magnitude = 9.0;
  // Indonesian bounding box.
  double lat_min = -11.0, lat_max = 6.0;
  double lon_min = 95.0, lon_max = 141.0;
};

/// Poisson alert stream: exponential inter-arrivals with mean 86400/rate s.
/// Byte-identical output for a fixed seed.
std::vector<Alert> generate_script(double rate_per_day, int days, std::uint64_t seed,
                                   std::span<const Regency> regencies = {}, const ScriptConfig& config = {});

using AlertSink = std::function<void(const Alert&)>;
using Sleeper = std::function<void(std::chrono::duration<double>)>;

/// Delivers alerts in script order, waiting each scaled inter-arrival gap.
/// An infinite speedup delivers without waiting. Returns the delivered count.
std::size_t replay(std::span<const Alert> script, double speedup, const AlertSink& sink, const Sleeper& sleep);

std::vector<Alert> read_alerts(const std::filesystem::path& path);
void write_alerts(const std::filesystem::path& path, std::span<const Alert> alerts);

/// `<root>/feeds/demography.jsonl`: {"regency_id", "population"} lines and a
/// trailing {"national_total": N} footer.
class DemographyFeed {
public:
  static DemographyFeed load(const std::filesystem::path& path);
  static void write(const std::filesystem::path& path, std::span<const Regency> regencies);

  std::int64_t population(const std::string& regency_id) const;
  std::optional<std::int64_t> national_total() const { return national_total_; }
  const std::map<std::string, std::int64_t>& entries() const { return populations_; }

private:
  std::map<std::string, std::int64_t> populations_;
  std::optional<std::int64_t> national_total_;
};

struct HealthRecord {
  std::int64_t medics = 0;
  std::int64_t deployable = 0;
};

/// `<root>/feeds/health.jsonl`: {"province_id", "medics", "deployable"} lines.
class HealthFeed {
public:
  static HealthFeed load(const std::filesystem::path& path);
  HealthRecord lookup(const std::string& province_id) const;
  const std::map<std::string, HealthRecord>& entries() const { return records_; }

private:
  std::map<std::string, HealthRecord> records_;
};

}  // namespace qdss
