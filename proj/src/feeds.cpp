#include "qdss/feeds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace qdss {

namespace {

constexpr const char* kAlertFields[] = {"alert_id",      "issued_at", "magnitude", "epicenter_lat",
                                        "epicenter_lon", "depth_km",  "radius_km", "high_risk"};

template <typename T>
T wire_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) fail(ErrorKind::parse, std::string("missing field: ") + name, name);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::parse, std::string("wrong type for field: ") + name, name);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  return in;
}

}  // namespace

void validate(const Alert& a) {
  require(!a.alert_id.empty(), "alert_id", "must be non-empty");
  require(std::isfinite(a.magnitude) && a.magnitude > 0 && a.magnitude <= 10, "magnitude", "must lie in (0, 10]");
  require(std::isfinite(a.epicenter_lat) && a.epicenter_lat >= -90 && a.epicenter_lat <= 90, "epicenter_lat",
          "must lie in [-90, 90]");
  require(std::isfinite(a.epicenter_lon) && a.epicenter_lon >= -180 && a.epicenter_lon <= 180, "epicenter_lon",
          "must lie in [-180, 180]");
  require(std::isfinite(a.depth_km) && a.depth_km >= 0, "depth_km", "must be >= 0");
  require(std::isfinite(a.radius_km) && a.radius_km > 0, "radius_km", "must be > 0");
}

Alert parse_alert(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    // json reports a 1-based count; the offset names the offending byte.
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    fail(ErrorKind::parse, "malformed alert at byte " + std::to_string(offset) + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::parse, "alert must be a json object at byte 0");

  Alert a;
  a.alert_id = wire_field<std::string>(j, "alert_id");
  auto issued = wire_field<std::string>(j, "issued_at");
  a.issued_at = parse_rfc3339(issued);
  a.magnitude = wire_field<double>(j, "magnitude");
  a.epicenter_lat = wire_field<double>(j, "epicenter_lat");
  a.epicenter_lon = wire_field<double>(j, "epicenter_lon");
  a.depth_km = wire_field<double>(j, "depth_km");
  a.radius_km = wire_field<double>(j, "radius_km");
  a.high_risk = wire_field<bool>(j, "high_risk");
  for (const auto& [key, _] : j.items())
    if (std::find(std::begin(kAlertFields), std::end(kAlertFields), key) == std::end(kAlertFields))
      fail(ErrorKind::parse, "unexpected field: " + key, key);
  validate(a);
  return a;
}

void to_json(json& j, const Alert& a) {
  j = {{"alert_id", a.alert_id},       {"issued_at", format_rfc3339(a.issued_at)},
       {"magnitude", a.magnitude},     {"epicenter_lat", a.epicenter_lat},
       {"epicenter_lon", a.epicenter_lon}, {"depth_km", a.depth_km},
       {"radius_km", a.radius_km},     {"high_risk", a.high_risk}};
}

void from_json(const json& j, Alert& a) { a = parse_alert(j.dump()); }

std::string serialize_alert(const Alert& a) { return json(a).dump(); }

bool is_high_risk(const Alert& a, std::span<const Regency> regencies, const RiskThresholds& t) {
  if (a.magnitude >= t.high_risk_magnitude) return true;
  return std::any_of(regencies.begin(), regencies.end(), [&](const Regency& r) {
    return r.population >= t.high_risk_population &&
           geo_distance(a.epicenter(), {r.centroid_lat, r.centroid_lon}) <= a.radius_km;
  });
}

std::vector<Alert> generate_script(double rate, int days, std::uint64_t seed, std::span<const Regency> regencies,
                                   const ScriptConfig& cfg) {
  require(rate >= 5 && rate <= 30, "rate_per_day", "must lie in [5, 30]");
  require(days >= 1, "days", "must be >= 1");

  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(rate / 86400.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double horizon = static_cast<double>(days) * 86400.0;
  const double threshold = cfg.thresholds.high_risk_magnitude;
  std::vector<Alert> script;
  double t = gap(rng);
  while (t < horizon) {
    Alert a;
    char id[48];
    std::snprintf(id, sizeof id, "SIM-%llu-%06zu", static_cast<unsigned long long>(seed), script.size() + 1);
    a.alert_id = id;
    a.issued_at = Timestamp{cfg.start.seconds + static_cast<std::int64_t>(std::floor(t))};
    bool strong = unit(rng) < cfg.high_risk_fraction;
    double u = unit(rng);
    a.magnitude = strong ? threshold + u * (cfg.max_magnitude - threshold)
                         : cfg.min_magnitude + u * (threshold - cfg.min_magnitude);
    a.magnitude = std::round(a.magnitude * 10) / 10;
    if (!strong && a.magnitude >= threshold) a.magnitude = threshold - 0.1;
    a.epicenter_lat = std::round((cfg.lat_min + unit(rng) * (cfg.lat_max - cfg.lat_min)) * 1000) / 1000;
    a.epicenter_lon = std::round((cfg.lon_min + unit(rng) * (cfg.lon_max - cfg.lon_min)) * 1000) / 1000;
    a.depth_km = std::round(5 + unit(rng) * 95);
    a.radius_km = std::clamp(std::round(10 * std::pow(2.0, a.magnitude - 4)), 10.0, 500.0);
    a.high_risk = is_high_risk(a, regencies, cfg.thresholds);
    script.push_back(a);
    t += gap(rng);
  }
  return script;
}

std::size_t replay(std::span<const Alert> script, double speedup, const AlertSink& sink, const Sleeper& sleep) {
  require(speedup > 0, "speedup", "must be > 0");
  for (std::size_t i = 1; i < script.size(); ++i)
    if (script[i].issued_at < script[i - 1].issued_at)
      fail(ErrorKind::validation, "script not sorted by issued_at at index " + std::to_string(i), "issued_at");

  std::size_t delivered = 0;
  for (std::size_t i = 0; i < script.size(); ++i) {
    if (i > 0 && std::isfinite(speedup)) {
      double gap = static_cast<double>(script[i].issued_at.seconds - script[i - 1].issued_at.seconds) / speedup;
      if (gap > 0 && sleep) sleep(std::chrono::duration<double>(gap));
    }
    sink(script[i]);
    ++delivered;
  }
  return delivered;
}

std::vector<Alert> read_alerts(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Alert> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(parse_alert(line));
  return out;
}

void write_alerts(const std::filesystem::path& path, std::span<const Alert> alerts) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  for (const auto& a : alerts) out << serialize_alert(a) << '\n';
}

DemographyFeed DemographyFeed::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  DemographyFeed feed;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(lineno) + ": malformed json");
    try {
      if (j.contains("national_total")) {
        feed.national_total_ = j.at("national_total").get<std::int64_t>();
        continue;
      }
      feed.populations_[j.at("regency_id").get<std::string>()] = j.at("population").get<std::int64_t>();
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return feed;
}

void DemographyFeed::write(const std::filesystem::path& path, std::span<const Regency> regencies) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  std::int64_t total = 0;
  for (const auto& r : regencies) {
    out << json{{"regency_id", r.regency_id}, {"population", r.population}}.dump() << '\n';
    total += r.population;
  }
  out << json{{"national_total", total}}.dump() << '\n';
}

std::int64_t DemographyFeed::population(const std::string& regency_id) const {
  auto it = populations_.find(regency_id);
  if (it == populations_.end()) fail(ErrorKind::not_found, "regency not in demography feed: " + regency_id);
  return it->second;
}

HealthFeed HealthFeed::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  HealthFeed feed;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(lineno) + ": malformed json");
    try {
      feed.records_[j.at("province_id").get<std::string>()] = {j.at("medics").get<std::int64_t>(),
                                                                j.at("deployable").get<std::int64_t>()};
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return feed;
}

HealthRecord HealthFeed::lookup(const std::string& province_id) const {
  auto it = records_.find(province_id);
  if (it == records_.end()) fail(ErrorKind::not_found, "province not in health feed: " + province_id);
  return it->second;
}

}  // namespace qdss
