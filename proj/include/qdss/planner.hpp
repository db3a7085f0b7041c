#pragma once

// Resource planning for an incoming quake: affected area, medical-team need
// and shortfall, the provisioning list, refugee siting, and a nearest-past-quake
// impact prediction.

#include "qdss/warehouse.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace qdss {

struct LatLon {
  double lat = 0;
  double lon = 0;
};

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle (haversine) distance in kilometres.
double geo_distance(LatLon a, LatLon b);

/// Regencies whose centroid lies within `radius_km` of the epicenter (inclusive).
std::set<std::string> affected_regencies(LatLon epicenter, double radius_km, std::span<const Regency> regencies);

/// M_n = ceil(A_c / N_mc).
std::int64_t medics_needed(std::int64_t affected_citizens, std::int64_t citizens_per_medic);

/// M_l = M_n - A_m when M_n > A_m, else 0.
std::int64_t medic_lack(std::int64_t medics_needed, std::int64_t medics_available);

struct NeedsStandard {
  std::int64_t citizens_per_medic = 1000;
  std::int64_t persons_per_tent = 5;
  std::int64_t persons_per_sanitation_unit = 20;
  std::int64_t persons_per_food_shelter = 250;
  double rice_kg_per_person_day = 0.4;
  double blankets_per_person = 2;
  std::int64_t citizens_per_volunteer = 100;
  double infant_fraction = 0.03;
  double baby_feed_kg_per_infant_day = 0.15;
  double displacement_fraction = 0.3;
  std::int64_t supply_horizon_days = 14;

  void validate() const;
};

enum class NeedsCategory { food, clothing, water, sanitation, rescue_team, health_services, psychological_services };

inline constexpr NeedsCategory kNeedsCategories[] = {
    NeedsCategory::food,        NeedsCategory::clothing,        NeedsCategory::water,
    NeedsCategory::sanitation,  NeedsCategory::rescue_team,     NeedsCategory::health_services,
    NeedsCategory::psychological_services};

std::string_view to_string(NeedsCategory c);

struct CategoryStatus {
  NeedsCategory category;
  bool covered;
  friend bool operator==(const CategoryStatus&, const CategoryStatus&) = default;
};

struct NeedsEstimate {
  std::int64_t a_c = 0;
  std::int64_t displaced = 0;
  std::int64_t medics_needed = 0;
  std::int64_t medics_available = 0;
  std::int64_t medic_lack = 0;
  std::int64_t tents = 0;
  std::int64_t sanitation_units = 0;
  std::int64_t food_shelters = 0;
  std::int64_t blankets = 0;
  double rice_kg = 0;
  double baby_feed_kg = 0;
  std::int64_t volunteers_national = 0;
  std::vector<std::string> refugee_sites;
  std::int64_t refugee_shortfall = 0;
  double total_loss_estimate = 0;
  std::vector<CategoryStatus> category_checklist;

  friend bool operator==(const NeedsEstimate&, const NeedsEstimate&) = default;
};

NeedsEstimate estimate_needs(std::int64_t affected_citizens, std::int64_t medics_available,
                             const NeedsStandard& standard);

struct SitingResult {
  std::vector<std::string> sites;
  std::int64_t shortfall = 0;  // persons left without a site; > 0 flags insufficient capacity
};

/// Greedy nearest-first choice of non-affected regencies around the centroid
/// of the affected set, until cumulative capacity covers the displaced.
SitingResult site_refugees(const std::set<std::string>& affected, std::span<const Regency> regencies,
                           std::int64_t displaced, std::int64_t capacity_per_regency);

struct ImpactFeatures {
  double magnitude = 0;
  double depth_km = 0;
  double exposed_population = 0;
};

using CategoryCounts = std::array<double, std::size(kBuildingCategories)>;

struct HistoricalImpact {
  std::string quake_id;
  ImpactFeatures features;
  double deaths = 0;
  double injured = 0;
  CategoryCounts damaged{};
};

struct Neighbor {
  std::string quake_id;
  double distance = 0;
  double weight = 0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct ImpactPrediction {
  double predicted_deaths = 0;
  double predicted_injured = 0;
  int predicted_level = 1;
  std::vector<Neighbor> neighbors;
  CategoryCounts predicted_damage{};
  friend bool operator==(const ImpactPrediction&, const ImpactPrediction&) = default;
};

/// K nearest past quakes over z-normalised (magnitude, depth, exposed
/// population); outcomes are inverse-distance weighted and scaled by the
/// exposure ratio. Neighbour ties break by quake_id. predicted_level is left
/// at 1; use disaster_level once the medic lack is known.
ImpactPrediction predict_impact(const ImpactFeatures& query, std::span<const HistoricalImpact> history, int k);

using LevelThresholds = std::array<double, 3>;

/// Level 1: deaths < t0 with no medic lack; 2: deaths < t1; 3: deaths < t2; 4 otherwise.
int disaster_level(double predicted_deaths, std::int64_t medic_lack, const LevelThresholds& thresholds);

struct PlannerConfig {
  NeedsStandard standard;
  std::map<BuildingCategory, double> unit_costs;
  LevelThresholds level_thresholds{100, 1000, 10000};
  int k = 3;
  double history_radius_km = 100;
  std::int64_t refugee_site_capacity = 20000;

  static PlannerConfig defaults();
  void validate() const;
};

/// Reads `<root>/standards.json`; missing file or fields fall back to defaults.
PlannerConfig load_planner_config(const std::filesystem::path& root);

/// Past quakes with their recorded outcomes, exposure taken from regency
/// populations near each epicenter.
std::vector<HistoricalImpact> history_from_snapshot(const Snapshot& snapshot, double history_radius_km);

struct PlanRequest {
  LatLon epicenter;
  double radius_km = 0;
  double magnitude = 0;
  double depth_km = 0;
};

struct Plan {
  std::set<std::string> affected;
  NeedsEstimate needs;
  std::optional<ImpactPrediction> prediction;
  std::string prediction_error;
};

/// Assembles the full plan. `a_c` and `a_m` come from whichever registry
/// the caller trusts (demography/health feeds or the warehouse).
Plan make_plan(const PlanRequest& request, const std::set<std::string>& affected, std::int64_t a_c,
               std::int64_t a_m, const Snapshot& snapshot, const PlannerConfig& config);

void to_json(json& j, const NeedsStandard& v);
void from_json(const json& j, NeedsStandard& v);
void to_json(json& j, const NeedsEstimate& v);
void from_json(const json& j, NeedsEstimate& v);
void to_json(json& j, const ImpactPrediction& v);
void from_json(const json& j, ImpactPrediction& v);
json plan_json(const Plan& plan);

}  // namespace qdss
