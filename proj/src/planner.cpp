#include "qdss/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace qdss {

namespace {

constexpr double kPi = 3.14159265358979323846;

double radians(double deg) { return deg * kPi / 180.0; }

std::int64_t ceil_div(std::int64_t num, std::int64_t den) { return num <= 0 ? 0 : (num + den - 1) / den; }

std::size_t category_index(BuildingCategory c) { return static_cast<std::size_t>(c); }

}  // namespace

double geo_distance(LatLon a, LatLon b) {
  double dlat = radians(b.lat - a.lat);
  double dlon = radians(b.lon - a.lon);
  double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
             std::cos(radians(a.lat)) * std::cos(radians(b.lat)) * std::sin(dlon / 2) * std::sin(dlon / 2);
  h = std::min(1.0, h);
  return 2 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

std::set<std::string> affected_regencies(LatLon epicenter, double radius_km, std::span<const Regency> regencies) {
  require(radius_km > 0, "radius_km", "must be > 0");
  std::set<std::string> out;
  for (const auto& r : regencies)
    if (geo_distance(epicenter, {r.centroid_lat, r.centroid_lon}) <= radius_km) out.insert(r.regency_id);
  return out;
}

std::int64_t medics_needed(std::int64_t affected_citizens, std::int64_t citizens_per_medic) {
  require(citizens_per_medic > 0, "citizens_per_medic", "must be > 0");
  require(affected_citizens >= 0, "a_c", "must be >= 0");
  return ceil_div(affected_citizens, citizens_per_medic);
}

std::int64_t medic_lack(std::int64_t needed, std::int64_t available) {
  return needed > available ? needed - available : 0;
}

void NeedsStandard::validate() const {
  require(citizens_per_medic > 0, "citizens_per_medic", "must be > 0");
  require(persons_per_tent > 0, "persons_per_tent", "must be > 0");
  require(persons_per_sanitation_unit > 0, "persons_per_sanitation_unit", "must be > 0");
  require(persons_per_food_shelter > 0, "persons_per_food_shelter", "must be > 0");
  require(rice_kg_per_person_day > 0, "rice_kg_per_person_day", "must be > 0");
  require(blankets_per_person > 0, "blankets_per_person", "must be > 0");
  require(citizens_per_volunteer > 0, "citizens_per_volunteer", "must be > 0");
  require(infant_fraction >= 0 && infant_fraction <= 1, "infant_fraction", "must lie in [0, 1]");
  require(baby_feed_kg_per_infant_day > 0, "baby_feed_kg_per_infant_day", "must be > 0");
  require(displacement_fraction >= 0 && displacement_fraction <= 1, "displacement_fraction", "must lie in [0, 1]");
  require(supply_horizon_days >= 1, "supply_horizon_days", "must be >= 1");
}

std::string_view to_string(NeedsCategory c) {
  switch (c) {
    case NeedsCategory::food: return "food";
    case NeedsCategory::clothing: return "clothing";
    case NeedsCategory::water: return "water";
    case NeedsCategory::sanitation: return "sanitation";
    case NeedsCategory::rescue_team: return "rescue_team";
    case NeedsCategory::health_services: return "health_services";
    case NeedsCategory::psychological_services: return "psychological_services";
  }
  return "";
}

NeedsEstimate estimate_needs(std::int64_t a_c, std::int64_t a_m, const NeedsStandard& s) {
  s.validate();
  require(a_c >= 0, "a_c", "must be >= 0");
  require(a_m >= 0, "a_m", "must be >= 0");

  NeedsEstimate e;
  e.a_c = a_c;
  e.displaced = std::llround(static_cast<double>(a_c) * s.displacement_fraction);
  e.medics_needed = medics_needed(a_c, s.citizens_per_medic);
  e.medics_available = a_m;
  e.medic_lack = medic_lack(e.medics_needed, a_m);
  e.tents = ceil_div(e.displaced, s.persons_per_tent);
  e.sanitation_units = ceil_div(e.displaced, s.persons_per_sanitation_unit);
  e.food_shelters = ceil_div(e.displaced, s.persons_per_food_shelter);
  e.volunteers_national = ceil_div(a_c, s.citizens_per_volunteer);
  e.blankets = static_cast<std::int64_t>(std::ceil(static_cast<double>(e.displaced) * s.blankets_per_person));
  const double horizon = static_cast<double>(s.supply_horizon_days);
  e.rice_kg = static_cast<double>(e.displaced) * s.rice_kg_per_person_day * horizon;
  const auto infants = std::llround(static_cast<double>(e.displaced) * s.infant_fraction);
  e.baby_feed_kg = static_cast<double>(infants) * s.baby_feed_kg_per_infant_day * horizon;

  auto covered = [&](double quantity) { return a_c == 0 || quantity > 0; };
  auto quantity_for = [&](NeedsCategory c) -> double {
    switch (c) {
      case NeedsCategory::food: return e.rice_kg;
      case NeedsCategory::clothing: return static_cast<double>(e.blankets);
      case NeedsCategory::water:
      case NeedsCategory::sanitation: return static_cast<double>(e.sanitation_units);
      case NeedsCategory::rescue_team:
      case NeedsCategory::psychological_services: return static_cast<double>(e.volunteers_national);
      case NeedsCategory::health_services: return static_cast<double>(e.medics_needed);
    }
    return 0;
  };
  for (auto c : kNeedsCategories) e.category_checklist.push_back({c, covered(quantity_for(c))});
  return e;
}

SitingResult site_refugees(const std::set<std::string>& affected, std::span<const Regency> regencies,
                           std::int64_t displaced, std::int64_t capacity) {
  require(capacity > 0, "capacity_per_site_regency", "must be > 0");
  SitingResult result;
  if (displaced <= 0) return result;

  LatLon centroid;
  std::size_t n = 0;
  for (const auto& r : regencies) {
    if (!affected.contains(r.regency_id)) continue;
    centroid.lat += r.centroid_lat;
    centroid.lon += r.centroid_lon;
    ++n;
  }
  if (n > 0) {
    centroid.lat /= static_cast<double>(n);
    centroid.lon /= static_cast<double>(n);
  }

  std::vector<std::pair<double, const Regency*>> candidates;
  for (const auto& r : regencies) {
    if (affected.contains(r.regency_id)) continue;
    double d = n > 0 ? geo_distance(centroid, {r.centroid_lat, r.centroid_lon}) : 0.0;
    candidates.emplace_back(d, &r);
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first, a.second->regency_id) < std::tie(b.first, b.second->regency_id);
  });

  std::int64_t housed = 0;
  for (const auto& [_, r] : candidates) {
    if (housed >= displaced) break;
    result.sites.push_back(r->regency_id);
    housed += capacity;
  }
  result.shortfall = std::max<std::int64_t>(0, displaced - housed);
  return result;
}

ImpactPrediction predict_impact(const ImpactFeatures& query, std::span<const HistoricalImpact> history, int k) {
  require(k >= 1, "k", "must be >= 1");
  if (history.empty()) fail(ErrorKind::no_history, "no past quakes to compare against");

  // Normalisation statistics are computed in quake_id order so the result
  // does not depend on the order history rows arrive in.
  std::vector<const HistoricalImpact*> rows;
  rows.reserve(history.size());
  for (const auto& h : history) rows.push_back(&h);
  std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->quake_id < b->quake_id; });

  auto features = [](const ImpactFeatures& f) { return std::array<double, 3>{f.magnitude, f.depth_km, f.exposed_population}; };
  std::array<double, 3> mean{}, scale{};
  for (auto* h : rows) {
    auto f = features(h->features);
    for (std::size_t j = 0; j < 3; ++j) mean[j] += f[j];
  }
  const double n = static_cast<double>(rows.size());
  for (auto& m : mean) m /= n;
  for (auto* h : rows) {
    auto f = features(h->features);
    for (std::size_t j = 0; j < 3; ++j) scale[j] += (f[j] - mean[j]) * (f[j] - mean[j]);
  }
  for (auto& s : scale) {
    s = std::sqrt(s / n);
    if (s == 0) s = 1;
  }

  auto q = features(query);
  std::vector<std::pair<double, const HistoricalImpact*>> scored;
  scored.reserve(rows.size());
  for (auto* h : rows) {
    auto f = features(h->features);
    double sum = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      double d = (q[j] - mean[j]) / scale[j] - (f[j] - mean[j]) / scale[j];
      sum += d * d;
    }
    scored.emplace_back(std::sqrt(sum), h);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first, a.second->quake_id) < std::tie(b.first, b.second->quake_id);
  });
  scored.resize(std::min<std::size_t>(scored.size(), static_cast<std::size_t>(k)));

  ImpactPrediction p;
  const auto exact = std::count_if(scored.begin(), scored.end(), [](const auto& s) { return s.first == 0; });
  double inverse_sum = 0;
  for (const auto& [d, _] : scored)
    if (exact == 0) inverse_sum += 1 / d;

  for (const auto& [d, h] : scored) {
    double w = exact > 0 ? (d == 0 ? 1.0 / static_cast<double>(exact) : 0.0) : (1 / d) / inverse_sum;
    p.neighbors.push_back({h->quake_id, d, w});
    double ratio = h->features.exposed_population > 0 ? query.exposed_population / h->features.exposed_population : 1.0;
    p.predicted_deaths += w * h->deaths * ratio;
    p.predicted_injured += w * h->injured * ratio;
    for (std::size_t c = 0; c < p.predicted_damage.size(); ++c) p.predicted_damage[c] += w * h->damaged[c] * ratio;
  }
  return p;
}

int disaster_level(double deaths, std::int64_t lack, const LevelThresholds& t) {
  if (deaths < t[0] && lack == 0) return 1;
  if (deaths < t[1]) return 2;
  if (deaths < t[2]) return 3;
  return 4;
}

PlannerConfig PlannerConfig::defaults() {
  PlannerConfig c;
  c.unit_costs = {{BuildingCategory::house, 5000},          {BuildingCategory::office, 50000},
                  {BuildingCategory::school, 100000},       {BuildingCategory::hospital, 500000},
                  {BuildingCategory::public_place, 75000},  {BuildingCategory::infrastructure, 250000},
                  {BuildingCategory::other, 2500}};
  return c;
}

void PlannerConfig::validate() const {
  standard.validate();
  require(k >= 1, "k", "must be >= 1");
  require(history_radius_km > 0, "history_radius_km", "must be > 0");
  require(refugee_site_capacity > 0, "refugee_site_capacity", "must be > 0");
  require(level_thresholds[0] <= level_thresholds[1] && level_thresholds[1] <= level_thresholds[2],
          "level_thresholds", "must be non-decreasing");
  for (const auto& [_, cost] : unit_costs) require(cost >= 0, "unit_costs", "must be >= 0");
}

PlannerConfig load_planner_config(const std::filesystem::path& root) {
  PlannerConfig c = PlannerConfig::defaults();
  auto path = root / "standards.json";
  if (!std::filesystem::exists(path)) return c;
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorKind::parse, path.string() + ": malformed json");
  try {
    json merged = c.standard;
    merged.update(j, false);
    c.standard = merged.get<NeedsStandard>();
    if (j.contains("unit_costs"))
      for (const auto& [name, cost] : j.at("unit_costs").items())
        c.unit_costs[parse_building_category(name)] = cost.get<double>();
    if (j.contains("level_thresholds")) c.level_thresholds = j.at("level_thresholds").get<LevelThresholds>();
    c.k = j.value("k", c.k);
    c.history_radius_km = j.value("history_radius_km", c.history_radius_km);
    c.refugee_site_capacity = j.value("refugee_site_capacity", c.refugee_site_capacity);
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

std::vector<HistoricalImpact> history_from_snapshot(const Snapshot& snap, double radius_km) {
  std::map<std::string, HistoricalImpact> by_quake;
  for (const auto& q : snap.quakes()) {
    HistoricalImpact h;
    h.quake_id = q.quake_id;
    h.features.magnitude = q.magnitude;
    h.features.depth_km = q.depth_km;
    auto exposed = affected_regencies({q.latitude, q.longitude}, radius_km, snap.regencies());
    exposed.insert(q.regency_id);
    h.features.exposed_population = static_cast<double>(snap.affected_population(exposed));
    by_quake.emplace(q.quake_id, h);
  }
  for (const auto& c : snap.casualties()) {
    auto& h = by_quake.at(c.quake_id);
    (c.kind == CasualtyKind::dead ? h.deaths : h.injured) += static_cast<double>(c.count);
  }
  for (const auto& d : snap.damage())
    by_quake.at(d.quake_id).damaged[category_index(d.category)] += static_cast<double>(d.damaged_count);

  std::vector<HistoricalImpact> out;
  for (auto& [_, h] : by_quake) out.push_back(std::move(h));
  return out;
}

Plan make_plan(const PlanRequest& request, const std::set<std::string>& affected, std::int64_t a_c,
               std::int64_t a_m, const Snapshot& snapshot, const PlannerConfig& config) {
  Plan plan;
  plan.affected = affected;
  plan.needs = estimate_needs(a_c, a_m, config.standard);

  auto siting = site_refugees(affected, snapshot.regencies(), plan.needs.displaced, config.refugee_site_capacity);
  plan.needs.refugee_sites = std::move(siting.sites);
  plan.needs.refugee_shortfall = siting.shortfall;

  auto history = history_from_snapshot(snapshot, config.history_radius_km);
  try {
    ImpactFeatures query{request.magnitude, request.depth_km, static_cast<double>(a_c)};
    auto prediction = predict_impact(query, history, config.k);
    prediction.predicted_level =
        disaster_level(prediction.predicted_deaths, plan.needs.medic_lack, config.level_thresholds);
    double loss = 0;
    for (auto c : kBuildingCategories) {
      auto it = config.unit_costs.find(c);
      if (it != config.unit_costs.end()) loss += prediction.predicted_damage[category_index(c)] * it->second;
    }
    plan.needs.total_loss_estimate = loss;
    plan.prediction = std::move(prediction);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::no_history) throw;
    plan.prediction_error = e.what();
  }
  return plan;
}

// ---- json ----------------------------------------------------------------

void to_json(json& j, const NeedsStandard& v) {
  j = {{"citizens_per_medic", v.citizens_per_medic},
       {"persons_per_tent", v.persons_per_tent},
       {"persons_per_sanitation_unit", v.persons_per_sanitation_unit},
       {"persons_per_food_shelter", v.persons_per_food_shelter},
       {"rice_kg_per_person_day", v.rice_kg_per_person_day},
       {"blankets_per_person", v.blankets_per_person},
       {"citizens_per_volunteer", v.citizens_per_volunteer},
       {"infant_fraction", v.infant_fraction},
       {"baby_feed_kg_per_infant_day", v.baby_feed_kg_per_infant_day},
       {"displacement_fraction", v.displacement_fraction},
       {"supply_horizon_days", v.supply_horizon_days}};
}

void from_json(const json& j, NeedsStandard& v) {
  j.at("citizens_per_medic").get_to(v.citizens_per_medic);
  j.at("persons_per_tent").get_to(v.persons_per_tent);
  j.at("persons_per_sanitation_unit").get_to(v.persons_per_sanitation_unit);
  j.at("persons_per_food_shelter").get_to(v.persons_per_food_shelter);
  j.at("rice_kg_per_person_day").get_to(v.rice_kg_per_person_day);
  j.at("blankets_per_person").get_to(v.blankets_per_person);
  j.at("citizens_per_volunteer").get_to(v.citizens_per_volunteer);
  j.at("infant_fraction").get_to(v.infant_fraction);
  j.at("baby_feed_kg_per_infant_day").get_to(v.baby_feed_kg_per_infant_day);
  j.at("displacement_fraction").get_to(v.displacement_fraction);
  j.at("supply_horizon_days").get_to(v.supply_horizon_days);
}

void to_json(json& j, const NeedsEstimate& v) {
  json checklist = json::array();
  for (const auto& c : v.category_checklist)
    checklist.push_back({{"category", to_string(c.category)}, {"covered", c.covered}});
  j = {{"a_c", v.a_c},
       {"displaced", v.displaced},
       {"medics_needed", v.medics_needed},
       {"medics_available", v.medics_available},
       {"medic_lack", v.medic_lack},
       {"tents", v.tents},
       {"sanitation_units", v.sanitation_units},
       {"food_shelters", v.food_shelters},
       {"blankets", v.blankets},
       {"rice_kg", v.rice_kg},
       {"baby_feed_kg", v.baby_feed_kg},
       {"volunteers_national", v.volunteers_national},
       {"refugee_sites", v.refugee_sites},
       {"refugee_shortfall", v.refugee_shortfall},
       {"total_loss_estimate", v.total_loss_estimate},
       {"category_checklist", checklist}};
}

void from_json(const json& j, NeedsEstimate& v) {
  j.at("a_c").get_to(v.a_c);
  j.at("displaced").get_to(v.displaced);
  j.at("medics_needed").get_to(v.medics_needed);
  j.at("medics_available").get_to(v.medics_available);
  j.at("medic_lack").get_to(v.medic_lack);
  j.at("tents").get_to(v.tents);
  j.at("sanitation_units").get_to(v.sanitation_units);
  j.at("food_shelters").get_to(v.food_shelters);
  j.at("blankets").get_to(v.blankets);
  j.at("rice_kg").get_to(v.rice_kg);
  j.at("baby_feed_kg").get_to(v.baby_feed_kg);
  j.at("volunteers_national").get_to(v.volunteers_national);
  j.at("refugee_sites").get_to(v.refugee_sites);
  j.at("refugee_shortfall").get_to(v.refugee_shortfall);
  j.at("total_loss_estimate").get_to(v.total_loss_estimate);
  v.category_checklist.clear();
  for (const auto& item : j.at("category_checklist")) {
    auto name = item.at("category").get<std::string>();
    auto it = std::find_if(std::begin(kNeedsCategories), std::end(kNeedsCategories),
                           [&](NeedsCategory c) { return to_string(c) == name; });
    if (it == std::end(kNeedsCategories)) fail(ErrorKind::validation, "unknown needs category: " + name);
    v.category_checklist.push_back({*it, item.at("covered").get<bool>()});
  }
}

void to_json(json& j, const ImpactPrediction& v) {
  json neighbors = json::array();
  for (const auto& n : v.neighbors)
    neighbors.push_back({{"quake_id", n.quake_id}, {"distance", n.distance}, {"weight", n.weight}});
  json damage = json::object();
  for (auto c : kBuildingCategories) damage[std::string(to_string(c))] = v.predicted_damage[category_index(c)];
  j = {{"predicted_deaths", v.predicted_deaths},
       {"predicted_injured", v.predicted_injured},
       {"predicted_level", v.predicted_level},
       {"neighbors", neighbors},
       {"predicted_damage", damage}};
}

void from_json(const json& j, ImpactPrediction& v) {
  j.at("predicted_deaths").get_to(v.predicted_deaths);
  j.at("predicted_injured").get_to(v.predicted_injured);
  j.at("predicted_level").get_to(v.predicted_level);
  v.neighbors.clear();
  for (const auto& n : j.at("neighbors"))
    v.neighbors.push_back({n.at("quake_id").get<std::string>(), n.at("distance").get<double>(),
                           n.at("weight").get<double>()});
  v.predicted_damage = {};
  if (j.contains("predicted_damage"))
    for (const auto& [name, value] : j.at("predicted_damage").items())
      v.predicted_damage[category_index(parse_building_category(name))] = value.get<double>();
}

json plan_json(const Plan& plan) {
  json j = {{"affected_regencies", plan.affected}, {"needs", plan.needs}};
  j["prediction"] = plan.prediction ? json(*plan.prediction) : json(nullptr);
  if (!plan.prediction_error.empty()) j["prediction_error"] = plan.prediction_error;
  return j;
}

}  // namespace qdss
