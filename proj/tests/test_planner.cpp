#include "qdss/planner.hpp"
#include "qdss/seed.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace qdss;

namespace {

// Spherical law of cosines; a second formula to cross-check haversine.
double cosine_law_km(LatLon a, LatLon b) {
  const double r = 3.14159265358979323846 / 180.0;
  double c = std::sin(a.lat * r) * std::sin(b.lat * r) +
             std::cos(a.lat * r) * std::cos(b.lat * r) * std::cos((b.lon - a.lon) * r);
  return 6371.0 * std::acos(std::clamp(c, -1.0, 1.0));
}

std::vector<Regency> seeded_regencies() { return seed::reference_dimensions().regencies; }

void expect_error(ErrorKind kind, auto&& fn) {
  try {
    fn();
    ADD_FAILURE() << "no error thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

HistoricalImpact row(std::string id, double mag, double depth, double pop, double deaths, double injured = 0) {
  HistoricalImpact h;
  h.quake_id = std::move(id);
  h.features = {mag, depth, pop};
  h.deaths = deaths;
  h.injured = injured;
  return h;
}

std::vector<HistoricalImpact> synthetic_history(std::size_t n, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> mag(4.0, 9.5), depth(1, 300), pop(1000, 2'000'000), deaths(0, 50000);
  std::vector<HistoricalImpact> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto h = row("H" + std::to_string(1000 + i), std::round(mag(rng) * 10) / 10, std::round(depth(rng)),
                 std::round(pop(rng)), std::round(deaths(rng)), std::round(deaths(rng) * 3));
    for (auto& d : h.damaged) d = std::round(deaths(rng));
    out.push_back(h);
  }
  return out;
}

// Exhaustive scan: normalise every row, measure all distances, pick the k
// smallest one at a time.
ImpactPrediction scan_oracle(const ImpactFeatures& q, const std::vector<HistoricalImpact>& hist, int k) {
  const std::size_t n = hist.size();
  std::vector<std::array<double, 3>> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = {hist[i].features.magnitude, hist[i].features.depth_km, hist[i].features.exposed_population};
  std::array<double, 3> qx{q.magnitude, q.depth_km, q.exposed_population};
  for (std::size_t j = 0; j < 3; ++j) {
    double mu = 0, var = 0;
    for (auto& v : x) mu += v[j];
    mu /= static_cast<double>(n);
    for (auto& v : x) var += (v[j] - mu) * (v[j] - mu);
    double sd = std::sqrt(var / static_cast<double>(n));
    if (sd == 0) sd = 1;
    for (auto& v : x) v[j] = (v[j] - mu) / sd;
    qx[j] = (qx[j] - mu) / sd;
  }
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i)
    dist[i] = std::hypot(qx[0] - x[i][0], qx[1] - x[i][1], qx[2] - x[i][2]);

  std::vector<bool> taken(n, false);
  std::vector<std::size_t> pick;
  for (int round = 0; round < k && pick.size() < n; ++round) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best == n || dist[i] < dist[best] || (dist[i] == dist[best] && hist[i].quake_id < hist[best].quake_id))
        best = i;
    }
    taken[best] = true;
    pick.push_back(best);
  }
  ImpactPrediction p;
  double inv = 0;
  for (auto i : pick) inv += 1 / dist[i];
  for (auto i : pick) {
    double w = (1 / dist[i]) / inv;
    double ratio = q.exposed_population / hist[i].features.exposed_population;
    p.neighbors.push_back({hist[i].quake_id, dist[i], w});
    p.predicted_deaths += w * hist[i].deaths * ratio;
    p.predicted_injured += w * hist[i].injured * ratio;
  }
  return p;
}

}  // namespace

// ---- geo_distance ---------------------------------------------------------

TEST(GeoDistance, IdenticalPointsAreZero) {
  EXPECT_EQ(geo_distance({-6.2, 106.8}, {-6.2, 106.8}), 0.0);
  EXPECT_EQ(geo_distance({89.9, -179.0}, {89.9, -179.0}), 0.0);
}

TEST(GeoDistance, Symmetric) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
  for (int i = 0; i < 500; ++i) {
    LatLon a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
    EXPECT_EQ(geo_distance(a, b), geo_distance(b, a));
    EXPECT_GT(geo_distance(a, b), 0.0);
  }
}

TEST(GeoDistance, JakartaToBandung) {
  // Reference value from a standalone haversine script.
  EXPECT_NEAR(geo_distance({-6.2, 106.8}, {-6.9, 107.6}), 117.76503484378644, 0.1);
  EXPECT_NEAR(geo_distance({-6.2, 106.8}, {-6.9, 107.6}), cosine_law_km({-6.2, 106.8}, {-6.9, 107.6}), 0.1);
}

TEST(GeoDistance, AgreesWithCosineLaw) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> lat(-60, 60), lon(-180, 180);
  for (int i = 0; i < 500; ++i) {
    LatLon a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
    EXPECT_NEAR(geo_distance(a, b), cosine_law_km(a, b), 0.1);
  }
}

// ---- affected_regencies ---------------------------------------------------

TEST(AffectedRegencies, RadiusBelowNearestIsEmpty) {
  auto regs = seeded_regencies();
  LatLon epi{-30.0, 80.0};
  double nearest = 1e18;
  for (const auto& r : regs) nearest = std::min(nearest, geo_distance(epi, {r.centroid_lat, r.centroid_lon}));
  EXPECT_TRUE(affected_regencies(epi, nearest * 0.99, regs).empty());
}

TEST(AffectedRegencies, RadiusAtMaxCoversAll) {
  auto regs = seeded_regencies();
  LatLon epi{0.0, 110.0};
  double farthest = 0;
  for (const auto& r : regs) farthest = std::max(farthest, geo_distance(epi, {r.centroid_lat, r.centroid_lon}));
  EXPECT_EQ(affected_regencies(epi, farthest, regs).size(), regs.size());
}

TEST(AffectedRegencies, MatchesDistanceLoop) {
  auto regs = seeded_regencies();
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> lat(-11, 6), lon(94, 141), rad(1, 1500);
  for (int i = 0; i < 300; ++i) {
    LatLon epi{lat(rng), lon(rng)};
    double radius = rad(rng);
    std::set<std::string> expect;
    for (const auto& r : regs)
      if (cosine_law_km(epi, {r.centroid_lat, r.centroid_lon}) <= radius) expect.insert(r.regency_id);
    auto got = affected_regencies(epi, radius, regs);
    // Centroids within a metre of the boundary could differ between formulas.
    std::set<std::string> diff;
    std::set_symmetric_difference(expect.begin(), expect.end(), got.begin(), got.end(),
                                  std::inserter(diff, diff.end()));
    for (const auto& id : diff) {
      auto it = std::find_if(regs.begin(), regs.end(), [&](const Regency& r) { return r.regency_id == id; });
      EXPECT_NEAR(geo_distance(epi, {it->centroid_lat, it->centroid_lon}), radius, 1e-3) << id;
    }
  }
}

TEST(AffectedRegencies, BoundaryIsInclusive) {
  std::vector<Regency> regs{{"R1", "P1", "one", -6.9, 107.6, 100}};
  double d = geo_distance({-6.2, 106.8}, {-6.9, 107.6});
  EXPECT_EQ(affected_regencies({-6.2, 106.8}, d, regs).size(), 1u);
}

TEST(AffectedRegencies, NonPositiveRadiusRejected) {
  auto regs = seeded_regencies();
  expect_error(ErrorKind::validation, [&] { affected_regencies({0, 0}, 0, regs); });
  expect_error(ErrorKind::validation, [&] { affected_regencies({0, 0}, -5, regs); });
}

// ---- medics ---------------------------------------------------------------

TEST(Medics, NeededExamples) {
  EXPECT_EQ(medics_needed(100000, 1000), 100);
  EXPECT_EQ(medics_needed(0, 1000), 0);
  EXPECT_EQ(medics_needed(100001, 1000), 101);
}

TEST(Medics, NeededRejectsBadDivisor) {
  expect_error(ErrorKind::validation, [] { medics_needed(10, 0); });
  expect_error(ErrorKind::validation, [] { medics_needed(10, -3); });
}

TEST(Medics, LackExamples) {
  EXPECT_EQ(medic_lack(100, 40), 60);
  EXPECT_EQ(medic_lack(30, 40), 0);
  EXPECT_EQ(medic_lack(40, 40), 0);
}

TEST(Medics, LackBoundedAndZeroIffCovered) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::int64_t> ac(0, 5'000'000), nmc(1, 5000), am(0, 3000);
  for (int i = 0; i < 2000; ++i) {
    auto mn = medics_needed(ac(rng), nmc(rng));
    auto a = am(rng);
    auto ml = medic_lack(mn, a);
    EXPECT_LE(ml, mn);
    EXPECT_GE(ml, 0);
    EXPECT_EQ(ml == 0, mn <= a);
  }
}

// ---- estimate_needs -------------------------------------------------------

TEST(EstimateNeeds, ZeroPopulationIsAllZero) {
  auto e = estimate_needs(0, 7, NeedsStandard{});
  EXPECT_EQ(e.displaced, 0);
  EXPECT_EQ(e.medics_needed, 0);
  EXPECT_EQ(e.medic_lack, 0);
  EXPECT_EQ(e.tents, 0);
  EXPECT_EQ(e.sanitation_units, 0);
  EXPECT_EQ(e.food_shelters, 0);
  EXPECT_EQ(e.blankets, 0);
  EXPECT_EQ(e.rice_kg, 0.0);
  EXPECT_EQ(e.baby_feed_kg, 0.0);
  EXPECT_EQ(e.volunteers_national, 0);
  ASSERT_EQ(e.category_checklist.size(), 7u);
  for (const auto& c : e.category_checklist) EXPECT_TRUE(c.covered);
}

TEST(EstimateNeeds, TentsAndRiceExamples) {
  NeedsStandard s;
  s.displacement_fraction = 0.3;
  s.persons_per_tent = 5;
  s.rice_kg_per_person_day = 0.4;
  s.supply_horizon_days = 14;
  auto e = estimate_needs(10000, 0, s);
  EXPECT_EQ(e.displaced, 3000);
  EXPECT_EQ(e.tents, 600);
  EXPECT_NEAR(e.rice_kg, 16800.0, 1e-9);
}

TEST(EstimateNeeds, IdentityStress) {
  NeedsStandard s;
  s.displacement_fraction = 1;
  s.persons_per_tent = 1;
  for (std::int64_t ac : {0, 1, 7, 999, 123457, 10'000'000}) EXPECT_EQ(estimate_needs(ac, 0, s).tents, ac);
}

TEST(EstimateNeeds, MonotoneInPopulation) {
  NeedsStandard s;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> step(0, 50000);
  std::int64_t ac = 0;
  auto prev = estimate_needs(ac, 25, s);
  for (int i = 0; i < 500; ++i) {
    ac += step(rng);
    auto e = estimate_needs(ac, 25, s);
    EXPECT_GE(e.displaced, prev.displaced);
    EXPECT_GE(e.medics_needed, prev.medics_needed);
    EXPECT_GE(e.medic_lack, prev.medic_lack);
    EXPECT_GE(e.tents, prev.tents);
    EXPECT_GE(e.sanitation_units, prev.sanitation_units);
    EXPECT_GE(e.food_shelters, prev.food_shelters);
    EXPECT_GE(e.blankets, prev.blankets);
    EXPECT_GE(e.rice_kg, prev.rice_kg);
    EXPECT_GE(e.baby_feed_kg, prev.baby_feed_kg);
    EXPECT_GE(e.volunteers_national, prev.volunteers_national);
    prev = e;
  }
}

TEST(EstimateNeeds, QuantitiesFollowStandard) {
  NeedsStandard s;
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::int64_t> ac(0, 3'000'000), am(0, 5000);
  for (int i = 0; i < 300; ++i) {
    auto a = ac(rng), m = am(rng);
    auto e = estimate_needs(a, m, s);
    auto displaced = std::llround(static_cast<double>(a) * s.displacement_fraction);
    EXPECT_EQ(e.displaced, displaced);
    EXPECT_EQ(e.tents, (displaced + s.persons_per_tent - 1) / s.persons_per_tent);
    EXPECT_EQ(e.sanitation_units, (displaced + s.persons_per_sanitation_unit - 1) / s.persons_per_sanitation_unit);
    EXPECT_EQ(e.food_shelters, (displaced + s.persons_per_food_shelter - 1) / s.persons_per_food_shelter);
    EXPECT_EQ(e.medics_needed, (a + s.citizens_per_medic - 1) / s.citizens_per_medic);
    EXPECT_EQ(e.medic_lack, std::max<std::int64_t>(0, e.medics_needed - m));
    EXPECT_LE(e.medic_lack, e.medics_needed);
    EXPECT_NEAR(e.rice_kg, static_cast<double>(displaced) * s.rice_kg_per_person_day * s.supply_horizon_days, 1e-6);
    EXPECT_NEAR(e.baby_feed_kg,
                static_cast<double>(std::llround(static_cast<double>(displaced) * s.infant_fraction)) *
                    s.baby_feed_kg_per_infant_day * s.supply_horizon_days,
                1e-6);
  }
}

TEST(EstimateNeeds, InvalidStandardRejected) {
  NeedsStandard s;
  s.persons_per_tent = 0;
  expect_error(ErrorKind::validation, [&] { estimate_needs(10, 0, s); });
  s = {};
  s.displacement_fraction = 1.5;
  expect_error(ErrorKind::validation, [&] { estimate_needs(10, 0, s); });
  s = {};
  s.supply_horizon_days = 0;
  expect_error(ErrorKind::validation, [&] { estimate_needs(10, 0, s); });
}

TEST(EstimateNeeds, JsonRoundTrip) {
  auto e = estimate_needs(54321, 12, NeedsStandard{});
  json j = e;
  EXPECT_EQ(j.get<NeedsEstimate>(), e);
}

// ---- site_refugees --------------------------------------------------------

TEST(SiteRefugees, NoDisplacedNoSites) {
  auto regs = seeded_regencies();
  auto r = site_refugees({regs[0].regency_id}, regs, 0, 1000);
  EXPECT_TRUE(r.sites.empty());
  EXPECT_EQ(r.shortfall, 0);
}

TEST(SiteRefugees, SingleCandidate) {
  std::vector<Regency> regs{{"A", "P", "a", -6.2, 106.8, 10}, {"B", "P", "b", -6.9, 107.6, 10}};
  auto r = site_refugees({"A"}, regs, 500, 1000);
  EXPECT_EQ(r.sites, std::vector<std::string>{"B"});
  EXPECT_EQ(r.shortfall, 0);
}

TEST(SiteRefugees, ShortfallWhenCapacityRunsOut) {
  std::vector<Regency> regs{{"A", "P", "a", -6.2, 106.8, 10}, {"B", "P", "b", -6.9, 107.6, 10}};
  auto r = site_refugees({"A"}, regs, 1500, 1000);
  EXPECT_EQ(r.sites, std::vector<std::string>{"B"});
  EXPECT_EQ(r.shortfall, 500);
}

TEST(SiteRefugees, MatchesGreedyOracle) {
  auto regs = seeded_regencies();
  std::mt19937 rng(31);
  std::uniform_int_distribution<std::size_t> pick(0, regs.size() - 1);
  std::uniform_int_distribution<std::int64_t> disp(1, 200000), cap(1000, 60000);
  for (int t = 0; t < 200; ++t) {
    std::set<std::string> affected;
    for (int i = 0; i < 1 + t % 4; ++i) affected.insert(regs[pick(rng)].regency_id);
    auto displaced = disp(rng), capacity = cap(rng);

    double clat = 0, clon = 0;
    int n = 0;
    for (const auto& r : regs)
      if (affected.contains(r.regency_id)) clat += r.centroid_lat, clon += r.centroid_lon, ++n;
    clat /= n;
    clon /= n;
    std::vector<std::pair<double, std::string>> order;
    for (const auto& r : regs)
      if (!affected.contains(r.regency_id))
        order.emplace_back(cosine_law_km({clat, clon}, {r.centroid_lat, r.centroid_lon}), r.regency_id);
    std::sort(order.begin(), order.end());
    std::vector<std::string> expect;
    std::int64_t cum = 0;
    for (const auto& [d, id] : order) {
      if (cum >= displaced) break;
      expect.push_back(id);
      cum += capacity;
    }
    auto got = site_refugees(affected, regs, displaced, capacity);
    EXPECT_EQ(got.sites, expect);
    EXPECT_EQ(got.shortfall, std::max<std::int64_t>(0, displaced - cum));
  }
}

TEST(SiteRefugees, NonPositiveCapacityRejected) {
  auto regs = seeded_regencies();
  expect_error(ErrorKind::validation, [&] { site_refugees({}, regs, 10, 0); });
}

// ---- predict_impact -------------------------------------------------------

TEST(PredictImpact, ExactDuplicateTakesFullWeight) {
  std::vector<HistoricalImpact> hist{row("A", 9.1, 30, 500000, 1000, 50), row("B", 6.0, 10, 100000, 20, 5),
                                     row("C", 7.5, 80, 300000, 300, 90)};
  auto p = predict_impact({7.5, 80, 300000}, hist, 3);
  ASSERT_EQ(p.neighbors.size(), 3u);
  EXPECT_EQ(p.neighbors[0].quake_id, "C");
  EXPECT_EQ(p.neighbors[0].distance, 0.0);
  EXPECT_EQ(p.neighbors[0].weight, 1.0);
  EXPECT_EQ(p.predicted_deaths, 300.0);
  EXPECT_EQ(p.predicted_injured, 90.0);
}

TEST(PredictImpact, SingleRowScaledByExposure) {
  std::vector<HistoricalImpact> hist{row("A", 7.0, 20, 100000, 400, 1000)};
  auto p = predict_impact({6.1, 40, 250000}, hist, 1);
  ASSERT_EQ(p.neighbors.size(), 1u);
  EXPECT_EQ(p.neighbors[0].weight, 1.0);
  EXPECT_NEAR(p.predicted_deaths, 1000.0, 1e-9);
  EXPECT_NEAR(p.predicted_injured, 2500.0, 1e-9);
}

TEST(PredictImpact, MatchesExhaustiveScan) {
  auto hist = synthetic_history(100, 42);
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> mag(4.0, 9.5), depth(1, 300), pop(1000, 2'000'000);
  for (int k : {1, 3, 5}) {
    for (int t = 0; t < 50; ++t) {
      ImpactFeatures q{mag(rng), depth(rng), pop(rng)};
      auto got = predict_impact(q, hist, k);
      auto want = scan_oracle(q, hist, k);
      ASSERT_EQ(got.neighbors.size(), want.neighbors.size());
      double wsum = 0;
      for (std::size_t i = 0; i < got.neighbors.size(); ++i) {
        EXPECT_EQ(got.neighbors[i].quake_id, want.neighbors[i].quake_id);
        EXPECT_NEAR(got.neighbors[i].distance, want.neighbors[i].distance, 1e-9);
        EXPECT_NEAR(got.neighbors[i].weight, want.neighbors[i].weight, 1e-9);
        wsum += got.neighbors[i].weight;
      }
      EXPECT_NEAR(wsum, 1.0, 1e-9);
      EXPECT_NEAR(got.predicted_deaths, want.predicted_deaths, 1e-6 * std::max(1.0, want.predicted_deaths));
      EXPECT_NEAR(got.predicted_injured, want.predicted_injured, 1e-6 * std::max(1.0, want.predicted_injured));
    }
  }
}

TEST(PredictImpact, PermutationInvariant) {
  auto hist = synthetic_history(60, 9);
  // Duplicate feature rows so that distance ties exist.
  auto twin = hist[5];
  twin.quake_id = "H0000";
  hist.push_back(twin);
  ImpactFeatures q{hist[5].features.magnitude + 0.05, hist[5].features.depth_km, hist[5].features.exposed_population};
  auto base = predict_impact(q, hist, 4);
  std::mt19937 rng(1);
  for (int i = 0; i < 30; ++i) {
    std::shuffle(hist.begin(), hist.end(), rng);
    EXPECT_EQ(predict_impact(q, hist, 4), base);
  }
  EXPECT_EQ(base.neighbors[0].quake_id, "H0000");
  EXPECT_EQ(base.neighbors[1].quake_id, "H1005");
}

TEST(PredictImpact, KLargerThanHistoryUsesAll) {
  auto hist = synthetic_history(4, 2);
  auto p = predict_impact({6, 30, 10000}, hist, 10);
  EXPECT_EQ(p.neighbors.size(), 4u);
}

TEST(PredictImpact, Errors) {
  std::vector<HistoricalImpact> none;
  expect_error(ErrorKind::no_history, [&] { predict_impact({6, 10, 1000}, none, 3); });
  auto hist = synthetic_history(3, 1);
  expect_error(ErrorKind::validation, [&] { predict_impact({6, 10, 1000}, hist, 0); });
}

// ---- levels and config ----------------------------------------------------

TEST(DisasterLevel, Thresholds) {
  LevelThresholds t{100, 1000, 10000};
  EXPECT_EQ(disaster_level(0, 0, t), 1);
  EXPECT_EQ(disaster_level(99, 0, t), 1);
  EXPECT_EQ(disaster_level(99, 1, t), 2);
  EXPECT_EQ(disaster_level(100, 0, t), 2);
  EXPECT_EQ(disaster_level(999, 0, t), 2);
  EXPECT_EQ(disaster_level(1000, 0, t), 3);
  EXPECT_EQ(disaster_level(9999, 5, t), 3);
  EXPECT_EQ(disaster_level(10000, 0, t), 4);
  EXPECT_EQ(disaster_level(230000, 40, t), 4);
}

TEST(DisasterLevel, MonotoneInDeathsAndLack) {
  LevelThresholds t{100, 1000, 10000};
  int prev = 1;
  for (double d = 0; d < 20000; d += 37) {
    int l = disaster_level(d, 0, t);
    EXPECT_GE(l, prev);
    EXPECT_GE(disaster_level(d, 3, t), l);
    prev = l;
  }
}

TEST(PlannerConfig, DefaultsWhenFileMissing) {
  testkit::TempDir dir;
  auto c = load_planner_config(dir.path());
  EXPECT_EQ(c.standard.citizens_per_medic, 1000);
  EXPECT_EQ(c.k, 3);
  EXPECT_EQ(c.level_thresholds, (LevelThresholds{100, 1000, 10000}));
  EXPECT_EQ(c.unit_costs.size(), std::size(kBuildingCategories));
}

TEST(PlannerConfig, PartialOverride) {
  testkit::TempDir dir;
  testkit::write_file(dir / "standards.json",
                      R"({"citizens_per_medic": 500, "k": 5, "unit_costs": {"house": 1}, "level_thresholds": [1,2,3]})");
  auto c = load_planner_config(dir.path());
  EXPECT_EQ(c.standard.citizens_per_medic, 500);
  EXPECT_EQ(c.standard.persons_per_tent, 5);
  EXPECT_EQ(c.k, 5);
  EXPECT_EQ(c.unit_costs.at(BuildingCategory::house), 1.0);
  EXPECT_EQ(c.unit_costs.at(BuildingCategory::hospital), 500000.0);
  EXPECT_EQ(c.level_thresholds, (LevelThresholds{1, 2, 3}));
}

TEST(PlannerConfig, BadFileRejected) {
  testkit::TempDir dir;
  testkit::write_file(dir / "standards.json", "{not json");
  expect_error(ErrorKind::parse, [&] { load_planner_config(dir.path()); });
  testkit::write_file(dir / "standards.json", R"({"citizens_per_medic": 0})");
  expect_error(ErrorKind::validation, [&] { load_planner_config(dir.path()); });
  testkit::write_file(dir / "standards.json", R"({"citizens_per_medic": "many"})");
  expect_error(ErrorKind::validation, [&] { load_planner_config(dir.path()); });
}

// ---- whole plan -----------------------------------------------------------

TEST(MakePlan, SeededHistoryYieldsPrediction) {
  Warehouse wh;
  wh.write([](Writer& w) {
    seed::load(w, seed::reference_dimensions());
    seed::load(w, seed::paper_quakes());
    seed::load(w, seed::synthetic_facts(50, 4));
  });
  auto snap = wh.snapshot();
  auto config = PlannerConfig::defaults();
  PlanRequest req{{5.5, 95.3}, 150, 8.0, 30};
  auto affected = affected_regencies(req.epicenter, req.radius_km, snap.regencies());
  auto plan = make_plan(req, affected, 200000, 10, snap, config);
  EXPECT_EQ(plan.needs.a_c, 200000);
  EXPECT_EQ(plan.needs.medic_lack, 190);
  ASSERT_TRUE(plan.prediction.has_value());
  EXPECT_EQ(plan.prediction->neighbors.size(), 3u);
  EXPECT_GE(plan.prediction->predicted_level, 2);
  EXPECT_GE(plan.needs.total_loss_estimate, 0.0);
  EXPECT_TRUE(plan_json(plan).contains("needs"));
}

TEST(MakePlan, EmptyHistoryStillPlans) {
  Warehouse wh;
  wh.write([](Writer& w) { seed::load(w, seed::reference_dimensions()); });
  auto snap = wh.snapshot();
  PlanRequest req{{-6.2, 106.8}, 50, 6.0, 10};
  auto plan = make_plan(req, {}, 0, 0, snap, PlannerConfig::defaults());
  EXPECT_FALSE(plan.prediction.has_value());
  EXPECT_FALSE(plan.prediction_error.empty());
  EXPECT_EQ(plan.needs, estimate_needs(0, 0, NeedsStandard{}));
}
