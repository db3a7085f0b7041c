#include "qdss/seed.hpp"

#include <cmath>
#include <random>

namespace qdss::seed {

Dataset reference_dimensions() {
  Dataset d;
  d.provinces = {
      {"ID-AC", "Aceh", 4.70, 96.75},
      {"ID-SU", "Sumatera Utara", 2.12, 99.55},
      {"ID-SB", "Sumatera Barat", -0.74, 100.80},
      {"ID-JK", "DKI Jakarta", -6.20, 106.85},
      {"ID-JB", "Jawa Barat", -6.90, 107.60},
      {"ID-JT", "Jawa Tengah", -7.15, 110.14},
      {"ID-YO", "DI Yogyakarta", -7.80, 110.37},
      {"ID-SN", "Sulawesi Tengah", -1.43, 121.45},
      {"CN-SC", "Sichuan (CN)", 30.65, 104.07},
      {"CN-HE", "Hebei (CN)", 38.04, 114.51},
      {"XX-IO", "Indian Ocean rim, other countries", 7.87, 80.77},
  };
  d.regencies = {
      {"ID-AC-BNA", "ID-AC", "Banda Aceh", 5.55, 95.32, 223446},
      {"ID-AC-ABE", "ID-AC", "Aceh Besar", 5.45, 95.60, 405535},
      {"ID-AC-ABR", "ID-AC", "Aceh Barat", 4.45, 96.15, 198736},
      {"ID-SU-MDN", "ID-SU", "Medan", 3.59, 98.67, 2435252},
      {"ID-SU-NIA", "ID-SU", "Nias", 1.10, 97.55, 131377},
      {"ID-SB-PDG", "ID-SB", "Padang", -0.95, 100.35, 909040},
      {"ID-SB-PPR", "ID-SB", "Padang Pariaman", -0.60, 100.25, 406076},
      {"ID-JK-JKP", "ID-JK", "Jakarta Pusat", -6.18, 106.83, 1056896},
      {"ID-JK-JKS", "ID-JK", "Jakarta Selatan", -6.26, 106.81, 2226812},
      {"ID-JB-BDG", "ID-JB", "Bandung", -6.91, 107.61, 2444160},
      {"ID-JB-BGR", "ID-JB", "Bogor", -6.60, 106.80, 1043070},
      {"ID-JT-SMG", "ID-JT", "Semarang", -6.97, 110.42, 1653524},
      {"ID-YO-BTL", "ID-YO", "Bantul", -7.89, 110.33, 985770},
      {"ID-YO-YGY", "ID-YO", "Yogyakarta", -7.80, 110.37, 373589},
      {"ID-SN-PAL", "ID-SN", "Palu", -0.90, 119.87, 373218},
      {"CN-SC-WEN", "CN-SC", "Wenchuan", 31.47, 103.58, 100000},
      {"CN-SC-CDU", "CN-SC", "Chengdu", 30.66, 104.07, 14000000},
      {"CN-HE-TSN", "CN-HE", "Tangshan", 39.63, 118.18, 7000000},
      {"XX-IO-OTH", "XX-IO", "Other affected countries", 7.87, 80.77, 0},
  };
  d.stations = {
      {"ST-BMG-BNA", "BMG Banda Aceh", 5.50, 95.30},
      {"ST-BMG-JKT", "BMG Jakarta", -6.18, 106.83},
      {"ST-BMG-PDG", "BMG Padang", -0.92, 100.36},
      {"ST-CEA-SC", "CEA Chengdu", 30.66, 104.07},
      {"ST-CEA-HE", "CEA Tangshan", 39.63, 118.18},
  };
  for (const auto& p : d.provinces) {
    std::string pid = "P-MED-" + p.province_id;
    std::string home;
    for (const auto& r : d.regencies)
      if (r.province_id == p.province_id) {
        home = r.regency_id;
        break;
      }
    d.people.push_back({pid, "Duty medic " + p.name, "1970-01-01", home, VitalStatus::alive});
    d.medics.push_back({"M-" + p.province_id, pid, p.province_id});
  }
  return d;
}

Dataset paper_quakes() {
  Dataset d;
  d.quakes = {
      {kAcehQuake, parse_rfc3339("2004-12-26T00:58:53Z"), 3.30, 95.98, 9.1, 30, 1300, 0, "ST-BMG-BNA", "ID-AC-ABR"},
      {kSichuanQuake, parse_rfc3339("2008-05-12T06:28:01Z"), 31.00, 103.32, 7.9, 19, 240, 0, "ST-CEA-SC", "CN-SC-WEN"},
      {kTangshanQuake, parse_rfc3339("1976-07-27T19:42:54Z"), 39.63, 118.18, 7.5, 12, 140, 0, "ST-CEA-HE", "CN-HE-TSN"},
  };
  d.casualties = {
      {"C-ACEH-ID", kAcehQuake, std::nullopt, CasualtyKind::dead, "ID-AC-BNA", "M-ID-AC",
       parse_rfc3339("2005-01-31T00:00:00Z"), kAcehDeathsIndonesia},
      {"C-ACEH-XX", kAcehQuake, std::nullopt, CasualtyKind::dead, "XX-IO-OTH", "M-XX-IO",
       parse_rfc3339("2005-01-31T00:00:00Z"), kAcehDeathsTotal - kAcehDeathsIndonesia},
      {"C-SICHUAN", kSichuanQuake, std::nullopt, CasualtyKind::dead, "CN-SC-WEN", "M-CN-SC",
       parse_rfc3339("2008-05-31T00:00:00Z"), kSichuanDeaths},
  };
  return d;
}

Dataset synthetic_facts(std::size_t count, std::uint64_t seed) {
  Dataset ref = reference_dimensions();
  std::vector<const Regency*> indonesian;
  for (const auto& r : ref.regencies)
    if (r.regency_id.starts_with("ID-")) indonesian.push_back(&r);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, indonesian.size() - 1);
  std::uniform_int_distribution<int> year(1990, 2023), month(1, 12), day(1, 28), second(0, 86399);
  std::uniform_int_distribution<int> tenths(40, 85), deaths(0, 400), injured(0, 1500), buildings(0, 900);
  std::uniform_int_distribution<int> category(0, static_cast<int>(std::size(kBuildingCategories)) - 1);
  std::uniform_real_distribution<double> jitter(-0.4, 0.4), depth(5, 150), area(10, 5000);

  Dataset d;
  for (std::size_t i = 0; i < count; ++i) {
    const Regency& r = *indonesian[pick(rng)];
    char id[32];
    std::snprintf(id, sizeof id, "SYN-%05zu", i + 1);
    QuakeEvent q;
    q.quake_id = id;
    q.occurred_at = Timestamp{from_civil(year(rng), static_cast<unsigned>(month(rng)),
                                         static_cast<unsigned>(day(rng))).seconds + second(rng)};
    q.latitude = r.centroid_lat + jitter(rng);
    q.longitude = r.centroid_lon + jitter(rng);
    q.magnitude = tenths(rng) / 10.0;
    q.depth_km = std::round(depth(rng));
    q.rupture_length_km = std::round(std::pow(10.0, 0.5 * q.magnitude - 1.8));
    q.affected_area_km2 = std::round(area(rng) * 1000) / 1000;
    q.station_id = r.centroid_lat > 0 ? "ST-BMG-BNA" : (r.centroid_lon < 104 ? "ST-BMG-PDG" : "ST-BMG-JKT");
    q.regency_id = r.regency_id;
    d.quakes.push_back(q);

    const std::string medic = "M-" + r.province_id;
    const Timestamp recorded{q.occurred_at.seconds + 86400};
    if (int n = deaths(rng); n > 0)
      d.casualties.push_back({std::string(id) + "-D", q.quake_id, std::nullopt, CasualtyKind::dead, r.regency_id,
                              medic, recorded, n});
    if (int n = injured(rng); n > 0)
      d.casualties.push_back({std::string(id) + "-I", q.quake_id, std::nullopt, CasualtyKind::injured,
                              r.regency_id, medic, recorded, n});
    // A second injured row attributed to a neighbouring regency exercises
    // casualty geography that differs from the quake's own regency.
    const Regency& other = *indonesian[pick(rng)];
    if (int n = injured(rng) / 10; n > 0 && other.province_id == r.province_id)
      d.casualties.push_back({std::string(id) + "-J", q.quake_id, std::nullopt, CasualtyKind::injured,
                              other.regency_id, medic, recorded, n});
    d.damage.push_back({std::string(id) + "-B", q.quake_id, r.regency_id,
                        kBuildingCategories[category(rng)], buildings(rng), DamageSeverity::moderate});
  }
  return d;
}

void load(Writer& w, const Dataset& d) {
  const Tables& t = w.tables();
  for (const auto& r : d.provinces)
    if (!t.provinces.find(r.province_id)) w.insert(r);
  for (const auto& r : d.regencies)
    if (!t.regencies.find(r.regency_id)) w.insert(r);
  for (const auto& r : d.stations)
    if (!t.stations.find(r.station_id)) w.insert(r);
  for (const auto& r : d.people)
    if (!t.people.find(r.person_id)) w.insert(r);
  for (const auto& r : d.medics)
    if (!t.medics.find(r.medic_id)) w.insert(r);
  for (const auto& r : d.quakes)
    if (!t.quakes.find(r.quake_id)) w.insert(r);
  for (const auto& r : d.casualties)
    if (!t.casualties.find(r.record_id)) w.insert(r);
  for (const auto& r : d.damage)
    if (!t.damage.find(r.damage_id)) w.insert(r);
}

}  // namespace qdss::seed
