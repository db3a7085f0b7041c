#include "qdss/warehouse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

namespace qdss {

namespace {

template <typename T>
T field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) fail(ErrorKind::validation, std::string("missing field: ") + name, name);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::validation, std::string("wrong type for field: ") + name, name);
  }
}

void check_lat_lon(double lat, double lon, const char* lat_name, const char* lon_name) {
  require(std::isfinite(lat) && lat >= -90 && lat <= 90, lat_name, "latitude out of [-90, 90]");
  require(std::isfinite(lon) && lon >= -180 && lon <= 180, lon_name, "longitude out of [-180, 180]");
}

void check_id(const std::string& id, const char* name) { require(!id.empty(), name, "identifier must be non-empty"); }

[[noreturn]] void unknown_ref(const char* what, const std::string& id) {
  fail(ErrorKind::referential, std::string("unknown ") + what + ": " + id, what);
}

template <typename Row>
void add_row(Table<Row>& table, const std::string& id, const Row& row, const char* what) {
  if (table.index.contains(id)) fail(ErrorKind::duplicate, std::string("duplicate ") + what + ": " + id, what);
  table.index.emplace(id, table.rows.size());
  table.rows.push_back(row);
}

}  // namespace

// ---- json ----------------------------------------------------------------

void to_json(json& j, const Timestamp& ts) { j = format_rfc3339(ts); }
void from_json(const json& j, Timestamp& ts) { ts = parse_rfc3339(j.get<std::string>()); }

std::string_view to_string(BuildingCategory category) {
  switch (category) {
    case BuildingCategory::house: return "house";
    case BuildingCategory::office: return "office";
    case BuildingCategory::school: return "school";
    case BuildingCategory::hospital: return "hospital";
    case BuildingCategory::public_place: return "public_place";
    case BuildingCategory::infrastructure: return "infrastructure";
    case BuildingCategory::other: return "other";
  }
  return "other";
}

BuildingCategory parse_building_category(std::string_view text) {
  for (auto c : kBuildingCategories)
    if (to_string(c) == text) return c;
  fail(ErrorKind::validation, "unknown building category: " + std::string(text), "category");
}

void to_json(json& j, BuildingCategory c) { j = std::string(to_string(c)); }
void from_json(const json& j, BuildingCategory& c) { c = parse_building_category(j.get<std::string>()); }

void to_json(json& j, const Station& v) {
  j = {{"station_id", v.station_id}, {"name", v.name}, {"latitude", v.latitude}, {"longitude", v.longitude}};
}
void from_json(const json& j, Station& v) {
  v.station_id = field<std::string>(j, "station_id");
  v.name = field<std::string>(j, "name");
  v.latitude = field<double>(j, "latitude");
  v.longitude = field<double>(j, "longitude");
}

void to_json(json& j, const Province& v) {
  j = {{"province_id", v.province_id},
       {"name", v.name},
       {"centroid_lat", v.centroid_lat},
       {"centroid_lon", v.centroid_lon}};
}
void from_json(const json& j, Province& v) {
  v.province_id = field<std::string>(j, "province_id");
  v.name = field<std::string>(j, "name");
  v.centroid_lat = field<double>(j, "centroid_lat");
  v.centroid_lon = field<double>(j, "centroid_lon");
}

void to_json(json& j, const Regency& v) {
  j = {{"regency_id", v.regency_id},     {"province_id", v.province_id},   {"name", v.name},
       {"centroid_lat", v.centroid_lat}, {"centroid_lon", v.centroid_lon}, {"population", v.population}};
}
void from_json(const json& j, Regency& v) {
  v.regency_id = field<std::string>(j, "regency_id");
  v.province_id = field<std::string>(j, "province_id");
  v.name = field<std::string>(j, "name");
  v.centroid_lat = field<double>(j, "centroid_lat");
  v.centroid_lon = field<double>(j, "centroid_lon");
  v.population = field<std::int64_t>(j, "population");
}

void to_json(json& j, const Person& v) {
  j = {{"person_id", v.person_id},
       {"name", v.name},
       {"birth_date", v.birth_date},
       {"residence_regency_id", v.residence_regency_id},
       {"vital_status", v.vital_status}};
}
void from_json(const json& j, Person& v) {
  v.person_id = field<std::string>(j, "person_id");
  v.name = field<std::string>(j, "name");
  v.birth_date = field<std::string>(j, "birth_date");
  v.residence_regency_id = field<std::string>(j, "residence_regency_id");
  v.vital_status = field<VitalStatus>(j, "vital_status");
}

void to_json(json& j, const Medic& v) {
  j = {{"medic_id", v.medic_id}, {"person_id", v.person_id}, {"home_province_id", v.home_province_id}};
}
void from_json(const json& j, Medic& v) {
  v.medic_id = field<std::string>(j, "medic_id");
  v.person_id = field<std::string>(j, "person_id");
  v.home_province_id = field<std::string>(j, "home_province_id");
}

void to_json(json& j, const QuakeEvent& v) {
  j = {{"quake_id", v.quake_id},
       {"occurred_at", v.occurred_at},
       {"latitude", v.latitude},
       {"longitude", v.longitude},
       {"magnitude", v.magnitude},
       {"depth_km", v.depth_km},
       {"rupture_length_km", v.rupture_length_km},
       {"affected_area_km2", v.affected_area_km2},
       {"station_id", v.station_id},
       {"regency_id", v.regency_id}};
}
void from_json(const json& j, QuakeEvent& v) {
  v.quake_id = field<std::string>(j, "quake_id");
  v.occurred_at = field<Timestamp>(j, "occurred_at");
  v.latitude = field<double>(j, "latitude");
  v.longitude = field<double>(j, "longitude");
  v.magnitude = field<double>(j, "magnitude");
  v.depth_km = field<double>(j, "depth_km");
  v.rupture_length_km = field<double>(j, "rupture_length_km");
  v.affected_area_km2 = field<double>(j, "affected_area_km2");
  v.station_id = field<std::string>(j, "station_id");
  v.regency_id = field<std::string>(j, "regency_id");
}

void to_json(json& j, const CasualtyRecord& v) {
  j = {{"record_id", v.record_id},
       {"quake_id", v.quake_id},
       {"person_id", v.person_id ? json(*v.person_id) : json(nullptr)},
       {"kind", v.kind},
       {"regency_id", v.regency_id},
       {"medic_id", v.medic_id},
       {"recorded_at", v.recorded_at},
       {"count", v.count}};
}
void from_json(const json& j, CasualtyRecord& v) {
  v.record_id = field<std::string>(j, "record_id");
  v.quake_id = field<std::string>(j, "quake_id");
  auto pid = j.find("person_id");
  if (pid != j.end() && !pid->is_null())
    v.person_id = field<std::string>(j, "person_id");
  else
    v.person_id.reset();
  v.kind = field<CasualtyKind>(j, "kind");
  v.regency_id = field<std::string>(j, "regency_id");
  v.medic_id = field<std::string>(j, "medic_id");
  v.recorded_at = field<Timestamp>(j, "recorded_at");
  v.count = j.contains("count") ? field<std::int64_t>(j, "count") : 1;
}

void to_json(json& j, const BuildingDamage& v) {
  j = {{"damage_id", v.damage_id},   {"quake_id", v.quake_id},           {"regency_id", v.regency_id},
       {"category", v.category},     {"damaged_count", v.damaged_count}, {"severity", v.severity}};
}
void from_json(const json& j, BuildingDamage& v) {
  v.damage_id = field<std::string>(j, "damage_id");
  v.quake_id = field<std::string>(j, "quake_id");
  v.regency_id = field<std::string>(j, "regency_id");
  v.category = field<BuildingCategory>(j, "category");
  v.damaged_count = field<std::int64_t>(j, "damaged_count");
  v.severity = field<DamageSeverity>(j, "severity");
}

void to_json(json& j, const Watermark& v) {
  j = {{"source_id", v.source_id}, {"last_extracted_at", v.last_extracted_at}};
}
void from_json(const json& j, Watermark& v) {
  v.source_id = field<std::string>(j, "source_id");
  v.last_extracted_at = field<Timestamp>(j, "last_extracted_at");
}

std::string_view to_string(TableKind kind) {
  switch (kind) {
    case TableKind::provinces: return "provinces";
    case TableKind::regencies: return "regencies";
    case TableKind::stations: return "stations";
    case TableKind::people: return "people";
    case TableKind::medics: return "medics";
    case TableKind::quakes: return "quakes";
    case TableKind::casualties: return "casualties";
    case TableKind::damage: return "damage";
  }
  return "";
}

TableKind parse_table_kind(std::string_view text) {
  for (auto k : kTableLoadOrder)
    if (to_string(k) == text) return k;
  fail(ErrorKind::validation, "unknown table: " + std::string(text), "table");
}

// ---- validation ----------------------------------------------------------

void validate(const QuakeEvent& q) {
  check_id(q.quake_id, "quake_id");
  check_lat_lon(q.latitude, q.longitude, "latitude", "longitude");
  require(std::isfinite(q.magnitude) && q.magnitude > 0 && q.magnitude <= 10, "magnitude", "must lie in (0, 10]");
  require(std::isfinite(q.depth_km) && q.depth_km >= 0, "depth_km", "must be >= 0");
  require(std::isfinite(q.rupture_length_km) && q.rupture_length_km >= 0, "rupture_length_km", "must be >= 0");
  require(std::isfinite(q.affected_area_km2) && q.affected_area_km2 >= 0, "affected_area_km2", "must be >= 0");
}

void validate(const Regency& r) {
  check_id(r.regency_id, "regency_id");
  check_lat_lon(r.centroid_lat, r.centroid_lon, "centroid_lat", "centroid_lon");
  require(r.population >= 0, "population", "must be >= 0");
}

FactFilter FactFilter::year(int y) {
  FactFilter f;
  f.start = from_civil(y, 1, 1);
  f.end = Timestamp{from_civil(y + 1, 1, 1).seconds - 1};
  return f;
}

// ---- snapshot ------------------------------------------------------------

const Regency& Snapshot::regency(const std::string& id) const {
  const Regency* r = tables_->regencies.find(id);
  if (!r) unknown_ref("regency_id", id);
  return *r;
}

const Province& Snapshot::province(const std::string& id) const {
  const Province* p = tables_->provinces.find(id);
  if (!p) unknown_ref("province_id", id);
  return *p;
}

std::size_t Snapshot::row_count(TableKind kind) const {
  const Tables& t = *tables_;
  switch (kind) {
    case TableKind::provinces: return t.provinces.rows.size();
    case TableKind::regencies: return t.regencies.rows.size();
    case TableKind::stations: return t.stations.rows.size();
    case TableKind::people: return t.people.rows.size();
    case TableKind::medics: return t.medics.rows.size();
    case TableKind::quakes: return t.quakes.rows.size();
    case TableKind::casualties: return t.casualties.rows.size();
    case TableKind::damage: return t.damage.rows.size();
  }
  return 0;
}

std::vector<QuakeEvent> Snapshot::query_facts(const FactFilter& f) const {
  if (f.start && f.end && *f.start > *f.end) fail(ErrorKind::validation, "time range start after end", "start");
  if (f.min_magnitude && f.max_magnitude && *f.min_magnitude > *f.max_magnitude)
    fail(ErrorKind::validation, "magnitude band inverted", "min_magnitude");

  std::vector<QuakeEvent> out;
  for (const auto& q : tables_->quakes.rows) {
    if (f.start && q.occurred_at < *f.start) continue;
    if (f.end && q.occurred_at > *f.end) continue;
    if (f.regency_ids && !f.regency_ids->contains(q.regency_id)) continue;
    if (f.min_magnitude && q.magnitude < *f.min_magnitude) continue;
    if (f.max_magnitude && q.magnitude >= *f.max_magnitude) continue;
    out.push_back(q);
  }
  std::sort(out.begin(), out.end(), [](const QuakeEvent& a, const QuakeEvent& b) {
    return std::tie(a.occurred_at, a.quake_id) < std::tie(b.occurred_at, b.quake_id);
  });
  return out;
}

std::int64_t Snapshot::affected_population(const std::set<std::string>& regency_ids) const {
  std::int64_t total = 0;
  for (const auto& id : regency_ids) total += regency(id).population;
  return total;
}

std::int64_t Snapshot::available_medics(const std::set<std::string>& regency_ids) const {
  std::set<std::string> provinces;
  for (const auto& id : regency_ids) provinces.insert(regency(id).province_id);
  return std::count_if(tables_->medics.rows.begin(), tables_->medics.rows.end(),
                       [&](const Medic& m) { return provinces.contains(m.home_province_id); });
}

bool Snapshot::referentially_closed() const {
  const Tables& t = *tables_;
  auto has = [](const auto& table, const std::string& id) { return table.find(id) != nullptr; };
  for (const auto& r : t.regencies.rows)
    if (!has(t.provinces, r.province_id)) return false;
  for (const auto& p : t.people.rows)
    if (!has(t.regencies, p.residence_regency_id)) return false;
  for (const auto& m : t.medics.rows)
    if (!has(t.people, m.person_id) || !has(t.provinces, m.home_province_id)) return false;
  for (const auto& q : t.quakes.rows)
    if (!has(t.stations, q.station_id) || !has(t.regencies, q.regency_id)) return false;
  for (const auto& c : t.casualties.rows) {
    if (!has(t.quakes, c.quake_id) || !has(t.regencies, c.regency_id) || !has(t.medics, c.medic_id)) return false;
    if (c.person_id && !has(t.people, *c.person_id)) return false;
  }
  for (const auto& d : t.damage.rows)
    if (!has(t.quakes, d.quake_id) || !has(t.regencies, d.regency_id)) return false;
  return true;
}

json Snapshot::table_json(TableKind kind) const {
  const Tables& t = *tables_;
  switch (kind) {
    case TableKind::provinces: return t.provinces.rows;
    case TableKind::regencies: return t.regencies.rows;
    case TableKind::stations: return t.stations.rows;
    case TableKind::people: return t.people.rows;
    case TableKind::medics: return t.medics.rows;
    case TableKind::quakes: return t.quakes.rows;
    case TableKind::casualties: return t.casualties.rows;
    case TableKind::damage: return t.damage.rows;
  }
  return json::array();
}

// ---- writer --------------------------------------------------------------

void Writer::insert(const Province& row) {
  check_id(row.province_id, "province_id");
  check_lat_lon(row.centroid_lat, row.centroid_lon, "centroid_lat", "centroid_lon");
  add_row(tables_.provinces, row.province_id, row, "province_id");
  log(TableKind::provinces, row);
}

void Writer::insert(const Regency& row) {
  validate(row);
  if (!tables_.provinces.find(row.province_id)) unknown_ref("province_id", row.province_id);
  add_row(tables_.regencies, row.regency_id, row, "regency_id");
  log(TableKind::regencies, row);
}

void Writer::insert(const Station& row) {
  check_id(row.station_id, "station_id");
  check_lat_lon(row.latitude, row.longitude, "latitude", "longitude");
  add_row(tables_.stations, row.station_id, row, "station_id");
  log(TableKind::stations, row);
}

void Writer::insert(const Person& row) {
  check_id(row.person_id, "person_id");
  if (!tables_.regencies.find(row.residence_regency_id))
    unknown_ref("residence_regency_id", row.residence_regency_id);
  add_row(tables_.people, row.person_id, row, "person_id");
  log(TableKind::people, row);
}

void Writer::insert(const Medic& row) {
  check_id(row.medic_id, "medic_id");
  if (!tables_.people.find(row.person_id)) unknown_ref("person_id", row.person_id);
  if (!tables_.provinces.find(row.home_province_id)) unknown_ref("home_province_id", row.home_province_id);
  if (tables_.medic_by_person.contains(row.person_id))
    fail(ErrorKind::duplicate, "person already registered as medic: " + row.person_id, "person_id");
  add_row(tables_.medics, row.medic_id, row, "medic_id");
  tables_.medic_by_person.emplace(row.person_id, row.medic_id);
  log(TableKind::medics, row);
}

std::string Writer::insert(const QuakeEvent& row) {
  validate(row);
  if (!tables_.stations.find(row.station_id)) unknown_ref("station_id", row.station_id);
  if (!tables_.regencies.find(row.regency_id)) unknown_ref("regency_id", row.regency_id);
  add_row(tables_.quakes, row.quake_id, row, "quake_id");
  log(TableKind::quakes, row);
  return row.quake_id;
}

void Writer::insert(const CasualtyRecord& row) {
  check_id(row.record_id, "record_id");
  require(row.count >= 1, "count", "must be >= 1");
  if (!tables_.quakes.find(row.quake_id)) unknown_ref("quake_id", row.quake_id);
  if (!tables_.regencies.find(row.regency_id)) unknown_ref("regency_id", row.regency_id);
  if (!tables_.medics.find(row.medic_id)) unknown_ref("medic_id", row.medic_id);
  if (row.person_id) {
    require(row.count == 1, "count", "must be 1 for an identified person");
    const Person* p = tables_.people.find(*row.person_id);
    if (!p) unknown_ref("person_id", *row.person_id);
    if (row.kind == CasualtyKind::dead && p->vital_status != VitalStatus::dead)
      fail(ErrorKind::validation, "person recorded dead but vital_status is alive: " + *row.person_id,
           "vital_status");
  }
  add_row(tables_.casualties, row.record_id, row, "record_id");
  log(TableKind::casualties, row);
}

void Writer::insert(const BuildingDamage& row) {
  check_id(row.damage_id, "damage_id");
  require(row.damaged_count >= 0, "damaged_count", "must be >= 0");
  if (!tables_.quakes.find(row.quake_id)) unknown_ref("quake_id", row.quake_id);
  if (!tables_.regencies.find(row.regency_id)) unknown_ref("regency_id", row.regency_id);
  add_row(tables_.damage, row.damage_id, row, "damage_id");
  log(TableKind::damage, row);
}

void Writer::insert_json(TableKind kind, const json& record) {
  switch (kind) {
    case TableKind::provinces: insert(decode<Province>(record)); break;
    case TableKind::regencies: insert(decode<Regency>(record)); break;
    case TableKind::stations: insert(decode<Station>(record)); break;
    case TableKind::people: insert(decode<Person>(record)); break;
    case TableKind::medics: insert(decode<Medic>(record)); break;
    case TableKind::quakes: insert(decode<QuakeEvent>(record)); break;
    case TableKind::casualties: insert(decode<CasualtyRecord>(record)); break;
    case TableKind::damage: insert(decode<BuildingDamage>(record)); break;
  }
}

// ---- warehouse -----------------------------------------------------------

namespace {

std::filesystem::path table_path(const std::filesystem::path& root, TableKind kind) {
  return root / "warehouse" / (std::string(to_string(kind)) + ".jsonl");
}

}  // namespace

Warehouse::Warehouse(const std::filesystem::path& root) : root_(root) {
  std::error_code ec;
  std::filesystem::create_directories(root / "warehouse", ec);
  if (ec) fail(ErrorKind::io, "cannot create data directory: " + (root / "warehouse").string());

  Writer w{Tables{}};
  for (TableKind kind : kTableLoadOrder) {
    auto path = table_path(root, kind);
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json record = json::parse(line, nullptr, false);
      if (record.is_discarded())
        fail(ErrorKind::parse, path.string() + ":" + std::to_string(lineno) + ": malformed json");
      w.insert_json(kind, record);
    }
  }
  current_ = std::make_shared<const Tables>(std::move(w.tables_));
}

Snapshot Warehouse::snapshot() const {
  std::lock_guard lock(publish_mutex_);
  return Snapshot(current_);
}

void Warehouse::write(const std::function<void(Writer&)>& fn) {
  std::lock_guard writer_lock(write_mutex_);
  Writer w{Tables(snapshot().tables())};
  fn(w);
  if (w.appended_.empty()) return;
  if (root_) {
    std::unordered_map<int, std::ofstream> files;
    for (const auto& [kind, record] : w.appended_) {
      auto& out = files[static_cast<int>(kind)];
      if (!out.is_open()) {
        out.open(table_path(*root_, kind), std::ios::app);
        if (!out) fail(ErrorKind::io, "cannot append to " + table_path(*root_, kind).string());
      }
      out << record.dump() << '\n';
    }
    for (auto& [_, out] : files) {
      out.flush();
      if (!out) fail(ErrorKind::io, "write failed under " + root_->string());
    }
  }
  auto next = std::make_shared<const Tables>(std::move(w.tables_));
  std::lock_guard lock(publish_mutex_);
  current_ = std::move(next);
}

std::string Warehouse::insert_quake(const QuakeEvent& event) {
  std::string id;
  write([&](Writer& w) { id = w.insert(event); });
  return id;
}

void Warehouse::save(const std::filesystem::path& root) const {
  Snapshot snap = snapshot();
  std::filesystem::create_directories(root / "warehouse");
  for (TableKind kind : kTableLoadOrder) {
    std::ofstream out(table_path(root, kind), std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + table_path(root, kind).string());
    for (const auto& row : snap.table_json(kind)) out << row.dump() << '\n';
  }
}

std::filesystem::path data_root_from_env() {
  const char* env = std::getenv("QDSS_DATA");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("data");
}

}  // namespace qdss
