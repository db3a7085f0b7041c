#pragma once

// Snowflake-schema warehouse: Quake facts plus casualty and damage facts,
// with Station, Regency -> Province, Person and Medic dimensions.
// Facts reference Regency only; Province is reachable through Regency.

#include "qdss/common.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace qdss {

using json = nlohmann::json;

struct Station {
  std::string station_id;
  std::string name;
  double latitude = 0;
  double longitude = 0;
};

struct Province {
  std::string province_id;
  std::string name;
  double centroid_lat = 0;
  double centroid_lon = 0;
};

struct Regency {
  std::string regency_id;
  std::string province_id;
  std::string name;
  double centroid_lat = 0;
  double centroid_lon = 0;
  std::int64_t population = 0;
};

enum class VitalStatus { alive, dead };

struct Person {
  std::string person_id;
  std::string name;
  std::string birth_date;  // YYYY-MM-DD
  std::string residence_regency_id;
  VitalStatus vital_status = VitalStatus::alive;
};

struct Medic {
  std::string medic_id;
  std::string person_id;
  std::string home_province_id;
};

struct QuakeEvent {
  std::string quake_id;
  Timestamp occurred_at;
  double latitude = 0;
  double longitude = 0;
  double magnitude = 0;
  double depth_km = 0;
  double rupture_length_km = 0;
  double affected_area_km2 = 0;
  std::string station_id;
  std::string regency_id;
};

enum class CasualtyKind { dead, injured };

/// One victim, or an aggregate of `count` unidentified victims.
struct CasualtyRecord {
  std::string record_id;
  std::string quake_id;
  std::optional<std::string> person_id;
  CasualtyKind kind = CasualtyKind::dead;
  std::string regency_id;
  std::string medic_id;
  Timestamp recorded_at;
  std::int64_t count = 1;
};

enum class BuildingCategory { house, office, school, hospital, public_place, infrastructure, other };
enum class DamageSeverity { light, moderate, destroyed };

inline constexpr BuildingCategory kBuildingCategories[] = {
    BuildingCategory::house,        BuildingCategory::office,         BuildingCategory::school,
    BuildingCategory::hospital,     BuildingCategory::public_place,   BuildingCategory::infrastructure,
    BuildingCategory::other};

struct BuildingDamage {
  std::string damage_id;
  std::string quake_id;
  std::string regency_id;
  BuildingCategory category = BuildingCategory::other;
  std::int64_t damaged_count = 0;
  DamageSeverity severity = DamageSeverity::light;
};

struct Watermark {
  std::string source_id;
  Timestamp last_extracted_at;
};

NLOHMANN_JSON_SERIALIZE_ENUM(VitalStatus, {{VitalStatus::alive, "alive"}, {VitalStatus::dead, "dead"}})
NLOHMANN_JSON_SERIALIZE_ENUM(CasualtyKind, {{CasualtyKind::dead, "dead"}, {CasualtyKind::injured, "injured"}})
NLOHMANN_JSON_SERIALIZE_ENUM(DamageSeverity, {{DamageSeverity::light, "light"},
                                              {DamageSeverity::moderate, "moderate"},
                                              {DamageSeverity::destroyed, "destroyed"}})

std::string_view to_string(BuildingCategory category);
BuildingCategory parse_building_category(std::string_view text);

void to_json(json& j, const Timestamp& ts);
void from_json(const json& j, Timestamp& ts);
void to_json(json& j, BuildingCategory c);
void from_json(const json& j, BuildingCategory& c);

#define QDSS_DECLARE_JSON(Type)           \
  void to_json(json& j, const Type& v);   \
  void from_json(const json& j, Type& v);

QDSS_DECLARE_JSON(Station)
QDSS_DECLARE_JSON(Province)
QDSS_DECLARE_JSON(Regency)
QDSS_DECLARE_JSON(Person)
QDSS_DECLARE_JSON(Medic)
QDSS_DECLARE_JSON(QuakeEvent)
QDSS_DECLARE_JSON(CasualtyRecord)
QDSS_DECLARE_JSON(BuildingDamage)
QDSS_DECLARE_JSON(Watermark)

#undef QDSS_DECLARE_JSON

/// Decodes a json object into T, mapping decoder failures to validation errors.
template <typename T>
T decode(const json& j) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed record: ") + e.what());
  }
}

enum class TableKind { provinces, regencies, stations, people, medics, quakes, casualties, damage };

/// Tables in dependency order (a table only references tables before it).
inline constexpr TableKind kTableLoadOrder[] = {TableKind::provinces, TableKind::regencies, TableKind::stations,
                                                TableKind::people,    TableKind::medics,    TableKind::quakes,
                                                TableKind::casualties, TableKind::damage};

std::string_view to_string(TableKind kind);
TableKind parse_table_kind(std::string_view text);

template <typename Row>
struct Table {
  std::vector<Row> rows;
  std::unordered_map<std::string, std::size_t> index;

  const Row* find(const std::string& id) const {
    auto it = index.find(id);
    return it == index.end() ? nullptr : &rows[it->second];
  }
};

struct Tables {
  Table<Province> provinces;
  Table<Regency> regencies;
  Table<Station> stations;
  Table<Person> people;
  Table<Medic> medics;
  Table<QuakeEvent> quakes;
  Table<CasualtyRecord> casualties;
  Table<BuildingDamage> damage;
  std::unordered_map<std::string, std::string> medic_by_person;
};

/// Conjunctive filter over quake facts. Unset bounds are unbounded; the
/// time range is inclusive and the magnitude band is half-open [min, max).
struct FactFilter {
  std::optional<Timestamp> start;
  std::optional<Timestamp> end;
  std::optional<std::set<std::string>> regency_ids;
  std::optional<double> min_magnitude;
  std::optional<double> max_magnitude;

  static FactFilter year(int y);
};

/// Immutable, consistent view of the warehouse.
class Snapshot {
public:
  Snapshot() : tables_(std::make_shared<const Tables>()) {}
  explicit Snapshot(std::shared_ptr<const Tables> tables) : tables_(std::move(tables)) {}

  const Tables& tables() const { return *tables_; }
  const std::vector<QuakeEvent>& quakes() const { return tables_->quakes.rows; }
  const std::vector<Regency>& regencies() const { return tables_->regencies.rows; }
  const std::vector<Province>& provinces() const { return tables_->provinces.rows; }
  const std::vector<CasualtyRecord>& casualties() const { return tables_->casualties.rows; }
  const std::vector<BuildingDamage>& damage() const { return tables_->damage.rows; }
  const std::vector<Medic>& medics() const { return tables_->medics.rows; }

  const Regency& regency(const std::string& id) const;
  const Province& province(const std::string& id) const;
  const QuakeEvent* find_quake(const std::string& id) const { return tables_->quakes.find(id); }

  std::size_t row_count(TableKind kind) const;

  /// Rows matching every filter conjunct, ordered by (occurred_at, quake_id).
  std::vector<QuakeEvent> query_facts(const FactFilter& filter) const;

  /// A_c: total population over the given regencies.
  std::int64_t affected_population(const std::set<std::string>& regency_ids) const;

  /// A_m: medics whose home province contains any of the given regencies.
  std::int64_t available_medics(const std::set<std::string>& regency_ids) const;

  /// Full scan: true iff every fact reference resolves.
  bool referentially_closed() const;

  json table_json(TableKind kind) const;

private:
  std::shared_ptr<const Tables> tables_;
};

/// Buffered writes against a private copy of the tables; published atomically
/// by Warehouse::write. Each insert validates completely before mutating.
class Writer {
public:
  explicit Writer(Tables tables) : tables_(std::move(tables)) {}

  void insert(const Province& row);
  void insert(const Regency& row);
  void insert(const Station& row);
  void insert(const Person& row);
  void insert(const Medic& row);
  std::string insert(const QuakeEvent& row);
  void insert(const CasualtyRecord& row);
  void insert(const BuildingDamage& row);

  /// Decodes a json record of the given table and inserts it.
  void insert_json(TableKind kind, const json& record);

  const Tables& tables() const { return tables_; }

private:
  friend class Warehouse;
  void log(TableKind kind, json record) { appended_.emplace_back(kind, std::move(record)); }

  Tables tables_;
  std::vector<std::pair<TableKind, json>> appended_;
};

void validate(const QuakeEvent& q);
void validate(const Regency& r);

/// Single-writer, multi-reader store. When bound to a data root, every
/// committed row is appended to `<root>/warehouse/<table>.jsonl` before the
/// new version becomes visible.
class Warehouse {
public:
  Warehouse() = default;

  /// Loads (creating if absent) the store under `<root>/warehouse`.
  explicit Warehouse(const std::filesystem::path& root);
  Warehouse(const Warehouse&) = delete;
  Warehouse& operator=(const Warehouse&) = delete;

  Snapshot snapshot() const;

  /// Runs `fn` against a private copy; publishes only if it returns normally.
  void write(const std::function<void(Writer&)>& fn);

  std::string insert_quake(const QuakeEvent& event);

  template <typename Row>
  void insert(const Row& row) {
    write([&](Writer& w) { w.insert(row); });
  }

  /// Writes every table in full to `<root>/warehouse`, replacing existing files.
  void save(const std::filesystem::path& root) const;

  const std::optional<std::filesystem::path>& root() const { return root_; }

private:
  std::optional<std::filesystem::path> root_;
  mutable std::mutex write_mutex_;
  mutable std::mutex publish_mutex_;
  std::shared_ptr<const Tables> current_ = std::make_shared<const Tables>();
};

std::filesystem::path data_root_from_env();

}  // namespace qdss
