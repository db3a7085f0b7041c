#pragma once

// Hypercubes over warehouse snapshots: build, roll-up, drill-down, slice,
// dice, and text/csv/json rendering.
//
// All measures are additive integer sums; affected area is accumulated in
// milli-km2 so that merges are exact. Magnitude bands are half-open
// [k*w, (k+1)*w).

#include "qdss/warehouse.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace qdss::olap {

enum class Measure { quake_count, deaths, injured, damaged_buildings, affected_area_km2 };
inline constexpr std::size_t kMeasureCount = 5;

enum class DimensionKind { geography, time, magnitude_band };
enum class Level { province, regency, year, month, day, band };

struct Dimension {
  DimensionKind kind = DimensionKind::geography;
  Level level = Level::province;
  double band_width = 0;  // magnitude_band only

  friend bool operator==(const Dimension&, const Dimension&) = default;

  static Dimension geography(Level level) { return {DimensionKind::geography, level, 0}; }
  static Dimension time(Level level) { return {DimensionKind::time, level, 0}; }
  static Dimension magnitude(double width) { return {DimensionKind::magnitude_band, Level::band, width}; }
};

/// Geography ids and calendar labels ("2004", "2004-12", "2004-12-26") are
/// strings; magnitude bands are their integer index k.
using Coordinate = std::variant<std::int64_t, std::string>;
using CellKey = std::vector<Coordinate>;
using MeasureVector = std::array<std::int64_t, kMeasureCount>;

/// Keeps facts whose coordinate along `dimension` is one of `values`.
struct DimensionFilter {
  Dimension dimension;
  std::set<Coordinate> values;
};

struct CubeSpec {
  std::vector<Measure> measures;
  std::vector<Dimension> dimensions;
  std::vector<DimensionFilter> filters;

  void validate() const;
};

struct Hypercube {
  CubeSpec spec;
  std::map<CellKey, MeasureVector> cells;
  MeasureVector grand_total{};
  Snapshot source;

  std::optional<std::size_t> dimension_index(DimensionKind kind) const;
  std::set<Coordinate> domain(DimensionKind kind) const;
};

Hypercube build_cube(const Snapshot& snapshot, const CubeSpec& spec);

/// Coarsens `kind` one level (regency->province, day->month->year), or drops
/// it when already at its coarsest level.
Hypercube rollup(const Hypercube& cube, DimensionKind kind);

/// Refines `kind` one level (province->regency, year->month->day) by
/// re-aggregating the underlying snapshot.
Hypercube drilldown(const Hypercube& cube, DimensionKind kind);

Hypercube slice(const Hypercube& cube, DimensionKind kind, const Coordinate& value);
Hypercube dice(const Hypercube& cube, const std::map<DimensionKind, std::set<Coordinate>>& selection);

enum class Format { text, csv, json };

std::string render_report(const Hypercube& cube, Format format);

// Names and parsing shared by the CLI and HTTP query surfaces.
std::string_view to_string(Measure m);
std::string_view to_string(DimensionKind k);
std::string_view to_string(Level l);
std::string dimension_name(const Dimension& d);
std::string coordinate_label(const Dimension& d, const Coordinate& c);
Measure parse_measure(std::string_view text);
DimensionKind parse_dimension_kind(std::string_view text);
Format parse_format(std::string_view text);
/// "geography:province", "time:year", "magnitude_band:0.5".
Dimension parse_dimension(std::string_view text);
/// Parses a coordinate along `d`; magnitude values select the band containing them.
Coordinate parse_coordinate(const Dimension& d, std::string_view text);

/// The coordinate of a fact along `d`.
Coordinate coordinate_of(const Dimension& d, const Regency& regency, const QuakeEvent& quake);

/// A declarative query: build over `by`, then apply slices, dices, roll-ups
/// and drill-downs in that order.
struct Query {
  std::vector<std::string> measures;
  std::vector<std::string> by;
  std::vector<std::string> slices;     // "kind:value"
  std::vector<std::string> dices;      // "kind:v1|v2|..."
  std::vector<std::string> rollups;    // kind
  std::vector<std::string> drilldowns; // kind
};

Hypercube run_query(const Snapshot& snapshot, const Query& query);

}  // namespace qdss::olap
