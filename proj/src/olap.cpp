#include "qdss/olap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qdss::olap {

namespace {

constexpr Measure kAllMeasures[] = {Measure::quake_count, Measure::deaths, Measure::injured,
                                    Measure::damaged_buildings, Measure::affected_area_km2};

std::size_t slot(Measure m) { return static_cast<std::size_t>(m); }

bool wants(const CubeSpec& spec, Measure m) {
  return std::find(spec.measures.begin(), spec.measures.end(), m) != spec.measures.end();
}

bool level_valid(const Dimension& d) {
  switch (d.kind) {
    case DimensionKind::geography: return d.level == Level::province || d.level == Level::regency;
    case DimensionKind::time: return d.level == Level::year || d.level == Level::month || d.level == Level::day;
    case DimensionKind::magnitude_band:
      return d.level == Level::band && std::isfinite(d.band_width) && d.band_width > 0;
  }
  return false;
}

std::string pad(unsigned value, int width) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%0*u", width, value);
  return buf;
}

void add(MeasureVector& into, const MeasureVector& v) {
  for (std::size_t i = 0; i < kMeasureCount; ++i) into[i] += v[i];
}

MeasureVector total_of(const std::map<CellKey, MeasureVector>& cells) {
  MeasureVector total{};
  for (const auto& [_, v] : cells) add(total, v);
  return total;
}

std::string format_value(Measure m, std::int64_t v) {
  if (m != Measure::affected_area_km2) return std::to_string(v);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%03lld", v < 0 ? "-" : "", static_cast<long long>(std::llabs(v) / 1000),
                static_cast<long long>(std::llabs(v) % 1000));
  return buf;
}

json json_value(Measure m, std::int64_t v) {
  if (m != Measure::affected_area_km2) return v;
  return static_cast<double>(v) / 1000.0;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::size_t require_dimension(const Hypercube& cube, DimensionKind kind) {
  auto idx = cube.dimension_index(kind);
  if (!idx) fail(ErrorKind::validation, "dimension not in cube: " + std::string(to_string(kind)), "dimension");
  return *idx;
}

std::string coordinate_text(const Coordinate& c) {
  return std::holds_alternative<std::string>(c) ? std::get<std::string>(c) : std::to_string(std::get<std::int64_t>(c));
}

}  // namespace

// ---- names ---------------------------------------------------------------

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::quake_count: return "quake_count";
    case Measure::deaths: return "deaths";
    case Measure::injured: return "injured";
    case Measure::damaged_buildings: return "damaged_buildings";
    case Measure::affected_area_km2: return "affected_area_km2";
  }
  return "";
}

std::string_view to_string(DimensionKind k) {
  switch (k) {
    case DimensionKind::geography: return "geography";
    case DimensionKind::time: return "time";
    case DimensionKind::magnitude_band: return "magnitude_band";
  }
  return "";
}

std::string_view to_string(Level l) {
  switch (l) {
    case Level::province: return "province";
    case Level::regency: return "regency";
    case Level::year: return "year";
    case Level::month: return "month";
    case Level::day: return "day";
    case Level::band: return "band";
  }
  return "";
}

std::string dimension_name(const Dimension& d) {
  if (d.kind == DimensionKind::magnitude_band) {
    std::ostringstream os;
    os << "magnitude_band:" << d.band_width;
    return os.str();
  }
  return std::string(to_string(d.kind)) + ":" + std::string(to_string(d.level));
}

std::string coordinate_label(const Dimension& d, const Coordinate& c) {
  if (d.kind != DimensionKind::magnitude_band) return coordinate_text(c);
  auto k = static_cast<double>(std::get<std::int64_t>(c));
  std::ostringstream os;
  os << '[' << k * d.band_width << ',' << (k + 1) * d.band_width << ')';
  return os.str();
}

Measure parse_measure(std::string_view text) {
  for (auto m : kAllMeasures)
    if (to_string(m) == text) return m;
  fail(ErrorKind::validation, "unknown measure: " + std::string(text), "measure");
}

DimensionKind parse_dimension_kind(std::string_view text) {
  if (text == "geography") return DimensionKind::geography;
  if (text == "time") return DimensionKind::time;
  if (text == "magnitude_band" || text == "magnitude") return DimensionKind::magnitude_band;
  fail(ErrorKind::validation, "unknown dimension: " + std::string(text), "dimension");
}

Format parse_format(std::string_view text) {
  if (text == "text") return Format::text;
  if (text == "csv") return Format::csv;
  if (text == "json") return Format::json;
  fail(ErrorKind::validation, "unknown format: " + std::string(text), "format");
}

Dimension parse_dimension(std::string_view text) {
  auto colon = text.find(':');
  auto kind = parse_dimension_kind(text.substr(0, colon));
  std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  switch (kind) {
    case DimensionKind::geography:
      if (arg.empty() || arg == "province") return Dimension::geography(Level::province);
      if (arg == "regency") return Dimension::geography(Level::regency);
      break;
    case DimensionKind::time:
      if (arg.empty() || arg == "year") return Dimension::time(Level::year);
      if (arg == "month") return Dimension::time(Level::month);
      if (arg == "day") return Dimension::time(Level::day);
      break;
    case DimensionKind::magnitude_band: {
      if (arg.empty()) return Dimension::magnitude(1.0);
      try {
        std::size_t used = 0;
        double w = std::stod(std::string(arg), &used);
        if (used == arg.size() && std::isfinite(w) && w > 0) return Dimension::magnitude(w);
      } catch (const std::exception&) {
      }
      fail(ErrorKind::validation, "magnitude band width must be > 0: " + std::string(arg), "band_width");
    }
  }
  fail(ErrorKind::validation, "invalid level for dimension: " + std::string(text), "dimension");
}

Coordinate parse_coordinate(const Dimension& d, std::string_view text) {
  auto bad = [&] { fail(ErrorKind::validation, "invalid value '" + std::string(text) + "' for " + dimension_name(d), "value"); };
  switch (d.kind) {
    case DimensionKind::geography:
      if (text.empty()) bad();
      return std::string(text);
    case DimensionKind::time: {
      std::size_t expected = d.level == Level::year ? 4 : d.level == Level::month ? 7 : 10;
      if (text.size() != expected) bad();
      for (std::size_t i = 0; i < text.size(); ++i) {
        bool dash = i == 4 || i == 7;
        if (dash ? text[i] != '-' : !std::isdigit(static_cast<unsigned char>(text[i]))) bad();
      }
      return std::string(text);
    }
    case DimensionKind::magnitude_band: {
      try {
        std::size_t used = 0;
        double m = std::stod(std::string(text), &used);
        if (used != text.size() || !std::isfinite(m)) bad();
        return static_cast<std::int64_t>(std::floor(m / d.band_width + 1e-9));
      } catch (const std::invalid_argument&) {
        bad();
      } catch (const std::out_of_range&) {
        bad();
      }
    }
  }
  bad();
  return {};
}

Coordinate coordinate_of(const Dimension& d, const Regency& regency, const QuakeEvent& quake) {
  switch (d.kind) {
    case DimensionKind::geography:
      return d.level == Level::province ? regency.province_id : regency.regency_id;
    case DimensionKind::time: {
      CivilTime c = civil_date(quake.occurred_at);
      std::string s = pad(static_cast<unsigned>(c.year), 4);
      if (d.level == Level::year) return s;
      s += "-" + pad(c.month, 2);
      if (d.level == Level::month) return s;
      return s + "-" + pad(c.day, 2);
    }
    case DimensionKind::magnitude_band:
      return static_cast<std::int64_t>(std::floor(quake.magnitude / d.band_width + 1e-9));
  }
  return {};
}

// ---- cube ----------------------------------------------------------------

void CubeSpec::validate() const {
  require(!measures.empty(), "measures", "at least one measure required");
  std::set<Measure> seen;
  for (auto m : measures) require(seen.insert(m).second, "measures", "duplicate measure");
  std::set<DimensionKind> kinds;
  for (const auto& d : dimensions) {
    require(level_valid(d), "dimensions", "invalid level for " + std::string(to_string(d.kind)));
    require(kinds.insert(d.kind).second, "dimensions", "dimension listed twice: " + std::string(to_string(d.kind)));
  }
  for (const auto& f : filters) {
    require(level_valid(f.dimension), "filters", "invalid level in filter");
    require(!f.values.empty(), "filters", "filter value set must be non-empty");
  }
}

std::optional<std::size_t> Hypercube::dimension_index(DimensionKind kind) const {
  for (std::size_t i = 0; i < spec.dimensions.size(); ++i)
    if (spec.dimensions[i].kind == kind) return i;
  return std::nullopt;
}

std::set<Coordinate> Hypercube::domain(DimensionKind kind) const {
  std::set<Coordinate> out;
  if (auto idx = dimension_index(kind))
    for (const auto& [key, _] : cells) out.insert(key[*idx]);
  return out;
}

Hypercube build_cube(const Snapshot& snapshot, const CubeSpec& spec) {
  spec.validate();
  Hypercube cube;
  cube.spec = spec;
  cube.source = snapshot;

  auto contribute = [&](const std::string& regency_id, const QuakeEvent& quake, const MeasureVector& values) {
    const Regency& regency = snapshot.regency(regency_id);
    for (const auto& f : spec.filters)
      if (!f.values.contains(coordinate_of(f.dimension, regency, quake))) return;
    CellKey key;
    key.reserve(spec.dimensions.size());
    for (const auto& d : spec.dimensions) key.push_back(coordinate_of(d, regency, quake));
    add(cube.cells[key], values);
  };

  if (wants(spec, Measure::quake_count) || wants(spec, Measure::affected_area_km2)) {
    for (const auto& q : snapshot.quakes()) {
      MeasureVector v{};
      if (wants(spec, Measure::quake_count)) v[slot(Measure::quake_count)] = 1;
      if (wants(spec, Measure::affected_area_km2))
        v[slot(Measure::affected_area_km2)] = std::llround(q.affected_area_km2 * 1000.0);
      contribute(q.regency_id, q, v);
    }
  }
  if (wants(spec, Measure::deaths) || wants(spec, Measure::injured)) {
    for (const auto& c : snapshot.casualties()) {
      Measure m = c.kind == CasualtyKind::dead ? Measure::deaths : Measure::injured;
      if (!wants(spec, m)) continue;
      MeasureVector v{};
      v[slot(m)] = c.count;
      contribute(c.regency_id, *snapshot.find_quake(c.quake_id), v);
    }
  }
  if (wants(spec, Measure::damaged_buildings)) {
    for (const auto& d : snapshot.damage()) {
      MeasureVector v{};
      v[slot(Measure::damaged_buildings)] = d.damaged_count;
      contribute(d.regency_id, *snapshot.find_quake(d.quake_id), v);
    }
  }
  cube.grand_total = total_of(cube.cells);
  return cube;
}

Hypercube rollup(const Hypercube& cube, DimensionKind kind) {
  const std::size_t idx = require_dimension(cube, kind);
  Hypercube out;
  out.spec = cube.spec;
  out.source = cube.source;

  Dimension& d = out.spec.dimensions[idx];
  bool drop = false;
  std::function<Coordinate(const Coordinate&)> coarsen;
  if (d.level == Level::regency) {
    d.level = Level::province;
    coarsen = [&](const Coordinate& c) -> Coordinate { return cube.source.regency(std::get<std::string>(c)).province_id; };
  } else if (d.level == Level::day) {
    d.level = Level::month;
    coarsen = [](const Coordinate& c) -> Coordinate { return std::get<std::string>(c).substr(0, 7); };
  } else if (d.level == Level::month) {
    d.level = Level::year;
    coarsen = [](const Coordinate& c) -> Coordinate { return std::get<std::string>(c).substr(0, 4); };
  } else {
    drop = true;
    out.spec.dimensions.erase(out.spec.dimensions.begin() + static_cast<std::ptrdiff_t>(idx));
  }

  for (const auto& [key, values] : cube.cells) {
    CellKey next = key;
    if (drop)
      next.erase(next.begin() + static_cast<std::ptrdiff_t>(idx));
    else
      next[idx] = coarsen(key[idx]);
    add(out.cells[next], values);
  }
  out.grand_total = cube.grand_total;
  return out;
}

Hypercube drilldown(const Hypercube& cube, DimensionKind kind) {
  const std::size_t idx = require_dimension(cube, kind);
  CubeSpec spec = cube.spec;
  Dimension& d = spec.dimensions[idx];
  switch (d.level) {
    case Level::province: d.level = Level::regency; break;
    case Level::year: d.level = Level::month; break;
    case Level::month: d.level = Level::day; break;
    default:
      fail(ErrorKind::validation, "dimension already at its finest level: " + dimension_name(d), "dimension");
  }
  return build_cube(cube.source, spec);
}

Hypercube slice(const Hypercube& cube, DimensionKind kind, const Coordinate& value) {
  const std::size_t idx = require_dimension(cube, kind);
  const Dimension dim = cube.spec.dimensions[idx];
  if (!cube.domain(kind).contains(value))
    fail(ErrorKind::validation, "value not in domain of " + dimension_name(dim) + ": " + coordinate_text(value), "value");

  Hypercube out;
  out.spec = cube.spec;
  out.source = cube.source;
  out.spec.dimensions.erase(out.spec.dimensions.begin() + static_cast<std::ptrdiff_t>(idx));
  out.spec.filters.push_back({dim, {value}});
  for (const auto& [key, values] : cube.cells) {
    if (key[idx] != value) continue;
    CellKey next = key;
    next.erase(next.begin() + static_cast<std::ptrdiff_t>(idx));
    add(out.cells[next], values);
  }
  out.grand_total = total_of(out.cells);
  return out;
}

Hypercube dice(const Hypercube& cube, const std::map<DimensionKind, std::set<Coordinate>>& selection) {
  Hypercube out;
  out.spec = cube.spec;
  out.source = cube.source;

  std::vector<std::pair<std::size_t, const std::set<Coordinate>*>> checks;
  for (const auto& [kind, values] : selection) {
    const std::size_t idx = require_dimension(cube, kind);
    const Dimension& dim = cube.spec.dimensions[idx];
    require(!values.empty(), "values", "dice value set for " + dimension_name(dim) + " is empty");
    auto domain = cube.domain(kind);
    for (const auto& v : values)
      if (!domain.contains(v))
        fail(ErrorKind::validation, "value not in domain of " + dimension_name(dim) + ": " + coordinate_text(v), "value");
    out.spec.filters.push_back({dim, values});
    checks.emplace_back(idx, &values);
  }
  for (const auto& [key, values] : cube.cells) {
    bool keep = std::all_of(checks.begin(), checks.end(), [&](const auto& c) { return c.second->contains(key[c.first]); });
    if (keep) out.cells.emplace(key, values);
  }
  out.grand_total = total_of(out.cells);
  return out;
}

// ---- rendering -----------------------------------------------------------

std::string render_report(const Hypercube& cube, Format format) {
  const auto& dims = cube.spec.dimensions;
  const auto& measures = cube.spec.measures;

  std::vector<std::string> header;
  for (const auto& d : dims) header.push_back(dimension_name(d));
  if (dims.empty()) header.push_back("cell");
  for (auto m : measures) header.emplace_back(to_string(m));

  std::vector<std::vector<std::string>> rows;
  for (const auto& [key, values] : cube.cells) {
    std::vector<std::string> row;
    for (std::size_t i = 0; i < dims.size(); ++i) row.push_back(coordinate_label(dims[i], key[i]));
    if (dims.empty()) row.emplace_back("ALL");
    for (auto m : measures) row.push_back(format_value(m, values[slot(m)]));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> total_row;
  if (!cube.cells.empty()) {
    total_row.emplace_back("TOTAL");
    for (std::size_t i = 1; i < std::max<std::size_t>(dims.size(), 1); ++i) total_row.emplace_back();
    for (auto m : measures) total_row.push_back(format_value(m, cube.grand_total[slot(m)]));
  }

  if (format == Format::json) {
    json doc;
    doc["dimensions"] = json::array();
    for (const auto& d : dims) doc["dimensions"].push_back(dimension_name(d));
    doc["measures"] = json::array();
    for (auto m : measures) doc["measures"].push_back(to_string(m));
    doc["rows"] = json::array();
    json labels = json::array();
    std::vector<json> series_values(measures.size(), json::array());
    for (const auto& [key, values] : cube.cells) {
      json coords = json::array();
      std::string label;
      for (std::size_t i = 0; i < dims.size(); ++i) {
        auto text = coordinate_label(dims[i], key[i]);
        coords.push_back(text);
        label += (i ? " / " : "") + text;
      }
      json vals = json::object();
      for (std::size_t i = 0; i < measures.size(); ++i) {
        vals[std::string(to_string(measures[i]))] = json_value(measures[i], values[slot(measures[i])]);
        series_values[i].push_back(json_value(measures[i], values[slot(measures[i])]));
      }
      labels.push_back(dims.empty() ? "ALL" : label);
      doc["rows"].push_back({{"coordinates", coords}, {"values", vals}});
    }
    json total = json::object();
    for (auto m : measures) total[std::string(to_string(m))] = json_value(m, cube.grand_total[slot(m)]);
    doc["total"] = total;
    doc["series"] = json::array();
    for (std::size_t i = 0; i < measures.size(); ++i)
      doc["series"].push_back({{"measure", to_string(measures[i])}, {"labels", labels}, {"values", series_values[i]}});
    return doc.dump(2) + "\n";
  }

  std::ostringstream out;
  if (format == Format::csv) {
    auto line = [&](const std::vector<std::string>& cols) {
      for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << csv_field(cols[i]);
      out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    if (!total_row.empty()) line(total_row);
    return out.str();
  }

  std::vector<std::size_t> width(header.size());
  auto widen = [&](const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) width[i] = std::max(width[i], cols[i].size());
  };
  widen(header);
  for (const auto& r : rows) widen(r);
  if (!total_row.empty()) widen(total_row);
  const std::size_t label_cols = std::max<std::size_t>(dims.size(), 1);
  auto line = [&](const std::vector<std::string>& cols) {
    std::string text;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      std::string cell = cols[i];
      std::string fill(width[i] - cell.size(), ' ');
      text += (i ? "  " : "") + (i < label_cols ? cell + fill : fill + cell);
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out << text << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  if (!total_row.empty()) line(total_row);
  return out.str();
}

// ---- queries -------------------------------------------------------------

namespace {

std::pair<DimensionKind, std::string> split_selector(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) fail(ErrorKind::validation, "expected dimension:value, got '" + text + "'", "value");
  return {parse_dimension_kind(text.substr(0, colon)), text.substr(colon + 1)};
}

std::vector<std::string> split_values(const std::string& values) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= values.size()) {
    auto bar = values.find('|', start);
    auto token = values.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
    if (!token.empty()) out.push_back(token);
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return out;
}

// Level of a selector on a dimension that is not displayed, read off the value.
Dimension implied_dimension(const Snapshot& snapshot, DimensionKind kind, const std::string& value) {
  switch (kind) {
    case DimensionKind::geography:
      return Dimension::geography(snapshot.tables().provinces.find(value) ? Level::province : Level::regency);
    case DimensionKind::time:
      return Dimension::time(value.size() <= 4 ? Level::year : value.size() <= 7 ? Level::month : Level::day);
    case DimensionKind::magnitude_band: break;
  }
  fail(ErrorKind::validation, "magnitude_band selectors need the dimension in the cube (--by magnitude_band:W)", "value");
}

}  // namespace

Hypercube run_query(const Snapshot& snapshot, const Query& q) {
  CubeSpec spec;
  for (const auto& m : q.measures) spec.measures.push_back(parse_measure(m));
  for (const auto& d : q.by) spec.dimensions.push_back(parse_dimension(d));
  auto shown = [&](DimensionKind kind) {
    return std::any_of(spec.dimensions.begin(), spec.dimensions.end(), [&](const Dimension& d) { return d.kind == kind; });
  };

  // Selectors on dimensions outside the cube become build-time filters.
  std::vector<std::string> slices, dices;
  for (const auto& s : q.slices) {
    auto [kind, value] = split_selector(s);
    if (shown(kind)) {
      slices.push_back(s);
      continue;
    }
    auto dim = implied_dimension(snapshot, kind, value);
    spec.filters.push_back({dim, {parse_coordinate(dim, value)}});
  }
  for (const auto& s : q.dices) {
    auto [kind, values] = split_selector(s);
    if (shown(kind)) {
      dices.push_back(s);
      continue;
    }
    auto tokens = split_values(values);
    require(!tokens.empty(), "values", "dice value set is empty");
    auto dim = implied_dimension(snapshot, kind, tokens.front());
    DimensionFilter f{dim, {}};
    for (const auto& t : tokens) f.values.insert(parse_coordinate(dim, t));
    spec.filters.push_back(std::move(f));
  }
  Hypercube cube = build_cube(snapshot, spec);

  for (const auto& s : slices) {
    auto [kind, value] = split_selector(s);
    const auto& dim = cube.spec.dimensions[require_dimension(cube, kind)];
    cube = slice(cube, kind, parse_coordinate(dim, value));
  }
  if (!dices.empty()) {
    std::map<DimensionKind, std::set<Coordinate>> selection;
    for (const auto& s : dices) {
      auto [kind, values] = split_selector(s);
      const auto& dim = cube.spec.dimensions[require_dimension(cube, kind)];
      auto& set = selection[kind];
      for (const auto& t : split_values(values)) set.insert(parse_coordinate(dim, t));
    }
    cube = dice(cube, selection);
  }
  for (const auto& r : q.rollups) cube = rollup(cube, parse_dimension_kind(r));
  for (const auto& d : q.drilldowns) cube = drilldown(cube, parse_dimension_kind(d));
  return cube;
}

}  // namespace qdss::olap
