#include "qdss/etl.hpp"

#include <algorithm>
#include <fstream>

namespace qdss::etl {

std::string_view timestamp_field(TableKind kind) {
  switch (kind) {
    case TableKind::quakes: return "occurred_at";
    case TableKind::casualties: return "recorded_at";
    default: return "updated_at";
  }
}

WatermarkStore::WatermarkStore(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(*file_)) return;
  std::ifstream in(*file_);
  if (!in) fail(ErrorKind::io, "cannot read " + file_->string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(ErrorKind::parse, file_->string() + ": malformed json");
    auto w = decode<Watermark>(j);
    auto& mark = marks_.try_emplace(w.source_id, kBeginningOfTime).first->second;
    mark = std::max(mark, w.last_extracted_at);
  }
}

Timestamp WatermarkStore::get(const std::string& source_id) const {
  std::lock_guard lock(mutex_);
  auto it = marks_.find(source_id);
  return it == marks_.end() ? kBeginningOfTime : it->second;
}

void WatermarkStore::advance(const std::string& source_id, Timestamp to) {
  std::lock_guard lock(mutex_);
  auto& mark = marks_.try_emplace(source_id, kBeginningOfTime).first->second;
  if (to <= mark) return;
  if (file_) {
    if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
    std::ofstream out(*file_, std::ios::app);
    out << json(Watermark{source_id, to}).dump() << '\n';
    out.flush();
    if (!out) fail(ErrorKind::io, "cannot append to " + file_->string());
  }
  mark = to;
}

std::map<std::string, Timestamp> WatermarkStore::all() const {
  std::lock_guard lock(mutex_);
  return marks_;
}

ExtractionBatch extract_deferred(const SourceSpec& source, Timestamp watermark) {
  std::ifstream in(source.path);
  if (!in) fail(ErrorKind::io, "cannot read source " + source.source_id + ": " + source.path.string());

  ExtractionBatch batch;
  batch.source_id = source.source_id;
  batch.record_kind = source.record_kind;
  batch.extracted_through = watermark;
  const std::string ts_field(timestamp_field(source.record_kind));

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto reject = [&](std::string reason) { batch.rejected.push_back({source.source_id, lineno, std::move(reason)}); };
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      reject("malformed json");
      continue;
    }
    auto ts = record.find(ts_field);
    if (ts == record.end() || !ts->is_string()) {
      reject("missing timestamp field " + ts_field);
      continue;
    }
    Timestamp at;
    try {
      at = parse_rfc3339(ts->get<std::string>());
    } catch (const Error& e) {
      reject(e.what());
      continue;
    }
    if (at <= watermark) continue;
    batch.extracted_through = std::max(batch.extracted_through, at);
    batch.records.push_back({lineno, at, std::move(record)});
  }
  return batch;
}

LoadReport load_batch(const ExtractionBatch& batch, Warehouse& warehouse, WatermarkStore& watermarks) {
  LoadReport report;
  report.rejected = batch.rejected;
  warehouse.write([&](Writer& w) {
    for (const auto& r : batch.records) {
      try {
        w.insert_json(batch.record_kind, r.record);
        ++report.inserted;
      } catch (const Error& e) {
        report.rejected.push_back({batch.source_id, r.line, e.what()});
      }
    }
  });
  watermarks.advance(batch.source_id, batch.extracted_through);
  return report;
}

std::vector<SourceSpec> load_registry(const std::filesystem::path& root) {
  auto path = root / "sources.jsonl";
  std::vector<SourceSpec> out;
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) fail(ErrorKind::parse, path.string() + ": malformed json");
    try {
      SourceSpec s;
      s.source_id = j.at("source_id").get<std::string>();
      s.path = j.at("path").get<std::string>();
      if (s.path.is_relative()) s.path = root / s.path;
      s.record_kind = parse_table_kind(j.at("record_kind").get<std::string>());
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      fail(ErrorKind::validation, path.string() + ": " + e.what());
    }
  }
  return out;
}

Summary run_etl(const std::vector<SourceSpec>& sources, Warehouse& warehouse, WatermarkStore& watermarks,
                const std::optional<std::string>& only_source) {
  std::lock_guard run_lock(watermarks.run_mutex());
  Summary summary;
  bool matched = false;
  for (const auto& source : sources) {
    if (only_source && source.source_id != *only_source) continue;
    matched = true;
    SourceResult result;
    result.source_id = source.source_id;
    try {
      auto batch = extract_deferred(source, watermarks.get(source.source_id));
      auto report = load_batch(batch, warehouse, watermarks);
      result.inserted = report.inserted;
      result.rejected = report.rejected.size();
      result.rejections = std::move(report.rejected);
    } catch (const Error& e) {
      result.ok = false;
      result.error = e.what();
    }
    summary.sources.push_back(std::move(result));
  }
  if (only_source && !matched) fail(ErrorKind::not_found, "unknown source: " + *only_source);
  return summary;
}

std::size_t Summary::total_inserted() const {
  std::size_t n = 0;
  for (const auto& s : sources) n += s.inserted;
  return n;
}

bool Summary::ok() const {
  return std::all_of(sources.begin(), sources.end(), [](const SourceResult& s) { return s.ok; });
}

json summary_json(const Summary& summary) {
  json sources = json::array();
  for (const auto& s : summary.sources) {
    json rejections = json::array();
    for (const auto& r : s.rejections) rejections.push_back({{"line", r.line}, {"reason", r.reason}});
    json item = {{"source_id", s.source_id}, {"ok", s.ok},         {"inserted", s.inserted},
                 {"rejected", s.rejected},   {"rejections", rejections}};
    if (!s.ok) item["error"] = s.error;
    sources.push_back(item);
  }
  return {{"sources", sources}, {"total_inserted", summary.total_inserted()}, {"ok", summary.ok()}};
}

}  // namespace qdss::etl
