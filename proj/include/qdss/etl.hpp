#pragma once

// Deferred extraction: each source is a JSONL file whose records carry a
// timestamp; a run extracts records strictly newer than the source's
// watermark, loads them record by record, then advances the watermark.

#include "qdss/warehouse.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace qdss::etl {

/// Records older than this are never produced, so it stands in for -infinity.
inline const Timestamp kBeginningOfTime = from_civil(1, 1, 1);

struct SourceSpec {
  std::string source_id;
  std::filesystem::path path;
  TableKind record_kind = TableKind::quakes;
};

/// Field holding the extraction timestamp for each record kind. Dimension
/// tables carry an `updated_at` staging column that is dropped on load.
std::string_view timestamp_field(TableKind kind);

struct SourceRecord {
  std::size_t line = 0;
  Timestamp timestamp;
  json record;
};

struct RejectedRecord {
  std::string source_id;
  std::size_t line = 0;
  std::string reason;
};

struct ExtractionBatch {
  std::string source_id;
  TableKind record_kind = TableKind::quakes;
  std::vector<SourceRecord> records;
  std::vector<RejectedRecord> rejected;
  Timestamp extracted_through;
};

struct LoadReport {
  std::size_t inserted = 0;
  std::vector<RejectedRecord> rejected;
};

/// Per-source high-water marks, persisted append-only to `watermarks.jsonl`.
/// A watermark never decreases.
class WatermarkStore {
public:
  WatermarkStore() = default;
  explicit WatermarkStore(std::filesystem::path file);

  Timestamp get(const std::string& source_id) const;
  void advance(const std::string& source_id, Timestamp to);
  std::map<std::string, Timestamp> all() const;

  /// Serialises whole ETL runs.
  std::mutex& run_mutex() { return run_mutex_; }

private:
  std::optional<std::filesystem::path> file_;
  mutable std::mutex mutex_;
  std::mutex run_mutex_;
  std::map<std::string, Timestamp> marks_;
};

ExtractionBatch extract_deferred(const SourceSpec& source, Timestamp watermark);

LoadReport load_batch(const ExtractionBatch& batch, Warehouse& warehouse, WatermarkStore& watermarks);

struct SourceResult {
  std::string source_id;
  bool ok = true;
  std::size_t inserted = 0;
  std::size_t rejected = 0;
  std::vector<RejectedRecord> rejections;
  std::string error;
};

struct Summary {
  std::vector<SourceResult> sources;
  std::size_t total_inserted() const;
  bool ok() const;
};

/// Registry file `<root>/sources.jsonl`: {source_id, path, record_kind}.
/// Relative paths resolve against `root`.
std::vector<SourceSpec> load_registry(const std::filesystem::path& root);

Summary run_etl(const std::vector<SourceSpec>& sources, Warehouse& warehouse, WatermarkStore& watermarks,
                const std::optional<std::string>& only_source = std::nullopt);

json summary_json(const Summary& summary);

}  // namespace qdss::etl
