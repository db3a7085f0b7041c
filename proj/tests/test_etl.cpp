#include "qdss/etl.hpp"
#include "qdss/seed.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qdss;
using namespace qdss::etl;

namespace {

std::string quake_line(const std::string& id, Timestamp at, const std::string& station = "ST-BMG-BNA") {
  QuakeEvent q{id, at, 5.2, 95.4, 6.1, 20, 15, 300, station, "ID-AC-BNA"};
  return json(q).dump();
}

Timestamp t(int day, int hour = 0) { return from_civil(2020, 3, static_cast<unsigned>(day), hour); }

void seed_dims(Warehouse& wh) {
  wh.write([](Writer& w) { seed::load(w, seed::reference_dimensions()); });
}

// Sort-and-filter oracle over the raw file.
std::vector<std::string> newer_than(const std::filesystem::path& path, Timestamp mark) {
  std::vector<std::pair<Timestamp, std::string>> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    auto j = json::parse(line);
    auto at = parse_rfc3339(j.at("occurred_at").get<std::string>());
    if (at > mark) rows.emplace_back(at, j.at("quake_id").get<std::string>());
  }
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> ids;
  for (auto& r : rows) ids.push_back(r.second);
  return ids;
}

std::vector<std::string> batch_ids(const ExtractionBatch& b) {
  std::vector<std::pair<Timestamp, std::string>> rows;
  for (const auto& r : b.records) rows.emplace_back(r.timestamp, r.record.at("quake_id").get<std::string>());
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> ids;
  for (auto& r : rows) ids.push_back(r.second);
  return ids;
}

}  // namespace

TEST(ExtractDeferred, BeginningOfTimeYieldsAll) {
  testkit::TempDir dir;
  auto path = dir / "q.jsonl";
  for (int i = 1; i <= 5; ++i) testkit::append_line(path, quake_line("Q" + std::to_string(i), t(i)));
  auto b = extract_deferred({"s", path, TableKind::quakes}, kBeginningOfTime);
  EXPECT_EQ(b.records.size(), 5u);
  EXPECT_EQ(b.extracted_through, t(5));
}

TEST(ExtractDeferred, WatermarkAtMaxYieldsEmpty) {
  testkit::TempDir dir;
  auto path = dir / "q.jsonl";
  for (int i = 1; i <= 5; ++i) testkit::append_line(path, quake_line("Q" + std::to_string(i), t(i)));
  auto b = extract_deferred({"s", path, TableKind::quakes}, t(5));
  EXPECT_TRUE(b.records.empty());
  EXPECT_EQ(b.extracted_through, t(5));
}

TEST(ExtractDeferred, WatermarkBetweenSecondAndThird) {
  testkit::TempDir dir;
  auto path = dir / "q.jsonl";
  // Written out of order on purpose.
  for (int i : {4, 1, 5, 3, 2}) testkit::append_line(path, quake_line("Q" + std::to_string(i), t(i)));
  Timestamp mark = t(2, 12);
  auto b = extract_deferred({"s", path, TableKind::quakes}, mark);
  EXPECT_EQ(batch_ids(b), newer_than(path, mark));
  EXPECT_EQ(batch_ids(b), (std::vector<std::string>{"Q3", "Q4", "Q5"}));
  for (const auto& r : b.records) {
    EXPECT_GT(r.timestamp, mark);
    EXPECT_LE(r.timestamp, b.extracted_through);
  }
}

TEST(ExtractDeferred, TieWithWatermarkExcluded) {
  testkit::TempDir dir;
  auto path = dir / "q.jsonl";
  testkit::append_line(path, quake_line("Q1", t(1)));
  testkit::append_line(path, quake_line("Q2", t(2)));
  EXPECT_EQ(batch_ids(extract_deferred({"s", path, TableKind::quakes}, t(2))), std::vector<std::string>{});
  EXPECT_EQ(batch_ids(extract_deferred({"s", path, TableKind::quakes}, Timestamp{t(2).seconds - 1})),
            std::vector<std::string>{"Q2"});
}

TEST(ExtractDeferred, MissingTimestampRejectedBatchContinues) {
  testkit::TempDir dir;
  auto path = dir / "q.jsonl";
  testkit::append_line(path, quake_line("Q1", t(1)));
  testkit::append_line(path, R"({"quake_id":"Q2","magnitude":5})");
  testkit::append_line(path, "{not json");
  testkit::append_line(path, quake_line("Q3", t(3)));
  auto b = extract_deferred({"s", path, TableKind::quakes}, kBeginningOfTime);
  EXPECT_EQ(b.records.size(), 2u);
  ASSERT_EQ(b.rejected.size(), 2u);
  EXPECT_EQ(b.rejected[0].line, 2u);
  EXPECT_EQ(b.rejected[1].line, 3u);
}

TEST(ExtractDeferred, UnreadableSourceIsIoError) {
  try {
    extract_deferred({"s", "/nonexistent/q.jsonl", TableKind::quakes}, kBeginningOfTime);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}

TEST(LoadBatch, EmptyBatchLeavesWatermark) {
  Warehouse wh;
  WatermarkStore marks;
  ExtractionBatch b;
  b.source_id = "s";
  b.extracted_through = kBeginningOfTime;
  auto r = load_batch(b, wh, marks);
  EXPECT_EQ(r.inserted, 0u);
  EXPECT_EQ(marks.get("s"), kBeginningOfTime);
}

TEST(LoadBatch, ThreeValidQuakes) {
  testkit::TempDir dir;
  auto path = dir / "q.jsonl";
  for (int i = 1; i <= 3; ++i) testkit::append_line(path, quake_line("Q" + std::to_string(i), t(i)));
  Warehouse wh;
  seed_dims(wh);
  WatermarkStore marks;
  auto r = load_batch(extract_deferred({"s", path, TableKind::quakes}, kBeginningOfTime), wh, marks);
  EXPECT_EQ(r.inserted, 3u);
  EXPECT_EQ(marks.get("s"), t(3));
}

TEST(LoadBatch, UnknownStationRejectedOthersInserted) {
  testkit::TempDir dir;
  auto path = dir / "q.jsonl";
  testkit::append_line(path, quake_line("Q1", t(1)));
  testkit::append_line(path, quake_line("Q2", t(2), "ST-NOWHERE"));
  Warehouse wh;
  seed_dims(wh);
  WatermarkStore marks;
  auto r = load_batch(extract_deferred({"s", path, TableKind::quakes}, kBeginningOfTime), wh, marks);
  EXPECT_EQ(r.inserted, 1u);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].line, 2u);
  EXPECT_EQ(wh.snapshot().find_quake("Q2"), nullptr);
}

TEST(LoadBatch, DimensionRecordsDropStagingColumn) {
  testkit::TempDir dir;
  auto path = dir / "p.jsonl";
  testkit::append_line(path, R"({"province_id":"ID-ZZ","name":"Z","centroid_lat":1,"centroid_lon":2,"updated_at":"2020-01-01T00:00:00Z"})");
  Warehouse wh;
  WatermarkStore marks;
  auto r = load_batch(extract_deferred({"p", path, TableKind::provinces}, kBeginningOfTime), wh, marks);
  EXPECT_EQ(r.inserted, 1u);
  EXPECT_FALSE(wh.snapshot().table_json(TableKind::provinces)[0].contains("updated_at"));
}

TEST(RunEtl, SecondRunInsertsNothing) {
  testkit::TempDir dir;
  auto path = dir / "q.jsonl";
  for (int i = 1; i <= 4; ++i) testkit::append_line(path, quake_line("Q" + std::to_string(i), t(i)));
  Warehouse wh;
  seed_dims(wh);
  WatermarkStore marks;
  std::vector<SourceSpec> sources{{"s", path, TableKind::quakes}};
  EXPECT_EQ(run_etl(sources, wh, marks).total_inserted(), 4u);
  EXPECT_EQ(run_etl(sources, wh, marks).total_inserted(), 0u);
  testkit::append_line(path, quake_line("Q5", t(5)));
  EXPECT_EQ(run_etl(sources, wh, marks).total_inserted(), 1u);
}

TEST(RunEtl, UnreadableSourceIsolated) {
  testkit::TempDir dir;
  auto path = dir / "q.jsonl";
  testkit::append_line(path, quake_line("Q1", t(1)));
  Warehouse wh;
  seed_dims(wh);
  WatermarkStore marks;
  auto summary =
      run_etl({{"gone", dir / "missing.jsonl", TableKind::quakes}, {"s", path, TableKind::quakes}}, wh, marks);
  EXPECT_FALSE(summary.ok());
  ASSERT_EQ(summary.sources.size(), 2u);
  EXPECT_FALSE(summary.sources[0].ok);
  EXPECT_TRUE(summary.sources[1].ok);
  EXPECT_EQ(summary.total_inserted(), 1u);
  EXPECT_EQ(summary_json(summary)["sources"][0]["ok"], false);
}

TEST(RunEtl, OnlySourceFilterAndUnknownSource) {
  testkit::TempDir dir;
  auto a = dir / "a.jsonl", b = dir / "b.jsonl";
  testkit::append_line(a, quake_line("QA", t(1)));
  testkit::append_line(b, quake_line("QB", t(1)));
  Warehouse wh;
  seed_dims(wh);
  WatermarkStore marks;
  std::vector<SourceSpec> sources{{"a", a, TableKind::quakes}, {"b", b, TableKind::quakes}};
  EXPECT_EQ(run_etl(sources, wh, marks, std::string("b")).total_inserted(), 1u);
  EXPECT_EQ(wh.snapshot().find_quake("QA"), nullptr);
  EXPECT_THROW(run_etl(sources, wh, marks, std::string("zzz")), Error);
}

TEST(Registry, RelativePathsAndPersistentWatermarks) {
  testkit::TempDir dir;
  testkit::write_file(dir / "sources.jsonl", R"({"source_id":"bmg","path":"staging/q.jsonl","record_kind":"quakes"})" "\n");
  testkit::append_line(dir / "staging/q.jsonl", quake_line("Q1", t(1)));
  auto sources = load_registry(dir.path());
  ASSERT_EQ(sources.size(), 1u);
  EXPECT_EQ(sources[0].path, dir / "staging/q.jsonl");
  {
    Warehouse wh(dir.path());
    seed_dims(wh);
    WatermarkStore marks(dir / "watermarks.jsonl");
    EXPECT_EQ(run_etl(sources, wh, marks).total_inserted(), 1u);
  }
  // A fresh process sees both the rows and the watermark.
  Warehouse wh(dir.path());
  WatermarkStore marks(dir / "watermarks.jsonl");
  EXPECT_EQ(marks.get("bmg"), t(1));
  EXPECT_EQ(run_etl(sources, wh, marks).total_inserted(), 0u);
  EXPECT_NE(wh.snapshot().find_quake("Q1"), nullptr);
}

TEST(Watermarks, NeverDecrease) {
  testkit::TempDir dir;
  WatermarkStore marks(dir / "w.jsonl");
  marks.advance("s", t(5));
  marks.advance("s", t(3));
  EXPECT_EQ(marks.get("s"), t(5));
  marks.advance("s", t(6));
  WatermarkStore reloaded(dir / "w.jsonl");
  EXPECT_EQ(reloaded.get("s"), t(6));
  EXPECT_EQ(reloaded.get("other"), kBeginningOfTime);
}

TEST(RunEtl, ExactlyOnceUnderRandomInterleavings) {
  std::mt19937_64 rng(2024);
  testkit::TempDir dir;
  auto a = dir / "a.jsonl", b = dir / "b.jsonl";
  Warehouse wh;
  seed_dims(wh);
  WatermarkStore marks;
  std::vector<SourceSpec> sources{{"a", a, TableKind::quakes}, {"b", b, TableKind::quakes}};
  std::size_t appended = 0, inserted = 0;
  std::int64_t clock = t(1).seconds;
  std::map<std::string, Timestamp> last;
  for (int step = 0; step < 300; ++step) {
    if (rng() % 2) {
      clock += 1 + static_cast<std::int64_t>(rng() % 3600);
      auto& path = rng() % 2 ? a : b;
      testkit::append_line(path, quake_line("Q" + std::to_string(appended++), Timestamp{clock}));
    } else {
      inserted += run_etl(sources, wh, marks).total_inserted();
      for (const auto& [src, mark] : marks.all()) {
        if (last.contains(src)) EXPECT_GE(mark, last[src]);
        last[src] = mark;
      }
    }
  }
  inserted += run_etl(sources, wh, marks).total_inserted();
  EXPECT_EQ(inserted, appended);
  EXPECT_EQ(wh.snapshot().row_count(TableKind::quakes), appended);
}
