#pragma once

#include "qdss/gateway.hpp"
#include "qdss/seed.hpp"
#include "support.hpp"

#include <httplib.h>

#include <thread>

namespace qdss::testkit {

inline constexpr const char* kOperateToken = "op-secret";
inline constexpr const char* kReadToken = "ro-secret";

/// Seeded warehouse, demography and health feeds under `root`.
/// Banda Aceh + Aceh Besar (628981 people) lie within 100 km of (5.5, 95.3);
/// Aceh has 100 medics on the health feed, so the lack is 629 - 100 = 529.
inline void prepare_root(const std::filesystem::path& root) {
  auto dims = seed::reference_dimensions();
  {
    Warehouse wh(root);
    wh.write([&](Writer& w) {
      seed::load(w, dims);
      seed::load(w, seed::paper_quakes());
    });
  }
  DemographyFeed::write(root / "feeds" / "demography.jsonl", dims.regencies);
  std::string health;
  const std::map<std::string, std::pair<int, int>> registry = {
      {"ID-AC", {100, 40}}, {"ID-SU", {800, 60}}, {"ID-SB", {500, 30}}, {"ID-JK", {2000, 200}},
      {"ID-JB", {1500, 150}}, {"ID-JT", {900, 90}}, {"ID-YO", {300, 30}}, {"ID-SN", {200, 20}}};
  for (const auto& [p, rec] : registry)
    health += json{{"province_id", p}, {"medics", rec.first}, {"deployable", rec.second}}.dump() + "\n";
  write_file(root / "feeds" / "health.jsonl", health);
}

inline GatewayConfig scenario_config() {
  GatewayConfig c;
  c.tokens[kOperateToken] = ApiSession{kOperateToken, Permission::operate, "duty-officer"};
  c.tokens[kReadToken] = ApiSession{kReadToken, Permission::read, "viewer"};
  return c;
}

inline Alert aceh_alert(std::string id = "BMG-2026-0001") {
  return Alert{std::move(id), from_civil(2026, 1, 5, 1, 2, 3), 8.6, 5.5, 95.3, 25, 100, true};
}

/// Service plus HTTP server on an ephemeral port, served from a thread.
class LiveGateway {
public:
  explicit LiveGateway(const std::filesystem::path& root)
      : service_(root, scenario_config()), server_(service_) {
    service_.set_clock([this] { return Timestamp{from_civil(2026, 1, 5).seconds + ticks_++}; });
    port_ = server_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { server_.run(); });
  }
  ~LiveGateway() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  Service& service() { return service_; }
  int port() const { return port_; }

  httplib::Client client(const char* token = nullptr) const {
    httplib::Client c("127.0.0.1", port_);
    c.set_connection_timeout(5);
    c.set_read_timeout(10);
    if (token) c.set_default_headers({{"Authorization", std::string("Bearer ") + token}});
    return c;
  }

private:
  Service service_;
  HttpServer server_;
  std::atomic<std::int64_t> ticks_{0};
  int port_ = 0;
  std::thread thread_;
};

}  // namespace qdss::testkit
