#pragma once

// Operator-facing service: the domain operations behind both the HTTP API
// and the command line.

#include "qdss/escalation.hpp"
#include "qdss/feeds.hpp"
#include "qdss/olap.hpp"
#include "qdss/planner.hpp"
#include "qdss/warehouse.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace qdss {

inline constexpr const char* kVersion = "0.1.0";

enum class Permission { read, operate };

struct ApiSession {
  std::string token;
  Permission permission = Permission::read;
  std::string actor;

  bool can_operate() const { return permission == Permission::operate; }
};

struct GatewayConfig {
  int port = 8080;
  std::string host = "127.0.0.1";
  std::map<std::string, ApiSession> tokens;
  RiskThresholds thresholds;
};

/// `<root>/config.json` {port, tokens, thresholds}. A token maps either to a
/// permission name or to {"permission", "actor"}. QDSS_PORT overrides port.
GatewayConfig load_gateway_config(const std::filesystem::path& root);

class Service {
public:
  explicit Service(std::filesystem::path root, GatewayConfig config = {});

  const std::filesystem::path& root() const { return root_; }
  const GatewayConfig& config() const { return config_; }
  Warehouse& warehouse() { return warehouse_; }
  IncidentBook& incidents() { return incidents_; }

  /// Clock used to stamp audit entries; tests pin it.
  void set_clock(std::function<Timestamp()> clock) { clock_ = std::move(clock); }

  std::optional<ApiSession> authenticate(const std::string& token) const;

  /// Needs, prediction and affected set for an alert against current data.
  Plan plan_for(const Alert& alert, std::optional<int> k = std::nullopt) const;

  Incident ingest_alert(const Alert& alert, const std::string& actor);
  Incident assess(const std::string& incident_id, const std::string& actor);
  Incident approve_sos1(const std::string& incident_id, const std::string& actor);
  /// Body: {"origin", "medics_pledged", "pledge_id"?, "stage"?, "pledged_at"?}.
  Incident pledge(const std::string& incident_id, const json& body, const std::string& actor);
  Incident close_sos1(const std::string& incident_id, const std::string& actor);
  Incident approve_sos2(const std::string& incident_id, const std::string& actor);
  Incident declare_level(const std::string& incident_id, int level, const std::string& actor);
  Incident close(const std::string& incident_id, const std::string& actor);

  std::vector<QuakeEvent> quakes(const FactFilter& filter) const;
  std::string olap_report(const olap::Query& query, olap::Format format) const;

  /// Province capacities: capacities.jsonl, else the health feed's
  /// deployable counts, else none.
  std::vector<ProvinceCapacity> capacities() const;

private:
  std::int64_t affected_citizens(const Snapshot& snapshot, const std::set<std::string>& affected) const;
  std::int64_t available_medics(const Snapshot& snapshot, const std::set<std::string>& affected) const;

  std::filesystem::path root_;
  GatewayConfig config_;
  Warehouse warehouse_;
  IncidentBook incidents_;
  PlannerConfig planner_;
  std::function<Timestamp()> clock_ = &Timestamp::now;
};

/// HTTP front end over a Service.
class HttpServer {
public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket; port 0 picks a free port. Returns the bound port.
  /// A busy port is an io error.
  int bind(const std::string& host, int port);
  /// Serves until stop(); requires a prior bind().
  void run();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int http_status(ErrorKind kind);

}  // namespace qdss
