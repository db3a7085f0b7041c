#pragma once

// Incident lifecycle for the two-stage SOS protocol.
//
//   Received --assess--> Assessed (lack > 0) | Resolved (lack = 0)
//   Assessed --request_sos1 + approval--> SOS1Dispatched
//   SOS1Dispatched --pledge--> (residual 0) Resolved
//   SOS1Dispatched --close_sos1--> SOS1Closed --> AwaitingSOS2Approval | Resolved
//   AwaitingSOS2Approval --request_sos2 + approval--> SOS2Dispatched
//   SOS2Dispatched --pledge--> (residual 0) Resolved
//   Resolved --close--> Closed
//
// Assessed with a residual lack is the state awaiting SOS1 approval;
// AwaitingSOS1Approval is kept only for wire compatibility.

#include "qdss/feeds.hpp"
#include "qdss/planner.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace qdss {

enum class IncidentState {
  Received,
  Assessed,
  AwaitingSOS1Approval,
  SOS1Dispatched,
  SOS1Closed,
  AwaitingSOS2Approval,
  SOS2Dispatched,
  Resolved,
  Closed,
};

std::string_view to_string(IncidentState s);
IncidentState parse_incident_state(std::string_view text);

inline constexpr const char* kNationalOrigin = "national";

struct ProvinceCapacity {
  std::string province_id;
  std::int64_t medics_deployable = 0;
};

struct Pledge {
  std::string pledge_id;
  std::string incident_id;
  std::string origin;
  std::int64_t medics_pledged = 0;
  int stage = 1;
  Timestamp pledged_at;
  friend bool operator==(const Pledge&, const Pledge&) = default;
};

struct DispatchRequest {
  std::string origin;
  std::int64_t medics_requested = 0;
  std::optional<double> distance_km;  // unset for the national origin
  friend bool operator==(const DispatchRequest&, const DispatchRequest&) = default;
};

struct Approval {
  std::string actor;
  Timestamp at;
};

struct AuditEntry {
  Timestamp at;
  std::string actor;
  std::string event;
  IncidentState from = IncidentState::Received;
  IncidentState to = IncidentState::Received;
  json data;
};

struct Incident {
  std::string incident_id;
  std::string alert_id;
  Alert alert;
  IncidentState state = IncidentState::Received;
  std::optional<NeedsEstimate> needs;
  std::optional<ImpactPrediction> prediction;
  std::optional<int> declared_level;
  std::vector<Pledge> pledges;
  std::int64_t residual_lack = 0;
  std::vector<DispatchRequest> sos1_plan;
  std::vector<AuditEntry> audit_log;

  std::int64_t pledged_total() const;
};

std::string incident_id_for(const std::string& alert_id);

Incident open_incident(const Alert& alert, const std::string& actor, Timestamp at);

/// Attaches the plan; Resolved when there is no medic lack, else Assessed.
void assess(Incident& incident, const NeedsEstimate& needs, const std::optional<ImpactPrediction>& prediction,
            const std::string& actor, Timestamp at);

/// Nearest-first SOS1 plan: each province in ascending centroid distance from
/// the epicenter (ties by id) is asked for min(deployable, remaining), and
/// the national pool takes whatever remains.
std::vector<DispatchRequest> plan_sos1(std::int64_t residual, LatLon epicenter,
                                       std::span<const ProvinceCapacity> capacities,
                                       const std::map<std::string, LatLon>& centroids);

const std::vector<DispatchRequest>& request_sos1(Incident& incident, const std::optional<Approval>& approval,
                                                 std::span<const ProvinceCapacity> capacities,
                                                 const std::map<std::string, LatLon>& centroids, Timestamp at);

/// Stage-1 origins are provinces in `province_ids` or "national"; stage-2
/// origins are anything else (international institutions).
void record_pledge(Incident& incident, const Pledge& pledge, const std::set<std::string>& province_ids,
                   const std::string& actor);

void close_sos1(Incident& incident, const std::string& actor, Timestamp at);
void request_sos2(Incident& incident, const std::optional<Approval>& approval, Timestamp at);
void declare_level(Incident& incident, int level, const std::string& actor, Timestamp at);
void close_incident(Incident& incident, const std::string& actor, Timestamp at);

/// Rebuilds an incident by re-applying its audit log.
Incident replay(std::span<const AuditEntry> log);

void to_json(json& j, const Pledge& p);
void to_json(json& j, const DispatchRequest& d);
void to_json(json& j, const AuditEntry& e);
void from_json(const json& j, AuditEntry& e);
json incident_json(const Incident& incident);

/// Registry of live incidents. Operations on one incident are serialised;
/// new audit entries are appended to `<root>/incidents/<id>.log.jsonl`.
class IncidentBook {
public:
  IncidentBook() = default;
  explicit IncidentBook(std::filesystem::path dir);

  Incident open(const Alert& alert, const std::string& actor, Timestamp at);
  Incident get(const std::string& incident_id) const;
  std::vector<Incident> list() const;

  /// Applies `fn` to a copy of the incident and commits it if `fn` returns.
  template <typename Fn>
  Incident mutate(const std::string& incident_id, Fn&& fn) {
    auto slot = find_slot(incident_id);
    std::lock_guard lock(slot->mutex);
    Incident next = slot->incident;
    fn(next);
    persist(slot->incident.audit_log.size(), next);
    slot->incident = next;
    return next;
  }

private:
  struct Slot {
    std::mutex mutex;
    Incident incident;
  };

  std::shared_ptr<Slot> find_slot(const std::string& incident_id) const;
  void persist(std::size_t already_written, const Incident& incident) const;

  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Slot>> incidents_;
};

}  // namespace qdss
