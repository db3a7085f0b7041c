#include "qdss/escalation.hpp"

#include <algorithm>
#include <fstream>

namespace qdss {

namespace {

constexpr IncidentState kAllStates[] = {
    IncidentState::Received,       IncidentState::Assessed,   IncidentState::AwaitingSOS1Approval,
    IncidentState::SOS1Dispatched, IncidentState::SOS1Closed, IncidentState::AwaitingSOS2Approval,
    IncidentState::SOS2Dispatched, IncidentState::Resolved,   IncidentState::Closed};

void expect_state(const Incident& inc, std::initializer_list<IncidentState> allowed, std::string_view op) {
  if (std::find(allowed.begin(), allowed.end(), inc.state) != allowed.end()) return;
  fail(ErrorKind::state,
       std::string(op) + " not allowed in state " + std::string(to_string(inc.state)) + " for " + inc.incident_id);
}

void audit(Incident& inc, Timestamp at, std::string actor, std::string event, IncidentState from, json data) {
  inc.audit_log.push_back({at, std::move(actor), std::move(event), from, inc.state, std::move(data)});
}

void recompute_residual(Incident& inc) {
  std::int64_t lack = inc.needs ? inc.needs->medic_lack : 0;
  inc.residual_lack = std::max<std::int64_t>(0, lack - inc.pledged_total());
}

void dispatch_sos1(Incident& inc, const Approval& approval, std::vector<DispatchRequest> plan) {
  const auto from = inc.state;
  inc.sos1_plan = std::move(plan);
  inc.state = IncidentState::SOS1Dispatched;
  audit(inc, approval.at, approval.actor, "request_sos1", from, {{"approved_by", approval.actor}, {"plan", inc.sos1_plan}});
}

std::optional<double> optional_distance(const json& j) {
  auto it = j.find("distance_km");
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

std::string_view to_string(IncidentState s) {
  switch (s) {
    case IncidentState::Received: return "Received";
    case IncidentState::Assessed: return "Assessed";
    case IncidentState::AwaitingSOS1Approval: return "AwaitingSOS1Approval";
    case IncidentState::SOS1Dispatched: return "SOS1Dispatched";
    case IncidentState::SOS1Closed: return "SOS1Closed";
    case IncidentState::AwaitingSOS2Approval: return "AwaitingSOS2Approval";
    case IncidentState::SOS2Dispatched: return "SOS2Dispatched";
    case IncidentState::Resolved: return "Resolved";
    case IncidentState::Closed: return "Closed";
  }
  return "";
}

IncidentState parse_incident_state(std::string_view text) {
  for (auto s : kAllStates)
    if (to_string(s) == text) return s;
  fail(ErrorKind::validation, "unknown incident state: " + std::string(text), "state");
}

std::int64_t Incident::pledged_total() const {
  std::int64_t total = 0;
  for (const auto& p : pledges) total += p.medics_pledged;
  return total;
}

std::string incident_id_for(const std::string& alert_id) { return "INC-" + alert_id; }

Incident open_incident(const Alert& alert, const std::string& actor, Timestamp at) {
  validate(alert);
  if (alert.alert_id.find_first_of("/\\") != std::string::npos || alert.alert_id.starts_with("."))
    fail(ErrorKind::validation, "alert_id contains path characters: " + alert.alert_id, "alert_id");
  Incident inc;
  inc.incident_id = incident_id_for(alert.alert_id);
  inc.alert_id = alert.alert_id;
  inc.alert = alert;
  inc.state = IncidentState::Received;
  audit(inc, at, actor, "open", IncidentState::Received, {{"alert", alert}});
  return inc;
}

void assess(Incident& inc, const NeedsEstimate& needs, const std::optional<ImpactPrediction>& prediction,
            const std::string& actor, Timestamp at) {
  expect_state(inc, {IncidentState::Received}, "assess");
  const auto from = inc.state;
  inc.needs = needs;
  inc.prediction = prediction;
  recompute_residual(inc);
  inc.state = inc.residual_lack > 0 ? IncidentState::Assessed : IncidentState::Resolved;
  audit(inc, at, actor, "assess", from,
        {{"needs", needs}, {"prediction", prediction ? json(*prediction) : json(nullptr)}});
}

std::vector<DispatchRequest> plan_sos1(std::int64_t residual, LatLon epicenter,
                                       std::span<const ProvinceCapacity> capacities,
                                       const std::map<std::string, LatLon>& centroids) {
  std::vector<std::pair<double, const ProvinceCapacity*>> ranked;
  for (const auto& c : capacities) {
    require(c.medics_deployable >= 0, "medics_deployable", "must be >= 0");
    auto it = centroids.find(c.province_id);
    if (it == centroids.end()) fail(ErrorKind::referential, "no centroid for province: " + c.province_id, "province_id");
    ranked.emplace_back(geo_distance(epicenter, it->second), &c);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first, a.second->province_id) < std::tie(b.first, b.second->province_id);
  });

  std::vector<DispatchRequest> plan;
  std::int64_t remaining = residual;
  for (const auto& [distance, cap] : ranked) {
    if (remaining <= 0) break;
    std::int64_t ask = std::min(cap->medics_deployable, remaining);
    if (ask <= 0) continue;
    plan.push_back({cap->province_id, ask, distance});
    remaining -= ask;
  }
  if (remaining > 0) plan.push_back({kNationalOrigin, remaining, std::nullopt});
  return plan;
}

const std::vector<DispatchRequest>& request_sos1(Incident& inc, const std::optional<Approval>& approval,
                                                 std::span<const ProvinceCapacity> capacities,
                                                 const std::map<std::string, LatLon>& centroids, Timestamp at) {
  expect_state(inc, {IncidentState::Assessed}, "request_sos1");
  if (inc.residual_lack <= 0)
    fail(ErrorKind::validation, "SOS1 requires a residual medic lack > 0", "residual_lack");
  if (!approval || approval->actor.empty())
    fail(ErrorKind::approval_required, "SOS1 requires operator approval for " + inc.incident_id);
  Approval a = *approval;
  a.at = at;
  dispatch_sos1(inc, a, plan_sos1(inc.residual_lack, inc.alert.epicenter(), capacities, centroids));
  return inc.sos1_plan;
}

void record_pledge(Incident& inc, const Pledge& pledge, const std::set<std::string>& province_ids,
                   const std::string& actor) {
  expect_state(inc, {IncidentState::SOS1Dispatched, IncidentState::SOS2Dispatched}, "record_pledge");
  require(!pledge.pledge_id.empty(), "pledge_id", "must be non-empty");
  require(pledge.incident_id == inc.incident_id, "incident_id", "pledge belongs to another incident");
  require(pledge.medics_pledged >= 0, "medics_pledged", "must be >= 0");
  require(!pledge.origin.empty(), "origin", "must be non-empty");
  const int active_stage = inc.state == IncidentState::SOS1Dispatched ? 1 : 2;
  require(pledge.stage == active_stage, "stage",
          "pledge for stage " + std::to_string(pledge.stage) + " while stage " + std::to_string(active_stage) + " is open");
  const bool domestic = pledge.origin == kNationalOrigin || province_ids.contains(pledge.origin);
  if (active_stage == 1)
    require(domestic, "origin", "stage-1 pledges come from provinces or national resources, got " + pledge.origin);
  else
    require(!domestic, "origin", "stage-2 pledges come from international origins, got " + pledge.origin);
  for (const auto& p : inc.pledges)
    if (p.pledge_id == pledge.pledge_id) fail(ErrorKind::duplicate, "duplicate pledge_id: " + pledge.pledge_id, "pledge_id");

  const auto from = inc.state;
  inc.pledges.push_back(pledge);
  recompute_residual(inc);
  if (inc.residual_lack == 0) inc.state = IncidentState::Resolved;
  audit(inc, pledge.pledged_at, actor, "pledge", from, pledge);
}

void close_sos1(Incident& inc, const std::string& actor, Timestamp at) {
  expect_state(inc, {IncidentState::SOS1Dispatched}, "close_sos1");
  const auto from = inc.state;
  inc.state = inc.residual_lack > 0 ? IncidentState::AwaitingSOS2Approval : IncidentState::Resolved;
  audit(inc, at, actor, "close_sos1", from,
        {{"via", to_string(IncidentState::SOS1Closed)}, {"residual_lack", inc.residual_lack}});
}

void request_sos2(Incident& inc, const std::optional<Approval>& approval, Timestamp at) {
  expect_state(inc, {IncidentState::AwaitingSOS2Approval}, "request_sos2");
  if (!approval || approval->actor.empty())
    fail(ErrorKind::approval_required, "SOS2 requires operator approval for " + inc.incident_id);
  const auto from = inc.state;
  inc.state = IncidentState::SOS2Dispatched;
  audit(inc, at, approval->actor, "request_sos2", from, {{"approved_by", approval->actor}});
}

void declare_level(Incident& inc, int level, const std::string& actor, Timestamp at) {
  if (inc.state == IncidentState::Closed) fail(ErrorKind::state, "incident is closed: " + inc.incident_id);
  require(level >= 1 && level <= 4, "level", "must lie in 1..4");
  inc.declared_level = level;
  audit(inc, at, actor, "declare_level", inc.state, {{"level", level}});
}

void close_incident(Incident& inc, const std::string& actor, Timestamp at) {
  expect_state(inc, {IncidentState::Resolved}, "close");
  const auto from = inc.state;
  inc.state = IncidentState::Closed;
  audit(inc, at, actor, "close", from, json::object());
}

Incident replay(std::span<const AuditEntry> log) {
  if (log.empty() || log.front().event != "open") fail(ErrorKind::validation, "audit log must start with open");
  Incident inc;
  for (const auto& e : log) {
    try {
      if (e.event == "open") {
        if (!inc.incident_id.empty()) fail(ErrorKind::validation, "second open in audit log");
        inc = open_incident(e.data.at("alert").get<Alert>(), e.actor, e.at);
      } else if (e.event == "assess") {
        std::optional<ImpactPrediction> prediction;
        if (!e.data.at("prediction").is_null()) prediction = e.data.at("prediction").get<ImpactPrediction>();
        assess(inc, e.data.at("needs").get<NeedsEstimate>(), prediction, e.actor, e.at);
      } else if (e.event == "request_sos1") {
        expect_state(inc, {IncidentState::Assessed}, "request_sos1");
        std::vector<DispatchRequest> plan;
        for (const auto& d : e.data.at("plan"))
          plan.push_back({d.at("origin").get<std::string>(), d.at("medics_requested").get<std::int64_t>(),
                          optional_distance(d)});
        dispatch_sos1(inc, {e.data.at("approved_by").get<std::string>(), e.at}, std::move(plan));
      } else if (e.event == "pledge") {
        Pledge p;
        p.pledge_id = e.data.at("pledge_id").get<std::string>();
        p.incident_id = e.data.at("incident_id").get<std::string>();
        p.origin = e.data.at("origin").get<std::string>();
        p.medics_pledged = e.data.at("medics_pledged").get<std::int64_t>();
        p.stage = e.data.at("stage").get<int>();
        p.pledged_at = e.data.at("pledged_at").get<Timestamp>();
        std::set<std::string> domestic;
        if (p.stage == 1) domestic.insert(p.origin);
        record_pledge(inc, p, domestic, e.actor);
      } else if (e.event == "close_sos1") {
        close_sos1(inc, e.actor, e.at);
      } else if (e.event == "request_sos2") {
        request_sos2(inc, Approval{e.data.at("approved_by").get<std::string>(), e.at}, e.at);
      } else if (e.event == "declare_level") {
        declare_level(inc, e.data.at("level").get<int>(), e.actor, e.at);
      } else if (e.event == "close") {
        close_incident(inc, e.actor, e.at);
      } else {
        fail(ErrorKind::validation, "unknown audit event: " + e.event);
      }
    } catch (const json::exception& ex) {
      fail(ErrorKind::validation, "malformed audit entry " + e.event + ": " + ex.what());
    }
    if (inc.state != e.to)
      fail(ErrorKind::validation, "audit replay diverged at " + e.event + ": expected " + std::string(to_string(e.to)) +
                                      ", got " + std::string(to_string(inc.state)));
  }
  return inc;
}

// ---- json ----------------------------------------------------------------

void to_json(json& j, const Pledge& p) {
  j = {{"pledge_id", p.pledge_id},           {"incident_id", p.incident_id}, {"origin", p.origin},
       {"medics_pledged", p.medics_pledged}, {"stage", p.stage},             {"pledged_at", p.pledged_at}};
}

void to_json(json& j, const DispatchRequest& d) {
  j = {{"origin", d.origin},
       {"medics_requested", d.medics_requested},
       {"distance_km", d.distance_km ? json(*d.distance_km) : json(nullptr)}};
}

void to_json(json& j, const AuditEntry& e) {
  j = {{"at", e.at},
       {"actor", e.actor},
       {"event", e.event},
       {"from", to_string(e.from)},
       {"to", to_string(e.to)},
       {"data", e.data}};
}

void from_json(const json& j, AuditEntry& e) {
  e.at = j.at("at").get<Timestamp>();
  e.actor = j.at("actor").get<std::string>();
  e.event = j.at("event").get<std::string>();
  e.from = parse_incident_state(j.at("from").get<std::string>());
  e.to = parse_incident_state(j.at("to").get<std::string>());
  e.data = j.at("data");
}

json incident_json(const Incident& inc) {
  json j = {{"incident_id", inc.incident_id},
            {"alert_id", inc.alert_id},
            {"alert", inc.alert},
            {"state", to_string(inc.state)},
            {"residual_lack", inc.residual_lack},
            {"pledges", inc.pledges},
            {"sos1_plan", inc.sos1_plan},
            {"audit_log", inc.audit_log}};
  j["needs"] = inc.needs ? json(*inc.needs) : json(nullptr);
  j["prediction"] = inc.prediction ? json(*inc.prediction) : json(nullptr);
  j["declared_level"] = inc.declared_level ? json(*inc.declared_level) : json(nullptr);
  return j;
}

// ---- book ----------------------------------------------------------------

IncidentBook::IncidentBook(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(*dir_, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir_->string());
  for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
    const auto name = entry.path().filename().string();
    if (!name.ends_with(".log.jsonl")) continue;
    std::ifstream in(entry.path());
    if (!in) fail(ErrorKind::io, "cannot read " + entry.path().string());
    std::vector<AuditEntry> log;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) fail(ErrorKind::parse, entry.path().string() + ": malformed json");
      log.push_back(j.get<AuditEntry>());
    }
    if (log.empty()) continue;
    auto slot = std::make_shared<Slot>();
    slot->incident = replay(log);
    incidents_.emplace(slot->incident.incident_id, std::move(slot));
  }
}

Incident IncidentBook::open(const Alert& alert, const std::string& actor, Timestamp at) {
  Incident inc = open_incident(alert, actor, at);
  std::lock_guard lock(mutex_);
  if (incidents_.contains(inc.incident_id)) fail(ErrorKind::duplicate, "duplicate alert_id: " + alert.alert_id, "alert_id");
  persist(0, inc);
  auto slot = std::make_shared<Slot>();
  slot->incident = inc;
  incidents_.emplace(inc.incident_id, std::move(slot));
  return inc;
}

Incident IncidentBook::get(const std::string& incident_id) const {
  auto slot = find_slot(incident_id);
  std::lock_guard lock(slot->mutex);
  return slot->incident;
}

std::vector<Incident> IncidentBook::list() const {
  std::vector<std::shared_ptr<Slot>> slots;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [_, s] : incidents_) slots.push_back(s);
  }
  std::vector<Incident> out;
  for (const auto& s : slots) {
    std::lock_guard lock(s->mutex);
    out.push_back(s->incident);
  }
  return out;
}

std::shared_ptr<IncidentBook::Slot> IncidentBook::find_slot(const std::string& incident_id) const {
  std::lock_guard lock(mutex_);
  auto it = incidents_.find(incident_id);
  if (it == incidents_.end()) fail(ErrorKind::not_found, "unknown incident: " + incident_id);
  return it->second;
}

void IncidentBook::persist(std::size_t already_written, const Incident& inc) const {
  if (!dir_ || already_written >= inc.audit_log.size()) return;
  auto path = *dir_ / (inc.incident_id + ".log.jsonl");
  std::ofstream out(path, std::ios::app);
  if (!out) fail(ErrorKind::io, "cannot append to " + path.string());
  for (std::size_t i = already_written; i < inc.audit_log.size(); ++i) out << json(inc.audit_log[i]).dump() << '\n';
  out.flush();
  if (!out) fail(ErrorKind::io, "write failed: " + path.string());
}

}  // namespace qdss
