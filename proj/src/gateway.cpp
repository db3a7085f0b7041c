#include "qdss/gateway.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>

namespace qdss {

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::parse, path.string() + ": malformed json");
  return j;
}

Permission parse_permission(const std::string& text) {
  if (text == "read") return Permission::read;
  if (text == "operate") return Permission::operate;
  fail(ErrorKind::validation, "unknown permission: " + text, "permission");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

double parse_number(const std::string& text, std::string_view field) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::validation, "not a number: " + text, std::string(field));
}

}  // namespace

GatewayConfig load_gateway_config(const std::filesystem::path& root) {
  GatewayConfig cfg;
  auto path = root / "config.json";
  if (std::filesystem::exists(path)) {
    json j = read_json_file(path);
    try {
      cfg.port = j.value("port", cfg.port);
      cfg.host = j.value("host", cfg.host);
      if (auto it = j.find("tokens"); it != j.end()) {
        for (const auto& [token, value] : it->items()) {
          ApiSession s;
          s.token = token;
          if (value.is_string()) {
            s.permission = parse_permission(value.get<std::string>());
          } else {
            s.permission = parse_permission(value.at("permission").get<std::string>());
            s.actor = value.value("actor", "");
          }
          if (s.actor.empty()) s.actor = "token:" + token.substr(0, 4);
          cfg.tokens[token] = s;
        }
      }
      if (auto it = j.find("thresholds"); it != j.end()) {
        cfg.thresholds.high_risk_magnitude = it->value("high_risk_magnitude", cfg.thresholds.high_risk_magnitude);
        cfg.thresholds.high_risk_population =
            it->value("high_risk_population", cfg.thresholds.high_risk_population);
      }
    } catch (const json::exception& e) {
      fail(ErrorKind::validation, path.string() + ": " + e.what());
    }
  }
  if (const char* env = std::getenv("QDSS_PORT"); env && *env)
    cfg.port = static_cast<int>(parse_number(env, "QDSS_PORT"));
  require(cfg.port >= 0 && cfg.port <= 65535, "port", "must lie in [0, 65535]");
  return cfg;
}

Service::Service(std::filesystem::path root, GatewayConfig config)
    : root_(std::move(root)),
      config_(std::move(config)),
      warehouse_(root_),
      incidents_(root_ / "incidents"),
      planner_(load_planner_config(root_)) {}

std::optional<ApiSession> Service::authenticate(const std::string& token) const {
  auto it = config_.tokens.find(token);
  if (it == config_.tokens.end()) return std::nullopt;
  return it->second;
}

std::int64_t Service::affected_citizens(const Snapshot& snapshot, const std::set<std::string>& affected) const {
  auto path = root_ / "feeds" / "demography.jsonl";
  if (!std::filesystem::exists(path)) return snapshot.affected_population(affected);
  auto feed = DemographyFeed::load(path);
  std::int64_t total = 0;
  for (const auto& id : affected) {
    auto it = feed.entries().find(id);
    total += it != feed.entries().end() ? it->second : snapshot.regency(id).population;
  }
  return total;
}

std::int64_t Service::available_medics(const Snapshot& snapshot, const std::set<std::string>& affected) const {
  auto path = root_ / "feeds" / "health.jsonl";
  if (!std::filesystem::exists(path)) return snapshot.available_medics(affected);
  auto feed = HealthFeed::load(path);
  std::set<std::string> provinces;
  for (const auto& id : affected) provinces.insert(snapshot.regency(id).province_id);
  std::int64_t total = 0;
  for (const auto& p : provinces) {
    auto it = feed.entries().find(p);
    if (it != feed.entries().end()) total += it->second.medics;
  }
  return total;
}

std::vector<ProvinceCapacity> Service::capacities() const {
  std::vector<ProvinceCapacity> out;
  auto path = root_ / "capacities.jsonl";
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot read " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) fail(ErrorKind::parse, path.string() + ":" + std::to_string(lineno) + ": malformed json");
      try {
        out.push_back({j.at("province_id").get<std::string>(), j.at("medics_deployable").get<std::int64_t>()});
      } catch (const json::exception& e) {
        fail(ErrorKind::parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return out;
  }
  auto health = root_ / "feeds" / "health.jsonl";
  if (std::filesystem::exists(health)) {
    auto feed = HealthFeed::load(health);
    for (const auto& [province, rec] : feed.entries()) out.push_back({province, rec.deployable});
  }
  return out;
}

Plan Service::plan_for(const Alert& alert, std::optional<int> k) const {
  validate(alert);
  auto snapshot = warehouse_.snapshot();
  auto affected = affected_regencies(alert.epicenter(), alert.radius_km, snapshot.regencies());
  PlannerConfig cfg = planner_;
  if (k) cfg.k = *k;
  cfg.validate();
  PlanRequest request{alert.epicenter(), alert.radius_km, alert.magnitude, alert.depth_km};
  return make_plan(request, affected, affected_citizens(snapshot, affected), available_medics(snapshot, affected),
                   snapshot, cfg);
}

Incident Service::ingest_alert(const Alert& alert, const std::string& actor) {
  return incidents_.open(alert, actor, clock_());
}

Incident Service::assess(const std::string& id, const std::string& actor) {
  auto current = incidents_.get(id);
  if (current.state != IncidentState::Received)
    fail(ErrorKind::state, "assess not allowed in state " + std::string(to_string(current.state)) + " for " + id);
  auto plan = plan_for(current.alert);
  return incidents_.mutate(id, [&](Incident& inc) { qdss::assess(inc, plan.needs, plan.prediction, actor, clock_()); });
}

Incident Service::approve_sos1(const std::string& id, const std::string& actor) {
  auto caps = capacities();
  std::map<std::string, LatLon> centroids;
  for (const auto& p : warehouse_.snapshot().provinces()) centroids[p.province_id] = {p.centroid_lat, p.centroid_lon};
  return incidents_.mutate(id, [&](Incident& inc) {
    auto now = clock_();
    request_sos1(inc, Approval{actor, now}, caps, centroids, now);
  });
}

Incident Service::pledge(const std::string& id, const json& body, const std::string& actor) {
  if (!body.is_object()) fail(ErrorKind::validation, "pledge body must be a json object");
  std::set<std::string> provinces;
  for (const auto& p : warehouse_.snapshot().provinces()) provinces.insert(p.province_id);
  for (const auto& c : capacities()) provinces.insert(c.province_id);
  return incidents_.mutate(id, [&](Incident& inc) {
    Pledge p;
    p.incident_id = inc.incident_id;
    try {
      p.origin = body.at("origin").get<std::string>();
      p.medics_pledged = body.at("medics_pledged").get<std::int64_t>();
      p.pledge_id = body.value("pledge_id", inc.incident_id + "-P" + std::to_string(inc.pledges.size() + 1));
      p.stage = body.value("stage", inc.state == IncidentState::SOS2Dispatched ? 2 : 1);
      p.pledged_at = body.contains("pledged_at") ? parse_rfc3339(body.at("pledged_at").get<std::string>()) : clock_();
    } catch (const json::exception& e) {
      fail(ErrorKind::validation, std::string("pledge: ") + e.what());
    }
    record_pledge(inc, p, provinces, actor);
  });
}

Incident Service::close_sos1(const std::string& id, const std::string& actor) {
  return incidents_.mutate(id, [&](Incident& inc) { qdss::close_sos1(inc, actor, clock_()); });
}

Incident Service::approve_sos2(const std::string& id, const std::string& actor) {
  return incidents_.mutate(id, [&](Incident& inc) {
    auto now = clock_();
    request_sos2(inc, Approval{actor, now}, now);
  });
}

Incident Service::declare_level(const std::string& id, int level, const std::string& actor) {
  return incidents_.mutate(id, [&](Incident& inc) { qdss::declare_level(inc, level, actor, clock_()); });
}

Incident Service::close(const std::string& id, const std::string& actor) {
  return incidents_.mutate(id, [&](Incident& inc) { close_incident(inc, actor, clock_()); });
}

std::vector<QuakeEvent> Service::quakes(const FactFilter& filter) const {
  return warehouse_.snapshot().query_facts(filter);
}

std::string Service::olap_report(const olap::Query& query, olap::Format format) const {
  return olap::render_report(olap::run_query(warehouse_.snapshot(), query), format);
}

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::parse:
    case ErrorKind::referential: return 400;
    case ErrorKind::permission: return 403;
    case ErrorKind::not_found: return 404;
    case ErrorKind::duplicate:
    case ErrorKind::state:
    case ErrorKind::approval_required: return 409;
    case ErrorKind::no_history: return 422;
    case ErrorKind::io: return 500;
  }
  return 500;
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::mutex lifecycle;
  bool started = false;
  bool cancelled = false;

  explicit Impl(Service& s) : service(s) {
    // The library default is SO_REUSEPORT, which lets a second server share
    // the port silently; a busy port must fail instead.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
  }

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump() + "\n", "application/json");
  }

  static void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
    send_json(res, status, {{"error", kind}, {"message", message}});
  }

  /// Resolves the caller; an unknown token is rejected outright.
  std::optional<ApiSession> session(const httplib::Request& req) const {
    std::string token;
    auto auth = req.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) token = auth.substr(7);
    if (token.empty()) token = req.get_header_value("X-Api-Token");
    if (token.empty()) return ApiSession{};
    auto s = service.authenticate(token);
    if (!s) fail(ErrorKind::permission, "unknown token");
    return s;
  }

  template <typename Fn>
  auto guarded(bool mutating, Fn fn) {
    return [this, mutating, fn](const httplib::Request& req, httplib::Response& res) {
      try {
        std::optional<ApiSession> who;
        try {
          who = session(req);
        } catch (const Error&) {
          return send_error(res, 401, "unauthenticated", "unknown token");
        }
        if (mutating && !who->can_operate())
          return send_error(res, 403, "permission", "operate permission required");
        fn(req, res, *who);
      } catch (const Error& e) {
        send_error(res, http_status(e.kind()), to_string(e.kind()), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  static json body_json(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) fail(ErrorKind::parse, "request body is not valid json");
    return j;
  }

  static std::vector<std::string> params(const httplib::Request& req, const char* key) {
    std::vector<std::string> out;
    for (std::size_t i = 0, n = req.get_param_value_count(key); i < n; ++i)
      for (auto& v : split(req.get_param_value(key, i), ',')) out.push_back(v);
    return out;
  }

  static std::optional<std::string> param(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
  }

  void routes() {
    server.Get("/health", guarded(false, [](const auto&, auto& res, const ApiSession&) {
      send_json(res, 200, {{"status", "ok"}, {"version", kVersion}});
    }));

    server.Get("/quakes", guarded(false, [this](const httplib::Request& req, auto& res, const ApiSession&) {
      FactFilter f;
      if (auto y = param(req, "year")) f = FactFilter::year(static_cast<int>(parse_number(*y, "year")));
      if (auto v = param(req, "from")) f.start = parse_rfc3339(*v);
      if (auto v = param(req, "to")) f.end = parse_rfc3339(*v);
      if (auto ids = params(req, "regency"); !ids.empty()) f.regency_ids = std::set<std::string>(ids.begin(), ids.end());
      if (auto v = param(req, "min_magnitude")) f.min_magnitude = parse_number(*v, "min_magnitude");
      if (auto v = param(req, "max_magnitude")) f.max_magnitude = parse_number(*v, "max_magnitude");
      send_json(res, 200, service.quakes(f));
    }));

    server.Get("/reports/olap", guarded(false, [this](const httplib::Request& req, auto& res, const ApiSession&) {
      olap::Query q;
      q.measures = params(req, "measure");
      q.by = params(req, "by");
      q.slices = params(req, "slice");
      q.dices = params(req, "dice");
      q.rollups = params(req, "rollup");
      q.drilldowns = params(req, "drilldown");
      auto format = olap::parse_format(param(req, "format").value_or("json"));
      auto body = service.olap_report(q, format);
      res.status = 200;
      res.set_content(body, format == olap::Format::json ? "application/json"
                            : format == olap::Format::csv ? "text/csv"
                                                          : "text/plain");
    }));

    server.Get("/incidents", guarded(false, [this](const auto&, auto& res, const ApiSession&) {
      json out = json::array();
      for (const auto& inc : service.incidents().list()) out.push_back(incident_json(inc));
      send_json(res, 200, out);
    }));

    server.Get(R"(/incidents/([^/]+))", guarded(false, [this](const httplib::Request& req, auto& res, const ApiSession&) {
      send_json(res, 200, incident_json(service.incidents().get(req.matches[1])));
    }));

    server.Post("/alerts", guarded(true, [this](const httplib::Request& req, auto& res, const ApiSession& who) {
      auto alert = parse_alert(req.body);
      send_json(res, 201, incident_json(service.ingest_alert(alert, who.actor)));
    }));

    server.Post(R"(/incidents/([^/]+)/([a-z0-9-]+))",
                guarded(true, [this](const httplib::Request& req, auto& res, const ApiSession& who) {
                  const std::string id = req.matches[1];
                  const std::string op = req.matches[2];
                  Incident inc;
                  if (op == "assess") inc = service.assess(id, who.actor);
                  else if (op == "approve-sos1") inc = service.approve_sos1(id, who.actor);
                  else if (op == "pledge") inc = service.pledge(id, body_json(req), who.actor);
                  else if (op == "close-sos1") inc = service.close_sos1(id, who.actor);
                  else if (op == "approve-sos2") inc = service.approve_sos2(id, who.actor);
                  else if (op == "declare-level") {
                    auto body = body_json(req);
                    auto level = body.find("level");
                    if (level == body.end() || !level->is_number_integer())
                      fail(ErrorKind::validation, "level must be an integer", "level");
                    inc = service.declare_level(id, level->get<int>(), who.actor);
                  } else if (op == "close") inc = service.close(id, who.actor);
                  else fail(ErrorKind::not_found, "unknown operation: " + op);
                  send_json(res, 200, incident_json(inc));
                }));
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) fail(ErrorKind::io, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port))
    fail(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
  return port;
}

void HttpServer::run() {
  {
    std::lock_guard lock(impl_->lifecycle);
    if (impl_->cancelled) return;
    impl_->started = true;
  }
  if (!impl_->server.listen_after_bind()) fail(ErrorKind::io, "server stopped unexpectedly");
}

void HttpServer::stop() {
  if (!impl_) return;
  {
    // A stop that wins the race against run() cancels it instead.
    std::lock_guard lock(impl_->lifecycle);
    if (!impl_->started) {
      impl_->cancelled = true;
      return;
    }
  }
  impl_->server.wait_until_ready();
  impl_->server.stop();
}

}  // namespace qdss
