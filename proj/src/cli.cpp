#include "qdss/cli.hpp"

#include "qdss/etl.hpp"
#include "qdss/gateway.hpp"
#include "qdss/seed.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace qdss {

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Alert read_alert_file(const std::filesystem::path& path) { return parse_alert(slurp(path)); }

/// Seed lines are bare quake objects or {"table": ..., "record": {...}}.
void load_seed_file(Writer& w, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) fail(ErrorKind::parse, "malformed json");
      if (j.contains("table"))
        w.insert_json(parse_table_kind(j.at("table").get<std::string>()), j.at("record"));
      else
        w.insert_json(TableKind::quakes, j);
    } catch (const Error& e) {
      fail(e.kind(), path.string() + ":" + std::to_string(lineno) + ": " + e.what(), e.field());
    } catch (const json::exception& e) {
      fail(ErrorKind::validation, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

json row_counts(const Snapshot& s) {
  json j = json::object();
  for (TableKind kind : kTableLoadOrder) j[std::string(to_string(kind))] = s.row_count(kind);
  return j;
}

struct Options {
  std::string data;

  std::string seed_file;
  std::size_t seed_synthetic = 0;
  std::uint64_t seed_synthetic_seed = 42;
  bool seed_builtin = false;

  std::string etl_source;

  olap::Query olap_query;
  std::string olap_format = "text";

  std::string plan_alert;
  int plan_k = 0;
  std::string plan_format = "json";

  double sim_rate = 10;
  int sim_days = 30;
  std::uint64_t sim_seed = 1;
  double sim_speedup = 0;
  std::string sim_start;
  std::string sim_out;

  int serve_port = -1;

  std::string actor = "cli";
  std::string incident_id;
  std::string incident_alert;
  std::string pledge_origin;
  std::int64_t pledge_medics = 0;
  std::string pledge_id;
  int pledge_stage = 0;
  int level = 0;
};

void print_incident(std::ostream& out, const Incident& inc) { out << incident_json(inc).dump(2) << '\n'; }

void print_plan_text(std::ostream& out, const Plan& plan) {
  const auto& n = plan.needs;
  out << "affected regencies: " << plan.affected.size();
  for (const auto& id : plan.affected) out << ' ' << id;
  out << '\n';
  out << "affected citizens:  " << n.a_c << "\n"
      << "displaced:          " << n.displaced << "\n"
      << "medics needed:      " << n.medics_needed << "\n"
      << "medics available:   " << n.medics_available << "\n"
      << "medic lack:         " << n.medic_lack << "\n"
      << "tents:              " << n.tents << "\n"
      << "sanitation units:   " << n.sanitation_units << "\n"
      << "food shelters:      " << n.food_shelters << "\n"
      << "blankets:           " << n.blankets << "\n"
      << "rice kg:            " << json(n.rice_kg).dump() << "\n"
      << "baby feed kg:       " << json(n.baby_feed_kg).dump() << "\n"
      << "volunteers:         " << n.volunteers_national << "\n"
      << "refugee sites:      ";
  for (const auto& s : n.refugee_sites) out << s << ' ';
  out << "(shortfall " << n.refugee_shortfall << ")\n";
  out << "total loss:         " << json(n.total_loss_estimate).dump() << "\n";
  for (const auto& c : n.category_checklist)
    out << "  [" << (c.covered ? 'x' : ' ') << "] " << to_string(c.category) << '\n';
  if (!plan.prediction) {
    out << "prediction: unavailable (" << plan.prediction_error << ")\n";
    return;
  }
  const auto& p = *plan.prediction;
  out << "predicted deaths:   " << json(p.predicted_deaths).dump() << "\n"
      << "predicted injured:  " << json(p.predicted_injured).dump() << "\n"
      << "predicted level:    " << p.predicted_level << "\n";
  for (const auto& nb : p.neighbors)
    out << "  neighbour " << nb.quake_id << " distance " << json(nb.distance).dump() << " weight "
        << json(nb.weight).dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Earthquake decision-support engine", "qdss"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Options o;
  o.data = data_root_from_env().string();
  app.add_option("--data", o.data, "Data root (default $QDSS_DATA or ./data)");

  auto* seed = app.add_subcommand("seed", "Load reference dimensions and quake facts");
  seed->add_option("--file", o.seed_file, "JSONL of quakes or {table, record} lines");
  seed->add_option("--synthetic", o.seed_synthetic, "Also load N synthetic quakes");
  seed->add_option("--synthetic-seed", o.seed_synthetic_seed, "Seed for synthetic quakes");
  seed->add_flag("--builtin", o.seed_builtin, "Load the historical quakes even when --file is given");

  auto* etl = app.add_subcommand("etl", "Incremental extraction from registered sources");
  auto* etl_run = etl->add_subcommand("run", "Extract and load every source (or one)");
  etl_run->add_option("--source", o.etl_source, "Only this source id");
  etl->require_subcommand(1);

  auto* olap_cmd = app.add_subcommand("olap", "Aggregate report over the warehouse");
  olap_cmd->add_option("--measure", o.olap_query.measures, "Measure (repeatable)");
  olap_cmd->add_option("--by", o.olap_query.by, "Dimension, e.g. geography:province, time:year, magnitude_band:0.5");
  olap_cmd->add_option("--slice", o.olap_query.slices, "kind:value");
  olap_cmd->add_option("--dice", o.olap_query.dices, "kind:v1|v2|...");
  olap_cmd->add_option("--rollup", o.olap_query.rollups, "Dimension kind to coarsen");
  olap_cmd->add_option("--drilldown", o.olap_query.drilldowns, "Dimension kind to refine");
  olap_cmd->add_option("--format", o.olap_format, "text|csv|json");

  auto* plan = app.add_subcommand("plan", "Resource needs and impact prediction for an alert");
  plan->add_option("--alert", o.plan_alert, "Alert json file")->required();
  plan->add_option("--k", o.plan_k, "Nearest historical quakes to use");
  plan->add_option("--format", o.plan_format, "json|text")->check(CLI::IsMember({"json", "text"}));

  auto* sim = app.add_subcommand("simulate", "Generate and replay an alert script");
  sim->add_option("--rate", o.sim_rate, "Alerts per day, 5..30");
  sim->add_option("--days", o.sim_days, "Script length in days");
  sim->add_option("--seed", o.sim_seed, "RNG seed");
  sim->add_option("--speedup", o.sim_speedup, "Replay time compression; 0 delivers without waiting");
  sim->add_option("--start", o.sim_start, "Script start (RFC 3339)");
  sim->add_option("--out", o.sim_out, "Script path (default <data>/feeds/alerts.jsonl)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
  serve->add_option("--port", o.serve_port, "Listen port (overrides config and QDSS_PORT)");

  auto* inc = app.add_subcommand("incident", "Incident escalation actions");
  inc->require_subcommand(1);
  inc->add_option("--actor", o.actor, "Actor recorded in the audit log");
  auto* inc_list = inc->add_subcommand("list", "List incidents");
  auto* inc_show = inc->add_subcommand("show", "Show one incident");
  auto* inc_open = inc->add_subcommand("open", "Open an incident from an alert file");
  inc_open->add_option("--alert", o.incident_alert, "Alert json file")->required();
  auto* inc_assess = inc->add_subcommand("assess", "Attach needs and prediction");
  auto* inc_sos1 = inc->add_subcommand("approve-sos1", "Approve and dispatch the first SOS");
  auto* inc_pledge = inc->add_subcommand("pledge", "Record a medic pledge");
  inc_pledge->add_option("--origin", o.pledge_origin, "Province id, national, or international origin")->required();
  inc_pledge->add_option("--medics", o.pledge_medics, "Medical teams pledged")->required();
  inc_pledge->add_option("--pledge-id", o.pledge_id, "Pledge id");
  inc_pledge->add_option("--stage", o.pledge_stage, "1 or 2 (default: the open stage)");
  auto* inc_close1 = inc->add_subcommand("close-sos1", "Close the first SOS round");
  auto* inc_sos2 = inc->add_subcommand("approve-sos2", "Approve and dispatch the second SOS");
  auto* inc_level = inc->add_subcommand("declare-level", "Declare the disaster level");
  inc_level->add_option("--level", o.level, "1..4")->required();
  auto* inc_close = inc->add_subcommand("close", "Close a resolved incident");
  for (auto* sub : {inc_show, inc_assess, inc_sos1, inc_pledge, inc_close1, inc_sos2, inc_level, inc_close})
    sub->add_option("id", o.incident_id, "Incident id")->required();

  std::vector<std::string> argv_storage{"qdss"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  const std::filesystem::path root = o.data;
  try {
    if (*seed) {
      Warehouse wh(root);
      wh.write([&](Writer& w) {
        seed::load(w, seed::reference_dimensions());
        if (o.seed_file.empty() || o.seed_builtin) seed::load(w, seed::paper_quakes());
        if (!o.seed_file.empty()) load_seed_file(w, o.seed_file);
        if (o.seed_synthetic > 0) seed::load(w, seed::synthetic_facts(o.seed_synthetic, o.seed_synthetic_seed));
      });
      out << json{{"rows", row_counts(wh.snapshot())}}.dump() << '\n';
      return 0;
    }

    if (*etl_run) {
      Warehouse wh(root);
      etl::WatermarkStore marks(root / "watermarks.jsonl");
      std::optional<std::string> only;
      if (!o.etl_source.empty()) only = o.etl_source;
      auto summary = etl::run_etl(etl::load_registry(root), wh, marks, only);
      out << etl::summary_json(summary).dump(2) << '\n';
      return summary.ok() ? 0 : 2;
    }

    if (*olap_cmd) {
      Warehouse wh(root);
      if (o.olap_query.measures.empty()) o.olap_query.measures = {"quake_count"};
      out << olap::render_report(olap::run_query(wh.snapshot(), o.olap_query), olap::parse_format(o.olap_format));
      return 0;
    }

    if (*plan) {
      Service svc(root, load_gateway_config(root));
      std::optional<int> k;
      if (o.plan_k != 0) k = o.plan_k;
      auto result = svc.plan_for(read_alert_file(o.plan_alert), k);
      if (o.plan_format == "text")
        print_plan_text(out, result);
      else
        out << plan_json(result).dump(2) << '\n';
      return 0;
    }

    if (*sim) {
      auto cfg = load_gateway_config(root);
      ScriptConfig sc;
      sc.thresholds = cfg.thresholds;
      if (!o.sim_start.empty()) sc.start = parse_rfc3339(o.sim_start);
      require(o.sim_speedup >= 0, "speedup", "must be >= 0");
      Warehouse wh(root);
      auto script = generate_script(o.sim_rate, o.sim_days, o.sim_seed, wh.snapshot().regencies(), sc);
      std::filesystem::path path = o.sim_out.empty() ? root / "feeds" / "alerts.jsonl" : std::filesystem::path(o.sim_out);
      write_alerts(path, script);
      double speedup = o.sim_speedup == 0 ? std::numeric_limits<double>::infinity() : o.sim_speedup;
      replay(script, speedup, [&](const Alert& a) { out << serialize_alert(a) << '\n' << std::flush; },
             [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); });
      return 0;
    }

    if (*serve) {
      auto cfg = load_gateway_config(root);
      if (o.serve_port >= 0) cfg.port = o.serve_port;
      Service svc(root, cfg);
      HttpServer http(svc);
      int port = http.bind(cfg.host, cfg.port);
      out << "listening on " << cfg.host << ":" << port << std::endl;
      http.run();
      return 0;
    }

    if (*inc) {
      Service svc(root, load_gateway_config(root));
      if (*inc_list) {
        json rows = json::array();
        for (const auto& i : svc.incidents().list())
          rows.push_back({{"incident_id", i.incident_id},
                          {"state", to_string(i.state)},
                          {"residual_lack", i.residual_lack}});
        out << rows.dump(2) << '\n';
      } else if (*inc_show) {
        print_incident(out, svc.incidents().get(o.incident_id));
      } else if (*inc_open) {
        print_incident(out, svc.ingest_alert(read_alert_file(o.incident_alert), o.actor));
      } else if (*inc_assess) {
        print_incident(out, svc.assess(o.incident_id, o.actor));
      } else if (*inc_sos1) {
        print_incident(out, svc.approve_sos1(o.incident_id, o.actor));
      } else if (*inc_pledge) {
        json body = {{"origin", o.pledge_origin}, {"medics_pledged", o.pledge_medics}};
        if (!o.pledge_id.empty()) body["pledge_id"] = o.pledge_id;
        if (o.pledge_stage != 0) body["stage"] = o.pledge_stage;
        print_incident(out, svc.pledge(o.incident_id, body, o.actor));
      } else if (*inc_close1) {
        print_incident(out, svc.close_sos1(o.incident_id, o.actor));
      } else if (*inc_sos2) {
        print_incident(out, svc.approve_sos2(o.incident_id, o.actor));
      } else if (*inc_level) {
        print_incident(out, svc.declare_level(o.incident_id, o.level, o.actor));
      } else if (*inc_close) {
        print_incident(out, svc.close(o.incident_id, o.actor));
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.kind() == ErrorKind::io ? 2 : 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error (io): " << e.what() << '\n';
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace qdss
