#include "config.hpp"

#include <set>

#include <json.hpp>

namespace gd {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) {
  throw GdError(ErrorCode::config_invalid, "ConfigInvalid: " + msg);
}

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) bad(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) bad("unknown key '" + it.key() + "' in " + where);
}

double num(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where + " must be a number");
  return j.get<double>();
}

std::map<std::string, double> num_map(const json& j, const std::string& where) {
  std::map<std::string, double> out;
  if (!j.is_object()) bad(where + " must be an object of numbers");
  for (auto it = j.begin(); it != j.end(); ++it)
    out[it.key()] = num(it.value(), where + "." + it.key());
  return out;
}

Point point_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) bad(where + " must be [s,t]");
  return {num(j[0], where), num(j[1], where)};
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"version", "command", "seed", "hmax", "workers", "out", "tolerances",
              "problem", "domain", "optimize", "gradient_check", "adjoint_check",
              "forward", "tsunami"});
  RunConfig cfg;
  if (!j.contains("version") || !j["version"].is_number_integer())
    bad("missing integer field 'version'");
  cfg.version = j["version"].get<int>();
  if (cfg.version != 1) bad("unsupported config version");
  if (!j.contains("command") || !j["command"].is_string())
    bad("missing string field 'command'");
  cfg.command = j["command"].get<std::string>();
  const std::set<std::string> commands{"forward",        "adjoint-check",
                                       "gradient-check", "optimize",
                                       "tsunami-twin",   "tsunami-invert"};
  if (!commands.count(cfg.command)) bad("unknown command '" + cfg.command + "'");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      bad("'seed' must be an integer");
    cfg.seed = j["seed"].get<unsigned long long>();
  }
  if (j.contains("hmax")) cfg.hmax = num(j["hmax"], "hmax");
  if (cfg.hmax <= 0) bad("'hmax' must be positive");
  if (j.contains("workers")) cfg.workers = static_cast<int>(num(j["workers"], "workers"));
  if (j.contains("out")) {
    if (!j["out"].is_string()) bad("'out' must be a string");
    cfg.out = j["out"].get<std::string>();
  }
  if (j.contains("tolerances")) {
    check_keys(j["tolerances"], "tolerances", {"solver", "geometry"});
    if (j["tolerances"].contains("solver"))
      cfg.solver_tol = num(j["tolerances"]["solver"], "tolerances.solver");
    if (j["tolerances"].contains("geometry"))
      cfg.tol_geom = num(j["tolerances"]["geometry"], "tolerances.geometry");
  }

  bool is_tsunami = cfg.command.rfind("tsunami", 0) == 0;
  if (is_tsunami) {
    if (!j.contains("tsunami")) bad("tsunami commands need a 'tsunami' block");
    const json& t = j["tsunami"];
    check_keys(t, "tsunami",
               {"omega", "g", "c", "depth", "r_range", "t_range", "lambda", "noise",
                "u_true", "observations_csv", "obs_coords"});
    TsunamiConfig tc;
    if (t.contains("omega")) tc.model.omega = num(t["omega"], "tsunami.omega");
    if (t.contains("g")) tc.model.g = num(t["g"], "tsunami.g");
    if (t.contains("c")) tc.model.c = num(t["c"], "tsunami.c");
    if (!t.contains("depth")) bad("tsunami block needs 'depth'");
    {
      const json& d = t["depth"];
      check_keys(d, "tsunami.depth", {"id", "h0", "delta"});
      if (!d.contains("id") || !d["id"].is_string()) bad("depth needs string 'id'");
      tc.depth_id = d["id"].get<std::string>();
      double h0 = d.contains("h0") ? num(d["h0"], "depth.h0") : 1.0;
      double delta = d.contains("delta") ? num(d["delta"], "depth.delta") : 0.0;
      if (tc.depth_id == "constant") {
        tc.model.h = [h0](double) { return h0; };
        tc.model.hp = [](double) { return 0.0; };
        tc.model.hpp = [](double) { return 0.0; };
      } else if (tc.depth_id == "linear") {
        tc.model.h = [h0, delta](double r) { return h0 + delta * r; };
        tc.model.hp = [delta](double) { return delta; };
        tc.model.hpp = [](double) { return 0.0; };
      } else {
        bad("unknown depth profile id '" + tc.depth_id + "'");
      }
    }
    if (!t.contains("r_range") || !t.contains("t_range"))
      bad("tsunami block needs 'r_range' and 't_range'");
    {
      const json& rr = t["r_range"];
      const json& tr = t["t_range"];
      if (!rr.is_array() || rr.size() != 2) bad("r_range must be [r1,r2]");
      if (!tr.is_array() || tr.size() != 2) bad("t_range must be [t1,t2]");
      tc.model.r1 = num(rr[0], "r_range");
      tc.model.r2 = num(rr[1], "r_range");
      tc.model.t1 = num(tr[0], "t_range");
      tc.model.t2 = num(tr[1], "t_range");
    }
    if (t.contains("lambda")) {
      tc.lambdas.clear();
      if (t["lambda"].is_array())
        for (const auto& l : t["lambda"]) tc.lambdas.push_back(num(l, "lambda"));
      else
        tc.lambdas.push_back(num(t["lambda"], "lambda"));
      if (tc.lambdas.empty()) bad("'lambda' list is empty");
      for (double l : tc.lambdas)
        if (l <= 0) bad("regularization lambda must be > 0");
    }
    if (t.contains("noise")) tc.noise = num(t["noise"], "tsunami.noise");
    if (t.contains("u_true")) {
      const json& ut = t["u_true"];
      check_keys(ut, "tsunami.u_true", {"id", "amp", "rc", "tc", "wr", "wt"});
      if (ut.contains("id")) {
        if (!ut["id"].is_string()) bad("u_true.id must be a string");
        tc.u_true_id = ut["id"].get<std::string>();
      }
      for (const char* key : {"amp", "rc", "tc", "wr", "wt"})
        if (ut.contains(key)) tc.u_true_params[key] = num(ut[key], key);
      if (tc.u_true_id != "gauss" && tc.u_true_id != "zero")
        bad("unknown u_true id '" + tc.u_true_id + "'");
    }
    if (t.contains("observations_csv")) {
      if (!t["observations_csv"].is_string()) bad("observations_csv must be a string");
      tc.observations_csv = t["observations_csv"].get<std::string>();
    }
    if (t.contains("obs_coords")) {
      if (!t["obs_coords"].is_string()) bad("obs_coords must be a string");
      tc.obs_coords = t["obs_coords"].get<std::string>();
      if (tc.obs_coords != "characteristic" && tc.obs_coords != "physical")
        bad("obs_coords must be 'characteristic' or 'physical'");
    }
    cfg.tsunami = std::move(tc);
  } else {
    if (!j.contains("problem")) bad("command '" + cfg.command + "' needs 'problem'");
    const json& p = j["problem"];
    check_keys(p, "problem", {"id", "params"});
    if (!p.contains("id") || !p["id"].is_string()) bad("problem needs string 'id'");
    cfg.problem_id = p["id"].get<std::string>();
    auto ids = builtin_problem_ids();
    if (std::find(ids.begin(), ids.end(), cfg.problem_id) == ids.end())
      bad("unknown problem id '" + cfg.problem_id + "'");
    if (p.contains("params")) cfg.problem_params = num_map(p["params"], "problem.params");
  }

  if (j.contains("domain")) {
    const json& d = j["domain"];
    check_keys(d, "domain",
               {"type", "a", "b", "radius", "A", "arcs", "extra_vertices"});
    if (!d.contains("type") || !d["type"].is_string()) bad("domain needs 'type'");
    cfg.domain_type = d["type"].get<std::string>();
    cfg.has_domain_override = true;
    if (d.contains("a")) cfg.dom_a = num(d["a"], "domain.a");
    if (d.contains("b")) cfg.dom_b = num(d["b"], "domain.b");
    if (d.contains("radius")) cfg.dom_radius = num(d["radius"], "domain.radius");
    if (d.contains("A")) cfg.dom_A = num(d["A"], "domain.A");
    if (d.contains("extra_vertices"))
      for (const auto& ev : d["extra_vertices"])
        cfg.extra_vertices.push_back(point_of(ev, "extra_vertices"));
    if (cfg.domain_type == "custom") {
      if (!d.contains("arcs")) bad("custom domain needs 'arcs'");
      for (const auto& a : d["arcs"]) {
        check_keys(a, "domain.arcs[]", {"kind", "to", "radius", "points"});
        if (!a.contains("kind") || !a["kind"].is_string()) bad("arc needs 'kind'");
        std::string kind = a["kind"].get<std::string>();
        ArcSpec as;
        if (kind == "segment") {
          as.type = ArcSpec::Type::segment;
          if (!a.contains("to")) bad("segment arc needs 'to'");
          as.to = point_of(a["to"], "arc.to");
        } else if (kind == "quarter_circle") {
          as.type = ArcSpec::Type::quarter_circle;
          if (!a.contains("radius")) bad("quarter_circle arc needs 'radius'");
          as.radius = num(a["radius"], "arc.radius");
        } else if (kind == "polyline") {
          as.type = ArcSpec::Type::polyline;
          if (!a.contains("points")) bad("polyline arc needs 'points'");
          for (const auto& pt : a["points"])
            as.points.push_back(point_of(pt, "arc.points[]"));
        } else {
          bad("unknown arc kind '" + kind + "'");
        }
        cfg.dom_arcs.push_back(std::move(as));
      }
    } else if (cfg.domain_type != "rectangle" && cfg.domain_type != "quarter_disk" &&
               cfg.domain_type != "staircase" && cfg.domain_type != "triangle") {
      bad("unknown domain type '" + cfg.domain_type + "'");
    }
  }

  auto opt_block = [&](const char* name, auto&& fill) {
    if (!j.contains(name)) return;
    fill(j[name]);
  };
  opt_block("optimize", [&](const json& o) {
    check_keys(o, "optimize", {"tol", "max_iter", "armijo_c"});
    if (o.contains("tol")) cfg.opt_tol = num(o["tol"], "optimize.tol");
    if (o.contains("max_iter"))
      cfg.opt_max_iter = static_cast<int>(num(o["max_iter"], "optimize.max_iter"));
    if (o.contains("armijo_c")) cfg.armijo_c = num(o["armijo_c"], "optimize.armijo_c");
  });
  opt_block("gradient_check", [&](const json& o) {
    check_keys(o, "gradient_check", {"directions", "eps", "tol"});
    if (o.contains("directions"))
      cfg.gc_directions = static_cast<int>(num(o["directions"], "directions"));
    if (o.contains("eps")) cfg.gc_eps = num(o["eps"], "eps");
    if (o.contains("tol")) cfg.gc_tol = num(o["tol"], "tol");
  });
  opt_block("adjoint_check", [&](const json& o) {
    check_keys(o, "adjoint_check", {"checkpoints", "tol"});
    if (o.contains("checkpoints"))
      cfg.ac_checkpoints = static_cast<int>(num(o["checkpoints"], "checkpoints"));
    if (o.contains("tol")) cfg.ac_tol = num(o["tol"], "tol");
  });
  opt_block("forward", [&](const json& o) {
    check_keys(o, "forward", {"control"});
    if (o.contains("control")) cfg.forward_control = num(o["control"], "control");
  });

  cfg.echo_json = j.dump(2);
  return cfg;
}

BuiltinProblem build_problem(const RunConfig& cfg) {
  BuiltinProblem bp = make_builtin_problem(cfg.problem_id, cfg.hmax, cfg.problem_params);
  if (cfg.has_domain_override) {
    if (cfg.domain_type == "rectangle")
      bp.domain = make_rectangle(cfg.dom_a, cfg.dom_b, cfg.hmax);
    else if (cfg.domain_type == "quarter_disk")
      bp.domain = make_quarter_disk(cfg.dom_radius, cfg.hmax, cfg.extra_vertices);
    else if (cfg.domain_type == "staircase")
      bp.domain = make_staircase(cfg.hmax);
    else if (cfg.domain_type == "triangle")
      bp.domain = make_triangle(cfg.dom_A, cfg.hmax);
    else
      bp.domain = build_domain(cfg.dom_a, cfg.dom_b, cfg.dom_arcs,
                               cfg.extra_vertices, cfg.hmax, cfg.tol_geom);
  }
  return bp;
}

}  // namespace gd
