#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gcil/config.hpp"

namespace gcil::config {

using json = nlohmann::ordered_json;

namespace {

json interval_json(const sim::Interval& i) { return json::array({i.lo, i.hi}); }

json interval_set_json(const sim::IntervalSet& s) {
  json j = json::array();
  for (const auto& p : s.parts) j.push_back(interval_json(p));
  return j;
}

json to_tree(const RunConfig& c) {
  const auto& sc = c.scenario;
  json j;
  j["layout"] = {{"lane_width", sc.layout.lane_width}, {"arm_length", sc.layout.arm_length}};
  j["episode"] = {{"dt", sc.episode.dt},
                  {"timeout_s", sc.episode.timeout_s},
                  {"success_radius_m", sc.episode.success_radius_m},
                  {"receding_window_s", c.eval.limits.receding_window_s}};

  const auto& t = sc.traffic;
  json arms = json::array();
  for (auto a : t.spawn_arms) arms.push_back(std::string(sim::to_string(a)));
  const auto& ag = sc.agents;
  j["traffic"] = {{"density", t.density},
                  {"min_separation_m", t.min_separation_m},
                  {"cruise_speed_range", interval_json(t.cruise_speed_range)},
                  {"ego_speed_range", interval_json(t.ego_speed_range)},
                  {"ego_spawn_m", interval_set_json(t.ego_spawn_m)},
                  {"agent_spawn_m", interval_set_json(t.agent_spawn_m)},
                  {"goal_offset_m", interval_set_json(t.goal_offset_m)},
                  {"spawn_arms", arms},
                  {"ego_arm", std::string(sim::to_string(sc.ego_arm))},
                  {"non_conflicting_fraction", t.non_conflicting_fraction},
                  {"small_agent_fraction", t.small_agent_fraction},
                  {"conflict_distance_m", t.conflict_distance_m},
                  {"agents_follow_ego", t.agents_follow_ego},
                  {"agents",
                   {{"lookahead", ag.lookahead},
                    {"capture_distance", ag.capture_distance},
                    {"speed_gain", ag.speed_gain},
                    {"following_gap", ag.following_gap},
                    {"standstill_gap", ag.standstill_gap},
                    {"headway", ag.headway}}}};

  const auto& v = sc.vehicle;
  j["vehicle"] = {{"wheelbase", v.wheelbase}, {"phi_max_deg", v.phi_max_deg},
                  {"a_max", v.a_max},         {"b_max", v.b_max},
                  {"v_max", v.v_max},         {"length", v.length},
                  {"width", v.width}};

  const auto& g = c.graph;
  j["graph"] = {{"strategy", std::string(graph::to_string(g.strategy))},
                {"alpha_m", g.alpha_m},
                {"k", g.k},
                {"ego_as_neighbor", g.ego_as_neighbor},
                {"ego_frame", g.ego_frame},
                {"v_pref", g.v_pref}};

  const auto& e = c.expert;
  j["expert"] = {{"lookahead", e.lookahead},
                 {"ttc_threshold", e.ttc_threshold},
                 {"creep_speed", e.creep_speed},
                 {"v_pref", e.v_pref},
                 {"yield_zone", e.yield_zone},
                 {"speed_gain", e.speed_gain},
                 {"capture_distance", e.capture_distance},
                 {"nominal_accel", e.nominal_accel},
                 {"comfort_brake", e.comfort_brake},
                 {"follow_distance", e.follow_distance},
                 {"follow_headway", e.follow_headway},
                 {"episodes_per_command", c.episodes_per_command},
                 {"density",
                  {{"forward", c.collect_density[0]},
                   {"turn_left", c.collect_density[1]},
                   {"turn_right", c.collect_density[2]}}},
                 {"seed", c.collect_seed}};

  j["train"] = json::parse(train_to_json(c.train));
  j["train"].erase("graph");

  const auto& ev = c.eval;
  json setups = json::array();
  for (const auto& s : ev.setups) setups.push_back({{"name", s.name}, {"density", s.density}});
  json cmds = json::array();
  for (auto cmd : ev.commands) cmds.push_back(std::string(to_string(cmd)));
  j["eval"] = {{"trials", ev.trials},
               {"base_seed", ev.base_seed},
               {"setups", setups},
               {"commands", cmds},
               {"ego_spawn_m", interval_set_json(ev.scenario.traffic.ego_spawn_m)},
               {"agent_spawn_m", interval_set_json(ev.scenario.traffic.agent_spawn_m)},
               {"goal_offset_m", interval_set_json(ev.scenario.traffic.goal_offset_m)},
               {"non_conflicting_fraction", ev.scenario.traffic.non_conflicting_fraction}};
  return j;
}

std::string type_name(const json& j) {
  if (j.is_boolean()) return "a boolean";
  if (j.is_number_unsigned()) return "a non-negative integer";
  if (j.is_number_integer()) return "an integer";
  if (j.is_number()) return "a number";
  if (j.is_string()) return "a string";
  if (j.is_array()) return "an array";
  if (j.is_object()) return "an object";
  return "null";
}

bool compatible(const json& schema, const json& value) {
  if (schema.is_boolean()) return value.is_boolean();
  if (schema.is_number_integer() || schema.is_number_unsigned())
    return value.is_number_integer() || value.is_number_unsigned();
  if (schema.is_number()) return value.is_number();
  if (schema.is_string()) return value.is_string();
  if (schema.is_array()) return value.is_array();
  if (schema.is_object()) return value.is_object();
  return false;
}

// Overlays `user` onto `schema` in place. Objects merge key by key; every
// other value replaces the default wholesale.
void merge(json& schema, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  std::vector<std::string> keys;
  for (const auto& [k, _] : schema.items()) keys.push_back(k);
  for (const auto& [k, value] : user.items()) {
    const std::string full = path.empty() ? k : path + "." + k;
    if (!schema.contains(k)) {
      std::string msg = "unknown key '" + full + "'";
      if (!keys.empty()) {
        const auto guess = nearest(k, keys);
        msg += " (did you mean '" + (path.empty() ? guess : path + "." + guess) + "'?)";
      }
      throw ConfigError(msg);
    }
    json& slot = schema[k];
    if (!compatible(slot, value))
      throw ConfigError(full + ": expected " + type_name(slot) + ", got " + type_name(value));
    if (slot.is_object()) merge(slot, value, full);
    else slot = value;
  }
}

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

template <class T>
T num(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    bad(field, "expected " + std::string(std::is_integral_v<T> ? "an integer" : "a number"));
  }
}

double positive(const json& j, const std::string& field) {
  const double v = num<double>(j, field);
  if (!(v > 0.0)) bad(field, "must be positive");
  return v;
}

double non_negative(const json& j, const std::string& field) {
  const double v = num<double>(j, field);
  if (!(v >= 0.0)) bad(field, "must be non-negative");
  return v;
}

double fraction(const json& j, const std::string& field) {
  const double v = num<double>(j, field);
  if (!(v >= 0.0 && v <= 1.0)) bad(field, "must lie in [0, 1]");
  return v;
}

sim::Interval interval(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) bad(field, "expected [lo, hi]");
  sim::Interval i{num<double>(j[0], field), num<double>(j[1], field)};
  if (!(i.lo <= i.hi)) bad(field, "lo must not exceed hi");
  return i;
}

sim::IntervalSet interval_set(const json& j, const std::string& field) {
  sim::IntervalSet s;
  for (const auto& part : j) s.parts.push_back(interval(part, field));
  if (s.parts.empty() || !(s.total_length() > 0.0)) bad(field, "needs a range of positive length");
  for (const auto& p : s.parts)
    if (p.lo < 0.0) bad(field, "distances must be non-negative");
  return s;
}

Command command(const json& j, const std::string& field) {
  const auto name = j.get<std::string>();
  const auto c = parse_command(name);
  if (!c) bad(field, "unknown command '" + name + "'");
  return *c;
}

sim::Arm arm(const json& j, const std::string& field) {
  if (!j.is_string()) bad(field, "expected an arm name");
  const auto name = j.get<std::string>();
  const auto a = sim::parse_arm(name);
  if (!a) bad(field, "unknown arm '" + name + "'");
  return *a;
}

std::vector<std::size_t> widths(const json& j, const std::string& field) {
  std::vector<std::size_t> w;
  for (const auto& v : j) {
    const auto x = num<long long>(v, field);
    if (x <= 0) bad(field, "layer widths must be positive");
    w.push_back(static_cast<std::size_t>(x));
  }
  if (w.empty()) bad(field, "needs at least one layer");
  return w;
}

std::size_t count(const json& j, const std::string& field, std::size_t min) {
  const auto x = num<long long>(j, field);
  if (x < static_cast<long long>(min)) bad(field, "must be at least " + std::to_string(min));
  return static_cast<std::size_t>(x);
}

int density(const json& j, const std::string& field) {
  const auto d = num<int>(j, field);
  if (d != 3 && d != 5 && d != 7) bad(field, "density must be 3, 5 or 7");
  return d;
}

graph::GraphConfig read_graph(const json& g) {
  graph::GraphConfig out;
  const auto name = g["strategy"].get<std::string>();
  const auto s = graph::parse_strategy(name);
  if (!s) bad("graph.strategy", "unknown strategy '" + name + "'");
  out.strategy = *s;
  out.alpha_m = positive(g["alpha_m"], "graph.alpha_m");
  out.k = static_cast<int>(count(g["k"], "graph.k", 1));
  out.ego_as_neighbor = g["ego_as_neighbor"].get<bool>();
  out.ego_frame = g["ego_frame"].get<bool>();
  out.v_pref = positive(g["v_pref"], "graph.v_pref");
  return out;
}

train::TrainConfig read_train(const json& t, const graph::GraphConfig& graph) {
  train::TrainConfig out;
  out.batch_size = count(t["batch_size"], "train.batch_size", 3);
  out.epochs = count(t["epochs"], "train.epochs", 1);
  out.max_steps = count(t["max_steps"], "train.max_steps", 0);
  out.adam.lr = positive(t["lr"], "train.lr");
  out.adam.beta1 = fraction(t["beta1"], "train.beta1");
  out.adam.beta2 = fraction(t["beta2"], "train.beta2");
  if (out.adam.beta1 >= 1.0) bad("train.beta1", "must be below 1");
  if (out.adam.beta2 >= 1.0) bad("train.beta2", "must be below 1");
  out.adam.eps = positive(t["eps"], "train.eps");
  out.eval_every = count(t["eval_every"], "train.eval_every", 0);
  out.seed = num<std::uint64_t>(t["seed"], "train.seed");
  const auto kind_name = t["network"].get<std::string>();
  const auto kind = policy::parse_network_kind(kind_name);
  if (!kind) bad("train.network", "unknown network '" + kind_name + "'");
  out.network = *kind;
  const json& s = t["shape"];
  out.shape.gcn = widths(s["gcn"], "train.shape.gcn");
  out.shape.encoder = widths(s["encoder"], "train.shape.encoder");
  out.shape.trunk = widths(s["trunk"], "train.shape.trunk");
  out.shape.branch_hidden = count(s["branch_hidden"], "train.shape.branch_hidden", 1);
  out.shape.input_scale = positive(s["input_scale"], "train.shape.input_scale");
  out.graph = graph;
  return out;
}

RunConfig from_tree(const json& j) {
  RunConfig c;
  auto& sc = c.scenario;
  sc.layout.lane_width = positive(j["layout"]["lane_width"], "layout.lane_width");
  sc.layout.arm_length = positive(j["layout"]["arm_length"], "layout.arm_length");
  if (sc.layout.arm_length <= 2.0 * sc.layout.lane_width)
    bad("layout.arm_length", "must exceed the junction half-size");

  const json& ep = j["episode"];
  sc.episode.dt = positive(ep["dt"], "episode.dt");
  sc.episode.timeout_s = positive(ep["timeout_s"], "episode.timeout_s");
  sc.episode.success_radius_m = positive(ep["success_radius_m"], "episode.success_radius_m");
  sim::OutcomeLimits limits;
  limits.timeout_s = sc.episode.timeout_s;
  limits.receding_window_s = positive(ep["receding_window_s"], "episode.receding_window_s");

  const json& t = j["traffic"];
  auto& tr = sc.traffic;
  tr.density = density(t["density"], "traffic.density");
  tr.min_separation_m = positive(t["min_separation_m"], "traffic.min_separation_m");
  tr.cruise_speed_range = interval(t["cruise_speed_range"], "traffic.cruise_speed_range");
  tr.ego_speed_range = interval(t["ego_speed_range"], "traffic.ego_speed_range");
  tr.ego_spawn_m = interval_set(t["ego_spawn_m"], "traffic.ego_spawn_m");
  tr.agent_spawn_m = interval_set(t["agent_spawn_m"], "traffic.agent_spawn_m");
  tr.goal_offset_m = interval_set(t["goal_offset_m"], "traffic.goal_offset_m");
  tr.spawn_arms.clear();
  for (const auto& a : t["spawn_arms"]) tr.spawn_arms.push_back(arm(a, "traffic.spawn_arms"));
  if (tr.spawn_arms.empty()) bad("traffic.spawn_arms", "needs at least one arm");
  sc.ego_arm = arm(t["ego_arm"], "traffic.ego_arm");
  tr.non_conflicting_fraction = fraction(t["non_conflicting_fraction"], "traffic.non_conflicting_fraction");
  tr.small_agent_fraction = fraction(t["small_agent_fraction"], "traffic.small_agent_fraction");
  tr.conflict_distance_m = non_negative(t["conflict_distance_m"], "traffic.conflict_distance_m");
  tr.agents_follow_ego = t["agents_follow_ego"].get<bool>();
  const json& ag = t["agents"];
  sc.agents.lookahead = positive(ag["lookahead"], "traffic.agents.lookahead");
  sc.agents.capture_distance = positive(ag["capture_distance"], "traffic.agents.capture_distance");
  sc.agents.speed_gain = positive(ag["speed_gain"], "traffic.agents.speed_gain");
  sc.agents.following_gap = positive(ag["following_gap"], "traffic.agents.following_gap");
  sc.agents.standstill_gap = positive(ag["standstill_gap"], "traffic.agents.standstill_gap");
  sc.agents.headway = positive(ag["headway"], "traffic.agents.headway");

  const json& v = j["vehicle"];
  sc.vehicle.wheelbase = positive(v["wheelbase"], "vehicle.wheelbase");
  sc.vehicle.phi_max_deg = positive(v["phi_max_deg"], "vehicle.phi_max_deg");
  if (sc.vehicle.phi_max_deg >= 90.0) bad("vehicle.phi_max_deg", "must be below 90");
  sc.vehicle.a_max = positive(v["a_max"], "vehicle.a_max");
  sc.vehicle.b_max = positive(v["b_max"], "vehicle.b_max");
  sc.vehicle.v_max = positive(v["v_max"], "vehicle.v_max");
  sc.vehicle.length = positive(v["length"], "vehicle.length");
  sc.vehicle.width = positive(v["width"], "vehicle.width");

  c.graph = read_graph(j["graph"]);

  const json& e = j["expert"];
  c.expert.lookahead = positive(e["lookahead"], "expert.lookahead");
  c.expert.ttc_threshold = positive(e["ttc_threshold"], "expert.ttc_threshold");
  c.expert.creep_speed = positive(e["creep_speed"], "expert.creep_speed");
  c.expert.v_pref = positive(e["v_pref"], "expert.v_pref");
  c.expert.yield_zone = positive(e["yield_zone"], "expert.yield_zone");
  c.expert.speed_gain = positive(e["speed_gain"], "expert.speed_gain");
  c.expert.capture_distance = positive(e["capture_distance"], "expert.capture_distance");
  c.expert.nominal_accel = positive(e["nominal_accel"], "expert.nominal_accel");
  c.expert.comfort_brake = positive(e["comfort_brake"], "expert.comfort_brake");
  c.expert.follow_distance = positive(e["follow_distance"], "expert.follow_distance");
  c.expert.follow_headway = positive(e["follow_headway"], "expert.follow_headway");
  c.episodes_per_command = count(e["episodes_per_command"], "expert.episodes_per_command", 1);
  c.collect_density = {density(e["density"]["forward"], "expert.density.forward"),
                       density(e["density"]["turn_left"], "expert.density.turn_left"),
                       density(e["density"]["turn_right"], "expert.density.turn_right")};
  c.collect_seed = num<std::uint64_t>(e["seed"], "expert.seed");

  c.train = read_train(j["train"], c.graph);

  const json& ev = j["eval"];
  c.eval.trials = count(ev["trials"], "eval.trials", 1);
  c.eval.base_seed = num<std::uint64_t>(ev["base_seed"], "eval.base_seed");
  c.eval.setups.clear();
  for (const auto& s : ev["setups"]) {
    if (!s.is_object() || !s.contains("name") || !s.contains("density") || !s["name"].is_string())
      bad("eval.setups", "entries need a name and a density");
    c.eval.setups.push_back({s["name"].get<std::string>(), density(s["density"], "eval.setups.density")});
  }
  if (c.eval.setups.empty()) bad("eval.setups", "needs at least one setup");
  c.eval.commands.clear();
  for (const auto& cmd : ev["commands"]) {
    if (!cmd.is_string()) bad("eval.commands", "expected command names");
    c.eval.commands.push_back(command(cmd, "eval.commands"));
  }
  if (c.eval.commands.empty()) bad("eval.commands", "needs at least one command");
  c.eval.scenario = sc;
  c.eval.scenario.traffic.ego_spawn_m = interval_set(ev["ego_spawn_m"], "eval.ego_spawn_m");
  c.eval.scenario.traffic.agent_spawn_m = interval_set(ev["agent_spawn_m"], "eval.agent_spawn_m");
  c.eval.scenario.traffic.goal_offset_m = interval_set(ev["goal_offset_m"], "eval.goal_offset_m");
  c.eval.scenario.traffic.non_conflicting_fraction =
      fraction(ev["non_conflicting_fraction"], "eval.non_conflicting_fraction");
  c.eval.limits = limits;
  return c;
}

}  // namespace

std::string to_json(const RunConfig& config) { return to_tree(config).dump(2) + "\n"; }

RunConfig from_json(const std::string& text, const RunConfig& base) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  json tree = to_tree(base);
  merge(tree, user, "");
  try {
    return from_tree(tree);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  try {
    return from_json(text.str(), base);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

RunConfig apply_override(const RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' must look like section.key=value");
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  // Build the nested partial document and reuse the strict merge.
  json doc = value;
  std::string rest = path;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
    parts.push_back(rest.substr(0, pos));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) doc = json{{*it, doc}};
  return from_json(doc.dump(), config);
}

std::string train_to_json(const train::TrainConfig& t) {
  json j;
  j["batch_size"] = t.batch_size;
  j["epochs"] = t.epochs;
  j["max_steps"] = t.max_steps;
  j["lr"] = t.adam.lr;
  j["beta1"] = t.adam.beta1;
  j["beta2"] = t.adam.beta2;
  j["eps"] = t.adam.eps;
  j["eval_every"] = t.eval_every;
  j["seed"] = t.seed;
  j["network"] = std::string(policy::to_string(t.network));
  j["shape"] = {{"gcn", t.shape.gcn},
                {"encoder", t.shape.encoder},
                {"trunk", t.shape.trunk},
                {"branch_hidden", t.shape.branch_hidden},
                {"input_scale", t.shape.input_scale}};
  j["graph"] = {{"strategy", std::string(graph::to_string(t.graph.strategy))},
                {"alpha_m", t.graph.alpha_m},
                {"k", t.graph.k},
                {"ego_as_neighbor", t.graph.ego_as_neighbor},
                {"ego_frame", t.graph.ego_frame},
                {"v_pref", t.graph.v_pref}};
  return j.dump();
}

expert::CollectConfig collect_config(const RunConfig& c) {
  expert::CollectConfig out;
  out.scenario = c.scenario;
  out.expert = c.expert;
  out.graph = c.graph;
  out.limits = c.eval.limits;
  out.episodes_per_command = c.episodes_per_command;
  out.density = c.collect_density;
  out.seed = c.collect_seed;
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest(std::string_view key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = static_cast<std::size_t>(-1);
  for (const auto& c : candidates) {
    const auto d = edit_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace gcil::config
