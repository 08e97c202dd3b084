#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gcil/train/checkpoint.hpp"

namespace gcil::train {

using json = nlohmann::ordered_json;

namespace {

json tensor_json(const nn::Tensor2& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw CheckpointError(field + ": " + what);
}

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) fail(path + key, "missing");
  return j.at(key);
}

void tensor_from(const json& j, nn::Tensor2& t, const std::string& path) {
  if (!j.is_array() || j.size() != t.rows())
    fail(path, "expected " + std::to_string(t.rows()) + " rows for shape " + t.shape_string());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != t.cols())
      fail(path, "row " + std::to_string(r) + " must have " + std::to_string(t.cols()) + " values");
    for (std::size_t c = 0; c < t.cols(); ++c) {
      if (!row[c].is_number()) fail(path, "non-numeric value");
      t(r, c) = row[c].get<double>();
    }
  }
}

json graph_json(const graph::GraphConfig& g) {
  json j;
  j["strategy"] = std::string(graph::to_string(g.strategy));
  j["alpha_m"] = g.alpha_m;
  j["k"] = g.k;
  j["ego_as_neighbor"] = g.ego_as_neighbor;
  j["ego_frame"] = g.ego_frame;
  j["v_pref"] = g.v_pref;
  return j;
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    fail(path + key, "wrong type");
  }
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const auto& net = ckpt.network;
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["network_kind"] = std::string(policy::to_string(net.kind()));
  json topo;
  topo["gcn"] = net.shape().gcn;
  topo["encoder"] = net.shape().encoder;
  topo["trunk"] = net.shape().trunk;
  topo["branch_hidden"] = net.shape().branch_hidden;
  topo["input_scale"] = net.shape().input_scale;
  j["topology"] = topo;
  j["graph"] = graph_json(ckpt.graph);

  const auto names = net.parameter_names();
  const auto params = net.parameters();
  json p = json::object();
  for (std::size_t i = 0; i < names.size(); ++i) p[names[i]] = tensor_json(*params[i]);
  j["parameters"] = p;

  json opt;
  opt["lr"] = ckpt.adam_config.lr;
  opt["beta1"] = ckpt.adam_config.beta1;
  opt["beta2"] = ckpt.adam_config.beta2;
  opt["eps"] = ckpt.adam_config.eps;
  opt["t"] = ckpt.adam_steps;
  json m = json::object(), v = json::object();
  for (std::size_t i = 0; i < ckpt.adam_m.size() && i < names.size(); ++i) {
    m[names[i]] = tensor_json(ckpt.adam_m[i]);
    v[names[i]] = tensor_json(ckpt.adam_v[i]);
  }
  opt["m"] = m;
  opt["v"] = v;
  j["optimizer"] = opt;

  json ts;
  ts["step"] = ckpt.step;
  ts["seed"] = ckpt.seed;
  ts["rng_state"] = ckpt.rng_state;
  j["train_state"] = ts;
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text,
                                std::optional<policy::NetworkKind> expected) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("not a JSON document: ") + e.what());
  }
  const int version = get<int>(j, "format_version", "");
  if (version != kCheckpointFormatVersion)
    fail("format_version", "unsupported version " + std::to_string(version) + " (expected " +
                               std::to_string(kCheckpointFormatVersion) + ")");
  const auto kind_name = get<std::string>(j, "network_kind", "");
  const auto kind = policy::parse_network_kind(kind_name);
  if (!kind) fail("network_kind", "unknown kind '" + kind_name + "'");
  if (expected && *kind != *expected)
    fail("network_kind", "checkpoint holds '" + kind_name + "' but '" +
                             std::string(policy::to_string(*expected)) + "' was requested");

  const json& topo = field(j, "topology", "");
  policy::NetworkShape shape;
  shape.gcn = get<std::vector<std::size_t>>(topo, "gcn", "topology.");
  shape.encoder = get<std::vector<std::size_t>>(topo, "encoder", "topology.");
  shape.trunk = get<std::vector<std::size_t>>(topo, "trunk", "topology.");
  shape.branch_hidden = get<std::size_t>(topo, "branch_hidden", "topology.");
  shape.input_scale = get<double>(topo, "input_scale", "topology.");
  if (!(shape.input_scale > 0.0) || !std::isfinite(shape.input_scale))
    fail("topology.input_scale", "must be positive and finite");

  Checkpoint c;
  try {
    c.network = policy::PolicyNetwork::make(*kind, 0, shape);
  } catch (const std::exception& e) {
    fail("topology", e.what());
  }

  const json& g = field(j, "graph", "");
  const auto strategy_name = get<std::string>(g, "strategy", "graph.");
  const auto strategy = graph::parse_strategy(strategy_name);
  if (!strategy) fail("graph.strategy", "unknown strategy '" + strategy_name + "'");
  c.graph.strategy = *strategy;
  c.graph.alpha_m = get<double>(g, "alpha_m", "graph.");
  c.graph.k = get<int>(g, "k", "graph.");
  c.graph.ego_as_neighbor = get<bool>(g, "ego_as_neighbor", "graph.");
  c.graph.ego_frame = get<bool>(g, "ego_frame", "graph.");
  c.graph.v_pref = get<double>(g, "v_pref", "graph.");

  const auto names = c.network.parameter_names();
  {
    const json& p = field(j, "parameters", "");
    if (p.size() != names.size())
      fail("parameters", "expected " + std::to_string(names.size()) + " tensors, found " +
                             std::to_string(p.size()));
    auto params = c.network.parameters();
    for (std::size_t i = 0; i < names.size(); ++i)
      tensor_from(field(p, names[i], "parameters."), *params[i], "parameters." + names[i]);
  }

  const json& opt = field(j, "optimizer", "");
  c.adam_config.lr = get<double>(opt, "lr", "optimizer.");
  c.adam_config.beta1 = get<double>(opt, "beta1", "optimizer.");
  c.adam_config.beta2 = get<double>(opt, "beta2", "optimizer.");
  c.adam_config.eps = get<double>(opt, "eps", "optimizer.");
  c.adam_steps = get<std::uint64_t>(opt, "t", "optimizer.");
  const json& m = field(opt, "m", "optimizer.");
  const json& v = field(opt, "v", "optimizer.");
  if (!m.empty() || !v.empty()) {
    const auto params = std::as_const(c.network).parameters();
    for (std::size_t i = 0; i < names.size(); ++i) {
      nn::Tensor2 mt(params[i]->rows(), params[i]->cols());
      nn::Tensor2 vt(params[i]->rows(), params[i]->cols());
      tensor_from(field(m, names[i], "optimizer.m."), mt, "optimizer.m." + names[i]);
      tensor_from(field(v, names[i], "optimizer.v."), vt, "optimizer.v." + names[i]);
      c.adam_m.push_back(std::move(mt));
      c.adam_v.push_back(std::move(vt));
    }
  }

  const json& ts = field(j, "train_state", "");
  c.step = get<std::uint64_t>(ts, "step", "train_state.");
  c.seed = get<std::uint64_t>(ts, "seed", "train_state.");
  c.rng_state = get<std::string>(ts, "rng_state", "train_state.");
  return c;
}

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out << checkpoint_to_json(ckpt);
  if (!out) throw CheckpointError("write failed: " + path.string());
}

Checkpoint checkpoint_load(const std::filesystem::path& path,
                           std::optional<policy::NetworkKind> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return checkpoint_from_json(text.str(), expected);
}

}  // namespace gcil::train
