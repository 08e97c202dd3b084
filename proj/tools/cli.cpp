#include "cli.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gcil/config.hpp"
#include "gcil/policy/gradcheck.hpp"

#ifndef GCIL_VERSION
#define GCIL_VERSION "0.0.0"
#endif

namespace gcil::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::string sha256_text(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned jobs = 1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, Common& c, const std::string& default_out) {
  c.out = default_out;
  sub->add_option("--config", c.config_path, "JSON config file (sections layout, episode, traffic, vehicle, graph, expert, train, eval)");
  sub->add_option("--seed", c.seed, "Seed for this subcommand");
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "Worker threads; 1 runs fully serial")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--set", c.overrides, "Config override section.key=value (repeatable)");
}

config::RunConfig load(const Common& c) {
  config::RunConfig cfg = c.config_path.empty() ? config::RunConfig{} : config::load_config(c.config_path);
  for (const auto& o : c.overrides) cfg = config::apply_override(cfg, o);
  return cfg;
}

config::RunConfig set(const config::RunConfig& cfg, const std::string& key, const std::string& value) {
  return config::apply_override(cfg, key + "=" + value);
}

struct Manifest {
  std::string subcommand;
  std::vector<std::string> args;
  std::string started = utc_now();
  json seeds = json::object();
  std::string config_json = "{}";
  std::vector<fs::path> files;
};

void write_manifest(const Manifest& m, const fs::path& dir) {
  json j;
  j["schema_version"] = 1;
  j["tool"] = "gcil";
  j["tool_version"] = GCIL_VERSION;
  j["subcommand"] = m.subcommand;
  j["args"] = m.args;
  j["config_hash"] = sha256_text(m.config_json);
  j["seeds"] = m.seeds;
  j["started_utc"] = m.started;
  j["finished_utc"] = utc_now();
  j["config"] = json::parse(m.config_json);
  json files = json::array();
  for (const auto& f : m.files) {
    json e;
    e["path"] = fs::relative(f, dir).generic_string();
    e["sha256"] = sha256_file(f);
    e["bytes"] = fs::file_size(f);
    files.push_back(e);
  }
  j["files"] = files;
  fs::create_directories(dir);
  std::ofstream out(dir / "run_manifest.json", std::ios::binary);
  out << j.dump(2) << '\n';
}

fs::path write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  return path;
}

std::vector<graph::EdgeStrategy> parse_strategies(const std::vector<std::string>& names) {
  std::vector<graph::EdgeStrategy> out;
  for (const auto& n : names) {
    const auto s = graph::parse_strategy(n);
    if (!s) throw config::ConfigError("unknown strategy '" + n + "'");
    out.push_back(*s);
  }
  if (out.empty()) out.assign(graph::kAllStrategies.begin(), graph::kAllStrategies.end());
  return out;
}

struct LoadedPolicy {
  std::optional<train::Checkpoint> checkpoint;
  eval::Policy policy;
};

LoadedPolicy load_policy(const std::string& checkpoint, const std::string& network,
                         const std::string& builtin, const config::RunConfig& cfg) {
  LoadedPolicy lp;
  if (!checkpoint.empty()) {
    std::optional<policy::NetworkKind> expected;
    if (!network.empty()) {
      expected = policy::parse_network_kind(network);
      if (!expected) throw config::ConfigError("unknown network '" + network + "'");
    }
    try {
      lp.checkpoint = train::checkpoint_load(checkpoint, expected);
    } catch (const train::CheckpointError& e) {
      throw config::ConfigError(checkpoint + ": " + e.what());
    }
    const auto& ck = *lp.checkpoint;
    lp.policy = eval::learned_policy(std::string(policy::to_string(ck.network.kind())), ck.network, ck.graph);
  } else if (builtin == "expert") {
    lp.policy = eval::expert_policy(cfg.expert);
  } else if (builtin == "always_brake") {
    lp.policy = eval::always_brake_policy();
  } else {
    throw config::ConfigError("give --checkpoint or --policy expert|always_brake");
  }
  return lp;
}

int cmd_collect(const Common& c, std::optional<std::size_t> episodes, Manifest& m, std::ostream& out) {
  auto cfg = load(c);
  if (episodes) cfg = set(cfg, "expert.episodes_per_command", std::to_string(*episodes));
  if (c.seed) cfg = set(cfg, "expert.seed", std::to_string(*c.seed));
  const auto cfg_json = config::to_json(cfg);
  m.config_json = cfg_json;
  m.seeds["collect"] = cfg.collect_seed;

  const auto ds = expert::collect_dataset(config::collect_config(cfg), c.jobs, cfg_json);
  const fs::path dir = c.out;
  expert::dataset_write(ds, dir);
  for (Command cmd : kAllCommands) {
    const auto k = index_of(cmd);
    const double sr = 100.0 * static_cast<double>(ds.manifest.successes[k]) /
                      static_cast<double>(cfg.episodes_per_command);
    out << to_string(cmd) << ": " << cfg.episodes_per_command << " episodes, "
        << ds.manifest.counts[k] << " samples, expert SR " << eval::format_pct(sr) << "%\n";
    m.files.push_back(dir / expert::buffer_file_name(cmd));
  }
  m.files.push_back(dir / "manifest.json");
  return kOk;
}

struct TrainFlags {
  std::string data;
  std::string network;
  std::string strategy;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> max_steps;
  std::string resume;
};

int cmd_train(const Common& c, const TrainFlags& f, Manifest& m, std::ostream& out) {
  auto cfg = load(c);
  if (!f.network.empty()) cfg = set(cfg, "train.network", f.network);
  if (!f.strategy.empty()) cfg = set(cfg, "graph.strategy", f.strategy);
  if (f.epochs) cfg = set(cfg, "train.epochs", std::to_string(*f.epochs));
  if (f.max_steps) cfg = set(cfg, "train.max_steps", std::to_string(*f.max_steps));
  if (c.seed) cfg = set(cfg, "train.seed", std::to_string(*c.seed));
  m.config_json = config::to_json(cfg);
  m.seeds["train"] = cfg.train.seed;

  const auto ds = expert::dataset_read(f.data);
  train::TrainOptions opts;
  opts.out_dir = fs::path(c.out);
  opts.log = &out;
  opts.log_every = 100;
  if (!f.resume.empty()) {
    try {
      opts.resume = train::checkpoint_load(f.resume, cfg.train.network);
    } catch (const train::CheckpointError& e) {
      throw config::ConfigError(f.resume + ": " + e.what());
    }
  }
  const auto run = train::train(ds, cfg.train, opts);
  out << "trained " << policy::to_string(cfg.train.network) << " for " << run.steps << " steps";
  if (!run.history.empty()) out << ", final loss " << run.history.back().mean_loss;
  out << '\n';
  m.files.push_back(write_text(fs::path(c.out) / "config.json", m.config_json));
  m.files.push_back(fs::path(c.out) / "loss.csv");
  for (const auto& p : run.checkpoints) m.files.push_back(p);
  return kOk;
}

struct EvalFlags {
  std::string checkpoint;
  std::string builtin;
  std::string network;
  std::optional<std::size_t> trials;
  bool dump = false;
};

int cmd_eval(const Common& c, const EvalFlags& f, Manifest& m, std::ostream& out) {
  auto cfg = load(c);
  if (f.trials) cfg = set(cfg, "eval.trials", std::to_string(*f.trials));
  if (c.seed) cfg = set(cfg, "eval.base_seed", std::to_string(*c.seed));
  m.config_json = config::to_json(cfg);
  m.seeds["eval_base"] = cfg.eval.base_seed;

  const auto lp = load_policy(f.checkpoint, f.network, f.builtin, cfg);
  const auto report = eval::run_suite(lp.policy, cfg.eval, c.jobs);
  const fs::path dir = c.out;
  std::ostringstream summary, trials;
  eval::write_report_csv(summary, report.cells);
  eval::write_trials_csv(trials, report.method, report.trials);
  m.files.push_back(write_text(dir / "report.csv", summary.str()));
  m.files.push_back(write_text(dir / "trials.csv", trials.str()));
  out << summary.str();

  if (f.dump) {
    for (const auto& t : report.trials) {
      const auto setup = std::find_if(cfg.eval.setups.begin(), cfg.eval.setups.end(),
                                      [&](const eval::Setup& s) { return s.name == t.setup; });
      std::vector<sim::TrajectoryRow> rows;
      eval::run_trial(lp.policy, cfg.eval, *setup, t.command, t.seed, true, &rows);
      std::ostringstream csv;
      sim::write_trajectory_csv(csv, rows);
      m.files.push_back(write_text(dir / "trajectories" /
                                       (t.setup + "_" + std::string(to_string(t.command)) + "_" +
                                        std::to_string(t.seed) + ".csv"),
                                   csv.str()));
    }
  }
  return kOk;
}

struct AblateFlags {
  std::string data;
  std::vector<std::string> strategies;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> epochs;
};

int cmd_ablate(const Common& c, const AblateFlags& f, Manifest& m, std::ostream& out) {
  auto cfg = load(c);
  if (f.trials) cfg = set(cfg, "eval.trials", std::to_string(*f.trials));
  if (f.epochs) cfg = set(cfg, "train.epochs", std::to_string(*f.epochs));
  if (c.seed) cfg = set(cfg, "train.seed", std::to_string(*c.seed));
  const auto strategies = parse_strategies(f.strategies);
  m.config_json = config::to_json(cfg);
  m.seeds["train"] = cfg.train.seed;
  m.seeds["eval_base"] = cfg.eval.base_seed;

  const auto ds = expert::dataset_read(f.data);
  const auto rows = eval::run_ablation(ds, strategies, cfg.train, cfg.eval, c.jobs, &out);
  std::ostringstream csv;
  eval::write_ablation_csv(csv, rows);
  json audit = json::array();
  for (const auto& r : rows)
    audit.push_back({{"strategy", std::string(graph::to_string(r.strategy))},
                     {"train_config", json::parse(r.train_config_json)}});
  const fs::path dir = c.out;
  m.files.push_back(write_text(dir / "ablation.csv", csv.str()));
  m.files.push_back(write_text(dir / "ablation_configs.json", audit.dump(2) + "\n"));
  out << csv.str();
  return kOk;
}

struct ReplayFlags {
  std::string checkpoint;
  std::string builtin;
  std::string network;
  std::string setup = "easy";
  std::string command = "forward";
  std::uint64_t trial_seed = 0;
};

int cmd_replay(const Common& c, const ReplayFlags& f, Manifest& m, std::ostream& out) {
  const auto cfg = load(c);
  m.config_json = config::to_json(cfg);
  const std::uint64_t seed = c.seed ? *c.seed : f.trial_seed;
  m.seeds["trial"] = seed;
  const auto cmd = parse_command(f.command);
  if (!cmd) throw config::ConfigError("unknown command '" + f.command + "'");
  const auto setup = std::find_if(cfg.eval.setups.begin(), cfg.eval.setups.end(),
                                  [&](const eval::Setup& s) { return s.name == f.setup; });
  if (setup == cfg.eval.setups.end()) throw config::ConfigError("unknown setup '" + f.setup + "'");

  const auto lp = load_policy(f.checkpoint, f.network, f.builtin, cfg);
  std::vector<sim::TrajectoryRow> rows;
  const auto result = eval::run_trial(lp.policy, cfg.eval, *setup, *cmd, seed, true, &rows);

  std::ostringstream actions, traj;
  actions << "step,delta,tau\n";
  char buf[96];
  for (const auto& r : rows) {
    if (r.vehicle_id != 0) continue;
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g\n", static_cast<unsigned long long>(r.step),
                  r.delta, r.tau);
    actions << buf;
  }
  sim::write_trajectory_csv(traj, rows);
  const fs::path dir = c.out;
  m.files.push_back(write_text(dir / "actions.csv", actions.str()));
  m.files.push_back(write_text(dir / "trajectory.csv", traj.str()));
  std::snprintf(buf, sizeof buf, "%.17g", result.outcome.elapsed);
  out << "outcome " << sim::to_string(result.outcome.tag) << " elapsed_s " << buf << " steps "
      << result.outcome.steps << '\n';
  return kOk;
}

int cmd_gradcheck(const Common& c, const std::string& network, std::size_t samples, Manifest& m,
                  std::ostream& out) {
  const auto cfg = load(c);
  m.config_json = config::to_json(cfg);
  const std::uint64_t seed = c.seed.value_or(7);
  m.seeds["gradcheck"] = seed;
  std::vector<policy::NetworkKind> kinds;
  if (network.empty() || network == "all") {
    kinds = {policy::NetworkKind::Gcil, policy::NetworkKind::NnCil, policy::NetworkKind::SetCil};
  } else {
    const auto k = policy::parse_network_kind(network);
    if (!k) throw config::ConfigError("unknown network '" + network + "'");
    kinds = {*k};
  }
  constexpr double kTolerance = 1e-4;
  bool ok = true;
  std::ostringstream csv;
  csv << "network,max_relative_error,checked,skipped_near_kink,pass\n";
  for (auto k : kinds) {
    auto net = policy::PolicyNetwork::make(k, derive_seed(seed, 0), cfg.train.shape);
    const auto problem = policy::make_gradcheck_problem(derive_seed(seed, 1), 6, cfg.graph);
    auto opts = policy::default_gradcheck_options();
    opts.samples = samples;
    opts.seed = derive_seed(seed, 2);
    const auto r = policy::check_gradients(net, problem, opts);
    const bool pass = r.max_relative_error < kTolerance && r.checked == samples;
    ok = ok && pass;
    out << policy::to_string(k) << ": max relative error " << std::scientific << std::setprecision(3)
        << r.max_relative_error << std::defaultfloat << " over " << r.checked << " entries ("
        << r.skipped_near_kink << " skipped near kinks) " << (pass ? "PASS" : "FAIL") << '\n';
    csv << policy::to_string(k) << ',' << r.max_relative_error << ',' << r.checked << ','
        << r.skipped_near_kink << ',' << (pass ? 1 : 0) << '\n';
  }
  m.files.push_back(write_text(fs::path(c.out) / "gradcheck.csv", csv.str()));
  return ok ? kOk : kVerificationFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-based conditional imitation learning for intersection driving"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GCIL_VERSION);

  // One option set per subcommand so each keeps its own default --out.
  std::array<Common, 6> common;
  std::optional<std::size_t> episodes;
  auto* collect = app.add_subcommand("collect", "Record expert demonstrations");
  add_common(collect, common[0], "runs/data");
  collect->add_option("--episodes", episodes, "Episodes per command");

  TrainFlags tf;
  auto* trn = app.add_subcommand("train", "Behavior cloning from a dataset directory");
  add_common(trn, common[1], "runs/train");
  trn->add_option("--data", tf.data, "Dataset directory")->required();
  trn->add_option("--network", tf.network, "gcil | nncil | setcil");
  trn->add_option("--strategy", tf.strategy, "n_close | fully_connected | star | non_weighted");
  trn->add_option("--epochs", tf.epochs, "Training epochs");
  trn->add_option("--max-steps", tf.max_steps, "Step budget overriding epochs");
  trn->add_option("--resume", tf.resume, "Checkpoint to continue from");

  EvalFlags ef;
  auto* evl = app.add_subcommand("eval", "Closed-loop evaluation suite");
  add_common(evl, common[2], "runs/eval");
  evl->add_option("--checkpoint", ef.checkpoint, "Trained checkpoint");
  evl->add_option("--policy", ef.builtin, "Built-in policy: expert | always_brake");
  evl->add_option("--network", ef.network, "Expected network kind of the checkpoint");
  evl->add_option("--trials", ef.trials, "Trials per (setup, command) cell");
  evl->add_flag("--dump-trajectories", ef.dump, "Write one trajectory CSV per trial");

  AblateFlags af;
  auto* abl = app.add_subcommand("ablate", "Edge-strategy ablation on the hard Forward cell");
  add_common(abl, common[3], "runs/ablate");
  abl->add_option("--data", af.data, "Dataset directory")->required();
  abl->add_option("--strategy", af.strategies, "Strategies to compare (default: all four)")->delimiter(',');
  abl->add_option("--trials", af.trials, "Trials per strategy");
  abl->add_option("--epochs", af.epochs, "Training epochs per strategy");

  ReplayFlags rf;
  auto* rep = app.add_subcommand("replay", "Re-run one seeded trial and dump its action curve");
  add_common(rep, common[4], "runs/replay");
  rep->add_option("--checkpoint", rf.checkpoint, "Trained checkpoint");
  rep->add_option("--policy", rf.builtin, "Built-in policy: expert | always_brake");
  rep->add_option("--network", rf.network, "Expected network kind of the checkpoint");
  rep->add_option("--setup", rf.setup, "easy | middle | hard")->capture_default_str();
  rep->add_option("--command", rf.command, "forward | turn_left | turn_right")->capture_default_str();
  rep->add_option("--trial-seed", rf.trial_seed, "Trial seed (as in trials.csv)");

  std::string gc_network;
  std::size_t gc_samples = 200;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the policy networks");
  add_common(gc, common[5], "runs/gradcheck");
  gc->add_option("--network", gc_network, "gcil | nncil | setcil | all");
  gc->add_option("--samples", gc_samples, "Parameter entries per network")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  Manifest manifest;
  for (int i = 1; i < argc; ++i) manifest.args.emplace_back(argv[i]);
  const std::size_t active = *collect ? 0 : *trn ? 1 : *evl ? 2 : *abl ? 3 : *rep ? 4 : 5;
  const Common& opts = common[active];
  try {
    int code = kOk;
    if (*collect) {
      manifest.subcommand = "collect";
      code = cmd_collect(opts, episodes, manifest, out);
    } else if (*trn) {
      manifest.subcommand = "train";
      code = cmd_train(opts, tf, manifest, out);
    } else if (*evl) {
      manifest.subcommand = "eval";
      code = cmd_eval(opts, ef, manifest, out);
    } else if (*abl) {
      manifest.subcommand = "ablate";
      code = cmd_ablate(opts, af, manifest, out);
    } else if (*rep) {
      manifest.subcommand = "replay";
      code = cmd_replay(opts, rf, manifest, out);
    } else if (*gc) {
      manifest.subcommand = "gradcheck";
      code = cmd_gradcheck(opts, gc_network, gc_samples, manifest, out);
    }
    write_manifest(manifest, opts.out);
    return code;
  } catch (const config::ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("gcil");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace gcil::cli
