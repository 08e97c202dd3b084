#include <algorithm>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "gcil/config.hpp"
#include "gcil/eval/metrics.hpp"

namespace gcil::eval {

sim::ScenarioConfig EvalConfig::evaluation_scenario() {
  sim::ScenarioConfig s;
  s.traffic.ego_spawn_m = {{{12.0, 14.0}}};
  s.traffic.agent_spawn_m = {{{8.0, 12.0}, {18.0, 22.0}, {28.0, 32.0}}};
  s.traffic.goal_offset_m = {{{10.0, 12.0}}};
  s.traffic.non_conflicting_fraction = 0.3;
  return s;
}

namespace {

double rate(std::span<const TrialResult> results, sim::OutcomeTag tag) {
  if (results.empty()) throw std::invalid_argument("rate over an empty result set");
  std::size_t n = 0;
  for (const auto& r : results) n += r.outcome.tag == tag ? 1 : 0;
  return 100.0 * static_cast<double>(n) / static_cast<double>(results.size());
}

}  // namespace

double success_rate(std::span<const TrialResult> results) {
  return rate(results, sim::OutcomeTag::Success);
}

double collision_rate(std::span<const TrialResult> results) {
  return rate(results, sim::OutcomeTag::Collision);
}

std::optional<double> mean_navigation_time(std::span<const TrialResult> results) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : results) {
    if (r.outcome.tag != sim::OutcomeTag::Success) continue;
    sum += r.outcome.elapsed;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

Policy learned_policy(std::string name, const policy::PolicyNetwork& network,
                      const graph::GraphConfig& graph) {
  return {std::move(name), [&network, graph] {
            return sim::Controller([&network, graph](const sim::WorldState& w) {
              return network.act(policy::observe(w, w.goal, graph), w.command);
            });
          }};
}

Policy expert_policy(const expert::ExpertParams& params) {
  return {"expert", [params] {
            return sim::Controller(
                [params](const sim::WorldState& w) { return expert::expert_action(w, params); });
          }};
}

Policy always_brake_policy() {
  return {"always_brake", [] {
            return sim::Controller([](const sim::WorldState&) { return Action{0.0, -1.0}; });
          }};
}

TrialResult run_trial(const Policy& policy, const EvalConfig& config, const Setup& setup,
                      Command command, std::uint64_t seed, bool record_trajectory,
                      std::vector<sim::TrajectoryRow>* trajectory) {
  sim::ScenarioConfig sc = config.scenario;
  sc.traffic.density = setup.density;
  const auto scenario = sim::spawn_scenario(sc, command, seed);
  auto result = sim::run_episode(scenario.world, policy.make(), config.limits, record_trajectory);
  if (trajectory) *trajectory = std::move(result.trajectory);
  TrialResult r;
  r.command = command;
  r.setup = setup.name;
  r.density = setup.density;
  r.seed = seed;
  r.outcome = result.outcome;
  if (r.outcome.tag == sim::OutcomeTag::Success) r.nav_time = r.outcome.elapsed;
  return r;
}

SuiteReport run_suite(const Policy& policy, const EvalConfig& config, unsigned jobs) {
  if (config.trials == 0) throw std::invalid_argument("trials must be at least 1");
  struct Job {
    std::size_t setup;
    Command command;
    std::uint64_t seed;
  };
  std::vector<Job> work;
  for (std::size_t s = 0; s < config.setups.size(); ++s)
    for (Command c : config.commands)
      for (std::size_t i = 0; i < config.trials; ++i) work.push_back({s, c, config.base_seed + i});

  SuiteReport report;
  report.method = policy.name;
  report.trials.resize(work.size());
  auto run = [&](std::size_t j) {
    report.trials[j] =
        run_trial(policy, config, config.setups[work[j].setup], work[j].command, work[j].seed);
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    for (std::size_t j = 0; j < work.size(); ++j) run(j);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < jobs; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t j = w; j < work.size(); j += jobs) run(j);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  report.cells = summarize(policy.name, report.trials, config);
  return report;
}

std::vector<CellReport> summarize(const std::string& method, std::span<const TrialResult> trials,
                                  const EvalConfig& config) {
  std::vector<CellReport> cells;
  for (const auto& setup : config.setups) {
    std::vector<CellReport> rows;
    for (Command c : config.commands) {
      std::vector<TrialResult> cell;
      for (const auto& t : trials)
        if (t.setup == setup.name && t.command == c) cell.push_back(t);
      if (cell.empty()) continue;
      std::sort(cell.begin(), cell.end(),
                [](const TrialResult& a, const TrialResult& b) { return a.seed < b.seed; });
      CellReport r;
      r.setup = setup.name;
      r.method = method;
      r.command = std::string(to_string(c));
      r.success_rate_pct = success_rate(cell);
      r.collision_rate_pct = collision_rate(cell);
      r.mean_nav_time_s = mean_navigation_time(cell);
      r.trials = cell.size();
      r.base_seed = config.base_seed;
      rows.push_back(r);
    }
    if (rows.empty()) continue;
    CellReport avg;
    avg.setup = setup.name;
    avg.method = method;
    avg.command = "AVG";
    avg.trials = 0;
    avg.base_seed = config.base_seed;
    double nav = 0.0;
    bool nav_ok = true;
    for (const auto& r : rows) {
      avg.success_rate_pct += r.success_rate_pct;
      avg.collision_rate_pct += r.collision_rate_pct;
      avg.trials += r.trials;
      if (r.mean_nav_time_s) nav += *r.mean_nav_time_s;
      else nav_ok = false;
    }
    const double n = static_cast<double>(rows.size());
    avg.success_rate_pct /= n;
    avg.collision_rate_pct /= n;
    if (nav_ok) avg.mean_nav_time_s = nav / n;
    cells.insert(cells.end(), rows.begin(), rows.end());
    cells.push_back(avg);
  }
  return cells;
}

std::string format_pct(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", p);
  return buf;
}

std::string format_time(std::optional<double> t) { return t ? format_pct(*t) : "NA"; }

void write_report_csv(std::ostream& out, std::span<const CellReport> cells) {
  out << "setup,method,command,success_rate_pct,collision_rate_pct,mean_nav_time_s,trials,base_seed\n";
  for (const auto& c : cells)
    out << c.setup << ',' << c.method << ',' << c.command << ',' << format_pct(c.success_rate_pct)
        << ',' << format_pct(c.collision_rate_pct) << ',' << format_time(c.mean_nav_time_s) << ','
        << c.trials << ',' << c.base_seed << '\n';
}

void write_trials_csv(std::ostream& out, const std::string& method,
                      std::span<const TrialResult> trials) {
  out << "setup,method,command,density,seed,outcome,elapsed_s,steps,nav_time_s\n";
  char buf[64];
  for (const auto& t : trials) {
    std::snprintf(buf, sizeof buf, "%.17g", t.outcome.elapsed);
    out << t.setup << ',' << method << ',' << to_string(t.command) << ',' << t.density << ','
        << t.seed << ',' << sim::to_string(t.outcome.tag) << ',' << buf << ','
        << t.outcome.steps << ',';
    if (t.nav_time) {
      std::snprintf(buf, sizeof buf, "%.17g", *t.nav_time);
      out << buf;
    } else {
      out << "NA";
    }
    out << '\n';
  }
}

std::vector<AblationRow> run_ablation(const expert::DemoDataset& dataset,
                                      std::span<const graph::EdgeStrategy> strategies,
                                      const train::TrainConfig& train_config,
                                      const EvalConfig& eval_config, unsigned jobs,
                                      std::ostream* log) {
  EvalConfig ec = eval_config;
  ec.setups = {{"hard", 7}};
  for (const auto& s : eval_config.setups)
    if (s.name == "hard") ec.setups = {s};
  ec.commands = {Command::Forward};

  std::vector<AblationRow> rows;
  for (auto strategy : strategies) {
    train::TrainConfig tc = train_config;
    tc.network = policy::NetworkKind::Gcil;
    tc.graph.strategy = strategy;
    if (log) *log << "ablation: training " << graph::to_string(strategy) << '\n' << std::flush;
    const auto run = train::train(dataset, tc);
    const auto& net = run.final_state.network;
    const auto report =
        run_suite(learned_policy(std::string(graph::to_string(strategy)), net, tc.graph), ec, jobs);
    AblationRow row;
    row.strategy = strategy;
    row.cell = report.cells.front();
    row.train_config_json = config::train_to_json(tc);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "strategy,success_rate_pct,collision_rate_pct,mean_nav_time_s\n";
  for (const auto& r : rows)
    out << graph::to_string(r.strategy) << ',' << format_pct(r.cell.success_rate_pct) << ','
        << format_pct(r.cell.collision_rate_pct) << ',' << format_time(r.cell.mean_nav_time_s)
        << '\n';
}

}  // namespace gcil::eval
