#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "gcil/expert/dataset.hpp"
#include "gcil/sim/world.hpp"

namespace gcil::expert {

using json = nlohmann::ordered_json;

std::size_t DemoDataset::size() const {
  std::size_t n = 0;
  for (const auto& b : buffers) n += b.size();
  return n;
}

EpisodeDemo collect_episode(const sim::ScenarioConfig& config, Command command,
                            std::uint64_t seed, std::uint64_t episode_id,
                            const ExpertParams& expert, const graph::GraphConfig& graph,
                            const sim::OutcomeLimits& limits) {
  const auto scenario = sim::spawn_scenario(config, command, seed);
  sim::WorldState world = scenario.world;
  EpisodeDemo demo;
  while (true) {
    if (auto outcome = sim::check_outcome(world, scenario.goal, limits)) {
      demo.outcome = *outcome;
      break;
    }
    DemoSample s;
    s.observation = policy::observe(world, scenario.goal, graph);
    s.x_ego = s.observation.ego();
    s.command = command;
    s.u_star = clamp_action(expert_action(world, expert));
    s.episode_id = episode_id;
    s.step = world.step;
    const Action u = s.u_star;
    demo.samples.push_back(std::move(s));
    sim::advance(world, u);
  }
  return demo;
}

std::uint64_t episode_seed(std::uint64_t base, Command command, std::size_t index) {
  return derive_seed(base, (static_cast<std::uint64_t>(index_of(command)) << 32) | index);
}

DemoDataset collect_dataset(const CollectConfig& config, unsigned jobs,
                            const std::string& config_json) {
  struct Job {
    Command command;
    std::size_t index;
  };
  std::vector<Job> work;
  for (Command c : kAllCommands)
    for (std::size_t i = 0; i < config.episodes_per_command; ++i) work.push_back({c, i});

  std::vector<EpisodeDemo> results(work.size());
  auto run = [&](std::size_t j) {
    const Job& job = work[j];
    sim::ScenarioConfig sc = config.scenario;
    sc.traffic.density = config.density[index_of(job.command)];
    const std::uint64_t id = index_of(job.command) * config.episodes_per_command + job.index;
    results[j] = collect_episode(sc, job.command, episode_seed(config.seed, job.command, job.index),
                                 id, config.expert, config.graph, config.limits);
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    for (std::size_t j = 0; j < work.size(); ++j) run(j);
  } else {
    // Strided partition; each slot is written by exactly one worker.
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

  DemoDataset ds;
  ds.manifest.base_seed = config.seed;
  ds.manifest.config_json = config_json;
  ds.manifest.config_hash = fnv1a_hex(config_json);
  for (std::size_t j = 0; j < work.size(); ++j) {
    const auto k = index_of(work[j].command);
    ds.manifest.seeds[k].push_back(episode_seed(config.seed, work[j].command, work[j].index));
    if (results[j].outcome.tag == sim::OutcomeTag::Success) ++ds.manifest.successes[k];
    auto& buf = ds.buffers[k];
    buf.insert(buf.end(), std::make_move_iterator(results[j].samples.begin()),
               std::make_move_iterator(results[j].samples.end()));
  }
  for (std::size_t k = 0; k < kNumCommands; ++k) ds.manifest.counts[k] = ds.buffers[k].size();
  return ds;
}

DatasetParseError::DatasetParseError(std::string file, std::size_t line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
      file_(std::move(file)),
      line_(line) {}

std::string buffer_file_name(Command c) { return std::string(to_string(c)) + ".jsonl"; }

namespace {

json matrix_json(const nn::Tensor2& t) {
  json rows = json::array();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

nn::Tensor2 matrix_from(const json& j, const char* field, std::size_t cols) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument(std::string(field) + ": expected a non-empty array");
  const std::size_t rows = j.size();
  if (cols == 0) cols = rows;
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols)
      throw std::invalid_argument(std::string(field) + ": expected rows of length " + std::to_string(cols));
    for (const auto& v : row) {
      if (!v.is_number()) throw std::invalid_argument(std::string(field) + ": non-numeric entry");
      data.push_back(v.get<double>());
    }
  }
  return nn::Tensor2::from_data(rows, cols, std::move(data));
}

}  // namespace

void write_sample(std::ostream& out, const DemoSample& s) {
  json j;
  j["episode_id"] = s.episode_id;
  j["step"] = s.step;
  j["command"] = std::string(to_string(s.command));
  j["S"] = matrix_json(s.observation.features);
  j["A"] = matrix_json(s.observation.adjacency);
  j["x_ego"] = s.x_ego;
  j["u_star"] = std::array<double, 2>{s.u_star.delta, s.u_star.tau};
  out << j.dump() << '\n';
}

DemoSample parse_sample(const std::string& text, Command expected, const std::string& file,
                        std::size_t line) {
  try {
    const json j = json::parse(text);
    DemoSample s;
    s.episode_id = j.at("episode_id").get<std::uint64_t>();
    s.step = j.at("step").get<std::uint64_t>();
    const auto cmd = parse_command(j.at("command").get<std::string>());
    if (!cmd) throw std::invalid_argument("command: unknown value");
    if (*cmd != expected) throw std::invalid_argument("command: does not match the buffer");
    s.command = *cmd;
    s.observation.features = matrix_from(j.at("S"), "S", graph::kNodeFeatureDim);
    s.observation.adjacency = matrix_from(j.at("A"), "A", 0);
    if (s.observation.adjacency.rows() != s.observation.features.rows())
      throw std::invalid_argument("A: size does not match S");
    const auto x = j.at("x_ego");
    if (!x.is_array() || x.size() != graph::kEgoFeatureDim)
      throw std::invalid_argument("x_ego: expected 6 values");
    s.x_ego = x.get<std::array<double, graph::kEgoFeatureDim>>();
    const auto u = j.at("u_star");
    if (!u.is_array() || u.size() != 2) throw std::invalid_argument("u_star: expected 2 values");
    s.u_star = {u[0].get<double>(), u[1].get<double>()};
    if (std::abs(s.u_star.delta) > 1.0 || std::abs(s.u_star.tau) > 1.0)
      throw std::invalid_argument("u_star: outside [-1, 1]");
    return s;
  } catch (const DatasetParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw DatasetParseError(file, line, e.what());
  }
}

void read_buffer(std::istream& in, Command expected, const std::string& file,
                 std::vector<DemoSample>& out) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    out.push_back(parse_sample(text, expected, file, line));
  }
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["schema_version"] = m.schema_version;
  j["config_hash"] = m.config_hash;
  j["feature_units"] = m.feature_units;
  j["base_seed"] = m.base_seed;
  json counts, successes, seeds;
  for (Command c : kAllCommands) {
    const auto k = index_of(c);
    const std::string name(to_string(c));
    counts[name] = m.counts[k];
    successes[name] = m.successes[k];
    seeds[name] = m.seeds[k];
  }
  j["counts"] = counts;
  j["successful_episodes"] = successes;
  j["seeds"] = seeds;
  j["config"] = json::parse(m.config_json);
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  const json j = json::parse(text);
  DatasetManifest m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != kDatasetSchemaVersion)
    throw std::runtime_error("manifest: unsupported schema_version " +
                             std::to_string(m.schema_version));
  m.config_hash = j.at("config_hash").get<std::string>();
  m.feature_units = j.at("feature_units").get<std::string>();
  m.base_seed = j.at("base_seed").get<std::uint64_t>();
  for (Command c : kAllCommands) {
    const auto k = index_of(c);
    const std::string name(to_string(c));
    m.counts[k] = j.at("counts").at(name).get<std::size_t>();
    m.successes[k] = j.at("successful_episodes").at(name).get<std::size_t>();
    m.seeds[k] = j.at("seeds").at(name).get<std::vector<std::uint64_t>>();
  }
  m.config_json = j.at("config").dump();
  return m;
}

void dataset_write(const DemoDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (Command c : kAllCommands) {
    const auto path = dir / buffer_file_name(c);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& s : ds.buffer(c)) write_sample(out, s);
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
  DatasetManifest m = ds.manifest;
  for (std::size_t k = 0; k < kNumCommands; ++k) m.counts[k] = ds.buffers[k].size();
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  out << manifest_to_json(m);
}

DemoDataset dataset_read(const std::filesystem::path& dir) {
  DemoDataset ds;
  {
    const auto path = dir / "manifest.json";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    ds.manifest = manifest_from_json(text.str());
  }
  for (Command c : kAllCommands) {
    const auto path = dir / buffer_file_name(c);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing buffer file " + path.string());
    read_buffer(in, c, path.string(), ds.buffer(c));
    if (ds.buffer(c).size() != ds.manifest.counts[index_of(c)])
      throw std::runtime_error(path.string() + ": " + std::to_string(ds.buffer(c).size()) +
                               " records but the manifest lists " +
                               std::to_string(ds.manifest.counts[index_of(c)]));
  }
  return ds;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gcil::expert
