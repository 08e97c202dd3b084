#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcil/expert/expert.hpp"
#include "gcil/graph/encoder.hpp"
#include "gcil/policy/network.hpp"
#include "gcil/sim/outcome.hpp"

namespace gcil::expert {

inline constexpr int kDatasetSchemaVersion = 1;

struct DemoSample {
  policy::Observation observation;  // S and A
  std::array<double, graph::kEgoFeatureDim> x_ego{};
  Command command = Command::Forward;
  Action u_star;
  std::uint64_t episode_id = 0;
  std::uint64_t step = 0;

  bool operator==(const DemoSample& o) const {
    return observation.features == o.observation.features &&
           observation.adjacency == o.observation.adjacency && x_ego == o.x_ego &&
           command == o.command && u_star.delta == o.u_star.delta &&
           u_star.tau == o.u_star.tau && episode_id == o.episode_id && step == o.step;
  }
};

struct DatasetManifest {
  int schema_version = kDatasetSchemaVersion;
  std::string config_hash;
  std::string config_json = "{}";  // effective configuration, as a JSON document
  std::uint64_t base_seed = 0;
  std::array<std::vector<std::uint64_t>, kNumCommands> seeds;
  std::array<std::size_t, kNumCommands> counts{};
  std::array<std::size_t, kNumCommands> successes{};  // successful episodes per command
  std::string feature_units = "raw";

  bool operator==(const DatasetManifest&) const = default;
};

struct DemoDataset {
  std::array<std::vector<DemoSample>, kNumCommands> buffers;
  DatasetManifest manifest;

  std::vector<DemoSample>& buffer(Command c) { return buffers[index_of(c)]; }
  const std::vector<DemoSample>& buffer(Command c) const { return buffers[index_of(c)]; }
  std::size_t size() const;
  bool operator==(const DemoDataset&) const = default;
};

struct EpisodeDemo {
  std::vector<DemoSample> samples;
  sim::EpisodeOutcome outcome;
};

/// Runs the expert on one seeded scenario and records (S, A, x_ego, u*) at
/// every step before the world advances. Failed episodes are kept.
EpisodeDemo collect_episode(const sim::ScenarioConfig& config, Command command,
                            std::uint64_t seed, std::uint64_t episode_id,
                            const ExpertParams& expert, const graph::GraphConfig& graph,
                            const sim::OutcomeLimits& limits = {});

struct CollectConfig {
  sim::ScenarioConfig scenario;
  ExpertParams expert;
  graph::GraphConfig graph;
  sim::OutcomeLimits limits;
  std::size_t episodes_per_command = 100;
  /// Surrounding vehicles per command during collection.
  std::array<int, kNumCommands> density{5, 3, 3};
  std::uint64_t seed = 1;
};

/// Seed of the i-th episode for a command. Episodes never share a stream.
std::uint64_t episode_seed(std::uint64_t base, Command command, std::size_t index);

/// Collects every command buffer. Episodes run on `jobs` worker threads; the
/// result does not depend on the worker count.
DemoDataset collect_dataset(const CollectConfig& config, unsigned jobs = 1,
                            const std::string& config_json = "{}");

class DatasetParseError : public std::runtime_error {
 public:
  DatasetParseError(std::string file, std::size_t line, const std::string& what);
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

std::string buffer_file_name(Command c);  // e.g. "turn_left.jsonl"

void write_sample(std::ostream& out, const DemoSample& sample);
/// Parses one record; `line` is reported in errors.
DemoSample parse_sample(const std::string& text, Command expected, const std::string& file,
                        std::size_t line);
/// Appends records to `out` until the stream ends. On a malformed record the
/// records before it stay in `out` and a DatasetParseError is thrown.
void read_buffer(std::istream& in, Command expected, const std::string& file,
                 std::vector<DemoSample>& out);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);

/// Writes forward.jsonl, turn_left.jsonl, turn_right.jsonl and manifest.json.
void dataset_write(const DemoDataset& dataset, const std::filesystem::path& dir);
/// Reads a dataset directory and checks the manifest counts.
DemoDataset dataset_read(const std::filesystem::path& dir);

/// 64-bit FNV-1a of `text` as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace gcil::expert
