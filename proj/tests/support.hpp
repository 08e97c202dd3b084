#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "gcil/sim/scenario.hpp"

namespace gcil::testing {

inline sim::VehicleState vehicle(double x, double y, double heading, double speed = 0.0, int id = 1) {
  sim::VehicleState v;
  v.id = id;
  v.position = {x, y};
  v.heading = heading;
  v.speed = speed;
  return v;
}

/// A fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gcil_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// World from a spawned scenario with the surrounding traffic replaced.
inline sim::WorldState bare_world(Command command = Command::Forward, std::uint64_t seed = 1) {
  sim::ScenarioConfig cfg;
  auto s = sim::spawn_scenario(cfg, command, seed);
  s.world.surrounding.clear();
  s.world.plans.clear();
  return s.world;
}

}  // namespace gcil::testing
