#include <gtest/gtest.h>

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcil/config.hpp"
#include "support.hpp"

using namespace gcil;
using namespace gcil::config;
using json = nlohmann::ordered_json;

namespace {

std::string error_of(const std::string& text) {
  try {
    from_json(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
  return d[a.size()][b.size()];
}

// Every object key in the default tree with its dotted parent path.
void collect_keys(const json& j, const std::string& path,
                  std::vector<std::pair<std::string, std::vector<std::string>>>& out) {
  std::vector<std::string> siblings;
  for (const auto& [k, _] : j.items()) siblings.push_back(k);
  for (const auto& [k, v] : j.items()) {
    out.push_back({path.empty() ? k : path + "." + k, siblings});
    if (v.is_object()) collect_keys(v, path.empty() ? k : path + "." + k, out);
  }
}

json nest(const std::string& dotted, json leaf) {
  std::vector<std::string> parts;
  std::string rest = dotted;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
    parts.push_back(rest.substr(0, pos));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) leaf = json{{*it, leaf}};
  return leaf;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const RunConfig def;
  const auto text = to_json(def);
  EXPECT_EQ(to_json(from_json(text)), text);
  EXPECT_EQ(to_json(from_json("{}")), text);
}

TEST(Config, PartialDocumentOverridesOnlyGivenKeys) {
  const auto c = from_json(R"({"traffic": {"density": 7}, "train": {"lr": 0.0005, "network": "setcil"}})");
  EXPECT_EQ(c.scenario.traffic.density, 7);
  EXPECT_EQ(c.train.adam.lr, 0.0005);
  EXPECT_EQ(c.train.network, policy::NetworkKind::SetCil);
  EXPECT_EQ(c.train.batch_size, 512u);
  EXPECT_EQ(c.graph.alpha_m, 10.0);
}

TEST(Config, MisspelledKeyNamesNearest) {
  const auto msg = error_of(R"({"traffic": {"densty": 5}})");
  EXPECT_NE(msg.find("traffic.densty"), std::string::npos) << msg;
  EXPECT_NE(msg.find("did you mean 'traffic.density'"), std::string::npos) << msg;
  const auto top = error_of(R"({"grapj": {}})");
  EXPECT_NE(top.find("did you mean 'graph'"), std::string::npos) << top;
}

TEST(Config, FuzzedMisspellingsAlwaysSuggestAClosestKey) {
  const auto tree = json::parse(to_json(RunConfig{}));
  std::vector<std::pair<std::string, std::vector<std::string>>> keys;
  collect_keys(tree, "", keys);
  ASSERT_GT(keys.size(), 50u);
  Rng rng(404);
  int checked = 0;
  for (const auto& [full, siblings] : keys) {
    const auto dot = full.rfind('.');
    const std::string parent = dot == std::string::npos ? "" : full.substr(0, dot);
    const std::string key = dot == std::string::npos ? full : full.substr(dot + 1);
    for (int attempt = 0; attempt < 3; ++attempt) {
      std::string typo = key;
      const std::size_t pos = rng.index(typo.size());
      switch (rng.index(3)) {
        case 0: typo.erase(pos, 1); break;
        case 1: typo[pos] = static_cast<char>('a' + rng.index(26)); break;
        default: typo.insert(pos, 1, static_cast<char>('a' + rng.index(26)));
      }
      if (typo.empty() || std::find(siblings.begin(), siblings.end(), typo) != siblings.end()) continue;
      const std::string bad_path = parent.empty() ? typo : parent + "." + typo;
      const auto msg = error_of(nest(bad_path, 1).dump());
      ASSERT_NE(msg.find("unknown key '" + bad_path + "'"), std::string::npos) << msg;
      const auto at = msg.find("did you mean '");
      ASSERT_NE(at, std::string::npos) << msg;
      std::string guess = msg.substr(at + 14);
      guess = guess.substr(0, guess.find('\''));
      const std::string guess_key = parent.empty() ? guess : guess.substr(parent.size() + 1);
      std::size_t best = SIZE_MAX;
      for (const auto& s : siblings) best = std::min(best, levenshtein(typo, s));
      ASSERT_EQ(levenshtein(typo, guess_key), best) << msg;
      ASSERT_LE(best, 1u);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Config, TypeErrorsNameTheField) {
  auto msg = error_of(R"({"train": {"batch_size": "big"}})");
  EXPECT_NE(msg.find("train.batch_size"), std::string::npos) << msg;
  msg = error_of(R"({"graph": {"strategy": "ring"}})");
  EXPECT_NE(msg.find("graph.strategy"), std::string::npos) << msg;
  msg = error_of(R"({"traffic": {"density": 4}})");
  EXPECT_NE(msg.find("traffic.density"), std::string::npos) << msg;
  msg = error_of(R"({"train": {"lr": -1}})");
  EXPECT_NE(msg.find("train.lr"), std::string::npos) << msg;
  msg = error_of(R"({"train": {"shape": {"input_scale": 0}}})");
  EXPECT_NE(msg.find("train.shape.input_scale"), std::string::npos) << msg;
  msg = error_of(R"({"layout": 3})");
  EXPECT_NE(msg.find("layout"), std::string::npos) << msg;
  EXPECT_NE(error_of("{oops"), "");
}

TEST(Config, OverridesUseDottedPaths) {
  auto c = apply_override(RunConfig{}, "graph.strategy=star");
  EXPECT_EQ(c.graph.strategy, graph::EdgeStrategy::StarConnected);
  EXPECT_EQ(c.train.graph.strategy, graph::EdgeStrategy::StarConnected);
  c = apply_override(c, "expert.ttc_threshold=3.5");
  EXPECT_EQ(c.expert.ttc_threshold, 3.5);
  c = apply_override(c, "eval.trials=5");
  EXPECT_EQ(c.eval.trials, 5u);
  EXPECT_THROW(apply_override(c, "eval.trails=5"), ConfigError);
  EXPECT_THROW(apply_override(c, "no_equals_sign"), ConfigError);
}

TEST(Config, LoadFromFile) {
  const auto dir = gcil::testing::scratch_dir("config_load");
  {
    std::ofstream f(dir / "c.json");
    f << R"({"episode": {"timeout_s": 20}, "expert": {"episodes_per_command": 7}})";
  }
  const auto c = load_config(dir / "c.json");
  EXPECT_EQ(c.scenario.episode.timeout_s, 20.0);
  EXPECT_EQ(c.episodes_per_command, 7u);
  EXPECT_EQ(collect_config(c).episodes_per_command, 7u);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}

TEST(Config, EditDistanceAndNearest) {
  EXPECT_EQ(edit_distance("kitten", "sitting"), 3u);
  EXPECT_EQ(edit_distance("", "abc"), 3u);
  EXPECT_EQ(nearest("densty", {"min_separation_m", "density", "ranges"}), "density");
  EXPECT_EQ(nearest("ab", {"ax", "ay"}), "ax");
}

TEST(Config, TrainSectionJsonIsComplete) {
  train::TrainConfig t;
  t.graph.strategy = graph::EdgeStrategy::NonWeighted;
  const auto j = json::parse(train_to_json(t));
  EXPECT_EQ(j["graph"]["strategy"], "non_weighted");
  EXPECT_EQ(j["batch_size"], 512);
  EXPECT_EQ(j["network"], "gcil");
}
