#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "support.hpp"

using namespace gcil;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result gcil_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const fs::path& p) {
  const auto text = gcil::testing::read_file(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::vector<std::string> manifest_hashes(const fs::path& dir) {
  const auto j = nlohmann::json::parse(gcil::testing::read_file(dir / "run_manifest.json"));
  std::vector<std::string> h;
  for (const auto& f : j["files"]) h.push_back(f["sha256"]);
  return h;
}

// A small dataset shared by the tests that need one.
const fs::path& dataset_dir() {
  static const fs::path dir = [] {
    const auto root = gcil::testing::scratch_dir("cli_data");
    const auto r = gcil_run({"collect", "--episodes", "2", "--seed", "3", "--out", (root / "d").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return root / "d";
  }();
  return dir;
}

}  // namespace

TEST(Cli, CollectWritesBuffersAndManifest) {
  const auto& d = dataset_dir();
  const auto manifest = nlohmann::json::parse(gcil::testing::read_file(d / "manifest.json"));
  for (const char* name : {"forward", "turn_left", "turn_right"}) {
    ASSERT_TRUE(fs::exists(d / (std::string(name) + ".jsonl")));
    EXPECT_EQ(line_count(d / (std::string(name) + ".jsonl")), manifest["counts"][name].get<std::size_t>());
  }
  const auto run = nlohmann::json::parse(gcil::testing::read_file(d / "run_manifest.json"));
  EXPECT_EQ(run["subcommand"], "collect");
  EXPECT_EQ(run["config_hash"].get<std::string>().size(), 64u);
  EXPECT_EQ(run["files"].size(), 4u);
}

TEST(Cli, CollectTwiceGivesIdenticalHashes) {
  const auto root = gcil::testing::scratch_dir("cli_collect_twice");
  for (const char* sub : {"a", "b"}) {
    const auto r = gcil_run({"collect", "--episodes", "1", "--seed", "8", "--jobs", sub[0] == 'a' ? "1" : "2",
                             "--out", (root / sub).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(manifest_hashes(root / "a"), manifest_hashes(root / "b"));
  EXPECT_EQ(cli::sha256_file(root / "a" / "forward.jsonl"), cli::sha256_file(root / "b" / "forward.jsonl"));
}

TEST(Cli, MisspelledConfigKeyIsAConfigError) {
  const auto root = gcil::testing::scratch_dir("cli_bad_config");
  {
    std::ofstream f(root / "c.json");
    f << R"({"traffic": {"densty": 5}})";
  }
  const auto r = gcil_run({"collect", "--config", (root / "c.json").string(), "--out", (root / "o").string()});
  EXPECT_EQ(r.code, cli::kConfigError);
  EXPECT_NE(r.err.find("traffic.density"), std::string::npos) << r.err;
  const auto s = gcil_run({"collect", "--set", "expert.ttc_treshold=2", "--out", (root / "o").string()});
  EXPECT_EQ(s.code, cli::kConfigError);
  EXPECT_NE(s.err.find("expert.ttc_threshold"), std::string::npos) << s.err;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(gcil_run({}).code, cli::kConfigError);
  EXPECT_EQ(gcil_run({"fly"}).code, cli::kConfigError);
  EXPECT_EQ(gcil_run({"train"}).code, cli::kConfigError);  // --data is required
  EXPECT_EQ(gcil_run({"--help"}).code, cli::kOk);
}

TEST(Cli, TrainRecordsNetworkAndLossRows) {
  const auto root = gcil::testing::scratch_dir("cli_train");
  for (const char* net : {"gcil", "nncil", "setcil"}) {
    const auto out = root / net;
    const auto r = gcil_run({"train", "--data", dataset_dir().string(), "--network", net, "--max-steps", "4",
                             "--set", "train.batch_size=24", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(line_count(out / "loss.csv"), 5u);
    const auto ck = nlohmann::json::parse(gcil::testing::read_file(out / "final.json"));
    EXPECT_EQ(ck["network_kind"], net);
  }
  // A checkpoint of one kind is refused where another kind is expected.
  const auto bad = gcil_run({"eval", "--checkpoint", (root / "gcil" / "final.json").string(), "--network",
                             "nncil", "--trials", "1", "--out", (root / "e").string()});
  EXPECT_EQ(bad.code, cli::kConfigError);
  EXPECT_NE(bad.err.find("network_kind"), std::string::npos) << bad.err;
}

TEST(Cli, TrainResumeReproducesUninterruptedRun) {
  const auto root = gcil::testing::scratch_dir("cli_resume");
  const std::vector<std::string> base{"train", "--data", dataset_dir().string(), "--set",
                                      "train.batch_size=24", "--set", "train.eval_every=3"};
  auto full = base;
  full.insert(full.end(), {"--max-steps", "6", "--out", (root / "full").string()});
  ASSERT_EQ(gcil_run(full).code, 0);
  auto part = base;
  part.insert(part.end(), {"--max-steps", "3", "--out", (root / "part").string()});
  ASSERT_EQ(gcil_run(part).code, 0);
  auto resume = base;
  resume.insert(resume.end(), {"--max-steps", "6", "--resume", (root / "part" / "final.json").string(),
                               "--out", (root / "part").string()});
  const auto r = gcil_run(resume);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(cli::sha256_file(root / "full" / "final.json"), cli::sha256_file(root / "part" / "final.json"));
  EXPECT_EQ(line_count(root / "part" / "loss.csv"), 7u);
}

TEST(Cli, EvalWritesPerTrialRowsThatReplayReproduces) {
  const auto root = gcil::testing::scratch_dir("cli_eval");
  const auto r = gcil_run({"eval", "--policy", "expert", "--trials", "2", "--jobs", "2", "--out",
                           (root / "e").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(root / "e" / "trials.csv"), 1u + 9u * 2u);
  EXPECT_EQ(line_count(root / "e" / "report.csv"), 1u + 12u);

  std::istringstream trials(gcil::testing::read_file(root / "e" / "trials.csv"));
  std::string line;
  std::getline(trials, line);
  int replayed = 0;
  while (std::getline(trials, line) && replayed < 4) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    const auto rep = gcil_run({"replay", "--policy", "expert", "--setup", f[0], "--command", f[2],
                               "--trial-seed", f[4], "--out", (root / "r").string()});
    ASSERT_EQ(rep.code, 0) << rep.err;
    EXPECT_EQ(rep.out, "outcome " + f[5] + " elapsed_s " + f[6] + " steps " + f[7] + "\n");
    EXPECT_GT(line_count(root / "r" / "actions.csv"), 1u);
    ++replayed;
  }
  EXPECT_EQ(replayed, 4);
}

TEST(Cli, EvalSmokeRunIsDeterministic) {
  const auto root = gcil::testing::scratch_dir("cli_eval_twice");
  for (const char* sub : {"a", "b"})
    ASSERT_EQ(gcil_run({"eval", "--policy", "always_brake", "--trials", "2", "--out", (root / sub).string()}).code, 0);
  EXPECT_EQ(gcil::testing::read_file(root / "a" / "report.csv"), gcil::testing::read_file(root / "b" / "report.csv"));
  EXPECT_EQ(gcil::testing::read_file(root / "a" / "trials.csv"), gcil::testing::read_file(root / "b" / "trials.csv"));
}

TEST(Cli, AblateRowPerStrategy) {
  const auto root = gcil::testing::scratch_dir("cli_ablate");
  const auto r = gcil_run({"ablate", "--data", dataset_dir().string(), "--strategy", "n_close,non_weighted",
                           "--trials", "1", "--epochs", "1", "--set", "train.batch_size=24", "--out",
                           (root / "a").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(root / "a" / "ablation.csv"), 3u);
  const auto audit = nlohmann::json::parse(gcil::testing::read_file(root / "a" / "ablation_configs.json"));
  EXPECT_EQ(audit.size(), 2u);
}

TEST(Cli, GradcheckPasses) {
  const auto root = gcil::testing::scratch_dir("cli_gradcheck");
  const auto r = gcil_run({"gradcheck", "--network", "all", "--samples", "60", "--out", root.string()});
  EXPECT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(line_count(root / "gradcheck.csv"), 4u);
}
