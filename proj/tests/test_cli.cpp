#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ood/cli.hpp"
#include "ood/io.hpp"
#include "ood/pipeline.hpp"

using namespace ood;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "ood_cli_tests";
    fs::remove_all(dir_);
    const auto r = run({"synth", "--out", dir_.string(), "--seed", "7", "--clusters", "4", "--per-cluster", "60",
                        "--dim", "8", "--ood-samples", "100", "--holdout-per-cluster", "20"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, SynthWritesManifest) {
  EXPECT_TRUE(fs::exists(path("id.oode")));
  EXPECT_TRUE(fs::exists(path("holdout.oode")));
  std::ifstream in(path("manifest.json"));
  const auto m = nlohmann::json::parse(in);
  EXPECT_EQ(m["version"], kToolVersion);
  EXPECT_EQ(m["config"]["seed"], "7");
  EXPECT_EQ(m["outputs"].size(), 5u);
  EXPECT_EQ(m["outputs"][0]["sha256"].get<std::string>().size(), 64u);
  EXPECT_TRUE(m["timings_ms"].contains("generate"));
}

TEST_F(Cli, FitCalibrateScoreEval) {
  auto r = run({"fit", "--id", path("id.oode"), "--out", path("m.json"), "--partition-out", path("part.oodl"),
                "--edges-out", path("edges.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("cluster_count:"), std::string::npos);
  EXPECT_EQ(load_labels(path("part.oodl")).size(), 240u);
  EXPECT_TRUE(fs::exists(path("m.json.manifest.json")));

  r = run({"calibrate", "--model", path("m.json"), "--holdout", path("holdout.oode"), "--out", path("mc.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(load_model(path("mc.json")).threshold.has_value());

  r = run({"score", "--model", path("mc.json"), "--input", path("ood.oode"), "--out", path("s.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream csv(path("s.csv"));
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_EQ(header, "index,score,nearest_cluster,is_ood");
  EXPECT_TRUE(row.ends_with(",1") || row.ends_with(",0"));

  r = run({"eval", "--model", path("mc.json"), "--id", path("holdout.oode"), "--ood", path("ood.oode"), "--out",
           path("ev.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream ev(path("ev.json"));
  const auto j = nlohmann::json::parse(ev);
  EXPECT_GT(j["auroc"].get<double>(), 0.9);
  EXPECT_TRUE(j.contains("accuracy_at_threshold"));
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  {
    std::ofstream c(path("cfg.json"));
    c << R"({"k": 3, "seed": 5, "unknown-key": 1})";
  }
  auto r = run({"--config", path("cfg.json"), "fit", "--id", path("id.oode"), "--out", path("mk.json"), "--k", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = load_model(path("mk.json"));
  EXPECT_EQ(m.metadata.config.k, 4u);
  EXPECT_EQ(m.metadata.config.seed, 5u);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"fit", "--id", path("id.oode")}).code, kExitUsage);
  EXPECT_EQ(run({"fit", "--id", path("id.oode"), "--out", path("x.json"), "--k", "0"}).code, kExitUsage);
  EXPECT_EQ(run({"fit", "--id", path("id.oode"), "--out", path("x.json"), "--pca-var", "0.9", "--pca-dim", "3"}).code,
            kExitUsage);
  EXPECT_EQ(run({"bogus"}).code, kExitUsage);
  ASSERT_EQ(run({"fit", "--id", path("id.oode"), "--out", path("m2.json")}).code, 0);
  EXPECT_EQ(run({"calibrate", "--model", path("m2.json"), "--holdout", path("id.oode"), "--percentile", "101",
                 "--out", path("x.json")})
                .code,
            kExitUsage);
}

TEST_F(Cli, DataErrorsHaveDistinctCodes) {
  EXPECT_EQ(run({"fit", "--id", path("missing.oode"), "--out", path("x.json")}).code, kExitIo);
  {
    std::ofstream bad(path("bad.oode"), std::ios::binary);
    bad << "NOPE and more bytes here......";
  }
  EXPECT_EQ(run({"fit", "--id", path("bad.oode"), "--out", path("x.json")}).code, kExitFormat);
  save_embeddings(EmbeddingMatrix(2, 3, {1, 2, 3, 4, 5, 6}), path("d3.oode"));
  ASSERT_EQ(run({"fit", "--id", path("id.oode"), "--out", path("m3.json")}).code, 0);
  EXPECT_EQ(run({"score", "--model", path("m3.json"), "--input", path("d3.oode"), "--out", path("x.csv")}).code,
            kExitShape);
}

TEST_F(Cli, AblateSweeps) {
  auto r = run({"ablate", "--sweep", "k", "--values", "3..5", "--id", path("id.oode"), "--ood", path("ood.oode"),
                "--out", path("k.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("auroc spread"), std::string::npos);
  std::ifstream k(path("k.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(k, line)) ++lines;
  EXPECT_EQ(lines, 4);

  r = run({"ablate", "--sweep", "raw-knn", "--id", path("id.oode"), "--ood", path("ood.oode"), "--out",
           path("r.csv")});
  EXPECT_EQ(r.code, kExitUsage);
  r = run({"ablate", "--sweep", "raw-knn", "--values", "5,7", "--id", path("id.oode"), "--ood", path("ood.oode"),
           "--holdout", path("holdout.oode"), "--out", path("r.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("pipeline_auroc"), std::string::npos);

  r = run({"ablate", "--sweep", "threshold", "--id", path("id.oode"), "--ood", path("ood.oode"), "--holdout",
           path("holdout.oode"), "--out", path("t.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"ablate", "--sweep", "clusterer", "--id", path("id.oode"), "--ood", path("ood.oode"), "--out",
           path("c.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("kmeans"), std::string::npos);
}

TEST(CliBasics, VersionAndHelp) {
  auto r = run({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(kToolVersion), std::string::npos);
  r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("ablate"), std::string::npos);
}
