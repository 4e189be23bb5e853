// End-to-end smoke over the CLI binary: synth -> build-kg -> pretrain ->
// train -> evaluate -> explain on a tiny fixture. Skipped unless ctest
// provides KNOWSITE_BIN (the cli_smoke test).

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "knowsite/metrics.hpp"
#include "knowsite/trainer.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;

std::string bin_path() {
  const char* bin = std::getenv("KNOWSITE_BIN");
  return bin == nullptr ? std::string() : std::string(bin);
}

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kConfig = R"json({
  "seed": 9,
  "city": {
    "grid_rows": 4, "grid_cols": 4,
    "n_brands": 6, "n_pois": 170, "n_ba": 3,
    "n_cate1": 4, "n_cate2": 6, "n_cate3": 10
  },
  "patterns": [
    {"kind": "related_brand_colocation", "brands": [0, 3], "strength": 0.9}
  ],
  "extract": {
    "planar": true, "near_km": 1.6, "sim_threshold": 0.95,
    "flow_min": 15, "cochk_min": 3, "comp_km": 1.0, "ba_radius_km": 1.2
  },
  "pretrain": {
    "dim": 16, "lr": 0.01, "batch_size": 128, "dropout": 0.2,
    "max_epochs": 4, "patience": 4
  },
  "train": {
    "dim": 16, "lr": 0.003, "dropout": 0.0, "alpha": 0.5,
    "batch_size": 64, "max_epochs": 3, "patience": 3, "runs": 1,
    "layers": 1, "encoder_op": "rotate", "composition": "add"
  }
})json";

}  // namespace

TEST_CASE("cli_smoke") {
  const std::string bin = bin_path();
  if (bin.empty()) {
    MESSAGE("KNOWSITE_BIN not set; skipping CLI smoke test");
    return;
  }
  auto work = fs::temp_directory_path() / "knowsite_cli_smoke";
  fs::remove_all(work);
  fs::create_directories(work);
  {
    std::ofstream out(work / "config.json");
    out << kConfig;
  }
  const std::string cfg = " --config " + (work / "config.json").string();

  REQUIRE(run(bin + " synth" + cfg + " --out " + (work / "city").string()) ==
          0);
  CHECK(fs::exists(work / "city" / "planted_truth.json"));

  REQUIRE(run(bin + " build-kg --sources " + (work / "city").string() +
              " --out " + (work / "kg").string() + cfg) == 0);
  CHECK(fs::exists(work / "kg" / "triples.tsv"));
  CHECK(fs::exists(work / "kg" / "validation_report.json"));

  const std::string sites = (work / "city" / "sites.tsv").string();
  REQUIRE(run(bin + " pretrain --kg " + (work / "kg").string() + " --sites " +
              sites + " --out " + (work / "pre").string() + cfg) == 0);
  CHECK(fs::exists(work / "pre" / "entities.emb"));

  REQUIRE(run(bin + " train --kg " + (work / "kg").string() + " --sites " +
              sites + " --pretrained " + (work / "pre").string() + cfg +
              " --out " + (work / "model").string()) == 0);
  CHECK(fs::exists(work / "model" / "params.bin"));
  CHECK(fs::exists(work / "model" / "history.csv"));

  REQUIRE(run(bin + " evaluate --model " + (work / "model").string() +
              " --split test --out " + (work / "metrics.json").string()) == 0);
  CHECK(fs::exists(work / "metrics.json"));

  // Determinism: rerunning evaluation reproduces the bytes exactly.
  const std::string first = slurp(work / "metrics.json");
  REQUIRE(run(bin + " evaluate --model " + (work / "model").string() +
              " --split test --out " + (work / "metrics2.json").string()) ==
          0);
  CHECK(first == slurp(work / "metrics2.json"));
  CHECK(first.find("\"H@10\"") != std::string::npos);

  REQUIRE(run(bin + " explain --model " + (work / "model").string() +
              " --out " + (work / "reports").string() +
              " --render-heatmaps") == 0);
  CHECK(fs::exists(work / "reports" / "attention_brands.csv"));
  CHECK(fs::exists(work / "reports" / "attention_categories.csv"));
  CHECK(fs::exists(work / "reports" / "cosine_pretrained.csv"));
  CHECK(fs::exists(work / "reports" / "cosine_encoded.csv"));
  CHECK(fs::exists(work / "reports" / "attention_brands.png"));

  // A failing invocation exits nonzero with a one-line error.
  CHECK(run(bin + " evaluate --model " + (work / "nonexistent").string()) !=
        0);

  // Full determinism of a rerun train with identical config and seed.
  REQUIRE(run(bin + " train --kg " + (work / "kg").string() + " --sites " +
              sites + " --pretrained " + (work / "pre").string() + cfg +
              " --out " + (work / "model_rerun").string()) == 0);
  CHECK(slurp(work / "model" / "history.csv") ==
        slurp(work / "model_rerun" / "history.csv"));
  CHECK(slurp(work / "model" / "params.bin") ==
        slurp(work / "model_rerun" / "params.bin"));
}

TEST_CASE("untrained random-init model scores near the random baseline") {
  // Library-level counterpart of evaluating a 0-epoch model: Hit@10 must sit
  // within 3x of the exact random-ranking expectation.
  auto world = knowsite::testsupport::make_planted_world(
      [] {
        auto cfg = knowsite::testsupport::tiny_city(512);
        cfg.grid_rows = 12;
        cfg.grid_cols = 12;
        cfg.n_brands = 16;
        cfg.n_pois = 500;
        return cfg;
      }(),
      {});
  auto cfg = knowsite::testsupport::fast_train_config(3);
  cfg.max_epochs = 0;  // keep the random initialization
  cfg.alpha = 1.0;
  cfg.layers = 0;
  auto result =
      knowsite::model::train(world.kg, world.dataset, nullptr, nullptr,
                             world.paths, cfg, world.region_popularity);
  auto report = knowsite::eval::evaluate_model(
      *result.model, world.dataset, knowsite::Split::Test,
      world.region_popularity, {10});
  // Exact per-brand baseline: P(top-10 random predictions intersect the
  // min(n_i,10) true regions) via the hypergeometric miss probability.
  const double A = static_cast<double>(world.kg.region_ids().size());
  std::map<int, int> n_true;
  for (const auto& p : world.dataset.test) n_true[p.brand]++;
  double baseline = 0;
  int brands = 0;
  for (const auto& [brand, n] : n_true) {
    const int t = std::min(n, 10);
    double miss = 1.0;
    for (int j = 0; j < 10; ++j) {
      miss *= (A - t - j) / (A - j);
    }
    baseline += 1.0 - miss;
    ++brands;
  }
  baseline /= brands;
  CHECK(report.mean.at(10).hit <= 3.0 * baseline);
}
