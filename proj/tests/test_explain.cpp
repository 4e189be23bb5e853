#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "knowsite/explain.hpp"
#include "knowsite/heatmap.hpp"
#include "knowsite/trainer.hpp"
#include "test_support.hpp"

using namespace knowsite;
using namespace knowsite::xai;
using knowsite::testsupport::fast_train_config;
using knowsite::testsupport::make_planted_world;
using knowsite::testsupport::tiny_city;

namespace {

struct TrainedWorld {
  testsupport::PlantedWorld world;
  model::TrainResult trained;
};

TrainedWorld& shared_trained() {
  static TrainedWorld tw = [] {
    TrainedWorld t{make_planted_world(
                       tiny_city(2002),
                       {{synth::PatternKind::RelatedBrandColocation, {0, 5}, 0.9}}),
                   {}};
    auto cfg = fast_train_config(31);
    cfg.max_epochs = 4;
    t.trained = model::train(t.world.kg, t.world.dataset, nullptr, nullptr,
                             t.world.paths, cfg, t.world.region_popularity);
    return t;
  }();
  return tw;
}

}  // namespace

TEST_CASE("brand attention rows are probability vectors over 8 criteria") {
  auto& tw = shared_trained();
  auto report = brand_attention(*tw.trained.model, tw.world.kg.brand_ids());
  CHECK(report.columns.size() == 8);
  REQUIRE(report.values.size() == tw.world.kg.brand_ids().size());
  for (const auto& row : report.values) {
    double total = 0;
    for (double v : row) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("unknown brand name raises a lookup error") {
  auto& tw = shared_trained();
  CHECK_THROWS_AS(
      (void)brand_attention_by_name(*tw.trained.model, {"no_such_brand"}),
      LookupError);
  auto report = brand_attention_by_name(*tw.trained.model,
                                        {tw.world.city.brand_names[0]});
  CHECK(report.row_names.size() == 1);
}

TEST_CASE("single-path override collapses attention to ones") {
  auto& tw = shared_trained();
  std::vector<model::RelationPath> one_path = {tw.world.paths[0]};
  model::ModelConfig mc = tw.trained.model->config();
  model::KnowSiteModel m(tw.world.kg, mc, nullptr, nullptr, one_path);
  auto report = brand_attention(m, {tw.world.kg.brand_ids()[0]});
  REQUIRE(report.values.size() == 1);
  REQUIRE(report.values[0].size() == 1);
  CHECK(report.values[0][0] == doctest::Approx(1.0));
}

TEST_CASE("category attention averages brand rows") {
  auto& tw = shared_trained();
  auto brands = brand_attention(*tw.trained.model, tw.world.kg.brand_ids());
  auto cates = category_attention(*tw.trained.model);
  CHECK(cates.row_names.size() >= 1);
  for (const auto& row : cates.values) {
    double total = 0;
    for (double v : row) total += v;
    CHECK(std::abs(total - 1.0) <= 1e-9);  // convex combination
  }

  // A category holding exactly one brand equals that brand's row.
  const auto& kg = tw.world.kg;
  auto b2c1 = *kg.find_relation("BrandToCate_1");
  std::map<int, std::vector<int>> by_cate;
  for (const auto& f : kg.facts()) {
    if (f.r == b2c1) by_cate[f.o].push_back(f.s);
  }
  for (const auto& [cate, members] : by_cate) {
    if (members.size() != 1) continue;
    const std::string cate_name = kg.entity(cate).name;
    const std::string brand_name = kg.entity(members[0]).name;
    for (size_t i = 0; i < cates.row_names.size(); ++i) {
      if (cates.row_names[i] != cate_name) continue;
      for (size_t b = 0; b < brands.row_names.size(); ++b) {
        if (brands.row_names[b] != brand_name) continue;
        for (size_t c = 0; c < cates.columns.size(); ++c) {
          CHECK(cates.values[i][c] ==
                doctest::Approx(brands.values[b][c]).epsilon(1e-12));
        }
      }
    }
    break;
  }
}

TEST_CASE("cosine matrix basics") {
  Rng rng(5);
  auto rows = num::Tensor::from(
      {4, 2}, {1, 0, /*opposite*/ -1, 0, /*same as first*/ 2, 0, /*zero*/ 0, 0});
  auto table = EmbeddingTable::make(rows, {"a", "b", "c", "z"});
  auto m = cosine_matrix(table, {"a", "b", "c", "z"});
  CHECK(m.distance[0][0] == 0.0);
  CHECK(m.distance[0][1] == doctest::Approx(2.0));  // opposite
  CHECK(m.distance[0][2] == doctest::Approx(0.0));  // same direction
  CHECK(m.distance[0][3] == doctest::Approx(1.0));  // zero vector
  CHECK(m.zero_vector_warnings == 1);
  // Symmetry and range.
  for (size_t i = 0; i < 4; ++i) {
    for (size_t j = 0; j < 4; ++j) {
      CHECK(m.distance[i][j] == doctest::Approx(m.distance[j][i]));
      CHECK(m.distance[i][j] >= 0.0);
      CHECK(m.distance[i][j] <= 2.0);
    }
  }
}

TEST_CASE("cosine matrix matches the scalar formula on randoms") {
  Rng rng(6);
  auto rows = num::Tensor::uniform({3, 4}, -1, 1, rng);
  auto table = EmbeddingTable::make(rows, {"x", "y", "z"});
  auto m = cosine_matrix(table, {"x", "y", "z"});
  for (size_t i = 0; i < 3; ++i) {
    for (size_t j = 0; j < 3; ++j) {
      double dot = 0, ni = 0, nj = 0;
      for (int64_t k = 0; k < 4; ++k) {
        dot += rows.at(static_cast<int64_t>(i), k) *
               rows.at(static_cast<int64_t>(j), k);
        ni += rows.at(static_cast<int64_t>(i), k) *
              rows.at(static_cast<int64_t>(i), k);
        nj += rows.at(static_cast<int64_t>(j), k) *
              rows.at(static_cast<int64_t>(j), k);
      }
      const double want =
          i == j ? 0.0 : 1.0 - dot / (std::sqrt(ni) * std::sqrt(nj));
      CHECK(std::abs(m.distance[i][j] - want) < 1e-12);
    }
  }
}

TEST_CASE("path group report deltas") {
  auto& tw = shared_trained();
  auto report = eval::evaluate_model(*tw.trained.model, tw.world.dataset,
                                     Split::Test, tw.world.region_popularity,
                                     {10});
  std::map<std::string, eval::MetricsReport> variants;
  variants["full"] = report;
  variants["drop_region"] = report;  // identical variant -> zero delta
  auto pg = path_group_report(variants);
  REQUIRE(pg.rows.size() == 1);
  CHECK(pg.rows[0].hit10_delta == doctest::Approx(0.0));
  CHECK(pg.rows[0].ndcg10_delta == doctest::Approx(0.0));
  // Deltas are full minus variant by definition.
  variants["drop_region"].mean.at(10).hit -= 0.25;
  auto pg2 = path_group_report(variants);
  CHECK(pg2.rows[0].hit10_delta == doctest::Approx(0.25));
}

TEST_CASE("csv emitters write the matrices") {
  namespace fs = std::filesystem;
  auto& tw = shared_trained();
  auto dir = fs::temp_directory_path() / "knowsite_explain";
  fs::create_directories(dir);
  auto report = brand_attention(*tw.trained.model,
                                {tw.world.kg.brand_ids()[0],
                                 tw.world.kg.brand_ids()[1]});
  write_attention_csv(report, dir / "attention_brands.csv");
  std::ifstream in(dir / "attention_brands.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.find("RegionDistance") != std::string::npos);
  CHECK(header.find("StoreCategory") != std::string::npos);
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 2);
}

TEST_CASE("heatmap png writer emits a valid signature") {
  namespace fs = std::filesystem;
  auto path = fs::temp_directory_path() / "knowsite_heatmap.png";
  write_heatmap_png(path, {{0.0, 0.5}, {1.0, 0.25}}, 8);
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8];
  in.read(reinterpret_cast<char*>(sig), 8);
  CHECK(sig[0] == 0x89);
  CHECK(sig[1] == 'P');
  CHECK(sig[2] == 'N');
  CHECK(sig[3] == 'G');
  CHECK(fs::file_size(path) > 50);
}
