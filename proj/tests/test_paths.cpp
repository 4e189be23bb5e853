#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "knowsite/paths.hpp"

using namespace knowsite;
using namespace knowsite::model;

namespace {

ukg::KnowledgeGraph full_vocab_kg() {
  std::vector<ukg::Entity> entities;
  ukg::Entity e;
  e.id = 0;
  e.ontology = ukg::Ontology::Region;
  e.name = "region:r0";
  entities.push_back(e);
  return ukg::KnowledgeGraph(entities,
                             ukg::with_inverses(ukg::base_relations()), {});
}

}  // namespace

TEST_CASE("default table carries the eight criteria in order") {
  auto kg = full_vocab_kg();
  auto paths = default_path_table(kg);
  REQUIRE(paths.size() == 8);
  const std::vector<std::string> names = {
      "RegionDistance", "RegionFunction", "RegionFlow",      "BusinessArea",
      "RelatedBrand",   "BrandCategory",  "Competitiveness", "StoreCategory"};
  const std::vector<size_t> hops = {2, 2, 2, 3, 2, 3, 3, 3};
  int region = 0, brand = 0, store = 0;
  for (size_t i = 0; i < 8; ++i) {
    CHECK(paths[i].criterion == names[i]);
    CHECK(paths[i].hops() == hops[i]);
    switch (paths[i].group) {
      case PathGroup::RegionBased: ++region; break;
      case PathGroup::BrandBased: ++brand; break;
      case PathGroup::StoreBased: ++store; break;
    }
    for (int id : paths[i].relation_ids) {
      CHECK(id >= 0);
      CHECK(id < kg.relation_count());
    }
  }
  CHECK(region == 4);
  CHECK(brand == 2);
  CHECK(store == 2);
}

TEST_CASE("missing relation is named in the error") {
  // A vocabulary without FlowTransition.
  std::vector<ukg::RelationDef> rels;
  for (const auto& r : ukg::base_relations()) {
    if (r.name == "FlowTransition") continue;
    ukg::RelationDef copy = r;
    copy.id = static_cast<int>(rels.size());
    copy.inverse_id = -1;
    rels.push_back(copy);
  }
  rels = ukg::with_inverses(std::move(rels));
  std::vector<ukg::Entity> entities;
  ukg::Entity e;
  e.id = 0;
  e.ontology = ukg::Ontology::Region;
  e.name = "region:r0";
  entities.push_back(e);
  ukg::KnowledgeGraph kg(entities, rels, {});
  try {
    (void)default_path_table(kg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    CHECK(std::string(err.what()).find("FT") != std::string::npos);
  }
}

TEST_CASE("path table override file") {
  auto kg = full_vocab_kg();
  auto file = std::filesystem::temp_directory_path() / "knowsite_paths.tsv";
  {
    std::ofstream out(file);
    out << "criterion\tgroup\trelations\n";
    out << "OnlyFlow\tregion\tOSA,FT\n";
    out << "OnlyBrand\tbrand\tRB,OpenStoreAt\n";
  }
  auto paths = load_path_table(file, kg);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].criterion == "OnlyFlow");
  CHECK(paths[0].hops() == 2);
  CHECK(paths[1].relation_ids[1] == *kg.find_relation("OSA"));

  {
    std::ofstream out(file);
    out << "criterion\tgroup\trelations\n";
    out << "Bad\tregion\tOSA,NoSuchRelation\n";
  }
  CHECK_THROWS_AS((void)load_path_table(file, kg), ConfigError);
}

TEST_CASE("drop_group removes exactly one group") {
  auto kg = full_vocab_kg();
  auto paths = default_path_table(kg);
  auto no_region = drop_group(paths, PathGroup::RegionBased);
  CHECK(no_region.size() == 4);
  auto no_brand = drop_group(paths, PathGroup::BrandBased);
  CHECK(no_brand.size() == 6);
  auto no_store = drop_group(paths, PathGroup::StoreBased);
  CHECK(no_store.size() == 6);
  for (const auto& p : no_region) CHECK(p.group != PathGroup::RegionBased);
}
