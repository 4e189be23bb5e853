#include "knowsite/paths.hpp"

#include <sstream>

#include "knowsite/sources.hpp"

namespace knowsite::model {

const char* path_group_name(PathGroup g) {
  switch (g) {
    case PathGroup::RegionBased: return "region";
    case PathGroup::BrandBased: return "brand";
    case PathGroup::StoreBased: return "store";
  }
  return "?";
}

PathGroup path_group_from_name(const std::string& name) {
  if (name == "region") return PathGroup::RegionBased;
  if (name == "brand") return PathGroup::BrandBased;
  if (name == "store") return PathGroup::StoreBased;
  throw ConfigError("unknown path group: " + name);
}

namespace {

RelationPath resolve(const ukg::KnowledgeGraph& kg, std::string criterion,
                     PathGroup group, std::vector<std::string> names) {
  RelationPath p;
  p.criterion = std::move(criterion);
  p.group = group;
  p.relation_names = std::move(names);
  for (const auto& name : p.relation_names) {
    auto id = kg.find_relation(name);
    if (!id) {
      throw ConfigError("path '" + p.criterion +
                        "' needs missing relation: " + name);
    }
    p.relation_ids.push_back(*id);
  }
  return p;
}

}  // namespace

std::vector<RelationPath> default_path_table(const ukg::KnowledgeGraph& kg) {
  std::vector<RelationPath> paths;
  paths.push_back(resolve(kg, "RegionDistance", PathGroup::RegionBased,
                          {"OSA", "NB"}));
  paths.push_back(resolve(kg, "RegionFunction", PathGroup::RegionBased,
                          {"OSA", "SF"}));
  paths.push_back(
      resolve(kg, "RegionFlow", PathGroup::RegionBased, {"OSA", "FT"}));
  paths.push_back(resolve(kg, "BusinessArea", PathGroup::RegionBased,
                          {"OSA", "BS'", "BS"}));
  paths.push_back(
      resolve(kg, "RelatedBrand", PathGroup::BrandBased, {"RB", "OSA"}));
  paths.push_back(resolve(kg, "BrandCategory", PathGroup::BrandBased,
                          {"B2C_1", "B2C_1'", "OSA"}));
  paths.push_back(resolve(kg, "Competitiveness", PathGroup::StoreBased,
                          {"BO", "Comp", "LA"}));
  paths.push_back(resolve(kg, "StoreCategory", PathGroup::StoreBased,
                          {"B2C_1", "P2C_1'", "LA"}));
  return paths;
}

std::vector<RelationPath> load_path_table(const std::filesystem::path& file,
                                          const ukg::KnowledgeGraph& kg) {
  auto t = ukg::read_tsv(file);
  const int crit = t.column("criterion", file.filename().string());
  const int group = t.column("group", file.filename().string());
  const int rels = t.column("relations", file.filename().string());
  std::vector<RelationPath> paths;
  for (const auto& row : t.rows) {
    std::vector<std::string> names;
    std::stringstream ss(row[static_cast<size_t>(rels)]);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (!name.empty()) names.push_back(name);
    }
    if (names.empty()) {
      throw ConfigError("path '" + row[static_cast<size_t>(crit)] +
                        "' has no relations");
    }
    paths.push_back(resolve(kg, row[static_cast<size_t>(crit)],
                            path_group_from_name(row[static_cast<size_t>(group)]),
                            std::move(names)));
  }
  if (paths.empty()) throw ConfigError("path table file is empty");
  return paths;
}

std::vector<RelationPath> drop_group(const std::vector<RelationPath>& paths,
                                     PathGroup group) {
  std::vector<RelationPath> kept;
  for (const auto& p : paths) {
    if (p.group != group) kept.push_back(p);
  }
  return kept;
}

}  // namespace knowsite::model
