#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "knowsite/kg.hpp"

namespace knowsite::model {

enum class PathGroup { RegionBased, BrandBased, StoreBased };

const char* path_group_name(PathGroup g);
PathGroup path_group_from_name(const std::string& name);

// An ordered relation sequence encoding one site-selection criterion.
struct RelationPath {
  std::string criterion;
  PathGroup group = PathGroup::RegionBased;
  std::vector<std::string> relation_names;  // abbreviations or full names
  std::vector<int> relation_ids;

  size_t hops() const { return relation_ids.size(); }
};

// The eight shipped criteria in fixed order; groups partition them 4/2/2.
// Throws ConfigError naming the gap when the vocabulary lacks a relation.
std::vector<RelationPath> default_path_table(const ukg::KnowledgeGraph& kg);

// Override file: TSV with columns criterion, group, relations
// (comma-separated relation names or abbreviations).
std::vector<RelationPath> load_path_table(const std::filesystem::path& file,
                                          const ukg::KnowledgeGraph& kg);

// Keeps the paths outside the given group (the path-group ablations).
std::vector<RelationPath> drop_group(const std::vector<RelationPath>& paths,
                                     PathGroup group);

}  // namespace knowsite::model
