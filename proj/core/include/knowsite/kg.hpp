#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "knowsite/geometry.hpp"
#include "knowsite/schema.hpp"

namespace knowsite::ukg {

struct Entity {
  int id = -1;
  Ontology ontology = Ontology::Region;
  std::string name;  // globally unique, "<ontology prefix>:<source key>"
  std::optional<geo::Point> point;      // Ba / POI
  std::optional<geo::Polygon> polygon;  // Region
};

struct Fact {
  int s = -1;
  int r = -1;
  int o = -1;
  auto operator<=>(const Fact&) const = default;
};

// Immutable after construction; adjacency indexes incoming edges per
// relation so neighbor reads are O(1) slices.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  KnowledgeGraph(std::vector<Entity> entities, std::vector<RelationDef> rels,
                 std::vector<Fact> facts);

  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<RelationDef>& relations() const { return relations_; }
  const std::vector<Fact>& facts() const { return facts_; }

  int entity_count() const { return static_cast<int>(entities_.size()); }
  int relation_count() const { return static_cast<int>(relations_.size()); }

  const Entity& entity(int id) const;
  const RelationDef& relation(int id) const;

  // Lookup by exact name; relation lookup also accepts the abbreviation.
  std::optional<int> find_entity(const std::string& name) const;
  std::optional<int> find_relation(const std::string& name_or_abbrev) const;

  bool has_fact(int s, int r, int o) const;

  // Subjects u of facts (u, r, v): the incoming neighborhood of v under r,
  // sorted ascending. Out-of-range ids throw.
  std::span<const int> neighbors(int v, int r) const;

  const std::vector<int>& entities_of(Ontology o) const;
  const std::vector<int>& region_ids() const {
    return entities_of(Ontology::Region);
  }
  const std::vector<int>& brand_ids() const {
    return entities_of(Ontology::Brand);
  }
  const std::vector<int>& poi_ids() const {
    return entities_of(Ontology::Poi);
  }

  int64_t fact_count(int relation_id) const;

 private:
  std::vector<Entity> entities_;
  std::vector<RelationDef> relations_;
  std::vector<Fact> facts_;  // sorted by (s, r, o), unique
  std::map<std::string, int> entity_index_;
  std::map<std::string, int> relation_index_;
  std::array<std::vector<int>, kOntologyCount> by_ontology_;

  struct Csr {
    std::vector<int64_t> offsets;  // size |E|+1
    std::vector<int> subjects;
  };
  std::vector<Csr> incoming_;  // per relation
};

}  // namespace knowsite::ukg
