#include "knowsite/kg.hpp"

#include <algorithm>

namespace knowsite::ukg {

KnowledgeGraph::KnowledgeGraph(std::vector<Entity> entities,
                               std::vector<RelationDef> rels,
                               std::vector<Fact> facts)
    : entities_(std::move(entities)),
      relations_(std::move(rels)),
      facts_(std::move(facts)) {
  for (size_t i = 0; i < entities_.size(); ++i) {
    if (entities_[i].id != static_cast<int>(i)) {
      throw ContractError("entity ids must be contiguous 0..|E|-1");
    }
    if (!entity_index_.emplace(entities_[i].name, entities_[i].id).second) {
      throw ContractError("duplicate entity name: " + entities_[i].name);
    }
    by_ontology_[static_cast<size_t>(entities_[i].ontology)].push_back(
        entities_[i].id);
  }
  for (size_t i = 0; i < relations_.size(); ++i) {
    if (relations_[i].id != static_cast<int>(i)) {
      throw ContractError("relation ids must be contiguous");
    }
    relation_index_.emplace(relations_[i].name, relations_[i].id);
    relation_index_.emplace(relations_[i].abbrev, relations_[i].id);
  }
  std::sort(facts_.begin(), facts_.end());
  facts_.erase(std::unique(facts_.begin(), facts_.end()), facts_.end());
  for (const Fact& f : facts_) {
    if (f.s < 0 || f.s >= entity_count() || f.o < 0 || f.o >= entity_count() ||
        f.r < 0 || f.r >= relation_count()) {
      throw ContractError("fact references unknown entity or relation");
    }
  }

  // Incoming CSR per relation, subjects sorted within each object bucket.
  std::vector<Fact> by_ro = facts_;
  std::sort(by_ro.begin(), by_ro.end(), [](const Fact& a, const Fact& b) {
    return std::tie(a.r, a.o, a.s) < std::tie(b.r, b.o, b.s);
  });
  incoming_.resize(relations_.size());
  const int n = entity_count();
  for (auto& csr : incoming_) csr.offsets.assign(static_cast<size_t>(n) + 1, 0);
  for (const Fact& f : by_ro) {
    incoming_[static_cast<size_t>(f.r)]
        .offsets[static_cast<size_t>(f.o) + 1]++;
  }
  for (auto& csr : incoming_) {
    for (size_t i = 1; i < csr.offsets.size(); ++i) {
      csr.offsets[i] += csr.offsets[i - 1];
    }
  }
  for (auto& csr : incoming_) {
    csr.subjects.reserve(static_cast<size_t>(csr.offsets.back()));
  }
  for (const Fact& f : by_ro) {
    incoming_[static_cast<size_t>(f.r)].subjects.push_back(f.s);
  }
}

const Entity& KnowledgeGraph::entity(int id) const {
  if (id < 0 || id >= entity_count()) {
    throw ContractError("entity id out of range: " + std::to_string(id));
  }
  return entities_[static_cast<size_t>(id)];
}

const RelationDef& KnowledgeGraph::relation(int id) const {
  if (id < 0 || id >= relation_count()) {
    throw ContractError("relation id out of range: " + std::to_string(id));
  }
  return relations_[static_cast<size_t>(id)];
}

std::optional<int> KnowledgeGraph::find_entity(const std::string& name) const {
  auto it = entity_index_.find(name);
  if (it == entity_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> KnowledgeGraph::find_relation(
    const std::string& name_or_abbrev) const {
  auto it = relation_index_.find(name_or_abbrev);
  if (it == relation_index_.end()) return std::nullopt;
  return it->second;
}

bool KnowledgeGraph::has_fact(int s, int r, int o) const {
  return std::binary_search(facts_.begin(), facts_.end(), Fact{s, r, o});
}

std::span<const int> KnowledgeGraph::neighbors(int v, int r) const {
  if (v < 0 || v >= entity_count()) {
    throw ContractError("neighbors: entity id out of range");
  }
  if (r < 0 || r >= relation_count()) {
    throw ContractError("neighbors: relation id out of range");
  }
  const Csr& csr = incoming_[static_cast<size_t>(r)];
  const auto lo = csr.offsets[static_cast<size_t>(v)];
  const auto hi = csr.offsets[static_cast<size_t>(v) + 1];
  return {csr.subjects.data() + lo, static_cast<size_t>(hi - lo)};
}

const std::vector<int>& KnowledgeGraph::entities_of(Ontology o) const {
  return by_ontology_[static_cast<size_t>(o)];
}

int64_t KnowledgeGraph::fact_count(int relation_id) const {
  if (relation_id < 0 || relation_id >= relation_count()) {
    throw ContractError("fact_count: relation id out of range");
  }
  const Csr& csr = incoming_[static_cast<size_t>(relation_id)];
  return csr.offsets.back();
}

}  // namespace knowsite::ukg
