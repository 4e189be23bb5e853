#pragma once

#include <string>
#include <vector>

#include "knowsite/errors.hpp"

namespace knowsite::ukg {

enum class Ontology { Region, Ba, Poi, Brand, Cate1, Cate2, Cate3 };

constexpr int kOntologyCount = 7;

const char* ontology_name(Ontology o);
Ontology ontology_from_name(const std::string& name);

struct RelationDef {
  int id = -1;
  std::string name;
  std::string abbrev;
  Ontology subject = Ontology::Region;
  Ontology object = Ontology::Region;
  bool symmetric = false;
  // FlowTransition keeps a single direction: a significant reverse flow shows
  // up as its own fact, so no companion relation is materialized for it.
  bool skip_inverse = false;
  int inverse_id = -1;  // -1 when none
  bool is_inverse = false;

  bool has_inverse() const { return inverse_id >= 0; }
};

struct SchemaOptions {
  bool cocheckin = true;     // include the CoCheckin relation
  bool subcateof_31 = true;  // taxonomy as three relations (3->2, 2->1, 3->1)
};

// The base relation vocabulary (no inverses), ids 0..n-1 in table order.
std::vector<RelationDef> base_relations(const SchemaOptions& opts = {});

// Appends an inverse relation for every asymmetric relation not flagged
// skip_inverse; inverse ids follow the base block in base order.
std::vector<RelationDef> with_inverses(std::vector<RelationDef> base);

std::string inverse_name(const std::string& base_name);

}  // namespace knowsite::ukg
