#include "knowsite/schema.hpp"

namespace knowsite::ukg {

const char* ontology_name(Ontology o) {
  switch (o) {
    case Ontology::Region: return "Region";
    case Ontology::Ba: return "Ba";
    case Ontology::Poi: return "POI";
    case Ontology::Brand: return "Brand";
    case Ontology::Cate1: return "Cate1";
    case Ontology::Cate2: return "Cate2";
    case Ontology::Cate3: return "Cate3";
  }
  return "?";
}

Ontology ontology_from_name(const std::string& name) {
  if (name == "Region") return Ontology::Region;
  if (name == "Ba") return Ontology::Ba;
  if (name == "POI") return Ontology::Poi;
  if (name == "Brand") return Ontology::Brand;
  if (name == "Cate1") return Ontology::Cate1;
  if (name == "Cate2") return Ontology::Cate2;
  if (name == "Cate3") return Ontology::Cate3;
  throw LookupError("unknown ontology: " + name);
}

std::vector<RelationDef> base_relations(const SchemaOptions& opts) {
  std::vector<RelationDef> rels;
  auto add = [&](const std::string& name, const std::string& abbrev,
                 Ontology s, Ontology o, bool symmetric,
                 bool skip_inverse = false) {
    RelationDef r;
    r.id = static_cast<int>(rels.size());
    r.name = name;
    r.abbrev = abbrev;
    r.subject = s;
    r.object = o;
    r.symmetric = symmetric;
    r.skip_inverse = skip_inverse;
    rels.push_back(std::move(r));
  };

  add("BorderBy", "BB", Ontology::Region, Ontology::Region, true);
  add("NearBy", "NB", Ontology::Region, Ontology::Region, true);
  add("FlowTransition", "FT", Ontology::Region, Ontology::Region, false,
      /*skip_inverse=*/true);
  add("SimilarFunction", "SF", Ontology::Region, Ontology::Region, true);
  if (opts.cocheckin) {
    add("CoCheckin", "CC", Ontology::Poi, Ontology::Poi, true);
  }
  add("Competitive", "Comp", Ontology::Poi, Ontology::Poi, true);
  add("RelatedBrand", "RB", Ontology::Brand, Ontology::Brand, true);
  add("SubCateOf_32", "SCO_32", Ontology::Cate3, Ontology::Cate2, false);
  add("SubCateOf_21", "SCO_21", Ontology::Cate2, Ontology::Cate1, false);
  if (opts.subcateof_31) {
    add("SubCateOf_31", "SCO_31", Ontology::Cate3, Ontology::Cate1, false);
  }
  add("BaServe", "BS", Ontology::Ba, Ontology::Region, false);
  add("BelongTo", "BT", Ontology::Poi, Ontology::Ba, false);
  add("LocateAt", "LA", Ontology::Poi, Ontology::Region, false);
  add("POIToCate_1", "P2C_1", Ontology::Poi, Ontology::Cate1, false);
  add("POIToCate_2", "P2C_2", Ontology::Poi, Ontology::Cate2, false);
  add("POIToCate_3", "P2C_3", Ontology::Poi, Ontology::Cate3, false);
  add("BrandToCate_1", "B2C_1", Ontology::Brand, Ontology::Cate1, false);
  add("BrandToCate_2", "B2C_2", Ontology::Brand, Ontology::Cate2, false);
  add("BrandToCate_3", "B2C_3", Ontology::Brand, Ontology::Cate3, false);
  add("BrandOf", "BO", Ontology::Brand, Ontology::Poi, false);
  add("OpenStoreAt", "OSA", Ontology::Brand, Ontology::Region, false);
  return rels;
}

std::string inverse_name(const std::string& base_name) {
  return base_name + "'";
}

std::vector<RelationDef> with_inverses(std::vector<RelationDef> base) {
  const size_t n = base.size();
  for (size_t i = 0; i < n; ++i) {
    RelationDef& r = base[i];
    if (r.symmetric || r.skip_inverse || r.is_inverse) continue;
    RelationDef inv;
    inv.id = static_cast<int>(base.size());
    inv.name = inverse_name(r.name);
    inv.abbrev = inverse_name(r.abbrev);
    inv.subject = r.object;
    inv.object = r.subject;
    inv.symmetric = false;
    inv.is_inverse = true;
    inv.inverse_id = r.id;
    r.inverse_id = inv.id;
    base.push_back(std::move(inv));
  }
  return base;
}

}  // namespace knowsite::ukg
