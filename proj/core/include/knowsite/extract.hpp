#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "knowsite/kg.hpp"
#include "knowsite/sources.hpp"

namespace knowsite::ukg {

struct ExtractConfig {
  double near_km = 2.0;        // NearBy centroid distance
  double sim_threshold = 0.8;  // SimilarFunction cosine
  long long flow_min = 20;     // FlowTransition aggregated count
  long long cochk_min = 3;     // CoCheckin distinct co-users
  double comp_km = 1.0;        // Competitive store distance
  double ba_radius_km = 1.5;   // BelongTo / BaServe radius
  bool planar = false;         // planar coordinates instead of lon/lat
  SchemaOptions schema;
};

struct ExtractionStats {
  int64_t pois_outside_regions = 0;
  int64_t brands_without_pois = 0;
  int64_t unresolved_site_rows = 0;
  int64_t unresolved_brand_relations = 0;
  int64_t unresolved_rows = 0;  // other dangling source references
};

// Maps source tables to entities and derives every base-relation fact.
class KgBuilder {
 public:
  KgBuilder(const RawSources& src, const ExtractConfig& cfg);

  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<RelationDef>& relations() const { return relations_; }
  const ExtractionStats& stats() const { return stats_; }

  int relation_id(const std::string& name) const;
  int entity_id(const std::string& name) const;

  // BorderBy, NearBy, LocateAt, BelongTo, BaServe.
  std::vector<Fact> extract_spatial_relations();
  // FlowTransition, SimilarFunction, CoCheckin, Competitive, RelatedBrand,
  // SubCateOf_*, POIToCate_*, BrandToCate_*, BrandOf, OpenStoreAt.
  std::vector<Fact> extract_semantic_relations();

  // Spatial + semantic + inverses, indexed.
  KnowledgeGraph build();

 private:
  const RawSources& src_;
  ExtractConfig cfg_;
  std::vector<Entity> entities_;
  std::vector<RelationDef> relations_;
  std::map<std::string, int> entity_by_name_;
  std::map<std::string, int> brand_by_source_id_;
  std::map<std::string, int> region_by_source_id_;
  std::map<std::string, int> poi_by_pid_;
  std::vector<int> poi_region_;  // entity id of containing region, -1 outside
  ExtractionStats stats_;

  void add_entity(Ontology o, const std::string& name, const std::string& key);
  void build_entities();
  void locate_pois();
};

// Adds an inverse relation and reversed facts for every asymmetric relation
// not flagged skip_inverse. Symmetric relations are untouched.
std::pair<std::vector<Fact>, std::vector<RelationDef>> augment_inverses(
    std::vector<Fact> facts, std::vector<RelationDef> relations);

struct ValidationReport {
  struct Violation {
    std::string kind;
    std::string detail;
  };
  std::vector<Violation> violations;
  std::map<std::string, int64_t> relation_counts;
  int64_t duplicate_facts = 0;
  int64_t dangling_ids = 0;

  bool valid() const { return violations.empty() && duplicate_facts == 0; }
  std::string to_json_string() const;
};

// Report-only checks: ontology signatures, duplicates, dangling ids,
// symmetric closure and inverse closure.
ValidationReport validate_facts(const std::vector<Entity>& entities,
                                const std::vector<RelationDef>& relations,
                                const std::vector<Fact>& facts);
ValidationReport validate_schema(const KnowledgeGraph& kg);

struct LeakageResult {
  KnowledgeGraph kg;
  std::vector<int> old_to_new;  // entity remap, -1 for removed POIs
  int64_t removed_facts = 0;
  int64_t removed_pois = 0;
  int64_t missing_pairs = 0;
};

// Drops each held-out OpenStoreAt fact (and its inverse) and every POI of the
// held-out brand located in the held-out region, with all that POI's facts.
LeakageResult remove_leakage(const KnowledgeGraph& kg,
                             const std::vector<std::pair<int, int>>& holdout);

struct BuildResult {
  KnowledgeGraph kg;
  ExtractionStats stats;
  ValidationReport report;
  std::map<std::string, std::string> brand_alias;    // brand_id -> entity name
  std::map<std::string, long long> region_popularity;  // region name -> clicks
};

BuildResult build_kg(const RawSources& src, const ExtractConfig& cfg);

// KG directory layout: entities.tsv, relations.tsv, triples.tsv,
// validation_report.json, brand_aliases.tsv, region_popularity.tsv.
void save_kg(const BuildResult& result, const std::filesystem::path& dir);

struct LoadedKg {
  KnowledgeGraph kg;
  std::map<std::string, std::string> brand_alias;
  std::map<std::string, long long> region_popularity;
};

LoadedKg load_kg(const std::filesystem::path& dir);

}  // namespace knowsite::ukg
