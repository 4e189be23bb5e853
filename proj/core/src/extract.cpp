#include "knowsite/extract.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace knowsite::ukg {

namespace {

std::string prefixed(Ontology o, const std::string& key) {
  switch (o) {
    case Ontology::Region: return "region:" + key;
    case Ontology::Ba: return "ba:" + key;
    case Ontology::Poi: return "poi:" + key;
    case Ontology::Brand: return "brand:" + key;
    case Ontology::Cate1: return "cate1:" + key;
    case Ontology::Cate2: return "cate2:" + key;
    case Ontology::Cate3: return "cate3:" + key;
  }
  return key;
}

}  // namespace

KgBuilder::KgBuilder(const RawSources& src, const ExtractConfig& cfg)
    : src_(src), cfg_(cfg), relations_(base_relations(cfg.schema)) {
  build_entities();
  locate_pois();
}

int KgBuilder::relation_id(const std::string& name) const {
  for (const auto& r : relations_) {
    if (r.name == name || r.abbrev == name) return r.id;
  }
  throw LookupError("unknown relation: " + name);
}

int KgBuilder::entity_id(const std::string& name) const {
  auto it = entity_by_name_.find(name);
  if (it == entity_by_name_.end()) throw LookupError("unknown entity: " + name);
  return it->second;
}

void KgBuilder::add_entity(Ontology o, const std::string& name,
                           const std::string& key) {
  Entity e;
  e.id = static_cast<int>(entities_.size());
  e.ontology = o;
  e.name = name;
  if (!entity_by_name_.emplace(name, e.id).second) {
    throw ContractError("duplicate entity key: " + name);
  }
  entities_.push_back(std::move(e));
  (void)key;
}

void KgBuilder::build_entities() {
  for (const auto& r : src_.regions) {
    const std::string name = prefixed(Ontology::Region, r.region_id);
    if (entity_by_name_.count(name)) {
      throw ParseError("regions.tsv: duplicate region_id " + r.region_id);
    }
    add_entity(Ontology::Region, name, r.region_id);
    entities_.back().polygon = r.polygon;
    region_by_source_id_[r.region_id] = entities_.back().id;
  }
  for (const auto& b : src_.bas) {
    const std::string name = prefixed(Ontology::Ba, b.ba_id);
    if (entity_by_name_.count(name)) {
      throw ParseError("ba.tsv: duplicate ba_id " + b.ba_id);
    }
    add_entity(Ontology::Ba, name, b.ba_id);
    entities_.back().point = b.point;
  }
  for (const auto& p : src_.pois) {
    const std::string name = prefixed(Ontology::Poi, p.pid);
    if (entity_by_name_.count(name)) {
      throw ParseError("pois.tsv: duplicate pid " + p.pid);
    }
    add_entity(Ontology::Poi, name, p.pid);
    entities_.back().point = p.point;
    poi_by_pid_[p.pid] = entities_.back().id;
  }
  // Brands are keyed by name; duplicate ids for one name collapse.
  for (const auto& b : src_.brands) {
    const std::string name = prefixed(Ontology::Brand, b.name);
    auto it = entity_by_name_.find(name);
    if (it == entity_by_name_.end()) {
      add_entity(Ontology::Brand, name, b.name);
      it = entity_by_name_.find(name);
    }
    brand_by_source_id_[b.brand_id] = it->second;
  }
  // Categories: union of the taxonomy file and fields referenced by POIs.
  std::set<std::string> c1, c2, c3;
  for (const auto& t : src_.taxonomy) {
    if (!t.cate1.empty()) c1.insert(t.cate1);
    if (!t.cate2.empty()) c2.insert(t.cate2);
    if (!t.cate3.empty()) c3.insert(t.cate3);
  }
  for (const auto& p : src_.pois) {
    if (!p.cate1.empty()) c1.insert(p.cate1);
    if (!p.cate2.empty()) c2.insert(p.cate2);
    if (!p.cate3.empty()) c3.insert(p.cate3);
  }
  for (const auto& n : c1) add_entity(Ontology::Cate1, prefixed(Ontology::Cate1, n), n);
  for (const auto& n : c2) add_entity(Ontology::Cate2, prefixed(Ontology::Cate2, n), n);
  for (const auto& n : c3) add_entity(Ontology::Cate3, prefixed(Ontology::Cate3, n), n);
}

void KgBuilder::locate_pois() {
  poi_region_.assign(src_.pois.size(), -1);
  for (size_t i = 0; i < src_.pois.size(); ++i) {
    const auto& p = src_.pois[i];
    for (const auto& r : src_.regions) {
      if (geo::point_in_polygon(p.point, r.polygon)) {
        poi_region_[i] = region_by_source_id_.at(r.region_id);
        break;
      }
    }
    if (poi_region_[i] < 0) stats_.pois_outside_regions++;
  }
}

std::vector<Fact> KgBuilder::extract_spatial_relations() {
  std::vector<Fact> facts;
  const int r_bb = relation_id("BorderBy");
  const int r_nb = relation_id("NearBy");
  const int r_la = relation_id("LocateAt");
  const int r_bt = relation_id("BelongTo");
  const int r_bs = relation_id("BaServe");

  const size_t nr = src_.regions.size();
  std::vector<geo::Point> centers(nr);
  std::vector<int> region_eid(nr);
  for (size_t i = 0; i < nr; ++i) {
    centers[i] = geo::centroid(src_.regions[i].polygon);
    region_eid[i] = region_by_source_id_.at(src_.regions[i].region_id);
  }

  std::set<std::pair<int, int>> border_pairs;
  for (size_t i = 0; i < nr; ++i) {
    for (size_t j = i + 1; j < nr; ++j) {
      if (geo::share_boundary(src_.regions[i].polygon,
                              src_.regions[j].polygon)) {
        facts.push_back({region_eid[i], r_bb, region_eid[j]});
        facts.push_back({region_eid[j], r_bb, region_eid[i]});
        border_pairs.emplace(region_eid[i], region_eid[j]);
      }
    }
  }
  for (size_t i = 0; i < nr; ++i) {
    for (size_t j = i + 1; j < nr; ++j) {
      if (border_pairs.count({region_eid[i], region_eid[j]})) continue;
      if (geo::distance(centers[i], centers[j], cfg_.planar) <= cfg_.near_km) {
        facts.push_back({region_eid[i], r_nb, region_eid[j]});
        facts.push_back({region_eid[j], r_nb, region_eid[i]});
      }
    }
  }
  for (size_t i = 0; i < src_.pois.size(); ++i) {
    if (poi_region_[i] >= 0) {
      facts.push_back(
          {poi_by_pid_.at(src_.pois[i].pid), r_la, poi_region_[i]});
    }
  }
  for (const auto& p : src_.pois) {
    for (const auto& b : src_.bas) {
      if (geo::distance(p.point, b.point, cfg_.planar) <= cfg_.ba_radius_km) {
        facts.push_back({poi_by_pid_.at(p.pid), r_bt,
                         entity_id(prefixed(Ontology::Ba, b.ba_id))});
      }
    }
  }
  for (const auto& b : src_.bas) {
    for (size_t i = 0; i < nr; ++i) {
      if (geo::distance(b.point, centers[i], cfg_.planar) <=
          cfg_.ba_radius_km) {
        facts.push_back(
            {entity_id(prefixed(Ontology::Ba, b.ba_id)), r_bs, region_eid[i]});
      }
    }
  }
  return facts;
}

std::vector<Fact> KgBuilder::extract_semantic_relations() {
  std::vector<Fact> facts;
  const int r_ft = relation_id("FlowTransition");
  const int r_sf = relation_id("SimilarFunction");
  const int r_comp = relation_id("Competitive");
  const int r_rb = relation_id("RelatedBrand");
  const int r_osa = relation_id("OpenStoreAt");
  const int r_bo = relation_id("BrandOf");

  // FlowTransition: aggregate directed counts, threshold.
  {
    std::map<std::pair<int, int>, long long> agg;
    for (const auto& f : src_.flows) {
      auto from = region_by_source_id_.find(f.region_from);
      auto to = region_by_source_id_.find(f.region_to);
      if (from == region_by_source_id_.end() ||
          to == region_by_source_id_.end()) {
        stats_.unresolved_rows++;
        continue;
      }
      if (from->second == to->second) continue;
      agg[{from->second, to->second}] += f.count;
    }
    for (const auto& [pair, count] : agg) {
      if (count >= cfg_.flow_min) {
        facts.push_back({pair.first, r_ft, pair.second});
      }
    }
  }

  // SimilarFunction: cosine over per-region Cate1 POI-count vectors.
  {
    std::map<std::string, int> c1_slot;
    for (const auto& p : src_.pois) {
      if (!p.cate1.empty() && !c1_slot.count(p.cate1)) {
        const int slot = static_cast<int>(c1_slot.size());
        c1_slot[p.cate1] = slot;
      }
    }
    const size_t nc = c1_slot.size();
    std::map<int, std::vector<double>> hist;  // region entity -> counts
    for (size_t i = 0; i < src_.pois.size(); ++i) {
      if (poi_region_[i] < 0 || src_.pois[i].cate1.empty()) continue;
      auto& h = hist[poi_region_[i]];
      if (h.empty()) h.assign(nc, 0.0);
      h[static_cast<size_t>(c1_slot[src_.pois[i].cate1])] += 1.0;
    }
    std::vector<std::pair<int, const std::vector<double>*>> rows(hist.size());
    size_t k = 0;
    for (const auto& [eid, h] : hist) rows[k++] = {eid, &h};
    auto norm = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x * x;
      return std::sqrt(s);
    };
    for (size_t i = 0; i < rows.size(); ++i) {
      const double ni = norm(*rows[i].second);
      if (ni == 0.0) continue;
      for (size_t j = i + 1; j < rows.size(); ++j) {
        const double nj = norm(*rows[j].second);
        if (nj == 0.0) continue;
        double dot = 0;
        for (size_t c = 0; c < nc; ++c) {
          dot += (*rows[i].second)[c] * (*rows[j].second)[c];
        }
        if (dot / (ni * nj) >= cfg_.sim_threshold - 1e-12) {
          facts.push_back({rows[i].first, r_sf, rows[j].first});
          facts.push_back({rows[j].first, r_sf, rows[i].first});
        }
      }
    }
  }

  // CoCheckin: distinct users with check-ins at both POIs.
  if (cfg_.schema.cocheckin) {
    const int r_cc = relation_id("CoCheckin");
    std::map<std::string, std::set<int>> user_pois;
    for (const auto& c : src_.checkins) {
      auto it = poi_by_pid_.find(c.pid);
      if (it == poi_by_pid_.end()) {
        stats_.unresolved_rows++;
        continue;
      }
      if (c.count > 0) user_pois[c.uid].insert(it->second);
    }
    std::map<std::pair<int, int>, long long> co;
    for (const auto& [uid, pois] : user_pois) {
      for (auto i = pois.begin(); i != pois.end(); ++i) {
        for (auto j = std::next(i); j != pois.end(); ++j) {
          co[{*i, *j}] += 1;
        }
      }
    }
    for (const auto& [pair, users] : co) {
      if (users >= cfg_.cochk_min) {
        facts.push_back({pair.first, r_cc, pair.second});
        facts.push_back({pair.second, r_cc, pair.first});
      }
    }
  }

  // Competitive: same Cate3, different brands, close by.
  {
    std::map<std::string, std::vector<size_t>> by_cate3;
    for (size_t i = 0; i < src_.pois.size(); ++i) {
      if (!src_.pois[i].brand_name.empty() && !src_.pois[i].cate3.empty()) {
        by_cate3[src_.pois[i].cate3].push_back(i);
      }
    }
    for (const auto& [cate, idx] : by_cate3) {
      for (size_t a = 0; a < idx.size(); ++a) {
        for (size_t b = a + 1; b < idx.size(); ++b) {
          const auto& pa = src_.pois[idx[a]];
          const auto& pb = src_.pois[idx[b]];
          if (pa.brand_name == pb.brand_name) continue;
          if (geo::distance(pa.point, pb.point, cfg_.planar) <= cfg_.comp_km) {
            const int ea = poi_by_pid_.at(pa.pid);
            const int eb = poi_by_pid_.at(pb.pid);
            facts.push_back({ea, r_comp, eb});
            facts.push_back({eb, r_comp, ea});
          }
        }
      }
    }
  }

  // RelatedBrand from the sidecar relation table.
  for (const auto& br : src_.brand_relations) {
    auto a = brand_by_source_id_.find(br.brand_id_a);
    auto b = brand_by_source_id_.find(br.brand_id_b);
    if (a == brand_by_source_id_.end() || b == brand_by_source_id_.end()) {
      stats_.unresolved_brand_relations++;
      continue;
    }
    if (a->second == b->second) continue;
    facts.push_back({a->second, r_rb, b->second});
    facts.push_back({b->second, r_rb, a->second});
  }

  // Taxonomy.
  {
    const int r32 = relation_id("SubCateOf_32");
    const int r21 = relation_id("SubCateOf_21");
    for (const auto& t : src_.taxonomy) {
      if (!t.cate3.empty() && !t.cate2.empty()) {
        facts.push_back({entity_id(prefixed(Ontology::Cate3, t.cate3)), r32,
                         entity_id(prefixed(Ontology::Cate2, t.cate2))});
      }
      if (!t.cate2.empty() && !t.cate1.empty()) {
        facts.push_back({entity_id(prefixed(Ontology::Cate2, t.cate2)), r21,
                         entity_id(prefixed(Ontology::Cate1, t.cate1))});
      }
      if (cfg_.schema.subcateof_31 && !t.cate3.empty() && !t.cate1.empty()) {
        facts.push_back({entity_id(prefixed(Ontology::Cate3, t.cate3)),
                         relation_id("SubCateOf_31"),
                         entity_id(prefixed(Ontology::Cate1, t.cate1))});
      }
    }
  }

  // POI attribute and affiliation links.
  {
    const int p2c[3] = {relation_id("POIToCate_1"), relation_id("POIToCate_2"),
                        relation_id("POIToCate_3")};
    for (const auto& p : src_.pois) {
      const int poi = poi_by_pid_.at(p.pid);
      if (!p.cate1.empty()) {
        facts.push_back(
            {poi, p2c[0], entity_id(prefixed(Ontology::Cate1, p.cate1))});
      }
      if (!p.cate2.empty()) {
        facts.push_back(
            {poi, p2c[1], entity_id(prefixed(Ontology::Cate2, p.cate2))});
      }
      if (!p.cate3.empty()) {
        facts.push_back(
            {poi, p2c[2], entity_id(prefixed(Ontology::Cate3, p.cate3))});
      }
      if (!p.brand_name.empty()) {
        auto it = entity_by_name_.find(prefixed(Ontology::Brand, p.brand_name));
        if (it != entity_by_name_.end()) {
          facts.push_back({it->second, r_bo, poi});
        } else {
          stats_.unresolved_rows++;
        }
      }
    }
  }

  // Brand categories: the most common category of the brand's POIs per
  // level, ties broken by name.
  {
    const int b2c[3] = {relation_id("BrandToCate_1"),
                        relation_id("BrandToCate_2"),
                        relation_id("BrandToCate_3")};
    std::map<int, std::array<std::map<std::string, int>, 3>> brand_cates;
    for (const auto& p : src_.pois) {
      if (p.brand_name.empty()) continue;
      auto it = entity_by_name_.find(prefixed(Ontology::Brand, p.brand_name));
      if (it == entity_by_name_.end()) continue;
      auto& slots = brand_cates[it->second];
      if (!p.cate1.empty()) slots[0][p.cate1]++;
      if (!p.cate2.empty()) slots[1][p.cate2]++;
      if (!p.cate3.empty()) slots[2][p.cate3]++;
    }
    const Ontology level_ont[3] = {Ontology::Cate1, Ontology::Cate2,
                                   Ontology::Cate3};
    for (const auto& e : entities_) {
      if (e.ontology != Ontology::Brand) continue;
      auto it = brand_cates.find(e.id);
      if (it == brand_cates.end()) {
        stats_.brands_without_pois++;
        continue;
      }
      for (int level = 0; level < 3; ++level) {
        const auto& counts = it->second[static_cast<size_t>(level)];
        if (counts.empty()) continue;
        auto best = counts.begin();
        for (auto c = counts.begin(); c != counts.end(); ++c) {
          if (c->second > best->second) best = c;
        }
        facts.push_back(
            {e.id, b2c[level],
             entity_id(prefixed(level_ont[level], best->first))});
      }
    }
  }

  // OpenStoreAt: distinct (brand, region) pairs.
  {
    std::set<std::pair<int, int>> pairs;
    for (const auto& s : src_.sites) {
      auto b = brand_by_source_id_.find(s.brand_id);
      auto r = region_by_source_id_.find(s.region_id);
      if (b == brand_by_source_id_.end() || r == region_by_source_id_.end()) {
        stats_.unresolved_site_rows++;
        continue;
      }
      pairs.emplace(b->second, r->second);
    }
    for (const auto& [b, r] : pairs) facts.push_back({b, r_osa, r});
  }

  return facts;
}

KnowledgeGraph KgBuilder::build() {
  std::vector<Fact> facts = extract_spatial_relations();
  auto semantic = extract_semantic_relations();
  facts.insert(facts.end(), semantic.begin(), semantic.end());
  auto [all_facts, all_rels] = augment_inverses(std::move(facts), relations_);
  return KnowledgeGraph(entities_, std::move(all_rels), std::move(all_facts));
}

std::pair<std::vector<Fact>, std::vector<RelationDef>> augment_inverses(
    std::vector<Fact> facts, std::vector<RelationDef> relations) {
  auto rels = with_inverses(std::move(relations));
  const size_t n = facts.size();
  for (size_t i = 0; i < n; ++i) {
    const Fact& f = facts[i];
    const RelationDef& r = rels[static_cast<size_t>(f.r)];
    if (!r.symmetric && !r.is_inverse && r.has_inverse()) {
      facts.push_back({f.o, r.inverse_id, f.s});
    }
  }
  return {std::move(facts), std::move(rels)};
}

ValidationReport validate_facts(const std::vector<Entity>& entities,
                                const std::vector<RelationDef>& relations,
                                const std::vector<Fact>& facts) {
  ValidationReport report;
  for (const auto& r : relations) report.relation_counts[r.name] = 0;

  std::set<Fact> seen;
  for (const Fact& f : facts) {
    if (f.s < 0 || f.s >= static_cast<int>(entities.size()) || f.o < 0 ||
        f.o >= static_cast<int>(entities.size()) || f.r < 0 ||
        f.r >= static_cast<int>(relations.size())) {
      report.dangling_ids++;
      report.violations.push_back(
          {"dangling_id", "fact (" + std::to_string(f.s) + "," +
                              std::to_string(f.r) + "," + std::to_string(f.o) +
                              ") references unknown ids"});
      continue;
    }
    if (!seen.insert(f).second) {
      report.duplicate_facts++;
      continue;
    }
    const RelationDef& rel = relations[static_cast<size_t>(f.r)];
    const Entity& s = entities[static_cast<size_t>(f.s)];
    const Entity& o = entities[static_cast<size_t>(f.o)];
    if (s.ontology != rel.subject || o.ontology != rel.object) {
      report.violations.push_back(
          {"signature", rel.name + " expects (" +
                            ontology_name(rel.subject) + "," +
                            ontology_name(rel.object) + ") but got (" +
                            ontology_name(s.ontology) + "," +
                            ontology_name(o.ontology) + ") for " + s.name +
                            " -> " + o.name});
    }
    report.relation_counts[rel.name]++;
  }

  for (const Fact& f : seen) {
    const RelationDef& rel = relations[static_cast<size_t>(f.r)];
    if (rel.symmetric && !seen.count({f.o, f.r, f.s})) {
      report.violations.push_back(
          {"symmetric_closure", rel.name + " misses reverse of (" +
                                    std::to_string(f.s) + "," +
                                    std::to_string(f.o) + ")"});
    }
    if (rel.has_inverse()) {
      if (!seen.count({f.o, rel.inverse_id, f.s})) {
        report.violations.push_back(
            {"inverse_closure", rel.name + " misses inverse of (" +
                                    std::to_string(f.s) + "," +
                                    std::to_string(f.o) + ")"});
      }
    }
  }
  return report;
}

ValidationReport validate_schema(const KnowledgeGraph& kg) {
  return validate_facts(kg.entities(), kg.relations(), kg.facts());
}

std::string ValidationReport::to_json_string() const {
  nlohmann::ordered_json j;
  j["valid"] = valid();
  j["duplicate_facts"] = duplicate_facts;
  j["dangling_ids"] = dangling_ids;
  j["violation_count"] = violations.size();
  nlohmann::ordered_json v = nlohmann::ordered_json::array();
  for (const auto& viol : violations) {
    v.push_back({{"kind", viol.kind}, {"detail", viol.detail}});
  }
  j["violations"] = v;
  nlohmann::ordered_json counts;
  for (const auto& [name, c] : relation_counts) counts[name] = c;
  j["relation_counts"] = counts;
  return j.dump(2);
}

LeakageResult remove_leakage(const KnowledgeGraph& kg,
                             const std::vector<std::pair<int, int>>& holdout) {
  LeakageResult result;
  const auto osa_opt = kg.find_relation("OpenStoreAt");
  const auto bo_opt = kg.find_relation("BrandOf");
  const auto la_opt = kg.find_relation("LocateAt");
  if (!osa_opt || !bo_opt || !la_opt) {
    throw ContractError("leakage removal needs OSA, BrandOf, LocateAt");
  }
  const int r_osa = *osa_opt, r_bo = *bo_opt, r_la = *la_opt;
  const int r_osa_inv = kg.relation(r_osa).inverse_id;

  std::set<Fact> removed_facts;
  std::set<int> removed_pois;
  for (const auto& [b, a] : holdout) {
    if (!kg.has_fact(b, r_osa, a)) {
      result.missing_pairs++;
      continue;
    }
    removed_facts.insert({b, r_osa, a});
    if (r_osa_inv >= 0) removed_facts.insert({a, r_osa_inv, b});
    // The pair's stores: POIs of brand b located in region a.
    for (int poi : kg.neighbors(a, r_la)) {
      if (kg.has_fact(b, r_bo, poi)) removed_pois.insert(poi);
    }
  }

  result.old_to_new.assign(static_cast<size_t>(kg.entity_count()), -1);
  std::vector<Entity> entities;
  entities.reserve(kg.entities().size());
  for (const auto& e : kg.entities()) {
    if (removed_pois.count(e.id)) continue;
    Entity copy = e;
    copy.id = static_cast<int>(entities.size());
    result.old_to_new[static_cast<size_t>(e.id)] = copy.id;
    entities.push_back(std::move(copy));
  }

  std::vector<Fact> facts;
  facts.reserve(kg.facts().size());
  for (const Fact& f : kg.facts()) {
    if (removed_facts.count(f)) {
      result.removed_facts++;
      continue;
    }
    if (removed_pois.count(f.s) || removed_pois.count(f.o)) {
      result.removed_facts++;
      continue;
    }
    facts.push_back({result.old_to_new[static_cast<size_t>(f.s)], f.r,
                     result.old_to_new[static_cast<size_t>(f.o)]});
  }
  result.removed_pois = static_cast<int64_t>(removed_pois.size());
  result.kg = KnowledgeGraph(std::move(entities),
                             std::vector<RelationDef>(kg.relations()),
                             std::move(facts));
  return result;
}

BuildResult build_kg(const RawSources& src, const ExtractConfig& cfg) {
  KgBuilder builder(src, cfg);
  BuildResult result;
  result.kg = builder.build();
  result.stats = builder.stats();
  result.report = validate_schema(result.kg);

  for (const auto& b : src.brands) {
    result.brand_alias[b.brand_id] = "brand:" + b.name;
  }

  // Region popularity: aggregated clicks of the region's POIs.
  std::map<std::string, long long> poi_clicks;
  for (const auto& c : src.clicks) poi_clicks[c.pid] += c.count;
  const auto la = result.kg.find_relation("LocateAt");
  for (int region : result.kg.region_ids()) {
    long long total = 0;
    for (int poi : result.kg.neighbors(region, *la)) {
      const std::string& name = result.kg.entity(poi).name;
      auto it = poi_clicks.find(name.substr(4));  // strip "poi:"
      if (it != poi_clicks.end()) total += it->second;
    }
    result.region_popularity[result.kg.entity(region).name] = total;
  }
  return result;
}

void save_kg(const BuildResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const KnowledgeGraph& kg = result.kg;
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : kg.entities()) {
      rows.push_back({std::to_string(e.id), e.name,
                      ontology_name(e.ontology)});
    }
    write_tsv(dir / "entities.tsv", {"id", "name", "ontology"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : kg.relations()) {
      rows.push_back({std::to_string(r.id), r.name, r.abbrev,
                      ontology_name(r.subject), ontology_name(r.object),
                      r.symmetric ? "1" : "0", r.skip_inverse ? "1" : "0",
                      std::to_string(r.inverse_id),
                      r.is_inverse ? "1" : "0"});
    }
    write_tsv(dir / "relations.tsv",
              {"id", "name", "abbrev", "subject", "object", "symmetric",
               "skip_inverse", "inverse_id", "is_inverse"},
              rows);
  }
  {
    std::ofstream out(dir / "triples.tsv");
    out << "s_name\trelation_name\to_name\n";
    for (const Fact& f : kg.facts()) {
      out << kg.entity(f.s).name << '\t' << kg.relation(f.r).name << '\t'
          << kg.entity(f.o).name << '\n';
    }
  }
  {
    std::ofstream out(dir / "validation_report.json");
    out << result.report.to_json_string() << '\n';
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [id, name] : result.brand_alias) {
      rows.push_back({id, name});
    }
    write_tsv(dir / "brand_aliases.tsv", {"brand_id", "entity_name"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [name, pop] : result.region_popularity) {
      rows.push_back({name, std::to_string(pop)});
    }
    write_tsv(dir / "region_popularity.tsv", {"region_name", "popularity"},
              rows);
  }
}

LoadedKg load_kg(const std::filesystem::path& dir) {
  LoadedKg loaded;
  std::vector<Entity> entities;
  {
    auto t = read_tsv(dir / "entities.tsv");
    const int id = t.column("id", "entities.tsv");
    const int name = t.column("name", "entities.tsv");
    const int ont = t.column("ontology", "entities.tsv");
    for (const auto& row : t.rows) {
      Entity e;
      e.id = static_cast<int>(std::stoll(row[static_cast<size_t>(id)]));
      e.name = row[static_cast<size_t>(name)];
      e.ontology = ontology_from_name(row[static_cast<size_t>(ont)]);
      entities.push_back(std::move(e));
    }
  }
  std::vector<RelationDef> relations;
  {
    auto t = read_tsv(dir / "relations.tsv");
    const int id = t.column("id", "relations.tsv");
    const int name = t.column("name", "relations.tsv");
    const int abbrev = t.column("abbrev", "relations.tsv");
    const int subj = t.column("subject", "relations.tsv");
    const int obj = t.column("object", "relations.tsv");
    const int sym = t.column("symmetric", "relations.tsv");
    const int skip = t.column("skip_inverse", "relations.tsv");
    const int inv = t.column("inverse_id", "relations.tsv");
    const int isinv = t.column("is_inverse", "relations.tsv");
    for (const auto& row : t.rows) {
      RelationDef r;
      r.id = static_cast<int>(std::stoll(row[static_cast<size_t>(id)]));
      r.name = row[static_cast<size_t>(name)];
      r.abbrev = row[static_cast<size_t>(abbrev)];
      r.subject = ontology_from_name(row[static_cast<size_t>(subj)]);
      r.object = ontology_from_name(row[static_cast<size_t>(obj)]);
      r.symmetric = row[static_cast<size_t>(sym)] == "1";
      r.skip_inverse = row[static_cast<size_t>(skip)] == "1";
      r.inverse_id = static_cast<int>(std::stoll(row[static_cast<size_t>(inv)]));
      r.is_inverse = row[static_cast<size_t>(isinv)] == "1";
      relations.push_back(std::move(r));
    }
  }
  std::map<std::string, int> by_name;
  for (const auto& e : entities) by_name[e.name] = e.id;
  std::map<std::string, int> rel_by_name;
  for (const auto& r : relations) rel_by_name[r.name] = r.id;
  std::vector<Fact> facts;
  {
    auto t = read_tsv(dir / "triples.tsv");
    const int s = t.column("s_name", "triples.tsv");
    const int r = t.column("relation_name", "triples.tsv");
    const int o = t.column("o_name", "triples.tsv");
    for (size_t i = 0; i < t.rows.size(); ++i) {
      const auto& row = t.rows[i];
      auto se = by_name.find(row[static_cast<size_t>(s)]);
      auto re = rel_by_name.find(row[static_cast<size_t>(r)]);
      auto oe = by_name.find(row[static_cast<size_t>(o)]);
      if (se == by_name.end() || re == rel_by_name.end() ||
          oe == by_name.end()) {
        throw ParseError("triples.tsv:" + std::to_string(i + 2) +
                         ": unknown entity or relation name");
      }
      facts.push_back({se->second, re->second, oe->second});
    }
  }
  loaded.kg = KnowledgeGraph(std::move(entities), std::move(relations),
                             std::move(facts));
  {
    auto t = read_tsv(dir / "brand_aliases.tsv");
    const int id = t.column("brand_id", "brand_aliases.tsv");
    const int name = t.column("entity_name", "brand_aliases.tsv");
    for (const auto& row : t.rows) {
      loaded.brand_alias[row[static_cast<size_t>(id)]] =
          row[static_cast<size_t>(name)];
    }
  }
  {
    auto t = read_tsv(dir / "region_popularity.tsv");
    const int name = t.column("region_name", "region_popularity.tsv");
    const int pop = t.column("popularity", "region_popularity.tsv");
    for (const auto& row : t.rows) {
      loaded.region_popularity[row[static_cast<size_t>(name)]] =
          std::stoll(row[static_cast<size_t>(pop)]);
    }
  }
  return loaded;
}

}  // namespace knowsite::ukg
