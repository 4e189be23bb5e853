#include "knowsite/synthcity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "knowsite/errors.hpp"
#include "knowsite/geometry.hpp"

namespace knowsite::synth {

namespace {

// All written coordinates are quantized to 1e-6 so TSV round-trips are exact.
double quantize(double x) { return std::round(x * 1e6) / 1e6; }

geo::Polygon quantize_polygon(const geo::Polygon& p) {
  geo::Polygon q;
  q.ring.reserve(p.ring.size());
  for (const auto& v : p.ring) q.ring.push_back({quantize(v.x), quantize(v.y)});
  return q;
}

geo::Point sample_inside(const geo::Polygon& poly, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    geo::Point p = geo::sample_point_inside(poly, rng);
    geo::Point q{quantize(p.x), quantize(p.y)};
    if (geo::point_in_polygon(q, poly)) return q;
  }
  geo::Point c = geo::centroid(poly);
  return {quantize(c.x), quantize(c.y)};
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

std::string zpad(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

struct CateTree {
  std::vector<int> c3_to_c2;
  std::vector<int> c2_to_c1;
};

}  // namespace

const char* pattern_kind_name(PatternKind k) {
  switch (k) {
    case PatternKind::RelatedBrandColocation: return "related_brand_colocation";
    case PatternKind::FlowFollowing: return "flow_following";
    case PatternKind::FunctionMatching: return "function_matching";
  }
  return "?";
}

std::vector<StoreRecord> plant_site_patterns(
    const std::vector<StoreRecord>& base,
    const std::vector<PlantedPattern>& patterns, const PlantContext& ctx,
    Rng& rng) {
  for (const auto& p : patterns) {
    if (p.strength < 0.0 || p.strength > 1.0) {
      throw ConfigError("pattern strength must be in [0,1]");
    }
    if (p.kind == PatternKind::RelatedBrandColocation) {
      if (p.brand_indices.size() < 2 ||
          p.brand_indices[0] == p.brand_indices[1]) {
        throw ConfigError("colocation needs two distinct brands");
      }
    } else if (p.brand_indices.empty()) {
      throw ConfigError("pattern without brands");
    }
  }

  std::map<int, std::vector<int>> base_regions_by_brand;
  for (const auto& rec : base) base_regions_by_brand[rec.brand].push_back(rec.region);

  std::vector<StoreRecord> out = base;
  for (const auto& pattern : patterns) {
    const bool self_anchored = pattern.brand_indices.size() == 1 ||
                               pattern.brand_indices[0] == pattern.brand_indices[1];
    const int anchor = pattern.brand_indices[0];
    const int follower =
        self_anchored ? anchor : pattern.brand_indices[1];

    std::vector<int> anchor_regions;
    if (self_anchored) {
      // The first half of the brand's own stores stay put and act as anchors.
      const auto& own = base_regions_by_brand[follower];
      const size_t n_anchor = (own.size() + 1) / 2;
      anchor_regions.assign(own.begin(),
                            own.begin() + static_cast<int64_t>(n_anchor));
    } else {
      anchor_regions = base_regions_by_brand[anchor];
    }
    if (anchor_regions.empty()) {
      throw ConfigError("pattern anchor brand has no sites");
    }

    size_t follower_seen = 0;
    const size_t skip =
        self_anchored ? (base_regions_by_brand[follower].size() + 1) / 2 : 0;
    for (auto& rec : out) {
      if (rec.brand != follower) continue;
      const size_t ord = follower_seen++;
      if (ord < skip) continue;  // self-anchored stores that stay put
      if (!rng.bernoulli(pattern.strength)) continue;
      const int src = anchor_regions[static_cast<size_t>(
          rng.uniform_index(anchor_regions.size()))];
      int target = -1;
      switch (pattern.kind) {
        case PatternKind::RelatedBrandColocation:
          target = src;
          break;
        case PatternKind::FlowFollowing:
          target = ctx.top_flow_dest.empty()
                       ? -1
                       : ctx.top_flow_dest[static_cast<size_t>(src)];
          break;
        case PatternKind::FunctionMatching:
          target = ctx.best_function_match.empty()
                       ? -1
                       : ctx.best_function_match[static_cast<size_t>(src)];
          break;
      }
      if (target >= 0) {
        rec.region = target;
        rec.planted = true;
      }
    }
  }
  return out;
}

GeneratedCity generate_city(const CityConfig& cfg,
                            const std::vector<PlantedPattern>& patterns) {
  if (cfg.n_brands < 1 || cfg.n_pois < 1 || cfg.n_ba < 1 || cfg.n_cate1 < 1 ||
      cfg.n_cate2 < 1 || cfg.n_cate3 < 1) {
    throw ConfigError("city counts must be >= 1");
  }
  const bool grid_mode = cfg.grid_rows > 0 && cfg.grid_cols > 0;
  if (grid_mode == (cfg.voronoi_seeds > 0)) {
    throw ConfigError("set exactly one of grid rows/cols or voronoi seeds");
  }
  for (const auto& p : patterns) {
    for (int b : p.brand_indices) {
      if (b < 0 || b >= cfg.n_brands) {
        throw ConfigError("pattern brand index out of range");
      }
    }
  }

  Rng rng(cfg.seed);
  GeneratedCity city;
  city.config = cfg;
  city.patterns = patterns;
  auto& src = city.sources;

  // Regions.
  std::vector<geo::Polygon> polys;
  if (grid_mode) {
    polys = geo::grid_cells(cfg.grid_rows, cfg.grid_cols);
  } else {
    const double side = std::sqrt(static_cast<double>(cfg.voronoi_seeds));
    std::vector<geo::Point> seeds;
    seeds.reserve(static_cast<size_t>(cfg.voronoi_seeds));
    for (int i = 0; i < cfg.voronoi_seeds; ++i) {
      seeds.push_back({quantize(rng.uniform(0.0, side)),
                       quantize(rng.uniform(0.0, side))});
    }
    polys = geo::voronoi_cells(seeds, 0.0, 0.0, side, side);
  }
  for (auto& p : polys) p = quantize_polygon(p);
  const int n_regions = static_cast<int>(polys.size());
  std::vector<geo::Point> centers(polys.size());
  for (size_t i = 0; i < polys.size(); ++i) centers[i] = geo::centroid(polys[i]);
  const int rw = static_cast<int>(std::to_string(n_regions - 1).size());
  for (int i = 0; i < n_regions; ++i) {
    src.regions.push_back({"r" + zpad(i, rw), polys[static_cast<size_t>(i)]});
  }

  // Business areas.
  double side = grid_mode ? 0.0 : std::sqrt(static_cast<double>(cfg.voronoi_seeds));
  const double box_w = grid_mode ? cfg.grid_cols : side;
  const double box_h = grid_mode ? cfg.grid_rows : side;
  for (int i = 0; i < cfg.n_ba; ++i) {
    src.bas.push_back({"ba" + std::to_string(i), "BizArea" + std::to_string(i),
                       {quantize(rng.uniform(0.0, box_w)),
                        quantize(rng.uniform(0.0, box_h))}});
  }

  // Category forest.
  CateTree tree;
  tree.c3_to_c2.resize(static_cast<size_t>(cfg.n_cate3));
  tree.c2_to_c1.resize(static_cast<size_t>(cfg.n_cate2));
  for (int i = 0; i < cfg.n_cate2; ++i) {
    tree.c2_to_c1[static_cast<size_t>(i)] =
        static_cast<int>(rng.uniform_index(static_cast<uint64_t>(cfg.n_cate1)));
  }
  for (int i = 0; i < cfg.n_cate3; ++i) {
    tree.c3_to_c2[static_cast<size_t>(i)] =
        static_cast<int>(rng.uniform_index(static_cast<uint64_t>(cfg.n_cate2)));
  }
  auto c1name = [](int i) { return "c1_" + std::to_string(i); };
  auto c2name = [](int i) { return "c2_" + std::to_string(i); };
  auto c3name = [](int i) { return "c3_" + std::to_string(i); };
  for (int i = 0; i < cfg.n_cate3; ++i) {
    const int c2 = tree.c3_to_c2[static_cast<size_t>(i)];
    src.taxonomy.push_back(
        {c3name(i), c2name(c2), c1name(tree.c2_to_c1[static_cast<size_t>(c2)])});
  }

  // Brands: category assignment and Zipf store counts.
  const int bw = static_cast<int>(std::to_string(cfg.n_brands - 1).size());
  std::vector<int> brand_cate3(static_cast<size_t>(cfg.n_brands));
  for (int i = 0; i < cfg.n_brands; ++i) {
    const std::string name = "b" + zpad(i, bw);
    city.brand_names.push_back(name);
    src.brands.push_back({"brand" + std::to_string(i), name});
    brand_cate3[static_cast<size_t>(i)] =
        static_cast<int>(rng.uniform_index(static_cast<uint64_t>(cfg.n_cate3)));
  }
  double zipf_total = 0.0;
  for (int i = 0; i < cfg.n_brands; ++i) {
    zipf_total += 1.0 / std::pow(static_cast<double>(i + 1), 1.1);
  }
  const double store_budget = 0.6 * cfg.n_pois;
  std::vector<int> store_counts(static_cast<size_t>(cfg.n_brands));
  int total_stores = 0;
  for (int i = 0; i < cfg.n_brands; ++i) {
    const double w = 1.0 / std::pow(static_cast<double>(i + 1), 1.1);
    store_counts[static_cast<size_t>(i)] =
        std::max(1, static_cast<int>(std::floor(store_budget * w / zipf_total)));
    total_stores += store_counts[static_cast<size_t>(i)];
  }
  const int n_background = std::max(0, cfg.n_pois - total_stores);

  // Background POIs drive region function and the gravity masses.
  struct PoiDraft {
    geo::Point point;
    int region;
    int cate3;
    int brand;  // -1 for background
  };
  std::vector<PoiDraft> drafts;
  std::vector<int> bg_count(static_cast<size_t>(n_regions), 0);
  std::vector<std::vector<double>> region_hist(
      static_cast<size_t>(n_regions),
      std::vector<double>(static_cast<size_t>(cfg.n_cate1), 0.0));
  for (int i = 0; i < n_background; ++i) {
    const int region =
        static_cast<int>(rng.uniform_index(static_cast<uint64_t>(n_regions)));
    const geo::Point p = sample_inside(polys[static_cast<size_t>(region)], rng);
    const int c3 =
        static_cast<int>(rng.uniform_index(static_cast<uint64_t>(cfg.n_cate3)));
    drafts.push_back({p, region, c3, -1});
    bg_count[static_cast<size_t>(region)]++;
    const int c1 =
        tree.c2_to_c1[static_cast<size_t>(tree.c3_to_c2[static_cast<size_t>(c3)])];
    region_hist[static_cast<size_t>(region)][static_cast<size_t>(c1)] += 1.0;
  }

  // Gravity flows with per-direction noise.
  double avg_mass = 0.0;
  for (int c : bg_count) avg_mass += 1.0 + c;
  avg_mass /= std::max(1, n_regions);
  std::map<std::pair<int, int>, long long> flow_counts;
  for (int i = 0; i < n_regions; ++i) {
    for (int j = 0; j < n_regions; ++j) {
      if (i == j) continue;
      const double d = geo::planar_distance(centers[static_cast<size_t>(i)],
                                            centers[static_cast<size_t>(j)]);
      const double mi = 1.0 + bg_count[static_cast<size_t>(i)];
      const double mj = 1.0 + bg_count[static_cast<size_t>(j)];
      const double base =
          40.0 * (mi * mj) / (avg_mass * avg_mass) / (d * d + 0.5);
      const double u = rng.uniform(0.6, 1.4);
      const long long count = static_cast<long long>(std::llround(base * u));
      if (count > 0) {
        flow_counts[{i, j}] = count;
        src.flows.push_back({src.regions[static_cast<size_t>(i)].region_id,
                             src.regions[static_cast<size_t>(j)].region_id,
                             count});
      }
    }
  }

  // Plant context.
  PlantContext ctx;
  ctx.region_count = n_regions;
  ctx.top_flow_dest.assign(static_cast<size_t>(n_regions), -1);
  {
    std::vector<long long> best(static_cast<size_t>(n_regions), 0);
    for (const auto& [pair, count] : flow_counts) {
      if (count > best[static_cast<size_t>(pair.first)]) {
        best[static_cast<size_t>(pair.first)] = count;
        ctx.top_flow_dest[static_cast<size_t>(pair.first)] = pair.second;
      }
    }
  }
  ctx.best_function_match.assign(static_cast<size_t>(n_regions), -1);
  {
    auto norm = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x * x;
      return std::sqrt(s);
    };
    for (int i = 0; i < n_regions; ++i) {
      const double ni = norm(region_hist[static_cast<size_t>(i)]);
      if (ni == 0.0) continue;
      double best_cos = -1.0;
      for (int j = 0; j < n_regions; ++j) {
        if (i == j) continue;
        const double nj = norm(region_hist[static_cast<size_t>(j)]);
        if (nj == 0.0) continue;
        double dot = 0.0;
        for (int c = 0; c < cfg.n_cate1; ++c) {
          dot += region_hist[static_cast<size_t>(i)][static_cast<size_t>(c)] *
                 region_hist[static_cast<size_t>(j)][static_cast<size_t>(c)];
        }
        const double cos = dot / (ni * nj);
        if (cos > best_cos + 1e-12) {
          best_cos = cos;
          ctx.best_function_match[static_cast<size_t>(i)] = j;
        }
      }
    }
  }

  // Base sites (uniform), then the planted overlay.
  std::vector<StoreRecord> base;
  for (int b = 0; b < cfg.n_brands; ++b) {
    for (int s = 0; s < store_counts[static_cast<size_t>(b)]; ++s) {
      base.push_back(
          {b,
           static_cast<int>(rng.uniform_index(static_cast<uint64_t>(n_regions))),
           false});
    }
  }
  city.stores = plant_site_patterns(base, patterns, ctx, rng);
  for (const auto& rec : city.stores) {
    src.sites.push_back(
        {src.brands[static_cast<size_t>(rec.brand)].brand_id,
         src.regions[static_cast<size_t>(rec.region)].region_id, ""});
  }

  // Store POIs at the chosen sites.
  for (const auto& rec : city.stores) {
    const geo::Point p =
        sample_inside(polys[static_cast<size_t>(rec.region)], rng);
    drafts.push_back(
        {p, rec.region, brand_cate3[static_cast<size_t>(rec.brand)], rec.brand});
  }
  const int pw = static_cast<int>(std::to_string(drafts.size()).size());
  std::vector<std::vector<int>> pois_by_region(static_cast<size_t>(n_regions));
  for (size_t i = 0; i < drafts.size(); ++i) {
    const auto& d = drafts[i];
    const int c2 = tree.c3_to_c2[static_cast<size_t>(d.cate3)];
    const int c1 = tree.c2_to_c1[static_cast<size_t>(c2)];
    ukg::RawSources::Poi poi;
    poi.pid = "p" + zpad(static_cast<int>(i), pw);
    poi.name = d.brand >= 0
                   ? city.brand_names[static_cast<size_t>(d.brand)] + "_store_" +
                         std::to_string(i)
                   : "venue_" + std::to_string(i);
    poi.point = d.point;
    poi.cate1 = c1name(c1);
    poi.cate2 = c2name(c2);
    poi.cate3 = c3name(d.cate3);
    poi.brand_name =
        d.brand >= 0 ? city.brand_names[static_cast<size_t>(d.brand)] : "";
    src.pois.push_back(std::move(poi));
    pois_by_region[static_cast<size_t>(d.region)].push_back(
        static_cast<int>(i));
  }

  // Brand relatedness rows for colocation pairs.
  std::set<std::pair<int, int>> rb_pairs;
  for (const auto& p : patterns) {
    if (p.kind != PatternKind::RelatedBrandColocation) continue;
    const int a = std::min(p.brand_indices[0], p.brand_indices[1]);
    const int b = std::max(p.brand_indices[0], p.brand_indices[1]);
    if (rb_pairs.emplace(a, b).second) {
      src.brand_relations.push_back(
          {src.brands[static_cast<size_t>(a)].brand_id,
           src.brands[static_cast<size_t>(b)].brand_id});
    }
  }

  // Check-ins: users visit a few venues around a home region.
  const int n_users = std::max(10, cfg.n_pois / 3);
  for (int u = 0; u < n_users; ++u) {
    const int home =
        static_cast<int>(rng.uniform_index(static_cast<uint64_t>(n_regions)));
    const auto& local = pois_by_region[static_cast<size_t>(home)];
    const int visits = 2 + static_cast<int>(rng.uniform_index(3));
    std::set<int> chosen;
    for (int v = 0; v < visits; ++v) {
      int poi;
      if (!local.empty()) {
        poi = local[static_cast<size_t>(rng.uniform_index(local.size()))];
      } else {
        poi = static_cast<int>(rng.uniform_index(drafts.size()));
      }
      if (!chosen.insert(poi).second) continue;
      src.checkins.push_back({"u" + std::to_string(u),
                              src.pois[static_cast<size_t>(poi)].pid,
                              1 + static_cast<long long>(rng.uniform_index(3))});
    }
  }

  // Clicks: region attractiveness times per-venue noise.
  std::vector<double> attractiveness(static_cast<size_t>(n_regions));
  for (auto& a : attractiveness) a = std::exp(rng.normal(2.5, 0.8));
  for (size_t i = 0; i < drafts.size(); ++i) {
    const double a = attractiveness[static_cast<size_t>(drafts[i].region)];
    const long long clicks =
        static_cast<long long>(std::llround(a * rng.uniform(0.5, 1.5)));
    src.clicks.push_back({src.pois[i].pid, std::max(1LL, clicks)});
  }

  return city;
}

std::string GeneratedCity::planted_truth_json() const {
  nlohmann::ordered_json j;
  j["seed"] = config.seed;
  j["regions"] = config.region_count();
  j["brands"] = config.n_brands;
  nlohmann::ordered_json pats = nlohmann::ordered_json::array();
  for (const auto& p : patterns) {
    nlohmann::ordered_json pj;
    pj["kind"] = pattern_kind_name(p.kind);
    nlohmann::ordered_json names = nlohmann::ordered_json::array();
    for (int b : p.brand_indices) {
      names.push_back(brand_names[static_cast<size_t>(b)]);
    }
    pj["brands"] = names;
    pj["strength"] = p.strength;
    pats.push_back(pj);
  }
  j["patterns"] = pats;
  nlohmann::ordered_json stores_j = nlohmann::ordered_json::array();
  for (const auto& s : stores) {
    stores_j.push_back({{"brand", brand_names[static_cast<size_t>(s.brand)]},
                        {"region", sources.regions[static_cast<size_t>(s.region)]
                                       .region_id},
                        {"planted", s.planted}});
  }
  j["stores"] = stores_j;
  return j.dump(2);
}

void write_city(const GeneratedCity& city, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& src = city.sources;
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : src.regions) {
      rows.push_back({r.region_id, geo::to_wkt(r.polygon)});
    }
    ukg::write_tsv(dir / "regions.tsv", {"region_id", "wkt_polygon"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& b : src.bas) {
      rows.push_back({b.ba_id, b.name, fmt(b.point.x), fmt(b.point.y)});
    }
    ukg::write_tsv(dir / "ba.tsv", {"ba_id", "name", "lon", "lat"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : src.pois) {
      rows.push_back({p.pid, p.name, fmt(p.point.x), fmt(p.point.y), p.cate1,
                      p.cate2, p.cate3, p.brand_name});
    }
    ukg::write_tsv(
        dir / "pois.tsv",
        {"pid", "name", "lon", "lat", "cate1", "cate2", "cate3", "brand_name"},
        rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& b : src.brands) rows.push_back({b.brand_id, b.name});
    ukg::write_tsv(dir / "brands.tsv", {"brand_id", "name"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : src.brand_relations) {
      rows.push_back({r.brand_id_a, r.brand_id_b});
    }
    ukg::write_tsv(dir / "brand_relations.tsv", {"brand_id_a", "brand_id_b"},
                   rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : src.sites) rows.push_back({s.brand_id, s.region_id});
    ukg::write_tsv(dir / "sites.tsv", {"brand_id", "region_id"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& f : src.flows) {
      rows.push_back({f.region_from, f.region_to, std::to_string(f.count)});
    }
    ukg::write_tsv(dir / "flows.tsv", {"region_from", "region_to", "count"},
                   rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : src.checkins) {
      rows.push_back({c.uid, c.pid, std::to_string(c.count)});
    }
    ukg::write_tsv(dir / "checkins.tsv", {"uid", "pid", "count"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : src.clicks) {
      rows.push_back({c.pid, std::to_string(c.count)});
    }
    ukg::write_tsv(dir / "clicks.tsv", {"pid", "count"}, rows);
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : src.taxonomy) {
      rows.push_back({t.cate3, t.cate2, t.cate1});
    }
    ukg::write_tsv(dir / "taxonomy.tsv", {"cate3", "cate2", "cate1"}, rows);
  }
  {
    std::ofstream out(dir / "planted_truth.json");
    out << city.planted_truth_json() << '\n';
  }
}

}  // namespace knowsite::synth
