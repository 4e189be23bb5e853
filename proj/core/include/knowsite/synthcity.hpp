#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "knowsite/rng.hpp"
#include "knowsite/sources.hpp"

namespace knowsite::synth {

struct CityConfig {
  // Exactly one of grid / voronoi modes: grid_rows*grid_cols unit squares,
  // or voronoi_seeds clipped cells of unit mean area.
  int grid_rows = 0;
  int grid_cols = 0;
  int voronoi_seeds = 0;
  int n_brands = 8;
  int n_pois = 200;
  int n_ba = 5;
  int n_cate1 = 4;
  int n_cate2 = 8;
  int n_cate3 = 16;
  uint64_t seed = 1;

  int region_count() const {
    return voronoi_seeds > 0 ? voronoi_seeds : grid_rows * grid_cols;
  }
};

enum class PatternKind {
  RelatedBrandColocation,  // follower copies anchor regions
  FlowFollowing,           // follower sits at top flow destinations
  FunctionMatching,        // follower picks most function-similar regions
};

const char* pattern_kind_name(PatternKind k);

struct PlantedPattern {
  PatternKind kind = PatternKind::RelatedBrandColocation;
  // [anchor, follower]; flow/function also accept [brand] (self-anchored:
  // later sites follow the brand's own earlier sites).
  std::vector<int> brand_indices;
  double strength = 1.0;  // probability a site obeys the pattern
};

// One store record; sites.tsv keeps one row per store (pairs collapse later).
struct StoreRecord {
  int brand = -1;   // brand index
  int region = -1;  // region index
  bool planted = false;
};

// Everything plant_site_patterns needs besides the base sites.
struct PlantContext {
  int region_count = 0;
  // Top outgoing flow destination per region, -1 when none.
  std::vector<int> top_flow_dest;
  // Most function-similar region per region, -1 when none.
  std::vector<int> best_function_match;
};

// Applies the planted regularities: with probability `strength` a follower
// store obeys its pattern, otherwise it stays at the base (uniform) region.
std::vector<StoreRecord> plant_site_patterns(
    const std::vector<StoreRecord>& base,
    const std::vector<PlantedPattern>& patterns, const PlantContext& ctx,
    Rng& rng);

struct GeneratedCity {
  ukg::RawSources sources;
  std::vector<std::string> brand_names;  // by brand index
  std::vector<StoreRecord> stores;       // one per sites.tsv row
  std::vector<PlantedPattern> patterns;
  CityConfig config;

  std::string planted_truth_json() const;
};

// Deterministic: the output is a pure function of (cfg, patterns).
GeneratedCity generate_city(const CityConfig& cfg,
                            const std::vector<PlantedPattern>& patterns);

// Writes the urbankg input TSV suite plus planted_truth.json.
void write_city(const GeneratedCity& city, const std::filesystem::path& dir);

}  // namespace knowsite::synth
