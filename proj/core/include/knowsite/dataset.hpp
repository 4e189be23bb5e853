#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "knowsite/extract.hpp"
#include "knowsite/kg.hpp"
#include "knowsite/rng.hpp"
#include "knowsite/sources.hpp"

namespace knowsite {

enum class Split { Train, Valid, Test };

struct SitePair {
  int brand = -1;
  int region = -1;
  auto operator<=>(const SitePair&) const = default;
};

// Deduplicated (brand, region) pairs with disjoint 6:2:2 splits.
struct SiteDataset {
  std::vector<SitePair> train, valid, test;

  const std::vector<SitePair>& split(Split s) const {
    switch (s) {
      case Split::Train: return train;
      case Split::Valid: return valid;
      default: return test;
    }
  }
  size_t total() const { return train.size() + valid.size() + test.size(); }

  // Valid + test pairs, the leakage holdout.
  std::vector<std::pair<int, int>> holdout_pairs() const;

  // Applies an entity-id remap (after leakage removal re-ids entities).
  void remap(const std::vector<int>& old_to_new);
};

struct DatasetOptions {
  uint64_t seed = 0;
  bool split_per_brand = false;
  // Keep only brands with strictly more than this many store rows; 0 keeps
  // everything.
  long long min_stores = 0;
};

// Maps raw site rows onto KG entity ids, dedups pairs, and either honors the
// rows' split column (when every row carries one) or auto-splits 6:2:2.
SiteDataset build_site_dataset(const ukg::KnowledgeGraph& kg,
                               const std::map<std::string, std::string>& brand_alias,
                               const std::vector<ukg::RawSources::Site>& rows,
                               const DatasetOptions& opts);

std::vector<ukg::RawSources::Site> load_sites_file(
    const std::filesystem::path& file);

Split split_from_name(const std::string& name);
const char* split_name(Split s);

}  // namespace knowsite
