#include "knowsite/dataset.hpp"

#include <algorithm>
#include <set>

namespace knowsite {

std::vector<std::pair<int, int>> SiteDataset::holdout_pairs() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(valid.size() + test.size());
  for (const auto& p : valid) out.emplace_back(p.brand, p.region);
  for (const auto& p : test) out.emplace_back(p.brand, p.region);
  return out;
}

void SiteDataset::remap(const std::vector<int>& old_to_new) {
  auto apply = [&](std::vector<SitePair>& pairs) {
    for (auto& p : pairs) {
      const int b = old_to_new[static_cast<size_t>(p.brand)];
      const int r = old_to_new[static_cast<size_t>(p.region)];
      if (b < 0 || r < 0) {
        throw ContractError("site pair references a removed entity");
      }
      p.brand = b;
      p.region = r;
    }
  };
  apply(train);
  apply(valid);
  apply(test);
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "valid") return Split::Valid;
  if (name == "test") return Split::Test;
  throw ConfigError("unknown split: " + name);
}

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    default: return "test";
  }
}

SiteDataset build_site_dataset(
    const ukg::KnowledgeGraph& kg,
    const std::map<std::string, std::string>& brand_alias,
    const std::vector<ukg::RawSources::Site>& rows,
    const DatasetOptions& opts) {
  // Optional store-count filter runs over raw rows, before dedup.
  std::map<std::string, long long> store_counts;
  for (const auto& row : rows) store_counts[row.brand_id] += 1;

  size_t with_split = 0;
  std::vector<std::tuple<SitePair, std::string>> resolved;
  std::set<SitePair> seen;
  for (const auto& row : rows) {
    if (opts.min_stores > 0 && store_counts[row.brand_id] <= opts.min_stores) {
      continue;
    }
    auto alias = brand_alias.find(row.brand_id);
    if (alias == brand_alias.end()) {
      throw LookupError("sites: unknown brand_id " + row.brand_id);
    }
    auto brand = kg.find_entity(alias->second);
    auto region = kg.find_entity("region:" + row.region_id);
    if (!brand || !region) {
      throw LookupError("sites: unresolved pair (" + row.brand_id + ", " +
                        row.region_id + ")");
    }
    SitePair pair{*brand, *region};
    if (!seen.insert(pair).second) continue;  // one brand-region sample
    if (!row.split.empty()) ++with_split;
    resolved.emplace_back(pair, row.split);
  }

  SiteDataset ds;
  if (!resolved.empty() && with_split == resolved.size()) {
    for (const auto& [pair, split] : resolved) {
      switch (split_from_name(split)) {
        case Split::Train: ds.train.push_back(pair); break;
        case Split::Valid: ds.valid.push_back(pair); break;
        case Split::Test: ds.test.push_back(pair); break;
      }
    }
    return ds;
  }
  if (with_split != 0) {
    throw ParseError("sites: split column must be filled for every row");
  }

  std::vector<SitePair> pairs;
  pairs.reserve(resolved.size());
  for (const auto& [pair, split] : resolved) pairs.push_back(pair);
  std::sort(pairs.begin(), pairs.end());

  Rng rng(opts.seed);
  auto assign = [&](std::vector<SitePair> group) {
    rng.shuffle(group);
    const size_t n = group.size();
    const size_t n_test = n / 5;
    const size_t n_valid = n / 5;
    const size_t n_train = n - n_valid - n_test;
    for (size_t i = 0; i < n; ++i) {
      if (i < n_train) {
        ds.train.push_back(group[i]);
      } else if (i < n_train + n_valid) {
        ds.valid.push_back(group[i]);
      } else {
        ds.test.push_back(group[i]);
      }
    }
  };

  if (opts.split_per_brand) {
    std::map<int, std::vector<SitePair>> by_brand;
    for (const auto& p : pairs) by_brand[p.brand].push_back(p);
    for (auto& [brand, group] : by_brand) assign(std::move(group));
  } else {
    assign(std::move(pairs));
  }
  return ds;
}

std::vector<ukg::RawSources::Site> load_sites_file(
    const std::filesystem::path& file) {
  auto t = ukg::read_tsv(file);
  std::vector<ukg::RawSources::Site> rows;
  if (t.columns.empty()) return rows;
  const int brand = t.column("brand_id", file.filename().string());
  const int region = t.column("region_id", file.filename().string());
  int split = -1;
  for (size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == "split") split = static_cast<int>(i);
  }
  for (const auto& row : t.rows) {
    ukg::RawSources::Site s;
    s.brand_id = row[static_cast<size_t>(brand)];
    s.region_id = row[static_cast<size_t>(region)];
    if (split >= 0) s.split = row[static_cast<size_t>(split)];
    rows.push_back(std::move(s));
  }
  return rows;
}

}  // namespace knowsite
