#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "knowsite/dataset.hpp"
#include "knowsite/model.hpp"

namespace knowsite::eval {

// Per-brand ranking outcome. true_regions is ordered by ground-truth
// popularity (descending, ties by entity id); predicted is the full
// candidate set ordered by model score (descending, ties by entity id).
struct RankingResult {
  int brand = -1;
  std::vector<int> true_regions;
  std::vector<int> predicted;
  int64_t candidate_count = 0;  // |A|

  int n_true() const { return static_cast<int>(true_regions.size()); }
};

// Relevance of a predicted region: (|A| - rank + 1)/|A| with rank the
// 1-based position in the popularity-ordered true list, 0 if not true.
double relevance(const RankingResult& res, int region);

double ndcg_at_k(const RankingResult& res, int k);
double hit_at_k(const RankingResult& res, int k);
double precision_at_k(const RankingResult& res, int k);
double recall_at_k(const RankingResult& res, int k);
double map_at_k(const RankingResult& res, int k);

struct MetricRow {
  double ndcg = 0, hit = 0, precision = 0, recall = 0, map = 0;
};

struct MetricsReport {
  std::vector<int> ks;
  std::map<int, MetricRow> mean;    // per k, averaged over brands (or runs)
  std::map<int, MetricRow> stddev;  // zero unless aggregated over runs
  std::vector<std::pair<int, std::map<int, MetricRow>>> per_brand;
  int64_t brands_evaluated = 0;
  int64_t brands_skipped = 0;  // no true regions in the split

  std::string to_json_string() const;
};

// Equal-weight mean over brands; brands with no true regions are skipped
// and counted.
MetricsReport evaluate_rankings(const std::vector<RankingResult>& results,
                                const std::vector<int>& ks);

// Builds per-brand rankings from eval-mode model scores. Popularity keys
// the true-region ordering; missing regions count as popularity 0.
std::vector<RankingResult> build_rankings(
    model::KnowSiteModel& m, const SiteDataset& ds, Split split,
    const std::map<int, long long>& region_popularity);

MetricsReport evaluate_model(model::KnowSiteModel& m, const SiteDataset& ds,
                             Split split,
                             const std::map<int, long long>& region_popularity,
                             const std::vector<int>& ks);

// Mean and standard deviation across runs of per-k means.
MetricsReport aggregate_runs(const std::vector<MetricsReport>& runs);

void write_per_brand_csv(const MetricsReport& report,
                         const ukg::KnowledgeGraph& kg,
                         const std::filesystem::path& path);

}  // namespace knowsite::eval
