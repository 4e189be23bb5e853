#include "knowsite/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace knowsite::eval {

double relevance(const RankingResult& res, int region) {
  for (size_t i = 0; i < res.true_regions.size(); ++i) {
    if (res.true_regions[i] == region) {
      const double rank = static_cast<double>(i + 1);
      return (static_cast<double>(res.candidate_count) - rank + 1.0) /
             static_cast<double>(res.candidate_count);
    }
  }
  return 0.0;
}

double ndcg_at_k(const RankingResult& res, int k) {
  if (k < 1) throw ContractError("ndcg needs k >= 1");
  if (res.true_regions.empty()) return 0.0;
  double dcg = 0.0;
  const int limit = std::min<int>(k, static_cast<int>(res.predicted.size()));
  for (int j = 1; j <= limit; ++j) {
    const double rel =
        relevance(res, res.predicted[static_cast<size_t>(j - 1)]);
    dcg += (std::pow(2.0, rel) - 1.0) / std::log2(static_cast<double>(j) + 1.0);
  }
  double idcg = 0.0;
  const int ideal = std::min<int>(k, res.n_true());
  for (int j = 1; j <= ideal; ++j) {
    const double rel =
        (static_cast<double>(res.candidate_count) - j + 1.0) /
        static_cast<double>(res.candidate_count);
    idcg +=
        (std::pow(2.0, rel) - 1.0) / std::log2(static_cast<double>(j) + 1.0);
  }
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

double hit_at_k(const RankingResult& res, int k) {
  if (k < 1) throw ContractError("hit needs k >= 1");
  const size_t kt = std::min<size_t>(static_cast<size_t>(k),
                                     res.true_regions.size());
  const size_t kp =
      std::min<size_t>(static_cast<size_t>(k), res.predicted.size());
  std::set<int> top_true(res.true_regions.begin(),
                         res.true_regions.begin() + static_cast<int64_t>(kt));
  for (size_t j = 0; j < kp; ++j) {
    if (top_true.count(res.predicted[j])) return 1.0;
  }
  return 0.0;
}

namespace {

int hits_in_prefix(const RankingResult& res, int k) {
  std::set<int> truth(res.true_regions.begin(), res.true_regions.end());
  const size_t kp =
      std::min<size_t>(static_cast<size_t>(k), res.predicted.size());
  int hits = 0;
  for (size_t j = 0; j < kp; ++j) {
    if (truth.count(res.predicted[j])) ++hits;
  }
  return hits;
}

}  // namespace

double precision_at_k(const RankingResult& res, int k) {
  if (k < 1) throw ContractError("precision needs k >= 1");
  return static_cast<double>(hits_in_prefix(res, k)) / static_cast<double>(k);
}

double recall_at_k(const RankingResult& res, int k) {
  if (k < 1) throw ContractError("recall needs k >= 1");
  if (res.true_regions.empty()) return 0.0;
  return static_cast<double>(hits_in_prefix(res, k)) /
         static_cast<double>(std::min<int>(res.n_true(), k));
}

double map_at_k(const RankingResult& res, int k) {
  if (k < 1) throw ContractError("map needs k >= 1");
  if (res.true_regions.empty()) return 0.0;
  std::set<int> truth(res.true_regions.begin(), res.true_regions.end());
  const size_t kp =
      std::min<size_t>(static_cast<size_t>(k), res.predicted.size());
  double total = 0.0;
  int hits = 0;
  for (size_t j = 1; j <= kp; ++j) {
    const int region = res.predicted[j - 1];
    if (truth.count(region)) ++hits;
    const double rel = relevance(res, region);
    if (rel > 0.0) {
      total += (static_cast<double>(hits) / static_cast<double>(j)) * rel;
    }
  }
  return total / static_cast<double>(std::min<int>(res.n_true(), k));
}

MetricsReport evaluate_rankings(const std::vector<RankingResult>& results,
                                const std::vector<int>& ks) {
  MetricsReport report;
  report.ks = ks;
  std::map<int, MetricRow> totals;
  for (int k : ks) totals[k] = {};
  for (const auto& res : results) {
    if (res.true_regions.empty()) {
      report.brands_skipped++;
      continue;
    }
    report.brands_evaluated++;
    std::map<int, MetricRow> rows;
    for (int k : ks) {
      MetricRow row;
      row.ndcg = ndcg_at_k(res, k);
      row.hit = hit_at_k(res, k);
      row.precision = precision_at_k(res, k);
      row.recall = recall_at_k(res, k);
      row.map = map_at_k(res, k);
      rows[k] = row;
      totals[k].ndcg += row.ndcg;
      totals[k].hit += row.hit;
      totals[k].precision += row.precision;
      totals[k].recall += row.recall;
      totals[k].map += row.map;
    }
    report.per_brand.emplace_back(res.brand, std::move(rows));
  }
  const double n = std::max<int64_t>(1, report.brands_evaluated);
  for (int k : ks) {
    MetricRow m = totals[k];
    report.mean[k] = {m.ndcg / n, m.hit / n, m.precision / n, m.recall / n,
                      m.map / n};
    report.stddev[k] = {};
  }
  return report;
}

std::vector<RankingResult> build_rankings(
    model::KnowSiteModel& m, const SiteDataset& ds, Split split,
    const std::map<int, long long>& region_popularity) {
  const auto& pairs = ds.split(split);
  std::map<int, std::vector<int>> true_by_brand;
  for (const auto& p : pairs) true_by_brand[p.brand].push_back(p.region);

  std::vector<int> brands;
  for (const auto& [brand, regions] : true_by_brand) brands.push_back(brand);
  if (brands.empty()) return {};

  auto fwd = m.forward(brands, /*training=*/false, nullptr);
  const auto& regions = m.candidate_regions();
  const auto& scores = fwd.scores.value();
  const int64_t n = static_cast<int64_t>(regions.size());

  auto popularity_of = [&](int region) {
    auto it = region_popularity.find(region);
    return it == region_popularity.end() ? 0LL : it->second;
  };

  std::vector<RankingResult> results;
  for (size_t b = 0; b < brands.size(); ++b) {
    RankingResult res;
    res.brand = brands[b];
    res.candidate_count = n;
    res.true_regions = true_by_brand[brands[b]];
    std::sort(res.true_regions.begin(), res.true_regions.end(),
              [&](int x, int y) {
                const long long px = popularity_of(x), py = popularity_of(y);
                if (px != py) return px > py;
                return x < y;
              });
    std::vector<int> order(regions.begin(), regions.end());
    const double* row = scores.data() + static_cast<int64_t>(b) * n;
    std::sort(order.begin(), order.end(), [&](int x, int y) {
      const double sx = row[m.region_index(x)];
      const double sy = row[m.region_index(y)];
      if (sx != sy) return sx > sy;
      return x < y;
    });
    res.predicted = std::move(order);
    results.push_back(std::move(res));
  }
  return results;
}

MetricsReport evaluate_model(model::KnowSiteModel& m, const SiteDataset& ds,
                             Split split,
                             const std::map<int, long long>& region_popularity,
                             const std::vector<int>& ks) {
  return evaluate_rankings(build_rankings(m, ds, split, region_popularity),
                           ks);
}

MetricsReport aggregate_runs(const std::vector<MetricsReport>& runs) {
  if (runs.empty()) throw ContractError("aggregate of zero runs");
  MetricsReport agg;
  agg.ks = runs[0].ks;
  const double n = static_cast<double>(runs.size());
  for (int k : agg.ks) {
    MetricRow mean, var;
    for (const auto& run : runs) {
      const MetricRow& r = run.mean.at(k);
      mean.ndcg += r.ndcg;
      mean.hit += r.hit;
      mean.precision += r.precision;
      mean.recall += r.recall;
      mean.map += r.map;
    }
    mean.ndcg /= n;
    mean.hit /= n;
    mean.precision /= n;
    mean.recall /= n;
    mean.map /= n;
    for (const auto& run : runs) {
      const MetricRow& r = run.mean.at(k);
      var.ndcg += (r.ndcg - mean.ndcg) * (r.ndcg - mean.ndcg);
      var.hit += (r.hit - mean.hit) * (r.hit - mean.hit);
      var.precision +=
          (r.precision - mean.precision) * (r.precision - mean.precision);
      var.recall += (r.recall - mean.recall) * (r.recall - mean.recall);
      var.map += (r.map - mean.map) * (r.map - mean.map);
    }
    agg.mean[k] = mean;
    agg.stddev[k] = {std::sqrt(var.ndcg / n), std::sqrt(var.hit / n),
                     std::sqrt(var.precision / n), std::sqrt(var.recall / n),
                     std::sqrt(var.map / n)};
  }
  agg.brands_evaluated = runs[0].brands_evaluated;
  agg.brands_skipped = runs[0].brands_skipped;
  return agg;
}

std::string MetricsReport::to_json_string() const {
  nlohmann::ordered_json j;
  // Headline columns in the familiar layout.
  auto get = [&](int k) -> const MetricRow* {
    auto it = mean.find(k);
    return it == mean.end() ? nullptr : &it->second;
  };
  nlohmann::ordered_json headline;
  if (const auto* r5 = get(5)) {
    headline["N@5"] = r5->ndcg;
    headline["H@5"] = r5->hit;
  }
  if (const auto* r10 = get(10)) {
    headline["N@10"] = r10->ndcg;
    headline["H@10"] = r10->hit;
    headline["P@10"] = r10->precision;
    headline["R@10"] = r10->recall;
    headline["M@10"] = r10->map;
  }
  j["headline"] = headline;
  nlohmann::ordered_json per_k;
  for (int k : ks) {
    const MetricRow& m = mean.at(k);
    const MetricRow& s = stddev.at(k);
    nlohmann::ordered_json row;
    row["ndcg"] = m.ndcg;
    row["hit"] = m.hit;
    row["precision"] = m.precision;
    row["recall"] = m.recall;
    row["map"] = m.map;
    row["ndcg_std"] = s.ndcg;
    row["hit_std"] = s.hit;
    row["precision_std"] = s.precision;
    row["recall_std"] = s.recall;
    row["map_std"] = s.map;
    per_k[std::to_string(k)] = row;
  }
  j["per_k"] = per_k;
  j["brands_evaluated"] = brands_evaluated;
  j["brands_skipped"] = brands_skipped;
  return j.dump(2);
}

void write_per_brand_csv(const MetricsReport& report,
                         const ukg::KnowledgeGraph& kg,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SourceError("cannot write " + path.string());
  out << "brand";
  for (int k : report.ks) {
    out << ",ndcg@" << k << ",hit@" << k << ",precision@" << k << ",recall@"
        << k << ",map@" << k;
  }
  out << "\n";
  out.precision(10);
  for (const auto& [brand, rows] : report.per_brand) {
    out << kg.entity(brand).name;
    for (int k : report.ks) {
      const MetricRow& r = rows.at(k);
      out << ',' << r.ndcg << ',' << r.hit << ',' << r.precision << ','
          << r.recall << ',' << r.map;
    }
    out << "\n";
  }
}

}  // namespace knowsite::eval
