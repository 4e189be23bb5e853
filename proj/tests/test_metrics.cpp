#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "knowsite/metrics.hpp"

using namespace knowsite;
using namespace knowsite::eval;

namespace {

// The hand-derived fixture: |A|=5, true list [a2, a4] by popularity,
// predicted [a4, a1, a2, a5, a3]. Region ids follow the names.
RankingResult fixture() {
  RankingResult res;
  res.brand = 0;
  res.candidate_count = 5;
  res.true_regions = {2, 4};
  res.predicted = {4, 1, 2, 5, 3};
  return res;
}

// Independent straight-from-the-formulas implementation used as an oracle.
struct Oracle {
  static double rel(const RankingResult& r, int region) {
    auto it =
        std::find(r.true_regions.begin(), r.true_regions.end(), region);
    if (it == r.true_regions.end()) return 0.0;
    const double rank =
        static_cast<double>(it - r.true_regions.begin()) + 1.0;
    return (static_cast<double>(r.candidate_count) - rank + 1.0) /
           static_cast<double>(r.candidate_count);
  }
  static double ndcg(const RankingResult& r, int k) {
    double dcg = 0, idcg = 0;
    for (int j = 1; j <= k && j <= static_cast<int>(r.predicted.size()); ++j) {
      dcg += (std::pow(2.0, rel(r, r.predicted[static_cast<size_t>(j - 1)])) -
              1.0) /
             std::log2(j + 1.0);
    }
    for (int j = 1; j <= std::min<int>(k, r.n_true()); ++j) {
      const double rj = (static_cast<double>(r.candidate_count) - j + 1.0) /
                        static_cast<double>(r.candidate_count);
      idcg += (std::pow(2.0, rj) - 1.0) / std::log2(j + 1.0);
    }
    return idcg > 0 ? dcg / idcg : 0.0;
  }
  static double hit(const RankingResult& r, int k) {
    std::set<int> a(r.true_regions.begin(),
                    r.true_regions.begin() +
                        std::min<int64_t>(k, r.n_true()));
    for (int j = 0; j < std::min<int>(k, static_cast<int>(r.predicted.size()));
         ++j) {
      if (a.count(r.predicted[static_cast<size_t>(j)])) return 1.0;
    }
    return 0.0;
  }
  static double precision(const RankingResult& r, int k) {
    std::set<int> a(r.true_regions.begin(), r.true_regions.end());
    int hits = 0;
    for (int j = 0; j < std::min<int>(k, static_cast<int>(r.predicted.size()));
         ++j) {
      hits += a.count(r.predicted[static_cast<size_t>(j)]) ? 1 : 0;
    }
    return static_cast<double>(hits) / k;
  }
  static double recall(const RankingResult& r, int k) {
    std::set<int> a(r.true_regions.begin(), r.true_regions.end());
    int hits = 0;
    for (int j = 0; j < std::min<int>(k, static_cast<int>(r.predicted.size()));
         ++j) {
      hits += a.count(r.predicted[static_cast<size_t>(j)]) ? 1 : 0;
    }
    return static_cast<double>(hits) / std::min<int>(r.n_true(), k);
  }
  static double map(const RankingResult& r, int k) {
    std::set<int> a(r.true_regions.begin(), r.true_regions.end());
    int hits = 0;
    double total = 0;
    for (int j = 1; j <= std::min<int>(k, static_cast<int>(r.predicted.size()));
         ++j) {
      const int region = r.predicted[static_cast<size_t>(j - 1)];
      if (a.count(region)) ++hits;
      total += (static_cast<double>(hits) / j) * rel(r, region);
    }
    return total / std::min<int>(r.n_true(), k);
  }
};

}  // namespace

TEST_CASE("hand-derived fixture values") {
  auto res = fixture();
  CHECK(hit_at_k(res, 2) == 1.0);
  CHECK(precision_at_k(res, 2) == doctest::Approx(0.5));
  CHECK(recall_at_k(res, 2) == doctest::Approx(0.5));
  CHECK(precision_at_k(res, 5) == doctest::Approx(0.4));
  CHECK(recall_at_k(res, 5) == doctest::Approx(1.0));
  CHECK(map_at_k(res, 2) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(ndcg_at_k(res, 2) == doctest::Approx(0.505).epsilon(2e-3));
}

TEST_CASE("relevance follows the popularity rank convention") {
  auto res = fixture();
  CHECK(relevance(res, 2) == doctest::Approx(1.0));   // rank 1 of 5
  CHECK(relevance(res, 4) == doctest::Approx(0.8));   // rank 2 of 5
  CHECK(relevance(res, 1) == doctest::Approx(0.0));
}

TEST_CASE("ndcg extremes") {
  RankingResult res;
  res.candidate_count = 6;
  res.true_regions = {3, 1};
  res.predicted = {0, 2, 4, 5, 3, 1};
  CHECK(ndcg_at_k(res, 2) == 0.0);  // no true region in the top k
  res.predicted = {3, 1, 0, 2, 4, 5};
  CHECK(ndcg_at_k(res, 2) == doctest::Approx(1.0));  // ideal order
  RankingResult empty;
  empty.candidate_count = 6;
  empty.predicted = {0, 1, 2, 3, 4, 5};
  CHECK(ndcg_at_k(empty, 5) == 0.0);
}

TEST_CASE("hit saturates when k covers the candidates") {
  auto res = fixture();
  CHECK(hit_at_k(res, 5) == 1.0);
  RankingResult miss;
  miss.candidate_count = 4;
  miss.true_regions = {0};
  miss.predicted = {1, 2, 3, 0};
  CHECK(hit_at_k(miss, 2) == 0.0);
  CHECK(hit_at_k(miss, 4) == 1.0);
}

TEST_CASE("map extremes") {
  RankingResult res;
  res.candidate_count = 3;
  res.true_regions = {1};
  res.predicted = {1, 0, 2};
  CHECK(map_at_k(res, 1) == doctest::Approx(1.0));  // rel(rank 1) = 3/3
  res.predicted = {0, 2, 1};
  CHECK(map_at_k(res, 2) == doctest::Approx(0.0));
}

TEST_CASE("precision and recall count the same hits") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    RankingResult res;
    res.candidate_count = 12;
    std::vector<int> all(12);
    for (int i = 0; i < 12; ++i) all[static_cast<size_t>(i)] = i;
    rng.shuffle(all);
    res.predicted = all;
    const int n_true = 1 + static_cast<int>(rng.uniform_index(5));
    std::vector<int> truth = all;
    rng.shuffle(truth);
    truth.resize(static_cast<size_t>(n_true));
    res.true_regions = truth;
    for (int k : {1, 3, 5, 12}) {
      const double p = precision_at_k(res, k);
      const double r = recall_at_k(res, k);
      const double hits_p = p * k;
      const double hits_r = r * std::min(n_true, k);
      CHECK(std::abs(hits_p - std::round(hits_p)) < 1e-9);
      CHECK(std::abs(hits_p - hits_r) < 1e-9);
    }
  }
}

TEST_CASE("ndcg and map ignore order below rank k") {
  auto res = fixture();
  const double n2 = ndcg_at_k(res, 2);
  const double m2 = map_at_k(res, 2);
  std::swap(res.predicted[3], res.predicted[4]);
  std::swap(res.predicted[2], res.predicted[3]);
  CHECK(ndcg_at_k(res, 2) == doctest::Approx(n2).epsilon(1e-15));
  CHECK(map_at_k(res, 2) == doctest::Approx(m2).epsilon(1e-15));
}

TEST_CASE("hit is monotone in k") {
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    RankingResult res;
    res.candidate_count = 10;
    std::vector<int> all(10);
    for (int i = 0; i < 10; ++i) all[static_cast<size_t>(i)] = i;
    rng.shuffle(all);
    res.predicted = all;
    res.true_regions = {static_cast<int>(rng.uniform_index(10)),
                        static_cast<int>(rng.uniform_index(10))};
    double prev = 0;
    for (int k = 1; k <= 10; ++k) {
      const double h = hit_at_k(res, k);
      CHECK(h >= prev);
      prev = h;
    }
  }
}

TEST_CASE("metrics match the independent oracle on random instances") {
  Rng rng(123);
  for (int trial = 0; trial < 25; ++trial) {
    RankingResult res;
    res.candidate_count = 9;
    std::vector<int> all(9);
    for (int i = 0; i < 9; ++i) all[static_cast<size_t>(i)] = i;
    rng.shuffle(all);
    res.predicted = all;
    std::vector<int> truth = all;
    rng.shuffle(truth);
    truth.resize(1 + rng.uniform_index(4));
    res.true_regions = truth;
    for (int k : {1, 2, 5, 9}) {
      CHECK(ndcg_at_k(res, k) == doctest::Approx(Oracle::ndcg(res, k)).epsilon(1e-12));
      CHECK(hit_at_k(res, k) == doctest::Approx(Oracle::hit(res, k)));
      CHECK(precision_at_k(res, k) ==
            doctest::Approx(Oracle::precision(res, k)).epsilon(1e-12));
      CHECK(recall_at_k(res, k) ==
            doctest::Approx(Oracle::recall(res, k)).epsilon(1e-12));
      CHECK(map_at_k(res, k) == doctest::Approx(Oracle::map(res, k)).epsilon(1e-12));
      CHECK(ndcg_at_k(res, k) >= 0.0);
      CHECK(ndcg_at_k(res, k) <= 1.0);
      CHECK(map_at_k(res, k) >= 0.0);
      CHECK(map_at_k(res, k) <= 1.0);
    }
  }
}

TEST_CASE("aggregation skips brands without true regions and is order-free") {
  auto a = fixture();
  RankingResult b = fixture();
  b.brand = 1;
  b.predicted = {2, 4, 1, 5, 3};
  RankingResult empty;
  empty.brand = 2;
  empty.candidate_count = 5;
  empty.predicted = {1, 2, 3, 4, 5};

  auto r1 = evaluate_rankings({a, b, empty}, {2, 5});
  CHECK(r1.brands_evaluated == 2);
  CHECK(r1.brands_skipped == 1);
  auto r2 = evaluate_rankings({empty, b, a}, {2, 5});
  CHECK(r1.mean.at(2).ndcg == doctest::Approx(r2.mean.at(2).ndcg).epsilon(1e-15));
  CHECK(r1.mean.at(5).map == doctest::Approx(r2.mean.at(5).map).epsilon(1e-15));
  // Single brand: report equals that brand's metrics.
  auto solo = evaluate_rankings({a}, {2});
  CHECK(solo.mean.at(2).precision == doctest::Approx(0.5));
}

TEST_CASE("aggregate_runs means and deviations") {
  auto a = fixture();
  auto one = evaluate_rankings({a}, {2});
  auto agg1 = aggregate_runs({one});
  CHECK(agg1.mean.at(2).hit == doctest::Approx(one.mean.at(2).hit));
  CHECK(agg1.stddev.at(2).hit == doctest::Approx(0.0));

  auto agg2 = aggregate_runs({one, one});
  CHECK(agg2.stddev.at(2).ndcg == doctest::Approx(0.0));
  CHECK(agg2.mean.at(2).ndcg == doctest::Approx(one.mean.at(2).ndcg));

  auto b = fixture();
  b.predicted = {1, 5, 3, 4, 2};
  auto two = evaluate_rankings({b}, {2});
  auto agg3 = aggregate_runs({one, two});
  const double lo = std::min(one.mean.at(2).hit, two.mean.at(2).hit);
  const double hi = std::max(one.mean.at(2).hit, two.mean.at(2).hit);
  CHECK(agg3.mean.at(2).hit >= lo);
  CHECK(agg3.mean.at(2).hit <= hi);
}

TEST_CASE("report json carries the familiar headline columns") {
  auto report = evaluate_rankings({fixture()}, {5, 10, 20});
  auto json = report.to_json_string();
  CHECK(json.find("\"N@5\"") != std::string::npos);
  CHECK(json.find("\"H@10\"") != std::string::npos);
  CHECK(json.find("\"M@10\"") != std::string::npos);
}
