#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "knowsite/metrics.hpp"
#include "knowsite/model.hpp"

namespace knowsite::xai {

// Rows of attention weights in path-table column order; every row sums to 1.
struct AttentionReport {
  std::vector<std::string> row_names;
  std::vector<std::string> columns;  // criteria
  std::vector<std::vector<double>> values;
  int64_t empty_rows_skipped = 0;
};

// One eval-mode attention pass per brand (deterministic, dropout off).
AttentionReport brand_attention(model::KnowSiteModel& m,
                                const std::vector<int>& brand_ids);
AttentionReport brand_attention_by_name(
    model::KnowSiteModel& m, const std::vector<std::string>& brand_names);

// Brand rows averaged per coarse category (the brand's Cate1).
AttentionReport category_attention(model::KnowSiteModel& m);

struct CosineMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> distance;  // 1 - cos, in [0,2]
  int64_t zero_vector_warnings = 0;
};

// Pairwise cosine distances between the named rows of a table; zero vectors
// get distance 1 against everything (warned), diagonal stays 0.
CosineMatrix cosine_matrix(const EmbeddingTable& table,
                           const std::vector<std::string>& names);

// Hit@10 / NDCG@10 drops of the path-group removals against the full model.
struct PathGroupReport {
  struct Row {
    std::string variant;
    double hit10_full = 0, hit10_variant = 0, hit10_delta = 0;
    double ndcg10_full = 0, ndcg10_variant = 0, ndcg10_delta = 0;
  };
  std::vector<Row> rows;
};

PathGroupReport path_group_report(
    const std::map<std::string, eval::MetricsReport>& variant_reports);

void write_attention_csv(const AttentionReport& report,
                         const std::filesystem::path& path);
void write_cosine_csv(const CosineMatrix& matrix,
                      const std::filesystem::path& path);
void write_path_group_csv(const PathGroupReport& report,
                          const std::filesystem::path& path);

}  // namespace knowsite::xai
