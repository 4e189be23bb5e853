#include "knowsite/explain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace knowsite::xai {

namespace {

std::vector<std::string> criteria_columns(const model::KnowSiteModel& m) {
  std::vector<std::string> cols;
  for (const auto& p : m.paths()) cols.push_back(p.criterion);
  return cols;
}

}  // namespace

AttentionReport brand_attention(model::KnowSiteModel& m,
                                const std::vector<int>& brand_ids) {
  AttentionReport report;
  report.columns = criteria_columns(m);
  for (int b : brand_ids) {
    const auto& e = m.kg().entity(b);
    if (e.ontology != ukg::Ontology::Brand) {
      throw LookupError("entity " + e.name + " is not a brand");
    }
    report.row_names.push_back(e.name);
    report.values.push_back(m.attention_weights(b));
  }
  return report;
}

AttentionReport brand_attention_by_name(
    model::KnowSiteModel& m, const std::vector<std::string>& brand_names) {
  std::vector<int> ids;
  for (const auto& name : brand_names) {
    auto id = m.kg().find_entity(name);
    if (!id) id = m.kg().find_entity("brand:" + name);
    if (!id) throw LookupError("unknown brand: " + name);
    ids.push_back(*id);
  }
  return brand_attention(m, ids);
}

AttentionReport category_attention(model::KnowSiteModel& m) {
  const auto& kg = m.kg();
  auto b2c1 = kg.find_relation("BrandToCate_1");
  if (!b2c1) throw ConfigError("KG vocabulary lacks BrandToCate_1");
  std::map<int, std::vector<int>> brands_by_cate;
  for (const auto& f : kg.facts()) {
    if (f.r == *b2c1) brands_by_cate[f.o].push_back(f.s);
  }
  AttentionReport report;
  report.columns = criteria_columns(m);
  for (int cate : kg.entities_of(ukg::Ontology::Cate1)) {
    auto it = brands_by_cate.find(cate);
    if (it == brands_by_cate.end() || it->second.empty()) {
      report.empty_rows_skipped++;
      continue;
    }
    std::vector<double> mean(report.columns.size(), 0.0);
    for (int brand : it->second) {
      const auto w = m.attention_weights(brand);
      for (size_t i = 0; i < mean.size(); ++i) mean[i] += w[i];
    }
    for (auto& v : mean) v /= static_cast<double>(it->second.size());
    report.row_names.push_back(kg.entity(cate).name);
    report.values.push_back(std::move(mean));
  }
  return report;
}

CosineMatrix cosine_matrix(const EmbeddingTable& table,
                           const std::vector<std::string>& names) {
  CosineMatrix m;
  m.names = names;
  const size_t n = names.size();
  const int64_t d = table.dim();
  const auto& data = table.rows.value();
  std::vector<const double*> rows(n);
  std::vector<double> norms(n);
  for (size_t i = 0; i < n; ++i) {
    rows[i] = data.data() + table.row_of(names[i]) * d;
    double s = 0;
    for (int64_t j = 0; j < d; ++j) s += rows[i][j] * rows[i][j];
    norms[i] = std::sqrt(s);
    if (norms[i] == 0.0) m.zero_vector_warnings++;
  }
  m.distance.assign(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double dist;
      if (norms[i] == 0.0 || norms[j] == 0.0) {
        dist = 1.0;  // zero vector: direction undefined
      } else {
        double dot = 0;
        for (int64_t k = 0; k < d; ++k) dot += rows[i][k] * rows[j][k];
        dist = 1.0 - dot / (norms[i] * norms[j]);
      }
      m.distance[i][j] = dist;
      m.distance[j][i] = dist;
    }
  }
  return m;
}

PathGroupReport path_group_report(
    const std::map<std::string, eval::MetricsReport>& variant_reports) {
  auto full = variant_reports.find("full");
  if (full == variant_reports.end()) {
    throw ContractError("path group report needs the 'full' variant");
  }
  const double full_hit = full->second.mean.at(10).hit;
  const double full_ndcg = full->second.mean.at(10).ndcg;
  PathGroupReport report;
  for (const auto& [name, metrics] : variant_reports) {
    if (name == "full") continue;
    PathGroupReport::Row row;
    row.variant = name;
    row.hit10_full = full_hit;
    row.hit10_variant = metrics.mean.at(10).hit;
    row.hit10_delta = full_hit - row.hit10_variant;
    row.ndcg10_full = full_ndcg;
    row.ndcg10_variant = metrics.mean.at(10).ndcg;
    row.ndcg10_delta = full_ndcg - row.ndcg10_variant;
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_attention_csv(const AttentionReport& report,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SourceError("cannot write " + path.string());
  out.precision(10);
  out << "name";
  for (const auto& c : report.columns) out << ',' << c;
  out << '\n';
  for (size_t i = 0; i < report.row_names.size(); ++i) {
    out << report.row_names[i];
    for (double v : report.values[i]) out << ',' << v;
    out << '\n';
  }
}

void write_cosine_csv(const CosineMatrix& matrix,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SourceError("cannot write " + path.string());
  out.precision(10);
  out << "name";
  for (const auto& n : matrix.names) out << ',' << n;
  out << '\n';
  for (size_t i = 0; i < matrix.names.size(); ++i) {
    out << matrix.names[i];
    for (double v : matrix.distance[i]) out << ',' << v;
    out << '\n';
  }
}

void write_path_group_csv(const PathGroupReport& report,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SourceError("cannot write " + path.string());
  out.precision(10);
  out << "variant,hit10_full,hit10_variant,hit10_delta,ndcg10_full,"
         "ndcg10_variant,ndcg10_delta\n";
  for (const auto& row : report.rows) {
    out << row.variant << ',' << row.hit10_full << ',' << row.hit10_variant
        << ',' << row.hit10_delta << ',' << row.ndcg10_full << ','
        << row.ndcg10_variant << ',' << row.ndcg10_delta << '\n';
  }
}

}  // namespace knowsite::xai
