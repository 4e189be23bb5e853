#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "knowsite/tensor.hpp"

namespace knowsite {

// Named rows of a dense [n, d] matrix; the index is a bijection onto rows.
struct EmbeddingTable {
  num::Tensor rows;                // [n, d]
  std::vector<std::string> names;  // by row
  std::map<std::string, int64_t> index;

  int64_t count() const { return rows.defined() ? rows.dim(0) : 0; }
  int64_t dim() const { return rows.defined() ? rows.dim(1) : 0; }

  static EmbeddingTable make(num::Tensor rows, std::vector<std::string> names);
  int64_t row_of(const std::string& name) const;
};

// Binary format: magic "KSEMB001", u32 row count, u32 dim (little endian),
// row-major f64 data. A sidecar <path>.names.tsv maps row index -> name.
void save_embeddings(const std::filesystem::path& path,
                     const EmbeddingTable& table);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

}  // namespace knowsite
