#include "knowsite/embedding.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "knowsite/sources.hpp"

static_assert(std::endian::native == std::endian::little,
              "embedding files are little-endian");

namespace knowsite {

namespace {
constexpr char kMagic[8] = {'K', 'S', 'E', 'M', 'B', '0', '0', '1'};
}

EmbeddingTable EmbeddingTable::make(num::Tensor rows,
                                    std::vector<std::string> names) {
  if (rows.rank() != 2 ||
      rows.dim(0) != static_cast<int64_t>(names.size())) {
    throw DimensionError("embedding table needs one name per row");
  }
  EmbeddingTable t;
  t.rows = std::move(rows);
  t.names = std::move(names);
  for (size_t i = 0; i < t.names.size(); ++i) {
    if (!t.index.emplace(t.names[i], static_cast<int64_t>(i)).second) {
      throw ContractError("duplicate embedding name: " + t.names[i]);
    }
  }
  return t;
}

int64_t EmbeddingTable::row_of(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end()) throw LookupError("unknown embedding row: " + name);
  return it->second;
}

void save_embeddings(const std::filesystem::path& path,
                     const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SourceError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const uint32_t rows = static_cast<uint32_t>(table.count());
  const uint32_t dim = static_cast<uint32_t>(table.dim());
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  const auto& data = table.rows.value();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out) throw SourceError("short write to " + path.string());

  std::vector<std::vector<std::string>> name_rows;
  for (size_t i = 0; i < table.names.size(); ++i) {
    name_rows.push_back({std::to_string(i), table.names[i]});
  }
  ukg::write_tsv(path.string() + ".names.tsv", {"row", "name"}, name_rows);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SourceError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError(path.string() + ": bad magic, not a KSEMB001 file");
  }
  uint32_t rows = 0, dim = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  if (!in) throw ParseError(path.string() + ": truncated header");
  std::vector<double> data(static_cast<size_t>(rows) * dim);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!in) throw ParseError(path.string() + ": truncated data");

  auto names_tsv = ukg::read_tsv(path.string() + ".names.tsv");
  const int row_col = names_tsv.column("row", "names sidecar");
  const int name_col = names_tsv.column("name", "names sidecar");
  std::vector<std::string> names(rows);
  if (names_tsv.rows.size() != rows) {
    throw ParseError(path.string() + ": sidecar row count mismatch");
  }
  for (const auto& r : names_tsv.rows) {
    const size_t i = std::stoul(r[static_cast<size_t>(row_col)]);
    if (i >= names.size()) {
      throw ParseError(path.string() + ": sidecar row index out of range");
    }
    names[i] = r[static_cast<size_t>(name_col)];
  }
  return EmbeddingTable::make(
      num::Tensor::from({static_cast<int64_t>(rows), static_cast<int64_t>(dim)},
                        std::move(data)),
      std::move(names));
}

}  // namespace knowsite
