#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "knowsite/embedding.hpp"

using namespace knowsite;

TEST_CASE("ksemb binary round-trips bit-exact") {
  Rng rng(6);
  auto rows = num::Tensor::normal({5, 3}, 0, 1, rng);
  auto table = EmbeddingTable::make(rows, {"a", "b", "c", "d", "e"});
  auto path = std::filesystem::temp_directory_path() / "knowsite_emb_test.emb";
  save_embeddings(path, table);
  auto loaded = load_embeddings(path);
  CHECK(loaded.rows.value() == table.rows.value());
  CHECK(loaded.names == table.names);
  CHECK(loaded.row_of("d") == 3);
  CHECK_THROWS_AS((void)loaded.row_of("nope"), LookupError);
}

TEST_CASE("ksemb rejects foreign files") {
  auto path = std::filesystem::temp_directory_path() / "knowsite_emb_bad.emb";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTMAGIC plus junk";
  }
  CHECK_THROWS_AS((void)load_embeddings(path), ParseError);
}

TEST_CASE("embedding table requires one name per row") {
  Rng rng(1);
  auto rows = num::Tensor::normal({2, 3}, 0, 1, rng);
  CHECK_THROWS_AS((void)EmbeddingTable::make(rows, {"only_one"}),
                  DimensionError);
}
