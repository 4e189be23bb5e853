#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "knowsite/geometry.hpp"

namespace knowsite::ukg {

// Parsed source tables, one struct per TSV.
struct RawSources {
  struct Region {
    std::string region_id;
    geo::Polygon polygon;
  };
  struct Ba {
    std::string ba_id;
    std::string name;
    geo::Point point;
  };
  struct Poi {
    std::string pid;
    std::string name;
    geo::Point point;
    std::string cate1, cate2, cate3;
    std::string brand_name;  // may be empty
  };
  struct Brand {
    std::string brand_id;
    std::string name;
  };
  struct BrandRelation {
    std::string brand_id_a, brand_id_b;
  };
  struct Site {
    std::string brand_id;
    std::string region_id;
    std::string split;  // "", "train", "valid" or "test"
  };
  struct Flow {
    std::string region_from, region_to;
    long long count = 0;
  };
  struct Checkin {
    std::string uid, pid;
    long long count = 0;
  };
  struct Click {
    std::string pid;
    long long count = 0;
  };
  struct Taxonomy {
    std::string cate3, cate2, cate1;
  };

  std::vector<Region> regions;
  std::vector<Ba> bas;
  std::vector<Poi> pois;
  std::vector<Brand> brands;
  std::vector<BrandRelation> brand_relations;
  std::vector<Site> sites;
  std::vector<Flow> flows;
  std::vector<Checkin> checkins;
  std::vector<Click> clicks;
  std::vector<Taxonomy> taxonomy;
};

// Reads the full TSV suite from dir. Missing files raise SourceError naming
// the file; malformed rows raise ParseError with file:line.
RawSources load_sources(const std::filesystem::path& dir);

// Minimal TSV machinery shared with the synthetic generator and exporters.
struct TsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name, const std::string& file) const;
};

TsvTable read_tsv(const std::filesystem::path& file);
void write_tsv(const std::filesystem::path& file,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace knowsite::ukg
