#include "knowsite/sources.hpp"

#include <fstream>
#include <sstream>

#include "knowsite/errors.hpp"

namespace knowsite::ukg {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

long long parse_count(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": not an integer: '" + s + "'");
  }
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": not a number: '" + s + "'");
  }
}

}  // namespace

int TsvTable::column(const std::string& name, const std::string& file) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  throw ParseError(file + ": missing column '" + name + "'");
}

TsvTable read_tsv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SourceError("cannot open " + file.string());
  TsvTable t;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (line_no == 1) {
      t.columns = std::move(fields);
    } else {
      if (fields.size() < t.columns.size()) {
        throw ParseError(file.filename().string() + ":" +
                         std::to_string(line_no) + ": expected " +
                         std::to_string(t.columns.size()) + " fields, got " +
                         std::to_string(fields.size()));
      }
      t.rows.push_back(std::move(fields));
    }
  }
  return t;
}

void write_tsv(const std::filesystem::path& file,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(file);
  if (!out) throw SourceError("cannot write " + file.string());
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out << '\t';
    out << columns[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << '\t';
      out << row[i];
    }
    out << '\n';
  }
}

RawSources load_sources(const std::filesystem::path& dir) {
  auto path_of = [&](const char* name) {
    auto p = dir / name;
    if (!std::filesystem::exists(p)) {
      throw SourceError("missing input file " + std::string(name) + " in " +
                        dir.string());
    }
    return p;
  };
  auto where = [](const std::filesystem::path& p, size_t row) {
    return p.filename().string() + ":" + std::to_string(row + 2);
  };

  RawSources src;

  {
    auto p = path_of("regions.tsv");
    auto t = read_tsv(p);
    if (!t.columns.empty()) {
      const int id = t.column("region_id", "regions.tsv");
      const int wkt = t.column("wkt_polygon", "regions.tsv");
      for (size_t i = 0; i < t.rows.size(); ++i) {
        RawSources::Region r;
        r.region_id = t.rows[i][static_cast<size_t>(id)];
        try {
          r.polygon = geo::parse_wkt_polygon(t.rows[i][static_cast<size_t>(wkt)]);
        } catch (const ParseError& e) {
          throw ParseError(where(p, i) + ": " + e.what());
        }
        src.regions.push_back(std::move(r));
      }
    }
  }
  {
    auto p = path_of("ba.tsv");
    auto t = read_tsv(p);
    if (!t.columns.empty()) {
      const int id = t.column("ba_id", "ba.tsv");
      const int name = t.column("name", "ba.tsv");
      const int lon = t.column("lon", "ba.tsv");
      const int lat = t.column("lat", "ba.tsv");
      for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        src.bas.push_back(
            {row[static_cast<size_t>(id)], row[static_cast<size_t>(name)],
             {parse_double(row[static_cast<size_t>(lon)], where(p, i)),
              parse_double(row[static_cast<size_t>(lat)], where(p, i))}});
      }
    }
  }
  {
    auto p = path_of("pois.tsv");
    auto t = read_tsv(p);
    if (!t.columns.empty()) {
      const int pid = t.column("pid", "pois.tsv");
      const int name = t.column("name", "pois.tsv");
      const int lon = t.column("lon", "pois.tsv");
      const int lat = t.column("lat", "pois.tsv");
      const int c1 = t.column("cate1", "pois.tsv");
      const int c2 = t.column("cate2", "pois.tsv");
      const int c3 = t.column("cate3", "pois.tsv");
      const int brand = t.column("brand_name", "pois.tsv");
      for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        RawSources::Poi poi;
        poi.pid = row[static_cast<size_t>(pid)];
        poi.name = row[static_cast<size_t>(name)];
        poi.point = {parse_double(row[static_cast<size_t>(lon)], where(p, i)),
                     parse_double(row[static_cast<size_t>(lat)], where(p, i))};
        poi.cate1 = row[static_cast<size_t>(c1)];
        poi.cate2 = row[static_cast<size_t>(c2)];
        poi.cate3 = row[static_cast<size_t>(c3)];
        poi.brand_name = row[static_cast<size_t>(brand)];
        src.pois.push_back(std::move(poi));
      }
    }
  }
  {
    auto p = path_of("brands.tsv");
    auto t = read_tsv(p);
    if (!t.columns.empty()) {
      const int id = t.column("brand_id", "brands.tsv");
      const int name = t.column("name", "brands.tsv");
      for (const auto& row : t.rows) {
        src.brands.push_back(
            {row[static_cast<size_t>(id)], row[static_cast<size_t>(name)]});
      }
    }
  }
  {
    auto p = path_of("brand_relations.tsv");
    auto t = read_tsv(p);
    if (!t.columns.empty()) {
      const int a = t.column("brand_id_a", "brand_relations.tsv");
      const int b = t.column("brand_id_b", "brand_relations.tsv");
      for (const auto& row : t.rows) {
        src.brand_relations.push_back(
            {row[static_cast<size_t>(a)], row[static_cast<size_t>(b)]});
      }
    }
  }
  {
    auto p = path_of("sites.tsv");
    auto t = read_tsv(p);
    if (!t.columns.empty()) {
      const int brand = t.column("brand_id", "sites.tsv");
      const int region = t.column("region_id", "sites.tsv");
      int split = -1;
      for (size_t i = 0; i < t.columns.size(); ++i) {
        if (t.columns[i] == "split") split = static_cast<int>(i);
      }
      for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        RawSources::Site s;
        s.brand_id = row[static_cast<size_t>(brand)];
        s.region_id = row[static_cast<size_t>(region)];
        if (split >= 0) {
          s.split = row[static_cast<size_t>(split)];
          if (!s.split.empty() && s.split != "train" && s.split != "valid" &&
              s.split != "test") {
            throw ParseError(where(p, i) + ": bad split '" + s.split + "'");
          }
        }
        src.sites.push_back(std::move(s));
      }
    }
  }
  {
    auto p = path_of("flows.tsv");
    auto t = read_tsv(p);
    if (!t.columns.empty()) {
      const int from = t.column("region_from", "flows.tsv");
      const int to = t.column("region_to", "flows.tsv");
      const int count = t.column("count", "flows.tsv");
      for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        src.flows.push_back(
            {row[static_cast<size_t>(from)], row[static_cast<size_t>(to)],
             parse_count(row[static_cast<size_t>(count)], where(p, i))});
      }
    }
  }
  {
    auto p = path_of("checkins.tsv");
    auto t = read_tsv(p);
    if (!t.columns.empty()) {
      const int uid = t.column("uid", "checkins.tsv");
      const int pid = t.column("pid", "checkins.tsv");
      const int count = t.column("count", "checkins.tsv");
      for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        src.checkins.push_back(
            {row[static_cast<size_t>(uid)], row[static_cast<size_t>(pid)],
             parse_count(row[static_cast<size_t>(count)], where(p, i))});
      }
    }
  }
  {
    auto p = path_of("clicks.tsv");
    auto t = read_tsv(p);
    if (!t.columns.empty()) {
      const int pid = t.column("pid", "clicks.tsv");
      const int count = t.column("count", "clicks.tsv");
      for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        src.clicks.push_back(
            {row[static_cast<size_t>(pid)],
             parse_count(row[static_cast<size_t>(count)], where(p, i))});
      }
    }
  }
  {
    auto p = path_of("taxonomy.tsv");
    auto t = read_tsv(p);
    if (!t.columns.empty()) {
      const int c3 = t.column("cate3", "taxonomy.tsv");
      const int c2 = t.column("cate2", "taxonomy.tsv");
      const int c1 = t.column("cate1", "taxonomy.tsv");
      for (const auto& row : t.rows) {
        src.taxonomy.push_back({row[static_cast<size_t>(c3)],
                                row[static_cast<size_t>(c2)],
                                row[static_cast<size_t>(c1)]});
      }
    }
  }
  return src;
}

}  // namespace knowsite::ukg
