#include "knowsite/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace knowsite::geo {

namespace {
constexpr double kEarthRadiusKm = 6371.0088;
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}  // namespace

double haversine_km(const Point& a, const Point& b) {
  const double lat1 = a.y * kDegToRad, lat2 = b.y * kDegToRad;
  const double dlat = (b.y - a.y) * kDegToRad;
  const double dlon = (b.x - a.x) * kDegToRad;
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(s)));
}

double planar_distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double distance(const Point& a, const Point& b, bool planar) {
  return planar ? planar_distance(a, b) : haversine_km(a, b);
}

Point centroid(const Polygon& poly) {
  if (poly.empty()) throw ContractError("centroid of degenerate polygon");
  double a2 = 0.0, cx = 0.0, cy = 0.0;
  const auto& r = poly.ring;
  for (size_t i = 0; i < r.size(); ++i) {
    const Point& p = r[i];
    const Point& q = r[(i + 1) % r.size()];
    const double cross = p.x * q.y - q.x * p.y;
    a2 += cross;
    cx += (p.x + q.x) * cross;
    cy += (p.y + q.y) * cross;
  }
  if (std::abs(a2) < 1e-15) {
    // Degenerate area; fall back to the vertex mean.
    double sx = 0, sy = 0;
    for (const auto& p : r) {
      sx += p.x;
      sy += p.y;
    }
    return {sx / static_cast<double>(r.size()),
            sy / static_cast<double>(r.size())};
  }
  return {cx / (3.0 * a2), cy / (3.0 * a2)};
}

double polygon_area(const Polygon& poly) {
  double a2 = 0.0;
  const auto& r = poly.ring;
  for (size_t i = 0; i < r.size(); ++i) {
    const Point& p = r[i];
    const Point& q = r[(i + 1) % r.size()];
    a2 += p.x * q.y - q.x * p.y;
  }
  return std::abs(a2) / 2.0;
}

bool point_in_polygon(const Point& p, const Polygon& poly) {
  const auto& r = poly.ring;
  bool inside = false;
  for (size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
    const bool intersects = ((r[i].y > p.y) != (r[j].y > p.y)) &&
                            (p.x < (r[j].x - r[i].x) * (p.y - r[i].y) /
                                           (r[j].y - r[i].y) +
                                       r[i].x);
    if (intersects) inside = !inside;
  }
  return inside;
}

namespace {

// Projection parameter of p onto segment [a,b], plus squared distance to the
// line through it.
bool collinear_overlap(const Point& a1, const Point& a2, const Point& b1,
                       const Point& b2, double tol) {
  const double ux = a2.x - a1.x, uy = a2.y - a1.y;
  const double len2 = ux * ux + uy * uy;
  if (len2 < tol * tol) return false;
  auto off_line = [&](const Point& p) {
    return std::abs((p.x - a1.x) * uy - (p.y - a1.y) * ux) /
           std::sqrt(len2);
  };
  if (off_line(b1) > tol || off_line(b2) > tol) return false;
  auto t_of = [&](const Point& p) {
    return ((p.x - a1.x) * ux + (p.y - a1.y) * uy) / len2;
  };
  double t1 = t_of(b1), t2 = t_of(b2);
  if (t1 > t2) std::swap(t1, t2);
  const double lo = std::max(0.0, t1), hi = std::min(1.0, t2);
  // Positive-length overlap, not just a touching endpoint.
  return hi - lo > tol;
}

}  // namespace

bool share_boundary(const Polygon& a, const Polygon& b, double tol) {
  if (a.empty() || b.empty()) return false;
  const auto& ra = a.ring;
  const auto& rb = b.ring;
  for (size_t i = 0; i < ra.size(); ++i) {
    const Point& p1 = ra[i];
    const Point& p2 = ra[(i + 1) % ra.size()];
    for (size_t j = 0; j < rb.size(); ++j) {
      const Point& q1 = rb[j];
      const Point& q2 = rb[(j + 1) % rb.size()];
      if (collinear_overlap(p1, p2, q1, q2, tol)) return true;
    }
  }
  return false;
}

Point sample_point_inside(const Polygon& poly, Rng& rng) {
  if (poly.empty()) throw ContractError("sampling in degenerate polygon");
  double min_x = poly.ring[0].x, max_x = min_x;
  double min_y = poly.ring[0].y, max_y = min_y;
  for (const auto& p : poly.ring) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Point p{rng.uniform(min_x, max_x), rng.uniform(min_y, max_y)};
    if (point_in_polygon(p, poly)) return p;
  }
  return centroid(poly);
}

std::string to_wkt(const Polygon& poly) {
  std::ostringstream os;
  os.precision(12);
  os << "POLYGON ((";
  for (size_t i = 0; i < poly.ring.size(); ++i) {
    if (i) os << ", ";
    os << poly.ring[i].x << " " << poly.ring[i].y;
  }
  // WKT rings repeat the first vertex.
  if (!poly.ring.empty()) {
    os << ", " << poly.ring[0].x << " " << poly.ring[0].y;
  }
  os << "))";
  return os.str();
}

Polygon parse_wkt_polygon(const std::string& wkt) {
  const auto open = wkt.find("((");
  const auto close = wkt.rfind("))");
  if (open == std::string::npos || close == std::string::npos ||
      close <= open) {
    throw ParseError("malformed WKT polygon: " + wkt.substr(0, 40));
  }
  std::string body = wkt.substr(open + 2, close - open - 2);
  Polygon poly;
  std::stringstream ss(body);
  std::string pair;
  while (std::getline(ss, pair, ',')) {
    std::stringstream ps(pair);
    Point p;
    if (!(ps >> p.x >> p.y)) {
      throw ParseError("malformed WKT coordinate pair: " + pair);
    }
    poly.ring.push_back(p);
  }
  if (poly.ring.size() >= 2) {
    const Point& first = poly.ring.front();
    const Point& last = poly.ring.back();
    if (std::abs(first.x - last.x) < 1e-12 &&
        std::abs(first.y - last.y) < 1e-12) {
      poly.ring.pop_back();
    }
  }
  if (poly.ring.size() < 3) throw ParseError("WKT polygon with < 3 vertices");
  return poly;
}

namespace {

// Clips a convex polygon by the half-plane { p : dot(p-o, n) <= 0 }.
Polygon clip_halfplane(const Polygon& poly, const Point& o, double nx,
                       double ny) {
  Polygon out;
  const auto& r = poly.ring;
  if (r.empty()) return out;
  auto side = [&](const Point& p) {
    return (p.x - o.x) * nx + (p.y - o.y) * ny;
  };
  for (size_t i = 0; i < r.size(); ++i) {
    const Point& cur = r[i];
    const Point& nxt = r[(i + 1) % r.size()];
    const double sc = side(cur), sn = side(nxt);
    if (sc <= 0.0) out.ring.push_back(cur);
    if ((sc < 0.0 && sn > 0.0) || (sc > 0.0 && sn < 0.0)) {
      const double t = sc / (sc - sn);
      out.ring.push_back(
          {cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  return out;
}

}  // namespace

std::vector<Polygon> voronoi_cells(const std::vector<Point>& seeds,
                                   double min_x, double min_y, double max_x,
                                   double max_y) {
  if (seeds.empty()) throw ContractError("voronoi with no seeds");
  Polygon box;
  box.ring = {{min_x, min_y}, {max_x, min_y}, {max_x, max_y}, {min_x, max_y}};
  std::vector<Polygon> cells;
  cells.reserve(seeds.size());
  for (size_t i = 0; i < seeds.size(); ++i) {
    Polygon cell = box;
    for (size_t j = 0; j < seeds.size() && !cell.empty(); ++j) {
      if (i == j) continue;
      // Keep the side of the bisector closer to seed i.
      const Point mid{(seeds[i].x + seeds[j].x) / 2.0,
                      (seeds[i].y + seeds[j].y) / 2.0};
      const double nx = seeds[j].x - seeds[i].x;
      const double ny = seeds[j].y - seeds[i].y;
      cell = clip_halfplane(cell, mid, nx, ny);
    }
    if (cell.empty()) {
      throw ContractError("voronoi produced a degenerate cell " +
                          std::to_string(i) + " (duplicate seeds?)");
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<Polygon> grid_cells(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ConfigError("grid needs rows,cols >= 1");
  std::vector<Polygon> cells;
  cells.reserve(static_cast<size_t>(rows * cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Polygon p;
      const double x = c, y = r;
      p.ring = {{x, y}, {x + 1, y}, {x + 1, y + 1}, {x, y + 1}};
      cells.push_back(std::move(p));
    }
  }
  return cells;
}

}  // namespace knowsite::geo
