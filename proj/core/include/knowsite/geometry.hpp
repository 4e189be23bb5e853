#pragma once

#include <string>
#include <vector>

#include "knowsite/errors.hpp"
#include "knowsite/rng.hpp"

namespace knowsite::geo {

struct Point {
  double x = 0.0;  // lon (degrees) or planar x
  double y = 0.0;  // lat (degrees) or planar y
};

// Simple closed ring, vertices in order, no explicit closing vertex.
struct Polygon {
  std::vector<Point> ring;

  bool empty() const { return ring.size() < 3; }
};

double haversine_km(const Point& a, const Point& b);
double planar_distance(const Point& a, const Point& b);

// Distance respecting the coordinate convention of the dataset.
double distance(const Point& a, const Point& b, bool planar);

Point centroid(const Polygon& poly);
double polygon_area(const Polygon& poly);

// Strictly-inside test (ray casting); boundary points are not guaranteed.
bool point_in_polygon(const Point& p, const Polygon& poly);

// True when the polygons share a boundary segment of positive length
// (collinear overlapping edges within tolerance).
bool share_boundary(const Polygon& a, const Polygon& b, double tol = 1e-9);

// Uniform sample strictly inside the polygon (rejection from the bbox).
Point sample_point_inside(const Polygon& poly, Rng& rng);

// WKT POLYGON ((x y, x y, ...)) serialization, first ring only.
std::string to_wkt(const Polygon& poly);
Polygon parse_wkt_polygon(const std::string& wkt);

// Clipped Voronoi diagram: one convex cell per seed, cells tile the
// axis-aligned box exactly.
std::vector<Polygon> voronoi_cells(const std::vector<Point>& seeds,
                                   double min_x, double min_y, double max_x,
                                   double max_y);

// rows x cols unit squares tiling [0,cols] x [0,rows].
std::vector<Polygon> grid_cells(int rows, int cols);

}  // namespace knowsite::geo
