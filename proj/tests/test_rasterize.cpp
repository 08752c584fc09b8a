#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sargdv/rasterize.hpp"
#include "sargdv/util.hpp"

using namespace sargdv;

namespace {

GridGeometry unit_grid(int w, int h) {
  // 1 degree per pixel, origin at (0, 0), rows growing south
  GridGeometry g;
  g.width = w;
  g.height = h;
  g.origin_lon = 0.0;
  g.origin_lat = 0.0;
  g.pixel_size_lon = 1.0;
  g.pixel_size_lat = -1.0;
  return g;
}

// 16x16-supersampling coverage oracle, written independently of the exact
// rasterizer: sample point-in-polygon (even-odd over all rings) at subpixel
// centres.
bool oracle_point_in_polygon(const Polygon& poly, double lon, double lat) {
  int crossings = 0;
  auto count_ring = [&](const std::vector<LonLat>& ring) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = ring[i];
      const auto& b = ring[(i + 1) % n];
      if ((a.lat > lat) == (b.lat > lat)) continue;
      const double x = a.lon + (lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
      if (x > lon) ++crossings;
    }
  };
  count_ring(poly.outer);
  for (const auto& h : poly.holes) count_ring(h);
  return crossings % 2 == 1;
}

double oracle_coverage(const PolygonSet& set, const GridGeometry& g, int row,
                       int col) {
  constexpr int S = 16;
  int inside = 0;
  for (int sy = 0; sy < S; ++sy)
    for (int sx = 0; sx < S; ++sx) {
      const double lon =
          g.origin_lon + (col + (sx + 0.5) / S) * g.pixel_size_lon;
      const double lat =
          g.origin_lat + (row + (sy + 0.5) / S) * g.pixel_size_lat;
      for (const auto& p : set.polygons)
        if (oracle_point_in_polygon(p, lon, lat)) {
          ++inside;
          break;
        }
    }
  return inside / double(S * S);
}

Polygon rect(double lon0, double lat0, double lon1, double lat1) {
  Polygon p;
  p.outer = {{lon0, lat0}, {lon1, lat0}, {lon1, lat1}, {lon0, lat1}};
  return p;
}

Polygon random_convex(Rng& rng, double max_lon, double min_lat) {
  // random points on an ellipse around a random centre, sorted by angle
  const double cx = rng.uniform() * max_lon;
  const double cy = -rng.uniform() * (-min_lat);
  const double rx = 0.5 + rng.uniform() * 8.0;
  const double ry = 0.5 + rng.uniform() * 8.0;
  const int n = 3 + static_cast<int>(rng.bounded(6));
  std::vector<double> angles;
  for (int i = 0; i < n; ++i) angles.push_back(rng.uniform() * 2.0 * M_PI);
  std::sort(angles.begin(), angles.end());
  Polygon p;
  for (double a : angles)
    p.outer.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  return p;
}

}  // namespace

TEST_CASE("polygon covering the full extent yields all ones") {
  const auto g = unit_grid(8, 6);
  PolygonSet set;
  set.polygons.push_back(rect(-1.0, 1.0, 9.0, -7.0));
  const auto mask = rasterize_polygons(set, g);
  for (auto v : mask.values()) CHECK(v == 1);
}

TEST_CASE("empty polygon set yields all zeros") {
  const auto g = unit_grid(8, 6);
  const auto mask = rasterize_polygons(PolygonSet{}, g);
  for (auto v : mask.values()) CHECK(v == 0);
}

TEST_CASE("exact half coverage meets the inclusive threshold") {
  const auto g = unit_grid(3, 3);
  // left half of cell (1,1): lon in [1, 1.5], lat in [-2, -1]
  PolygonSet set;
  set.polygons.push_back(rect(1.0, -1.0, 1.5, -2.0));
  const auto mask = rasterize_polygons(set, g);
  CHECK(mask.at(1, 1) == 1);
  CHECK(mask.at(0, 0) == 0);
  CHECK(mask.at(1, 2) == 0);
}

TEST_CASE("coverage just below half stays zero") {
  const auto g = unit_grid(3, 3);
  PolygonSet set;
  set.polygons.push_back(rect(1.0, -1.0, 1.4375, -2.0));
  const auto mask = rasterize_polygons(set, g);
  CHECK(mask.at(1, 1) == 0);
}

TEST_CASE("degenerate ring is ignored") {
  const auto g = unit_grid(4, 4);
  PolygonSet set;
  Polygon degen;
  degen.outer = {{1.0, -1.0}, {2.0, -2.0}, {1.0, -1.0}};
  set.polygons.push_back(degen);
  set.polygons.push_back(rect(0.0, 0.0, 4.0, -4.0));
  const auto mask = rasterize_polygons(set, g);
  for (auto v : mask.values()) CHECK(v == 1);
}

TEST_CASE("polygon fully outside the extent contributes nothing") {
  const auto g = unit_grid(4, 4);
  PolygonSet set;
  set.polygons.push_back(rect(100.0, -100.0, 110.0, -110.0));
  const auto mask = rasterize_polygons(set, g);
  for (auto v : mask.values()) CHECK(v == 0);
}

TEST_CASE("holes are subtracted from coverage") {
  const auto g = unit_grid(8, 8);
  PolygonSet set;
  Polygon p = rect(0.0, 0.0, 8.0, -8.0);
  p.holes.push_back({{2.0, -2.0}, {6.0, -2.0}, {6.0, -6.0}, {2.0, -6.0}});
  set.polygons.push_back(p);
  const auto mask = rasterize_polygons(set, g);
  CHECK(mask.at(0, 0) == 1);
  CHECK(mask.at(3, 3) == 0);  // inside the hole
  CHECK(mask.at(7, 7) == 1);
}

TEST_CASE("random convex polygons agree with the supersampling oracle") {
  const auto g = unit_grid(64, 64);
  Rng rng(123);
  PolygonSet set;
  for (int i = 0; i < 50; ++i)
    set.polygons.push_back(random_convex(rng, 64.0, -64.0));
  const auto mask = rasterize_polygons(set, g);

  int checked = 0;
  for (int row = 0; row < 64; ++row)
    for (int col = 0; col < 64; ++col) {
      const double cov = oracle_coverage(set, g, row, col);
      if (std::abs(cov - 0.5) <= 1.0 / 256.0) continue;  // oracle quantization
      ++checked;
      INFO("pixel (" << row << "," << col << ") oracle coverage " << cov);
      CHECK(mask.at(row, col) == (cov >= 0.5 ? 1 : 0));
    }
  CHECK(checked > 3000);  // the oracle skipped only a thin boundary band
}

TEST_CASE("rasterization is monotone under polygon addition") {
  const auto g = unit_grid(32, 32);
  Rng rng(7);
  PolygonSet set;
  BinaryMask prev = rasterize_polygons(set, g);
  for (int i = 0; i < 8; ++i) {
    set.polygons.push_back(random_convex(rng, 32.0, -32.0));
    const auto cur = rasterize_polygons(set, g);
    for (std::size_t k = 0; k < cur.values().size(); ++k)
      CHECK(cur.values()[k] >= prev.values()[k]);
    prev = cur;
  }
}

TEST_CASE("GeoJSON FeatureCollection parses polygons and holes") {
  const auto gj = nlohmann::json::parse(R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "properties": {},
       "geometry": {"type": "Polygon",
         "coordinates": [[[0,0],[4,0],[4,-4],[0,-4],[0,0]],
                         [[1,-1],[3,-1],[3,-3],[1,-3],[1,-1]]]}},
      {"type": "Feature", "properties": {},
       "geometry": {"type": "MultiPolygon",
         "coordinates": [[[[5,0],[6,0],[6,-1],[5,-1],[5,0]]]]}}
    ]})");
  const auto set = polygons_from_geojson(gj);
  REQUIRE(set.polygons.size() == 2);
  CHECK(set.polygons[0].holes.size() == 1);
  CHECK(set.polygons[1].holes.empty());
}
