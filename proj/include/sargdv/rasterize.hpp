#pragma once

// Polygon-to-mask rasterization. A pixel is labelled 1 when the union of
// the input polygons covers at least half of its cell area. Coverage is
// computed exactly: each cell is cut into vertical slabs at every x where
// the arrangement of edges can change (vertices, edge crossings, cell-border
// crossings); inside a slab the union measure of the even-odd y-intervals is
// linear in x, so a midpoint evaluation integrates it exactly.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sargdv/raster.hpp"
#include "sargdv/util.hpp"

namespace sargdv {

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

// One outer ring plus optional holes; rings are closed (first == last vertex
// is accepted but not required).
struct Polygon {
  std::vector<LonLat> outer;
  std::vector<std::vector<LonLat>> holes;
};

struct PolygonSet {
  std::vector<Polygon> polygons;
};

namespace rasterize_detail {

struct Pt {
  double x, y;
};

// shoelace, positive for counter-clockwise rings
inline double signed_area(const std::vector<Pt>& ring) {
  double a = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Pt& p = ring[i];
    const Pt& q = ring[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

struct Edge {
  double x0, y0, x1, y1;  // x0 <= x1 after normalization; verticals kept as-is
};

// A polygon in pixel coordinates: all ring edges together; even-odd parity
// over the full edge set handles holes without special casing.
struct PixelPolygon {
  std::vector<Edge> edges;
  double min_x, max_x, min_y, max_y;
};

inline void append_ring(PixelPolygon& poly, const std::vector<Pt>& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Pt& p = ring[i];
    const Pt& q = ring[(i + 1) % n];
    if (p.x == q.x && p.y == q.y) continue;
    poly.edges.push_back({p.x, p.y, q.x, q.y});
  }
}

// y of edge at x (caller guarantees the edge spans x and is not vertical)
inline double edge_y_at(const Edge& e, double x) {
  return e.y0 + (e.y1 - e.y0) * (x - e.x0) / (e.x1 - e.x0);
}

// x-coordinates where the interval structure over [x0,x1] can change:
// vertices, pairwise edge crossings, and crossings of the cell's horizontal
// borders y=cy0, y=cy1.
inline void collect_breakpoints(const std::vector<const PixelPolygon*>& polys,
                                double x0, double x1, double cy0, double cy1,
                                std::vector<double>& cuts) {
  cuts.clear();
  cuts.push_back(x0);
  cuts.push_back(x1);
  std::vector<const Edge*> edges;
  for (const auto* p : polys)
    for (const auto& e : p->edges) {
      const double lo = std::min(e.x0, e.x1), hi = std::max(e.x0, e.x1);
      if (hi <= x0 || lo >= x1) continue;
      edges.push_back(&e);
      if (e.x0 > x0 && e.x0 < x1) cuts.push_back(e.x0);
      if (e.x1 > x0 && e.x1 < x1) cuts.push_back(e.x1);
      // crossings of the cell's top/bottom borders
      if (e.x0 != e.x1) {
        const double dy = e.y1 - e.y0;
        if (dy != 0.0) {
          for (double cy : {cy0, cy1}) {
            const double t = (cy - e.y0) / dy;
            if (t > 0.0 && t < 1.0) {
              const double cx = e.x0 + t * (e.x1 - e.x0);
              if (cx > x0 && cx < x1) cuts.push_back(cx);
            }
          }
        }
      }
    }
  // pairwise edge intersections
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& a = *edges[i];
    const double adx = a.x1 - a.x0, ady = a.y1 - a.y0;
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      const Edge& b = *edges[j];
      const double bdx = b.x1 - b.x0, bdy = b.y1 - b.y0;
      const double den = adx * bdy - ady * bdx;
      if (den == 0.0) continue;  // parallel
      const double s = ((b.x0 - a.x0) * bdy - (b.y0 - a.y0) * bdx) / den;
      const double t = ((b.x0 - a.x0) * ady - (b.y0 - a.y0) * adx) / den;
      if (s <= 0.0 || s >= 1.0 || t <= 0.0 || t >= 1.0) continue;
      const double cx = a.x0 + s * adx;
      if (cx > x0 && cx < x1) cuts.push_back(cx);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
}

// even-odd y-intervals of one polygon along the vertical line x = xm,
// clipped to [cy0, cy1]; appended to `intervals`
inline void polygon_intervals_at(const PixelPolygon& poly, double xm,
                                 double cy0, double cy1,
                                 std::vector<std::pair<double, double>>& intervals,
                                 std::vector<double>& ys_scratch) {
  ys_scratch.clear();
  for (const auto& e : poly.edges) {
    if (e.x0 == e.x1) continue;  // vertical edges never span xm strictly
    const double lo = std::min(e.x0, e.x1), hi = std::max(e.x0, e.x1);
    if (xm <= lo || xm >= hi) continue;
    ys_scratch.push_back(edge_y_at(e, xm));
  }
  std::sort(ys_scratch.begin(), ys_scratch.end());
  for (std::size_t k = 0; k + 1 < ys_scratch.size(); k += 2) {
    const double a = std::max(ys_scratch[k], cy0);
    const double b = std::min(ys_scratch[k + 1], cy1);
    if (b > a) intervals.emplace_back(a, b);
  }
}

inline double union_measure(std::vector<std::pair<double, double>>& intervals) {
  if (intervals.empty()) return 0.0;
  std::sort(intervals.begin(), intervals.end());
  double total = 0.0;
  double cur_a = intervals[0].first, cur_b = intervals[0].second;
  for (std::size_t i = 1; i < intervals.size(); ++i) {
    if (intervals[i].first > cur_b) {
      total += cur_b - cur_a;
      cur_a = intervals[i].first;
      cur_b = intervals[i].second;
    } else {
      cur_b = std::max(cur_b, intervals[i].second);
    }
  }
  return total + (cur_b - cur_a);
}

}  // namespace rasterize_detail

// Exact fraction of the unit cell [cx0,cx0+1]x[cy0,cy0+1] covered by the
// union of the given polygons (pixel coordinates). Exposed for the oracle
// comparison tests.
inline double cell_coverage(
    const std::vector<rasterize_detail::PixelPolygon>& polys, double cx0,
    double cy0) {
  using namespace rasterize_detail;
  const double cx1 = cx0 + 1.0, cy1 = cy0 + 1.0;
  std::vector<const PixelPolygon*> active;
  for (const auto& p : polys) {
    if (p.max_x <= cx0 || p.min_x >= cx1 || p.max_y <= cy0 || p.min_y >= cy1)
      continue;
    active.push_back(&p);
  }
  if (active.empty()) return 0.0;

  std::vector<double> cuts, ys;
  collect_breakpoints(active, cx0, cx1, cy0, cy1, cuts);
  std::vector<std::pair<double, double>> intervals;
  double area = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    const double xm = 0.5 * (a + b);
    intervals.clear();
    for (const auto* p : active)
      polygon_intervals_at(*p, xm, cy0, cy1, intervals, ys);
    area += union_measure(intervals) * (b - a);
  }
  return area;
}

namespace rasterize_detail {

// lon/lat ring -> pixel coordinates; x = column axis, y = row axis
inline std::vector<Pt> ring_to_pixels(const std::vector<LonLat>& ring,
                                      const GridGeometry& g) {
  std::vector<Pt> out;
  out.reserve(ring.size());
  for (const auto& v : ring)
    out.push_back({(v.lon - g.origin_lon) / g.pixel_size_lon,
                   (v.lat - g.origin_lat) / g.pixel_size_lat});
  // drop duplicated closing vertex
  if (out.size() >= 2 && out.front().x == out.back().x &&
      out.front().y == out.back().y)
    out.pop_back();
  return out;
}

inline std::vector<PixelPolygon> to_pixel_polygons(const PolygonSet& set,
                                                   const GridGeometry& g,
                                                   int* degenerate_count) {
  std::vector<PixelPolygon> out;
  for (const auto& poly : set.polygons) {
    auto outer = ring_to_pixels(poly.outer, g);
    if (outer.size() < 3 || signed_area(outer) == 0.0) {
      if (degenerate_count) ++*degenerate_count;
      log_warn("rasterize: degenerate outer ring ignored");
      continue;
    }
    PixelPolygon pp;
    append_ring(pp, outer);
    for (const auto& hole : poly.holes) {
      auto h = ring_to_pixels(hole, g);
      if (h.size() < 3 || signed_area(h) == 0.0) {
        if (degenerate_count) ++*degenerate_count;
        log_warn("rasterize: degenerate hole ring ignored");
        continue;
      }
      append_ring(pp, h);
    }
    pp.min_x = pp.max_x = pp.edges[0].x0;
    pp.min_y = pp.max_y = pp.edges[0].y0;
    for (const auto& e : pp.edges) {
      pp.min_x = std::min({pp.min_x, e.x0, e.x1});
      pp.max_x = std::max({pp.max_x, e.x0, e.x1});
      pp.min_y = std::min({pp.min_y, e.y0, e.y1});
      pp.max_y = std::max({pp.max_y, e.y0, e.y1});
    }
    out.push_back(std::move(pp));
  }
  return out;
}

}  // namespace rasterize_detail

inline BinaryMask rasterize_polygons(const PolygonSet& polygons,
                                     const GridGeometry& geometry,
                                     int threads = 1) {
  geometry.validate();
  int degenerate = 0;
  const auto polys =
      rasterize_detail::to_pixel_polygons(polygons, geometry, &degenerate);
  BinaryMask mask = BinaryMask::zeros(geometry);
  auto& vals = const_cast<std::vector<std::uint8_t>&>(mask.values());

  parallel_for_rows(geometry.height, threads, [&](std::int64_t r0, std::int64_t r1) {
    for (std::int64_t row = r0; row < r1; ++row) {
      for (int col = 0; col < geometry.width; ++col) {
        const double cov = cell_coverage(polys, static_cast<double>(col),
                                         static_cast<double>(row));
        if (cov >= 0.5)
          vals[static_cast<std::size_t>(row) * geometry.width + col] = 1;
      }
    }
  });
  return mask;
}

// --- GeoJSON ingestion ------------------------------------------------------

inline PolygonSet polygons_from_geojson(const nlohmann::json& gj) {
  PolygonSet set;
  auto add_polygon = [&set](const nlohmann::json& coords) {
    Polygon p;
    bool first = true;
    for (const auto& ring : coords) {
      std::vector<LonLat> r;
      for (const auto& v : ring)
        r.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
      if (first) {
        p.outer = std::move(r);
        first = false;
      } else {
        p.holes.push_back(std::move(r));
      }
    }
    if (!p.outer.empty()) set.polygons.push_back(std::move(p));
  };
  auto add_geometry = [&add_polygon](const nlohmann::json& geom) {
    const auto type = geom.at("type").get<std::string>();
    if (type == "Polygon") {
      add_polygon(geom.at("coordinates"));
    } else if (type == "MultiPolygon") {
      for (const auto& poly : geom.at("coordinates")) add_polygon(poly);
    } else {
      throw InputError("unsupported GeoJSON geometry type: " + type);
    }
  };

  const auto type = gj.at("type").get<std::string>();
  if (type == "FeatureCollection") {
    for (const auto& f : gj.at("features")) add_geometry(f.at("geometry"));
  } else if (type == "Feature") {
    add_geometry(gj.at("geometry"));
  } else {
    add_geometry(gj);
  }
  return set;
}

inline PolygonSet load_geojson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open polygon file: " + path.string());
  nlohmann::json gj;
  try {
    in >> gj;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("bad GeoJSON " + path.string() + ": " + e.what());
  }
  return polygons_from_geojson(gj);
}

}  // namespace sargdv
