#pragma once

// Borehole depth-to-water handling: record filtering and global inverse-
// distance-weighted interpolation onto a grid. Distances use an
// equirectangular approximation (longitude scaled by cos of the grid's mean
// latitude), adequate at ROI scale.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sargdv/raster.hpp"
#include "sargdv/util.hpp"

namespace sargdv {

struct BoreholeRecord {
  std::string id;
  double lon = 0.0;
  double lat = 0.0;
  std::optional<double> dtw_m;  // negative = water above ground
  std::string obs_date;         // ISO-8601
};

struct IdwParams {
  double power = 2.0;
  GridGeometry geometry;

  void validate() const {
    if (!(power > 0.0)) throw InputError("IdwParams: power must be > 0");
    geometry.validate();
  }
};

struct FilterStats {
  int missing_dtw = 0;
  int before_cutoff = 0;
  int bad_date = 0;
};

// Drops records without a DTW value or observed before the cutoff date.
// Input order is preserved.
inline std::vector<BoreholeRecord> filter_boreholes(
    const std::vector<BoreholeRecord>& records, const std::string& cutoff_date,
    FilterStats* stats = nullptr) {
  std::int64_t cutoff_days = 0;
  if (!parse_iso_date(cutoff_date, cutoff_days))
    throw InputError("filter_boreholes: bad cutoff date: " + cutoff_date);
  std::vector<BoreholeRecord> out;
  for (const auto& r : records) {
    if (!r.dtw_m.has_value()) {
      if (stats) ++stats->missing_dtw;
      continue;
    }
    std::int64_t days = 0;
    if (!parse_iso_date(r.obs_date, days)) {
      log_warn("filter_boreholes: record " + r.id + " has unparseable date '" +
               r.obs_date + "', rejected");
      if (stats) ++stats->bad_date;
      continue;
    }
    if (days < cutoff_days) {
      if (stats) ++stats->before_cutoff;
      continue;
    }
    out.push_back(r);
  }
  return out;
}

inline FloatRaster idw_interpolate(const std::vector<BoreholeRecord>& records,
                                   const IdwParams& params, int threads = 1) {
  params.validate();
  std::vector<BoreholeRecord> usable;
  for (const auto& r : records)
    if (r.dtw_m.has_value()) usable.push_back(r);
  if (usable.empty())
    throw InputError("idw_interpolate: no records with DTW values");

  const auto& g = params.geometry;
  const double mean_lat = g.origin_lat + 0.5 * g.height * g.pixel_size_lat;
  const double lon_scale = std::cos(mean_lat * M_PI / 180.0);
  const double half_power = params.power / 2.0;

  FloatRaster out;
  out.geometry = g;
  out.values.assign(static_cast<std::size_t>(g.pixel_count()), 0.0f);

  parallel_for_rows(g.height, threads, [&](std::int64_t r0, std::int64_t r1) {
    for (std::int64_t row = r0; row < r1; ++row) {
      const double cy = g.center_lat(static_cast<int>(row));
      for (int col = 0; col < g.width; ++col) {
        const double cx = g.center_lon(col);
        double wsum = 0.0, vsum = 0.0;
        double exact = std::numeric_limits<double>::quiet_NaN();
        for (const auto& rec : usable) {
          const double dx = (rec.lon - cx) * lon_scale;
          const double dy = rec.lat - cy;
          const double d2 = dx * dx + dy * dy;
          if (d2 == 0.0) {
            exact = *rec.dtw_m;  // zero-distance rule
            break;
          }
          const double w = std::pow(d2, -half_power);
          wsum += w;
          vsum += w * *rec.dtw_m;
        }
        out.values[static_cast<std::size_t>(row) * g.width + col] =
            static_cast<float>(std::isnan(exact) ? vsum / wsum : exact);
      }
    }
  });
  return out;
}

// CSV columns: id,lon,lat,dtw_m,obs_date; empty dtw_m marks a missing value
inline std::vector<BoreholeRecord> load_boreholes_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open borehole CSV: " + path.string());
  std::vector<BoreholeRecord> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (first && line.rfind("id,", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    while (fields.size() < 5) fields.emplace_back();
    BoreholeRecord r;
    r.id = fields[0];
    try {
      r.lon = std::stod(fields[1]);
      r.lat = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw InputError("bad borehole CSV line: " + line);
    }
    if (!fields[3].empty()) r.dtw_m = std::stod(fields[3]);
    r.obs_date = fields[4];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sargdv
