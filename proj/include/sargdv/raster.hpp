#pragma once

// Raster grids, data cubes and binary masks, plus the on-disk container
// format shared by every pipeline stage: a JSON header next to a raw
// little-endian float32 (or uint8 for masks) band-sequential payload.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace sargdv {

class RasterError : public std::runtime_error {
 public:
  explicit RasterError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GridGeometry {
  int width = 0;
  int height = 0;
  double origin_lon = 0.0;
  double origin_lat = 0.0;
  double pixel_size_lon = 1.0;
  double pixel_size_lat = -1.0;  // negative for north-up

  void validate() const {
    if (width < 1 || height < 1)
      throw RasterError("GridGeometry: width and height must be >= 1");
    if (pixel_size_lon <= 0.0)
      throw RasterError("GridGeometry: pixel_size_lon must be > 0");
    if (pixel_size_lat == 0.0)
      throw RasterError("GridGeometry: pixel_size_lat must be nonzero");
  }

  std::int64_t pixel_count() const {
    return static_cast<std::int64_t>(width) * height;
  }

  bool same_grid(const GridGeometry& o) const {
    return width == o.width && height == o.height &&
           origin_lon == o.origin_lon && origin_lat == o.origin_lat &&
           pixel_size_lon == o.pixel_size_lon &&
           pixel_size_lat == o.pixel_size_lat;
  }

  // Cell centre in lon/lat.
  double center_lon(int col) const {
    return origin_lon + (col + 0.5) * pixel_size_lon;
  }
  double center_lat(int row) const {
    return origin_lat + (row + 0.5) * pixel_size_lat;
  }
};

inline std::int64_t linear_index(int row, int col, const GridGeometry& g) {
  if (row < 0 || row >= g.height || col < 0 || col >= g.width)
    throw RasterError("linear_index: (" + std::to_string(row) + "," +
                      std::to_string(col) + ") out of range");
  return static_cast<std::int64_t>(row) * g.width + col;
}

enum class CubeKind { VV, VH, CC };

inline std::string to_string(CubeKind k) {
  switch (k) {
    case CubeKind::VV: return "VV";
    case CubeKind::VH: return "VH";
    case CubeKind::CC: return "CC";
  }
  return "?";
}

inline CubeKind cube_kind_from_string(const std::string& s) {
  if (s == "VV") return CubeKind::VV;
  if (s == "VH") return CubeKind::VH;
  if (s == "CC") return CubeKind::CC;
  throw RasterError("unknown cube kind: " + s);
}

// Chronological stack of co-registered float32 bands over one grid.
class DataCube {
 public:
  DataCube(GridGeometry geometry, CubeKind kind,
           std::vector<std::vector<float>> bands,
           std::vector<std::string> dates, float nodata = NAN,
           bool strict = false)
      : geometry_(geometry),
        kind_(kind),
        bands_(std::move(bands)),
        dates_(std::move(dates)),
        nodata_(nodata) {
    geometry_.validate();
    if (bands_.size() != dates_.size())
      throw RasterError("DataCube: band count != date count");
    if (bands_.empty()) throw RasterError("DataCube: no bands");
    const auto npix = static_cast<std::size_t>(geometry_.pixel_count());
    for (const auto& b : bands_)
      if (b.size() != npix)
        throw RasterError("DataCube: band size != width*height");
    for (std::size_t i = 1; i < dates_.size(); ++i)
      if (!(dates_[i - 1] < dates_[i]))
        throw RasterError("DataCube: acquisition dates not strictly increasing at index " +
                          std::to_string(i));
    if (strict) {
      const std::size_t expected = kind_ == CubeKind::CC ? 29 : 30;
      if (bands_.size() != expected)
        throw RasterError("DataCube: strict " + to_string(kind_) + " cube requires " +
                          std::to_string(expected) + " bands, got " +
                          std::to_string(bands_.size()));
    }
    if (kind_ == CubeKind::CC && strict) {
      for (const auto& b : bands_)
        for (float v : b)
          if (!is_nodata(v) && (v < 0.0f || v > 1.0f))
            throw RasterError("DataCube: CC value outside [0,1]: " + std::to_string(v));
    }
  }

  const GridGeometry& geometry() const { return geometry_; }
  CubeKind kind() const { return kind_; }
  int band_count() const { return static_cast<int>(bands_.size()); }
  const std::vector<float>& band(int b) const { return bands_.at(b); }
  const std::vector<std::string>& dates() const { return dates_; }
  float nodata() const { return nodata_; }

  bool is_nodata(float v) const {
    if (std::isnan(nodata_)) return std::isnan(v);
    return v == nodata_;
  }

  float at(int band, int row, int col) const {
    return bands_.at(band)[linear_index(row, col, geometry_)];
  }

 private:
  GridGeometry geometry_;
  CubeKind kind_;
  std::vector<std::vector<float>> bands_;
  std::vector<std::string> dates_;
  float nodata_;
};

class BinaryMask {
 public:
  BinaryMask(GridGeometry geometry, std::vector<std::uint8_t> values)
      : geometry_(geometry), values_(std::move(values)) {
    geometry_.validate();
    if (values_.size() != static_cast<std::size_t>(geometry_.pixel_count()))
      throw RasterError("BinaryMask: value count != width*height");
    for (auto v : values_)
      if (v > 1) throw RasterError("BinaryMask: value not in {0,1}");
  }

  static BinaryMask zeros(GridGeometry g) {
    return BinaryMask(g, std::vector<std::uint8_t>(
                             static_cast<std::size_t>(g.pixel_count()), 0));
  }

  const GridGeometry& geometry() const { return geometry_; }
  const std::vector<std::uint8_t>& values() const { return values_; }
  std::uint8_t at(int row, int col) const {
    return values_[linear_index(row, col, geometry_)];
  }
  void set(int row, int col, std::uint8_t v) {
    values_[linear_index(row, col, geometry_)] = v > 0 ? 1 : 0;
  }

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> values_;
};

// ---------------------------------------------------------------------------
// On-disk format. Header keys are fixed:
//   {kind, width, height, bands, nodata, dates, origin_lon, origin_lat,
//    pixel_size_lon, pixel_size_lat, payload}
// Payload is band-sequential little-endian float32, or uint8 for MASK.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_file(const std::filesystem::path& p, const void* data,
                       std::size_t n) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw RasterError("cannot open for write: " + p.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw RasterError("write failed: " + p.string());
}

inline std::vector<char> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary | std::ios::ate);
  if (!in) throw RasterError("cannot open: " + p.string());
  const auto n = static_cast<std::size_t>(in.tellg());
  std::vector<char> buf(n);
  in.seekg(0);
  in.read(buf.data(), static_cast<std::streamsize>(n));
  if (!in) throw RasterError("read failed: " + p.string());
  return buf;
}

inline nlohmann::json make_header(const std::string& kind,
                                  const GridGeometry& g, int bands,
                                  double nodata,
                                  const std::vector<std::string>& dates,
                                  const std::string& payload_name) {
  nlohmann::json h;
  h["kind"] = kind;
  h["width"] = g.width;
  h["height"] = g.height;
  h["bands"] = bands;
  if (std::isnan(nodata))
    h["nodata"] = nullptr;
  else
    h["nodata"] = nodata;
  h["dates"] = dates;
  h["origin_lon"] = g.origin_lon;
  h["origin_lat"] = g.origin_lat;
  h["pixel_size_lon"] = g.pixel_size_lon;
  h["pixel_size_lat"] = g.pixel_size_lat;
  h["payload"] = payload_name;
  return h;
}

inline GridGeometry geometry_from_header(const nlohmann::json& h) {
  GridGeometry g;
  g.width = h.at("width").get<int>();
  g.height = h.at("height").get<int>();
  g.origin_lon = h.at("origin_lon").get<double>();
  g.origin_lat = h.at("origin_lat").get<double>();
  g.pixel_size_lon = h.at("pixel_size_lon").get<double>();
  g.pixel_size_lat = h.at("pixel_size_lat").get<double>();
  return g;
}

}  // namespace detail

inline void save_cube(const DataCube& cube,
                      const std::filesystem::path& header_path) {
  const auto payload_path =
      std::filesystem::path(header_path).replace_extension(".bin");
  const auto h = detail::make_header(
      to_string(cube.kind()), cube.geometry(), cube.band_count(),
      cube.nodata(), cube.dates(), payload_path.filename().string());
  std::ofstream out(header_path);
  if (!out) throw RasterError("cannot open for write: " + header_path.string());
  out << h.dump(2) << "\n";

  const auto npix = static_cast<std::size_t>(cube.geometry().pixel_count());
  std::vector<float> payload;
  payload.reserve(npix * cube.band_count());
  for (int b = 0; b < cube.band_count(); ++b)
    payload.insert(payload.end(), cube.band(b).begin(), cube.band(b).end());
  static_assert(sizeof(float) == 4);
  detail::write_file(payload_path, payload.data(), payload.size() * 4);
}

inline DataCube load_cube(const std::filesystem::path& header_path,
                          bool strict = false) {
  std::ifstream in(header_path);
  if (!in) throw RasterError("cannot open: " + header_path.string());
  nlohmann::json h;
  try {
    in >> h;
  } catch (const nlohmann::json::exception& e) {
    throw RasterError("bad header " + header_path.string() + ": " + e.what());
  }
  const auto kind = cube_kind_from_string(h.at("kind").get<std::string>());
  const auto g = detail::geometry_from_header(h);
  g.validate();
  const int bands = h.at("bands").get<int>();
  if (bands < 1) throw RasterError("header declares no bands");
  float nodata = NAN;
  if (!h.at("nodata").is_null()) nodata = h.at("nodata").get<float>();
  auto dates = h.at("dates").get<std::vector<std::string>>();

  const auto payload_path =
      header_path.parent_path() / h.at("payload").get<std::string>();
  const auto raw = detail::read_file(payload_path);
  const auto npix = static_cast<std::size_t>(g.pixel_count());
  const std::size_t expected = npix * static_cast<std::size_t>(bands) * 4;
  if (raw.size() != expected)
    throw RasterError("payload size mismatch in " + payload_path.string() +
                      ": expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(raw.size()));

  std::vector<std::vector<float>> data(bands, std::vector<float>(npix));
  for (int b = 0; b < bands; ++b)
    std::memcpy(data[b].data(), raw.data() + static_cast<std::size_t>(b) * npix * 4,
                npix * 4);
  return DataCube(g, kind, std::move(data), std::move(dates), nodata, strict);
}

inline void save_mask(const BinaryMask& mask,
                      const std::filesystem::path& header_path) {
  const auto payload_path =
      std::filesystem::path(header_path).replace_extension(".bin");
  const auto h = detail::make_header("MASK", mask.geometry(), 1, NAN, {},
                                     payload_path.filename().string());
  std::ofstream out(header_path);
  if (!out) throw RasterError("cannot open for write: " + header_path.string());
  out << h.dump(2) << "\n";
  detail::write_file(payload_path, mask.values().data(), mask.values().size());
}

inline BinaryMask load_mask(const std::filesystem::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw RasterError("cannot open: " + header_path.string());
  nlohmann::json h;
  in >> h;
  if (h.at("kind").get<std::string>() != "MASK")
    throw RasterError("not a MASK file: " + header_path.string());
  const auto g = detail::geometry_from_header(h);
  g.validate();
  const auto payload_path =
      header_path.parent_path() / h.at("payload").get<std::string>();
  const auto raw = detail::read_file(payload_path);
  if (raw.size() != static_cast<std::size_t>(g.pixel_count()))
    throw RasterError("mask payload size mismatch in " + payload_path.string());
  std::vector<std::uint8_t> vals(raw.begin(), raw.end());
  return BinaryMask(g, std::move(vals));
}

// Single-band float rasters (kinds "PROB" and "DTW") share the same container.
struct FloatRaster {
  GridGeometry geometry;
  std::vector<float> values;  // row-major

  float at(int row, int col) const {
    return values[linear_index(row, col, geometry)];
  }
};

inline void save_float_raster(const FloatRaster& r, const std::string& kind,
                              const std::filesystem::path& header_path) {
  const auto payload_path =
      std::filesystem::path(header_path).replace_extension(".bin");
  const auto h = detail::make_header(kind, r.geometry, 1, NAN, {},
                                     payload_path.filename().string());
  std::ofstream out(header_path);
  if (!out) throw RasterError("cannot open for write: " + header_path.string());
  out << h.dump(2) << "\n";
  detail::write_file(payload_path, r.values.data(), r.values.size() * 4);
}

inline FloatRaster load_float_raster(const std::filesystem::path& header_path,
                                     const std::string& expected_kind = "") {
  std::ifstream in(header_path);
  if (!in) throw RasterError("cannot open: " + header_path.string());
  nlohmann::json h;
  in >> h;
  const auto kind = h.at("kind").get<std::string>();
  if (!expected_kind.empty() && kind != expected_kind)
    throw RasterError("expected kind " + expected_kind + ", got " + kind);
  FloatRaster r;
  r.geometry = detail::geometry_from_header(h);
  r.geometry.validate();
  const auto payload_path =
      header_path.parent_path() / h.at("payload").get<std::string>();
  const auto raw = detail::read_file(payload_path);
  const auto npix = static_cast<std::size_t>(r.geometry.pixel_count());
  if (raw.size() != npix * 4)
    throw RasterError("raster payload size mismatch in " + payload_path.string());
  r.values.resize(npix);
  std::memcpy(r.values.data(), raw.data(), npix * 4);
  return r;
}

// PGM export for quick viewing of masks.
inline void save_mask_pgm(const BinaryMask& mask,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RasterError("cannot open for write: " + path.string());
  out << "P5\n" << mask.geometry().width << " " << mask.geometry().height
      << "\n255\n";
  for (auto v : mask.values()) out.put(v ? char(255) : char(0));
}

}  // namespace sargdv
