#pragma once

// Supervised dataset construction: train/validation column split, random
// undersampling to a 1:1 class ratio, and assembly of the 89-feature rows
// [VV bands 1-30, VH bands 1-30, CC bands 1-29].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sargdv/raster.hpp"
#include "sargdv/util.hpp"

namespace sargdv {

// Half-open column intervals partitioning [0, width).
struct RegionSplit {
  int train_begin = 0;
  int train_end = 0;  // exclusive
  int validation_begin = 0;
  int validation_end = 0;  // exclusive

  int train_width() const { return train_end - train_begin; }
  int validation_width() const { return validation_end - validation_begin; }
};

// Train region is the left part by default; pass train_left=false to flip.
inline RegionSplit split_regions(const GridGeometry& g,
                                 double train_fraction = 2.0 / 3.0,
                                 bool train_left = true) {
  if (g.width < 2)
    throw InputError("split_regions: width must be >= 2, got " +
                     std::to_string(g.width));
  const int train_w =
      static_cast<int>(std::ceil(g.width * train_fraction));
  if (train_w < 1 || train_w >= g.width)
    throw InputError("split_regions: fraction " + std::to_string(train_fraction) +
                     " leaves an empty region at width " + std::to_string(g.width));
  RegionSplit s;
  if (train_left) {
    s.train_begin = 0;
    s.train_end = train_w;
    s.validation_begin = train_w;
    s.validation_end = g.width;
  } else {
    s.validation_begin = 0;
    s.validation_end = g.width - train_w;
    s.train_begin = g.width - train_w;
    s.train_end = g.width;
  }
  return s;
}

struct SampleIndex {
  // (linear pixel index, label); positives first in row-major order, then
  // the sampled negatives
  std::vector<std::pair<std::int64_t, std::uint8_t>> entries;
  std::uint64_t seed = 0;
};

// Keeps every positive in [col_begin, col_end) and draws an equal number of
// negatives uniformly without replacement. Deterministic for a fixed seed.
inline SampleIndex undersample(const BinaryMask& label_mask, int col_begin,
                               int col_end, std::uint64_t seed) {
  const auto& g = label_mask.geometry();
  std::vector<std::int64_t> positives, negatives;
  for (int row = 0; row < g.height; ++row) {
    for (int col = col_begin; col < col_end; ++col) {
      const auto idx = linear_index(row, col, g);
      if (label_mask.values()[idx])
        positives.push_back(idx);
      else
        negatives.push_back(idx);
    }
  }
  if (positives.empty())
    throw InputError("undersample: no positive pixels in the training region");
  if (negatives.size() < positives.size())
    throw InputError("undersample: " + std::to_string(negatives.size()) +
                     " negatives < " + std::to_string(positives.size()) +
                     " positives");

  // partial Fisher-Yates: first k entries become the sample
  Rng rng(seed);
  const std::size_t k = positives.size();
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.bounded(negatives.size() - i);
    std::swap(negatives[i], negatives[j]);
  }

  SampleIndex out;
  out.seed = seed;
  out.entries.reserve(2 * k);
  for (auto idx : positives) out.entries.emplace_back(idx, 1);
  for (std::size_t i = 0; i < k; ++i) out.entries.emplace_back(negatives[i], 0);
  return out;
}

inline void save_sample_index(const SampleIndex& s,
                              const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RasterError("cannot open for write: " + path.string());
  out << "# seed=" << s.seed << "\n";
  out << "index,label\n";
  for (const auto& [idx, label] : s.entries)
    out << idx << "," << int(label) << "\n";
}

inline SampleIndex load_sample_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sample index: " + path.string());
  SampleIndex s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("seed=");
      if (pos != std::string::npos) s.seed = std::stoull(line.substr(pos + 5));
      continue;
    }
    if (line.rfind("index", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw InputError("bad sample index line: " + line);
    s.entries.emplace_back(std::stoll(line.substr(0, comma)),
                           static_cast<std::uint8_t>(std::stoi(line.substr(comma + 1))));
  }
  return s;
}

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;              // row-major
  std::vector<std::uint8_t> labels;     // empty when unlabelled
  std::vector<std::int64_t> pixel_indices;   // source pixel per row
  std::vector<std::int64_t> dropped_indices; // rows excluded for nodata

  float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  const float* row(std::size_t r) const { return data.data() + r * cols; }
};

namespace dataset_detail {

inline void check_aligned(const DataCube& vv, const DataCube& vh,
                          const DataCube& cc) {
  if (!vv.geometry().same_grid(vh.geometry()) ||
      !vv.geometry().same_grid(cc.geometry()))
    throw InputError("assemble_features: cube geometries do not align");
}

// Fills one feature row; returns false when any band value is nodata.
inline bool fill_row(const DataCube& vv, const DataCube& vh, const DataCube& cc,
                     std::int64_t pix, float* row) {
  int c = 0;
  for (const DataCube* cube : {&vv, &vh, &cc}) {
    for (int b = 0; b < cube->band_count(); ++b) {
      const float v = cube->band(b)[pix];
      if (cube->is_nodata(v)) return false;
      row[c++] = v;
    }
  }
  return true;
}

}  // namespace dataset_detail

// Rows follow SampleIndex order; nodata rows are dropped and reported.
inline FeatureMatrix assemble_features(const DataCube& vv, const DataCube& vh,
                                       const DataCube& cc,
                                       const SampleIndex& samples) {
  dataset_detail::check_aligned(vv, vh, cc);
  const std::size_t ncols = static_cast<std::size_t>(vv.band_count()) +
                            vh.band_count() + cc.band_count();
  FeatureMatrix m;
  m.cols = ncols;
  std::vector<float> row(ncols);
  for (const auto& [pix, label] : samples.entries) {
    if (dataset_detail::fill_row(vv, vh, cc, pix, row.data())) {
      m.data.insert(m.data.end(), row.begin(), row.end());
      m.labels.push_back(label);
      m.pixel_indices.push_back(pix);
    } else {
      m.dropped_indices.push_back(pix);
    }
  }
  m.rows = m.labels.size();
  return m;
}

// Full-region variant: row-major over [col_begin, col_end), unlabelled.
inline FeatureMatrix assemble_features(const DataCube& vv, const DataCube& vh,
                                       const DataCube& cc, int col_begin,
                                       int col_end, int threads = 1) {
  dataset_detail::check_aligned(vv, vh, cc);
  const auto& g = vv.geometry();
  if (col_begin < 0 || col_end > g.width || col_begin >= col_end)
    throw InputError("assemble_features: bad column interval");
  const std::size_t ncols = static_cast<std::size_t>(vv.band_count()) +
                            vh.band_count() + cc.band_count();
  const std::size_t region_w = static_cast<std::size_t>(col_end - col_begin);
  const std::size_t nrows = region_w * g.height;

  // assemble into a dense buffer first, then compact out nodata rows
  std::vector<float> buf(nrows * ncols);
  std::vector<std::uint8_t> ok(nrows);
  parallel_for_rows(g.height, threads, [&](std::int64_t r0, std::int64_t r1) {
    for (std::int64_t row = r0; row < r1; ++row) {
      for (int col = col_begin; col < col_end; ++col) {
        const std::size_t out_r = row * region_w + (col - col_begin);
        const auto pix = linear_index(static_cast<int>(row), col, g);
        ok[out_r] = dataset_detail::fill_row(vv, vh, cc, pix,
                                             buf.data() + out_r * ncols);
      }
    }
  });

  FeatureMatrix m;
  m.cols = ncols;
  for (std::size_t r = 0; r < nrows; ++r) {
    const int row = static_cast<int>(r / region_w);
    const int col = col_begin + static_cast<int>(r % region_w);
    const auto pix = linear_index(row, col, g);
    if (ok[r]) {
      m.data.insert(m.data.end(), buf.begin() + r * ncols,
                    buf.begin() + (r + 1) * ncols);
      m.pixel_indices.push_back(pix);
    } else {
      m.dropped_indices.push_back(pix);
    }
  }
  m.rows = m.pixel_indices.size();
  return m;
}

inline void save_exclusion_report(const std::vector<std::int64_t>& dropped,
                                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RasterError("cannot open for write: " + path.string());
  out << "dropped_index\n";
  for (auto idx : dropped) out << idx << "\n";
}

}  // namespace sargdv
