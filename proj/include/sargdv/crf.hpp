#pragma once

// Grid CRF smoothing of per-pixel probabilities: Potts pairwise term, unary
// negative log-likelihoods, minimized by iterated conditional modes with a
// checkerboard update schedule (deterministic and parallel-safe).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sargdv/raster.hpp"
#include "sargdv/util.hpp"

namespace sargdv {

struct CrfParams {
  double beta = 1.5;
  int neighborhood = 4;  // 4 or 8
  int max_iters = 50;
  double prob_floor = 1e-6;
  double init_threshold = 0.9;

  void validate() const {
    if (beta < 0.0) throw InputError("CrfParams: beta must be >= 0");
    if (neighborhood != 4 && neighborhood != 8)
      throw InputError("CrfParams: neighborhood must be 4 or 8");
    if (!(prob_floor > 0.0 && prob_floor <= 0.5))
      throw InputError("CrfParams: prob_floor must be in (0, 0.5]");
    if (!(init_threshold > 0.0 && init_threshold < 1.0))
      throw InputError("CrfParams: init_threshold must be in (0, 1)");
  }
};

struct CrfResult {
  BinaryMask mask;
  std::vector<double> energy_per_sweep;  // includes the initial state energy
  int sweeps = 0;
};

namespace crf_detail {

inline const int kOffsets8[8][2] = {{-1, 0}, {1, 0},  {0, -1}, {0, 1},
                                    {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};

// E(x) = sum_i U(x_i) + beta * sum_{neighbors} [x_i != x_j]
inline double total_energy(const std::vector<double>& u0,
                           const std::vector<double>& u1,
                           const std::vector<std::uint8_t>& x, int width,
                           int height, double beta, int nnb) {
  double e = 0.0;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * width + c;
      e += x[i] ? u1[i] : u0[i];
      // count each pair once: right, down (and the two down diagonals for 8)
      const int pair_offsets[4][2] = {{0, 1}, {1, 0}, {1, -1}, {1, 1}};
      const int npairs = nnb == 4 ? 2 : 4;
      for (int k = 0; k < npairs; ++k) {
        const int rr = r + pair_offsets[k][0], cc = c + pair_offsets[k][1];
        if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
        if (x[i] != x[static_cast<std::size_t>(rr) * width + cc]) e += beta;
      }
    }
  }
  return e;
}

}  // namespace crf_detail

inline CrfResult smooth_with_trace(const FloatRaster& prob,
                                   const CrfParams& params, int threads = 1) {
  params.validate();
  const auto& g = prob.geometry;
  const int W = g.width, H = g.height;
  const std::size_t n = static_cast<std::size_t>(g.pixel_count());
  if (n == 0) throw InputError("smooth: empty raster");

  std::vector<double> u0(n), u1(n);
  std::vector<std::uint8_t> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = prob.values[i];
    if (std::isnan(p))
      throw InputError("smooth: NaN probability at pixel " + std::to_string(i));
    u1[i] = -std::log(std::max(p, params.prob_floor));
    u0[i] = -std::log(std::max(1.0 - p, params.prob_floor));
    x[i] = p >= params.init_threshold ? 1 : 0;
  }

  const int nnb = params.neighborhood;
  CrfResult result{BinaryMask::zeros(g), {}, 0};
  result.energy_per_sweep.push_back(
      crf_detail::total_energy(u0, u1, x, W, H, params.beta, nnb));

  if (params.beta == 0.0) {
    // unary-only: ICM is plain thresholding of the initial state
    result.mask = BinaryMask(g, std::move(x));
    return result;
  }

  // 2x2 coloring: no two same-color pixels are neighbors under either the
  // 4- or the 8-neighborhood, so each color updates concurrently as exact ICM
  auto update_color = [&](int color) {
    const int row_par = color >> 1, col_par = color & 1;
    parallel_for_rows(H, threads, [&](std::int64_t r0, std::int64_t r1) {
      for (std::int64_t r = r0; r < r1; ++r) {
        if ((static_cast<int>(r) & 1) != row_par) continue;
        for (int c = col_par; c < W; c += 2) {
          const std::size_t i = static_cast<std::size_t>(r) * W + c;
          int disagree0 = 0, disagree1 = 0;
          for (int k = 0; k < nnb; ++k) {
            const int rr = static_cast<int>(r) + crf_detail::kOffsets8[k][0];
            const int cc = c + crf_detail::kOffsets8[k][1];
            if (rr < 0 || rr >= H || cc < 0 || cc >= W) continue;
            const std::uint8_t xn = x[static_cast<std::size_t>(rr) * W + cc];
            if (xn != 0) ++disagree0;
            if (xn != 1) ++disagree1;
          }
          const double e0 = u0[i] + params.beta * disagree0;
          const double e1 = u1[i] + params.beta * disagree1;
          x[i] = e1 < e0 ? 1 : 0;  // keep-0 tie rule
        }
      }
    });
  };

  for (int it = 0; it < params.max_iters; ++it) {
    const std::vector<std::uint8_t> before = x;
    for (int color = 0; color < 4; ++color) update_color(color);
    ++result.sweeps;
    result.energy_per_sweep.push_back(
        crf_detail::total_energy(u0, u1, x, W, H, params.beta, nnb));
    if (x == before) break;
  }

  result.mask = BinaryMask(g, std::move(x));
  return result;
}

inline BinaryMask smooth(const FloatRaster& prob, const CrfParams& params,
                         int threads = 1) {
  return smooth_with_trace(prob, params, threads).mask;
}

}  // namespace sargdv
