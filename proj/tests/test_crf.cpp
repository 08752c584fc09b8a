#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sargdv/crf.hpp"
#include "sargdv/metrics.hpp"
#include "sargdv/util.hpp"

using namespace sargdv;

namespace {

FloatRaster make_raster(int w, int h, float fill) {
  FloatRaster r;
  r.geometry.width = w;
  r.geometry.height = h;
  r.values.assign(std::size_t(w) * h, fill);
  return r;
}

}  // namespace

TEST_CASE("uniform high-probability field is a fixed point") {
  auto prob = make_raster(16, 16, 0.99f);
  CrfParams p;
  p.beta = 2.0;
  p.init_threshold = 0.9;
  const auto res = smooth_with_trace(prob, p);
  for (auto v : res.mask.values()) CHECK(v == 1);
  CHECK(res.sweeps <= 1);
}

TEST_CASE("beta 0 reduces to plain thresholding") {
  Rng rng(12);
  auto prob = make_raster(20, 20, 0.0f);
  for (auto& v : prob.values) v = float(rng.uniform());
  CrfParams p;
  p.beta = 0.0;
  p.init_threshold = 0.7;
  const auto mask = smooth(prob, p);
  for (std::size_t i = 0; i < prob.values.size(); ++i)
    CHECK(mask.values()[i] == (prob.values[i] >= 0.7f ? 1 : 0));
}

TEST_CASE("isolated confident pixel flips when pairwise cost dominates") {
  // U(0)-U(1) = log(0.95/0.05) ~ 2.944 < 4*beta = 8, so the centre flips
  auto prob = make_raster(5, 5, 0.01f);
  prob.values[2 * 5 + 2] = 0.95f;
  CrfParams p;
  p.beta = 2.0;
  p.neighborhood = 4;
  p.init_threshold = 0.9;
  const auto mask = smooth(prob, p);
  for (auto v : mask.values()) CHECK(v == 0);
}

TEST_CASE("solid high-probability block interior is retained") {
  auto prob = make_raster(30, 30, 0.01f);
  for (int r = 10; r < 20; ++r)
    for (int c = 10; c < 20; ++c) prob.values[r * 30 + c] = 0.95f;
  CrfParams p;
  p.beta = 2.0;
  p.init_threshold = 0.9;
  const auto mask = smooth(prob, p);
  for (int r = 11; r < 19; ++r)
    for (int c = 11; c < 19; ++c) CHECK(mask.at(r, c) == 1);
  CHECK(mask.at(0, 0) == 0);
}

TEST_CASE("energy is non-increasing across ICM sweeps") {
  Rng rng(33);
  for (int nb : {4, 8}) {
    auto prob = make_raster(40, 40, 0.0f);
    for (auto& v : prob.values) v = float(rng.uniform());
    CrfParams p;
    p.beta = 1.5;
    p.neighborhood = nb;
    p.init_threshold = 0.5;
    const auto res = smooth_with_trace(prob, p);
    REQUIRE(res.energy_per_sweep.size() >= 2);
    for (std::size_t i = 1; i < res.energy_per_sweep.size(); ++i)
      CHECK(res.energy_per_sweep[i] <= res.energy_per_sweep[i - 1] + 1e-9);
  }
}

TEST_CASE("smoothing salt noise never increases false positives") {
  Rng rng(44);
  const int W = 64, H = 64;
  // planted truth: one 20x20 block
  std::vector<std::uint8_t> truth_vals(W * H, 0);
  for (int r = 20; r < 40; ++r)
    for (int c = 20; c < 40; ++c) truth_vals[r * W + c] = 1;
  GridGeometry g;
  g.width = W;
  g.height = H;
  const BinaryMask truth(g, truth_vals);

  // noisy probabilities: truth signal + 2% salt noise
  auto prob = make_raster(W, H, 0.0f);
  for (std::size_t i = 0; i < prob.values.size(); ++i) {
    prob.values[i] = truth_vals[i] ? 0.95f : 0.03f;
    if (rng.uniform() < 0.02) prob.values[i] = 0.97f;  // salt
  }
  CrfParams p;
  p.beta = 1.5;
  p.init_threshold = 0.9;
  const auto smoothed = smooth(prob, p);

  // unsmoothed = plain threshold at the same operating point
  std::vector<std::uint8_t> un(W * H, 0);
  for (std::size_t i = 0; i < prob.values.size(); ++i)
    un[i] = prob.values[i] >= 0.9f ? 1 : 0;
  const BinaryMask unsmoothed(g, un);

  const auto cm_un = confusion(unsmoothed, truth);
  const auto cm_sm = confusion(smoothed, truth);
  CHECK(cm_un.fp > 0);
  CHECK(cm_sm.fp <= cm_un.fp);
}

TEST_CASE("converged output is idempotent") {
  Rng rng(55);
  auto prob = make_raster(32, 32, 0.0f);
  for (auto& v : prob.values) v = float(rng.uniform());
  CrfParams p;
  p.beta = 1.0;
  p.init_threshold = 0.5;
  const auto first = smooth(prob, p);

  // feed the converged mask back as confident probabilities
  FloatRaster conf = prob;
  for (std::size_t i = 0; i < conf.values.size(); ++i)
    conf.values[i] = first.values()[i] ? 1.0f : 0.0f;
  CrfParams p2 = p;
  p2.init_threshold = 0.5;
  const auto second = smooth(conf, p2);
  CHECK(second.values() == first.values());
}

TEST_CASE("NaN probability is rejected with the pixel named") {
  auto prob = make_raster(4, 4, 0.5f);
  prob.values[7] = NAN;
  CrfParams p;
  CHECK_THROWS_WITH(smooth(prob, p),
                    Catch::Matchers::ContainsSubstring("7"));
}

TEST_CASE("parameter validation") {
  FloatRaster prob = make_raster(2, 2, 0.5f);
  CrfParams p;
  p.beta = -1.0;
  CHECK_THROWS_AS(smooth(prob, p), InputError);
  p = CrfParams{};
  p.neighborhood = 6;
  CHECK_THROWS_AS(smooth(prob, p), InputError);
}
