#pragma once

// Deterministic synthetic VV/VH/CC cube generator with planted disc-shaped
// GDV regions. GDV pixels carry a low seasonal VH amplitude and a high,
// stable coherence; the background has a strong seasonal VH swing and a
// lower, noisier coherence. Dates run at 12-day spacing from 2017-01-04.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sargdv/raster.hpp"
#include "sargdv/util.hpp"

namespace sargdv {

struct SignalSpec {
  double vh_seasonal_amplitude = 0.0;
  double cc_mean = 0.0;
  double cc_sigma = 0.0;
};

struct SynthSpec {
  int width = 256;
  int height = 256;
  int blob_count = 12;
  int blob_radius_min = 9;
  int blob_radius_max = 16;
  SignalSpec gdv{0.4, 0.66, 0.04};
  SignalSpec background{2.5, 0.60, 0.16};
  double noise_sigma = 6.0;
  std::uint64_t seed = 17;

  void validate() const {
    if (width < 8 || height < 8)
      throw InputError("SynthSpec: dims must be >= 8");
    if (blob_count < 0) throw InputError("SynthSpec: blob_count must be >= 0");
    if (blob_radius_min < 1 || blob_radius_max < blob_radius_min)
      throw InputError("SynthSpec: bad blob radius range");
    if (2 * blob_radius_max >= std::min(width, height))
      throw InputError("SynthSpec: blob radii must be < min(dims)/2");
  }
};

struct SynthOutput {
  DataCube vv;
  DataCube vh;
  DataCube cc;
  BinaryMask truth;
};

namespace synth_detail {

inline std::vector<std::string> make_dates(int count, int start_offset_days) {
  // 2017-01-04 plus 12-day spacing
  const std::int64_t start = days_from_civil(2017, 1, 4) + start_offset_days;
  std::vector<std::string> dates;
  for (int i = 0; i < count; ++i) dates.push_back(format_iso_date(start + 12ll * i));
  return dates;
}

}  // namespace synth_detail

inline SynthOutput generate(const SynthSpec& spec) {
  spec.validate();
  GridGeometry g;
  g.width = spec.width;
  g.height = spec.height;
  g.origin_lon = 140.0;
  g.origin_lat = -37.0;
  g.pixel_size_lon = 0.00027;   // ~30 m
  g.pixel_size_lat = -0.00027;
  const std::size_t npix = static_cast<std::size_t>(g.pixel_count());

  Rng rng(spec.seed);

  // plant discs
  BinaryMask truth = BinaryMask::zeros(g);
  for (int b = 0; b < spec.blob_count; ++b) {
    int placed_r = -1, placed_c = -1, placed_rad = -1;
    for (int attempt = 0; attempt < 64; ++attempt) {
      const int rad = spec.blob_radius_min +
                      static_cast<int>(rng.bounded(
                          spec.blob_radius_max - spec.blob_radius_min + 1));
      if (2 * rad >= std::min(g.width, g.height)) continue;
      const int cr = rad + static_cast<int>(rng.bounded(g.height - 2 * rad));
      const int cc = rad + static_cast<int>(rng.bounded(g.width - 2 * rad));
      placed_r = cr;
      placed_c = cc;
      placed_rad = rad;
      break;
    }
    if (placed_rad < 0)
      throw InputError("generate: could not place blob inside extent");
    for (int r = placed_r - placed_rad; r <= placed_r + placed_rad; ++r)
      for (int c = placed_c - placed_rad; c <= placed_c + placed_rad; ++c) {
        const int dr = r - placed_r, dc = c - placed_c;
        if (dr * dr + dc * dc <= placed_rad * placed_rad) truth.set(r, c, 1);
      }
  }

  const auto vv_dates = synth_detail::make_dates(30, 0);
  const auto vh_dates = synth_detail::make_dates(30, 0);
  const auto cc_dates = synth_detail::make_dates(29, 6);

  // single seasonal sinusoid over the acquisition year
  std::vector<double> season(30);
  for (int t = 0; t < 30; ++t)
    season[t] = std::sin(2.0 * M_PI * (12.0 * t) / 365.0);

  std::vector<std::vector<float>> vv_b(30, std::vector<float>(npix));
  std::vector<std::vector<float>> vh_b(30, std::vector<float>(npix));
  std::vector<std::vector<float>> cc_b(29, std::vector<float>(npix));

  for (std::size_t i = 0; i < npix; ++i) {
    const bool gdv = truth.values()[i] != 0;
    const SignalSpec& sig = gdv ? spec.gdv : spec.background;
    for (int t = 0; t < 30; ++t) {
      vv_b[t][i] = static_cast<float>(-12.0 + 1.5 * season[t] +
                                      spec.noise_sigma * rng.normal());
      vh_b[t][i] = static_cast<float>(-18.0 + sig.vh_seasonal_amplitude * season[t] +
                                      spec.noise_sigma * rng.normal());
    }
    for (int t = 0; t < 29; ++t) {
      double v = sig.cc_mean + sig.cc_sigma * rng.normal();
      cc_b[t][i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }

  return SynthOutput{
      DataCube(g, CubeKind::VV, std::move(vv_b), vv_dates, NAN, true),
      DataCube(g, CubeKind::VH, std::move(vh_b), vh_dates, NAN, true),
      DataCube(g, CubeKind::CC, std::move(cc_b), cc_dates, NAN, true),
      std::move(truth)};
}

inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  auto get = [&j](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  get("width", s.width);
  get("height", s.height);
  get("blob_count", s.blob_count);
  get("blob_radius_min", s.blob_radius_min);
  get("blob_radius_max", s.blob_radius_max);
  get("noise_sigma", s.noise_sigma);
  get("seed", s.seed);
  auto get_signal = [&j](const char* key, SignalSpec& sig) {
    if (!j.contains(key)) return;
    const auto& js = j.at(key);
    if (js.contains("vh_seasonal_amplitude"))
      sig.vh_seasonal_amplitude = js.at("vh_seasonal_amplitude").get<double>();
    if (js.contains("cc_mean")) sig.cc_mean = js.at("cc_mean").get<double>();
    if (js.contains("cc_sigma")) sig.cc_sigma = js.at("cc_sigma").get<double>();
  };
  get_signal("gdv_signal", s.gdv);
  get_signal("background_signal", s.background);
  return s;
}

inline SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open synth spec: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("bad synth spec: " + std::string(e.what()));
  }
  return synth_spec_from_json(j);
}

}  // namespace sargdv
