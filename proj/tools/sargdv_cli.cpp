// sargdv command-line pipeline: synth | ingest | rasterize | split | sample |
// train | predict | smooth | eval | curves | idw | run-all. Every stage writes
// its artifact plus a .prov.json sidecar (inputs, config hash, seed, version)
// so any stage can be re-run and inspected.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sargdv/crf.hpp"
#include "sargdv/dataset.hpp"
#include "sargdv/gbt.hpp"
#include "sargdv/idw.hpp"
#include "sargdv/logreg.hpp"
#include "sargdv/metrics.hpp"
#include "sargdv/raster.hpp"
#include "sargdv/rasterize.hpp"
#include "sargdv/synth.hpp"
#include "sargdv/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kSchemaVersion = 1;

void write_provenance(const fs::path& artifact, const std::string& stage,
                      const std::vector<std::string>& inputs,
                      const json& config, std::uint64_t seed) {
  json p;
  p["schema_version"] = kSchemaVersion;
  p["stage"] = stage;
  p["inputs"] = inputs;
  p["config_hash"] = sargdv::fnv1a64(config.dump());
  p["config"] = config;
  p["seed"] = seed;
  p["version"] = kVersion;
  std::ofstream out(artifact.string() + ".prov.json");
  out << p.dump(2) << "\n";
}

void require_exists(const fs::path& p) {
  if (!fs::exists(p))
    throw sargdv::InputError("input path does not exist: " + p.string());
}

sargdv::GridGeometry load_geometry(const fs::path& header) {
  require_exists(header);
  std::ifstream in(header);
  json h;
  try {
    in >> h;
  } catch (const json::exception& e) {
    throw sargdv::InputError("bad header " + header.string() + ": " + e.what());
  }
  auto g = sargdv::detail::geometry_from_header(h);
  g.validate();
  return g;
}

json split_to_json(const sargdv::RegionSplit& s) {
  return {{"train_begin", s.train_begin},
          {"train_end", s.train_end},
          {"validation_begin", s.validation_begin},
          {"validation_end", s.validation_end}};
}

sargdv::RegionSplit split_from_json_file(const fs::path& p) {
  require_exists(p);
  std::ifstream in(p);
  json j;
  in >> j;
  sargdv::RegionSplit s;
  s.train_begin = j.at("train_begin").get<int>();
  s.train_end = j.at("train_end").get<int>();
  s.validation_begin = j.at("validation_begin").get<int>();
  s.validation_end = j.at("validation_end").get<int>();
  return s;
}

sargdv::TrainingConfig training_config_from_json(const json& j) {
  sargdv::TrainingConfig c;
  auto get = [&j](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  get("max_depth", c.max_depth);
  get("rounds", c.rounds);
  get("learning_rate", c.learning_rate);
  get("l2_lambda", c.l2_lambda);
  get("gamma_min_gain", c.gamma_min_gain);
  get("min_child_weight", c.min_child_weight);
  get("base_score", c.base_score);
  get("seed", c.seed);
  c.validate();
  return c;
}

sargdv::CrfParams crf_params_from_json(const json& j) {
  sargdv::CrfParams p;
  auto get = [&j](const char* key, auto& out) {
    if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
  };
  get("beta", p.beta);
  get("neighborhood", p.neighborhood);
  get("max_iters", p.max_iters);
  get("prob_floor", p.prob_floor);
  get("init_threshold", p.init_threshold);
  p.validate();
  return p;
}

json load_json_file(const fs::path& p) {
  require_exists(p);
  std::ifstream in(p);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw sargdv::InputError("bad JSON " + p.string() + ": " + e.what());
  }
  return j;
}

struct CubeSet {
  sargdv::DataCube vv;
  sargdv::DataCube vh;
  sargdv::DataCube cc;
};

CubeSet load_cubes(const fs::path& vv, const fs::path& vh, const fs::path& cc) {
  require_exists(vv);
  require_exists(vh);
  require_exists(cc);
  return CubeSet{sargdv::load_cube(vv, true), sargdv::load_cube(vh, true),
                 sargdv::load_cube(cc, true)};
}

// Probability raster over the full grid; pixels dropped for nodata are NaN.
sargdv::FloatRaster proba_to_raster(const sargdv::GridGeometry& g,
                                    const sargdv::FeatureMatrix& X,
                                    const std::vector<double>& proba) {
  sargdv::FloatRaster r;
  r.geometry = g;
  r.values.assign(static_cast<std::size_t>(g.pixel_count()), NAN);
  for (std::size_t i = 0; i < X.rows; ++i)
    r.values[X.pixel_indices[i]] = static_cast<float>(proba[i]);
  return r;
}

sargdv::BinaryMask threshold_mask(const sargdv::FloatRaster& prob,
                                  double threshold) {
  std::vector<std::uint8_t> vals(prob.values.size(), 0);
  for (std::size_t i = 0; i < prob.values.size(); ++i)
    if (!std::isnan(prob.values[i]) && prob.values[i] >= threshold) vals[i] = 1;
  return sargdv::BinaryMask(prob.geometry, std::move(vals));
}

// --- run-all ----------------------------------------------------------------

struct RunConfig {
  fs::path vv, vh, cc;
  std::optional<fs::path> polygons;
  std::optional<fs::path> labels;
  std::optional<fs::path> boreholes;
  fs::path out_dir;
  double split_fraction = 2.0 / 3.0;
  bool train_left = true;
  std::uint64_t undersample_seed = 42;
  sargdv::TrainingConfig training;
  sargdv::CrfParams crf;
  std::vector<double> eval_thresholds{0.9, 0.2};
  double idw_power = 2.0;
  std::string idw_cutoff = "2019-01-01";
  json raw;
};

RunConfig run_config_from_file(const fs::path& path) {
  const json j = load_json_file(path);
  RunConfig c;
  c.raw = j;
  const auto& paths = j.at("paths");
  const fs::path base = path.parent_path();
  auto resolve = [&base](const std::string& p) {
    const fs::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  c.vv = resolve(paths.at("vv").get<std::string>());
  c.vh = resolve(paths.at("vh").get<std::string>());
  c.cc = resolve(paths.at("cc").get<std::string>());
  if (paths.contains("polygons"))
    c.polygons = resolve(paths.at("polygons").get<std::string>());
  if (paths.contains("labels"))
    c.labels = resolve(paths.at("labels").get<std::string>());
  if (paths.contains("boreholes"))
    c.boreholes = resolve(paths.at("boreholes").get<std::string>());
  c.out_dir = resolve(paths.at("out").get<std::string>());
  if (!c.polygons && !c.labels)
    throw sargdv::InputError("run config needs paths.polygons or paths.labels");
  if (j.contains("split_fraction"))
    c.split_fraction = j.at("split_fraction").get<double>();
  if (j.contains("train_left")) c.train_left = j.at("train_left").get<bool>();
  if (j.contains("undersample_seed"))
    c.undersample_seed = j.at("undersample_seed").get<std::uint64_t>();
  if (j.contains("training"))
    c.training = training_config_from_json(j.at("training"));
  if (j.contains("crf")) c.crf = crf_params_from_json(j.at("crf"));
  if (j.contains("eval_thresholds")) {
    c.eval_thresholds = j.at("eval_thresholds").get<std::vector<double>>();
    for (double t : c.eval_thresholds)
      if (!(t > 0.0 && t < 1.0))
        throw sargdv::InputError("eval threshold must be in (0,1)");
  }
  if (j.contains("idw")) {
    const auto& ji = j.at("idw");
    if (ji.contains("power")) c.idw_power = ji.at("power").get<double>();
    if (ji.contains("cutoff_date"))
      c.idw_cutoff = ji.at("cutoff_date").get<std::string>();
  }
  return c;
}

json eval_block(const sargdv::ConfusionMatrix& cm) {
  return {{"confusion", sargdv::confusion_to_json(cm)},
          {"metrics", sargdv::metrics_to_json(sargdv::compute_metrics(cm))}};
}

int cmd_run_all(const fs::path& config_path, std::optional<std::uint64_t> seed,
                std::optional<fs::path> out_override, int threads) {
  using namespace sargdv;
  RunConfig cfg = run_config_from_file(config_path);
  if (seed) cfg.undersample_seed = *seed;
  if (out_override) cfg.out_dir = *out_override;
  fs::create_directories(cfg.out_dir);
  const std::vector<std::string> base_inputs{cfg.vv.string(), cfg.vh.string(),
                                             cfg.cc.string()};

  log_info("run-all: loading cubes");
  CubeSet cubes = load_cubes(cfg.vv, cfg.vh, cfg.cc);
  const auto& g = cubes.vv.geometry();

  // labels
  BinaryMask labels = BinaryMask::zeros(g);
  if (cfg.polygons) {
    log_info("run-all: rasterizing polygons");
    labels = rasterize_polygons(load_geojson(*cfg.polygons), g, threads);
  } else {
    require_exists(*cfg.labels);
    labels = load_mask(*cfg.labels);
    if (!labels.geometry().same_grid(g))
      throw InputError("labels mask geometry does not match cubes");
  }
  const fs::path labels_path = cfg.out_dir / "labels.json";
  save_mask(labels, labels_path);
  write_provenance(labels_path, "rasterize", base_inputs, cfg.raw,
                   cfg.undersample_seed);

  // split
  const auto split = split_regions(g, cfg.split_fraction, cfg.train_left);
  {
    std::ofstream out(cfg.out_dir / "split.json");
    out << split_to_json(split).dump(2) << "\n";
  }
  write_provenance(cfg.out_dir / "split.json", "split", base_inputs, cfg.raw,
                   cfg.undersample_seed);

  // sample
  log_info("run-all: undersampling");
  const auto samples = undersample(labels, split.train_begin, split.train_end,
                                   cfg.undersample_seed);
  const fs::path samples_path = cfg.out_dir / "samples.csv";
  save_sample_index(samples, samples_path);
  write_provenance(samples_path, "sample", {labels_path.string()}, cfg.raw,
                   cfg.undersample_seed);

  // train
  log_info("run-all: assembling training features");
  auto train_X = assemble_features(cubes.vv, cubes.vh, cubes.cc, samples);
  if (!train_X.dropped_indices.empty())
    save_exclusion_report(train_X.dropped_indices,
                          cfg.out_dir / "train_exclusions.csv");
  log_info("run-all: training boosted model");
  const auto model = train(train_X, cfg.training);
  const fs::path model_path = cfg.out_dir / "model.json";
  save_model(model, model_path);
  write_provenance(model_path, "train", {samples_path.string()}, cfg.raw,
                   cfg.training.seed);
  log_info("run-all: training logistic baseline");
  const auto baseline = train_logreg(train_X);
  const fs::path logreg_path = cfg.out_dir / "logreg.json";
  save_logreg(baseline, logreg_path);
  write_provenance(logreg_path, "train", {samples_path.string()}, cfg.raw,
                   cfg.training.seed);

  // predict over the full ROI
  log_info("run-all: predicting full ROI");
  auto full_X = assemble_features(cubes.vv, cubes.vh, cubes.cc, 0, g.width,
                                  threads);
  if (!full_X.dropped_indices.empty())
    save_exclusion_report(full_X.dropped_indices,
                          cfg.out_dir / "predict_exclusions.csv");
  const auto proba = predict_proba(model, full_X, threads);
  const auto prob_raster = proba_to_raster(g, full_X, proba);
  const fs::path prob_path = cfg.out_dir / "prob.json";
  save_float_raster(prob_raster, "PROB", prob_path);
  write_provenance(prob_path, "predict", {model_path.string()}, cfg.raw,
                   cfg.training.seed);
  const auto logreg_proba = predict_logreg(baseline, full_X);
  const auto logreg_raster = proba_to_raster(g, full_X, logreg_proba);
  save_float_raster(logreg_raster, "PROB", cfg.out_dir / "logreg_prob.json");
  write_provenance(cfg.out_dir / "logreg_prob.json", "predict",
                   {logreg_path.string()}, cfg.raw, cfg.training.seed);

  // unsmoothed mask at the primary threshold, then CRF smoothing
  const double primary_threshold = cfg.eval_thresholds.at(0);
  const auto unsmoothed = threshold_mask(prob_raster, primary_threshold);
  save_mask(unsmoothed, cfg.out_dir / "unsmoothed_mask.json");
  save_mask_pgm(unsmoothed, cfg.out_dir / "unsmoothed_mask.pgm");
  write_provenance(cfg.out_dir / "unsmoothed_mask.json", "predict",
                   {prob_path.string()}, cfg.raw, cfg.training.seed);
  log_info("run-all: CRF smoothing");
  // NaN pixels carry no evidence either way
  sargdv::FloatRaster prob_filled = prob_raster;
  for (auto& v : prob_filled.values)
    if (std::isnan(v)) v = 0.5f;
  const auto smoothed = smooth(prob_filled, cfg.crf, threads);
  save_mask(smoothed, cfg.out_dir / "smoothed_mask.json");
  save_mask_pgm(smoothed, cfg.out_dir / "smoothed_mask.pgm");
  write_provenance(cfg.out_dir / "smoothed_mask.json", "smooth",
                   {prob_path.string()}, cfg.raw, cfg.training.seed);

  // evaluation
  log_info("run-all: evaluating");
  json metrics;
  metrics["schema_version"] = kSchemaVersion;
  std::vector<std::pair<std::string, ConfusionMatrix>> table_rows;
  for (const auto& [region, b, e] :
       {std::tuple{"train", split.train_begin, split.train_end},
        std::tuple{"validation", split.validation_begin, split.validation_end}}) {
    const auto cm_un = confusion(unsmoothed, labels, b, e);
    const auto cm_sm = confusion(smoothed, labels, b, e);
    metrics["regions"][region]["unsmoothed"] = eval_block(cm_un);
    metrics["regions"][region]["smoothed"] = eval_block(cm_sm);
    table_rows.emplace_back(std::string(region) + " unsmoothed", cm_un);
    table_rows.emplace_back(std::string(region) + " smoothed", cm_sm);
  }
  {
    std::ofstream out(cfg.out_dir / "metrics.txt");
    out << metrics_table(table_rows);
  }

  // validation-region score vectors
  std::vector<double> val_scores, val_scores_lr;
  std::vector<std::uint8_t> val_truth;
  for (int row = 0; row < g.height; ++row)
    for (int col = split.validation_begin; col < split.validation_end; ++col) {
      const auto pix = linear_index(row, col, g);
      const float p = prob_raster.values[pix];
      if (std::isnan(p)) continue;
      val_scores.push_back(p);
      val_scores_lr.push_back(logreg_raster.values[pix]);
      val_truth.push_back(labels.values()[pix]);
    }
  const auto roc = roc_curve(val_scores, val_truth);
  const auto prc = prc_curve(val_scores, val_truth);
  metrics["validation_roc_auc"] = roc.auc;
  metrics["validation_prc_auc"] = prc.auc;
  save_curve_csv(roc, cfg.out_dir / "roc.csv");
  save_curve_csv(prc, cfg.out_dir / "prc.csv");
  save_curves_svg(roc, prc, cfg.eval_thresholds, cfg.out_dir / "curves.svg");
  write_provenance(cfg.out_dir / "curves.svg", "curves", {prob_path.string()},
                   cfg.raw, cfg.training.seed);

  metrics["operating_points"] = json::array();
  for (double t : cfg.eval_thresholds) {
    auto block = eval_block(confusion_at_threshold(val_scores, val_truth, t));
    block["threshold"] = t;
    metrics["operating_points"].push_back(std::move(block));
  }

  // logistic baseline comparison: boosted TPR at the baseline's FDR
  {
    const auto cm_lr = confusion_at_threshold(val_scores_lr, val_truth, 0.5);
    const auto m_lr = compute_metrics(cm_lr);
    double best_tpr = 0.0;
    {
      std::vector<std::size_t> order(val_scores.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return val_scores[a] > val_scores[b];
      });
      std::int64_t pos = 0;
      for (auto t : val_truth) pos += t;
      std::int64_t tp = 0, fp = 0;
      for (std::size_t k = 0; k < order.size(); ++k) {
        if (val_truth[order[k]])
          ++tp;
        else
          ++fp;
        // only evaluate at tie-group boundaries
        if (k + 1 < order.size() &&
            val_scores[order[k + 1]] == val_scores[order[k]])
          continue;
        const double fdr = tp + fp > 0 ? double(fp) / double(tp + fp) : 0.0;
        const double tpr = pos > 0 ? double(tp) / double(pos) : 1.0;
        if (fdr <= m_lr.fdr) best_tpr = std::max(best_tpr, tpr);
      }
    }
    json cmp = eval_block(cm_lr);
    cmp["threshold"] = 0.5;
    metrics["baseline"]["logreg"] = std::move(cmp);
    metrics["baseline"]["matched_fdr"] = m_lr.fdr;
    metrics["baseline"]["gbt_tpr_at_matched_fdr"] = best_tpr;
  }

  const fs::path metrics_path = cfg.out_dir / "metrics.json";
  {
    std::ofstream out(metrics_path);
    out << metrics.dump(2) << "\n";
  }
  write_provenance(metrics_path, "eval", {prob_path.string(), labels_path.string()},
                   cfg.raw, cfg.undersample_seed);

  // optional IDW map
  if (cfg.boreholes) {
    log_info("run-all: IDW interpolation");
    auto records = load_boreholes_csv(*cfg.boreholes);
    records = filter_boreholes(records, cfg.idw_cutoff);
    IdwParams ip;
    ip.power = cfg.idw_power;
    ip.geometry = g;
    const auto dtw = idw_interpolate(records, ip, threads);
    save_float_raster(dtw, "DTW", cfg.out_dir / "dtw.json");
    write_provenance(cfg.out_dir / "dtw.json", "idw",
                     {cfg.boreholes->string()}, cfg.raw, 0);
  }

  std::cout << "run-all complete: " << metrics_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAR time-series groundwater-dependent-vegetation classifier"};
  app.require_subcommand(1);

  int threads = 1;
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  app.add_option("--threads", threads, "worker thread cap (1 = fully serial)");
  app.add_option("--seed", seed_flag, "override config seed")
      ->each([&seed_given](const std::string&) { seed_given = true; });

  // --- synth
  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic cubes");
  std::string synth_spec_path, synth_out = ".";
  synth_cmd->add_option("--spec", synth_spec_path, "synth spec JSON");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();

  // --- ingest
  auto* ingest_cmd =
      app.add_subcommand("ingest", "import a raw float32 payload as a cube");
  std::string ingest_raw, ingest_kind = "VV", ingest_out, ingest_dates;
  int ingest_w = 0, ingest_h = 0, ingest_bands = 0;
  ingest_cmd->add_option("--raw", ingest_raw, "raw LE float32 payload")->required();
  ingest_cmd->add_option("--kind", ingest_kind, "VV | VH | CC");
  ingest_cmd->add_option("--width", ingest_w)->required();
  ingest_cmd->add_option("--height", ingest_h)->required();
  ingest_cmd->add_option("--bands", ingest_bands)->required();
  ingest_cmd->add_option("--dates", ingest_dates,
                         "file with one ISO date per line (default: synthetic "
                         "12-day sequence)");
  ingest_cmd->add_option("--out", ingest_out, "output header path")->required();

  // --- rasterize
  auto* rast_cmd = app.add_subcommand("rasterize", "polygons -> binary mask");
  std::string rast_polygons, rast_like, rast_out;
  rast_cmd->add_option("--polygons", rast_polygons, "GeoJSON file")->required();
  rast_cmd->add_option("--like", rast_like, "header providing the grid")->required();
  rast_cmd->add_option("--out", rast_out, "output mask header")->required();

  // --- split
  auto* split_cmd = app.add_subcommand("split", "train/validation column split");
  std::string split_like, split_out;
  double split_fraction = 2.0 / 3.0;
  bool split_train_right = false;
  split_cmd->add_option("--like", split_like)->required();
  split_cmd->add_option("--fraction", split_fraction, "train fraction");
  split_cmd->add_flag("--train-right", split_train_right,
                      "train region on the right instead of the left");
  split_cmd->add_option("--out", split_out)->required();

  // --- sample
  auto* sample_cmd = app.add_subcommand("sample", "balanced undersampling");
  std::string sample_labels, sample_split, sample_out;
  sample_cmd->add_option("--labels", sample_labels, "label mask header")->required();
  sample_cmd->add_option("--split", sample_split, "split JSON")->required();
  sample_cmd->add_option("--out", sample_out, "sample index CSV")->required();

  // --- train
  auto* train_cmd = app.add_subcommand("train", "train classifier");
  std::string train_vv, train_vh, train_cc, train_samples, train_out,
      train_config_path;
  bool train_baseline = false;
  train_cmd->add_option("--vv", train_vv)->required();
  train_cmd->add_option("--vh", train_vh)->required();
  train_cmd->add_option("--cc", train_cc)->required();
  train_cmd->add_option("--samples", train_samples)->required();
  train_cmd->add_option("--config", train_config_path, "TrainingConfig JSON");
  train_cmd->add_flag("--logreg", train_baseline, "train the logistic baseline");
  train_cmd->add_option("--out", train_out)->required();

  // --- predict
  auto* predict_cmd = app.add_subcommand("predict", "probability raster");
  std::string pred_model, pred_vv, pred_vh, pred_cc, pred_out;
  predict_cmd->add_option("--model", pred_model)->required();
  predict_cmd->add_option("--vv", pred_vv)->required();
  predict_cmd->add_option("--vh", pred_vh)->required();
  predict_cmd->add_option("--cc", pred_cc)->required();
  predict_cmd->add_option("--out", pred_out, "PROB raster header")->required();

  // --- smooth
  auto* smooth_cmd = app.add_subcommand("smooth", "CRF smoothing");
  std::string smooth_prob, smooth_out;
  sargdv::CrfParams smooth_params;
  smooth_cmd->add_option("--prob", smooth_prob, "PROB raster header")->required();
  smooth_cmd->add_option("--beta", smooth_params.beta);
  smooth_cmd->add_option("--neighborhood", smooth_params.neighborhood);
  smooth_cmd->add_option("--max-iters", smooth_params.max_iters);
  smooth_cmd->add_option("--init-threshold", smooth_params.init_threshold);
  smooth_cmd->add_option("--out", smooth_out, "MASK header")->required();

  // --- eval
  auto* eval_cmd = app.add_subcommand("eval", "confusion metrics");
  std::string eval_pred, eval_prob, eval_truth, eval_split, eval_out;
  std::vector<double> eval_thresholds{0.9, 0.2};
  eval_cmd->add_option("--pred", eval_pred, "prediction mask header");
  eval_cmd->add_option("--prob", eval_prob,
                       "PROB raster header (adds operating-point rows)");
  eval_cmd->add_option("--truth", eval_truth)->required();
  eval_cmd->add_option("--split", eval_split, "split JSON (region metrics)");
  eval_cmd->add_option("--thresholds", eval_thresholds, "operating points");
  eval_cmd->add_option("--out", eval_out, "metrics JSON")->required();

  // --- curves
  auto* curves_cmd = app.add_subcommand("curves", "ROC / PRC plots");
  std::string curves_prob, curves_truth, curves_split, curves_out;
  std::vector<double> curves_markers{0.9, 0.2};
  curves_cmd->add_option("--prob", curves_prob)->required();
  curves_cmd->add_option("--truth", curves_truth)->required();
  curves_cmd->add_option("--split", curves_split,
                         "split JSON; curves use the validation region");
  curves_cmd->add_option("--markers", curves_markers, "threshold markers");
  curves_cmd->add_option("--out", curves_out, "output prefix")->required();

  // --- idw
  auto* idw_cmd = app.add_subcommand("idw", "depth-to-water interpolation");
  std::string idw_boreholes, idw_like, idw_out, idw_cutoff = "2019-01-01";
  double idw_power = 2.0;
  idw_cmd->add_option("--boreholes", idw_boreholes, "CSV")->required();
  idw_cmd->add_option("--like", idw_like, "header providing the grid")->required();
  idw_cmd->add_option("--power", idw_power, "distance coefficient");
  idw_cmd->add_option("--cutoff", idw_cutoff, "drop observations before this date");
  idw_cmd->add_option("--out", idw_out, "DTW raster header")->required();

  // --- run-all
  auto* run_cmd = app.add_subcommand("run-all", "full pipeline from a config");
  std::string run_config, run_out;
  run_cmd->add_option("--config", run_config, "run configuration JSON")->required();
  run_cmd->add_option("--out", run_out, "override output directory");

  // let `--threads` / `--seed` appear after the subcommand as well
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      sargdv::SynthSpec spec;
      if (!synth_spec_path.empty()) spec = sargdv::load_synth_spec(synth_spec_path);
      if (seed_given) spec.seed = seed_flag;
      spec.validate();
      fs::create_directories(synth_out);
      const auto out = sargdv::generate(spec);
      const fs::path dir(synth_out);
      sargdv::save_cube(out.vv, dir / "vv.json");
      sargdv::save_cube(out.vh, dir / "vh.json");
      sargdv::save_cube(out.cc, dir / "cc.json");
      sargdv::save_mask(out.truth, dir / "truth.json");
      json cfg_json{{"width", spec.width},
                    {"height", spec.height},
                    {"blob_count", spec.blob_count},
                    {"seed", spec.seed}};
      for (const char* a : {"vv.json", "vh.json", "cc.json", "truth.json"})
        write_provenance(dir / a, "synth", {}, cfg_json, spec.seed);
      std::cout << "synth: wrote cubes + truth to " << synth_out << "\n";
    } else if (*ingest_cmd) {
      require_exists(ingest_raw);
      const auto raw = sargdv::detail::read_file(ingest_raw);
      const std::size_t npix = std::size_t(ingest_w) * ingest_h;
      if (ingest_bands < 1 || npix == 0 ||
          raw.size() != npix * ingest_bands * 4)
        throw sargdv::InputError(
            "ingest: payload size does not match width*height*bands*4");
      std::vector<std::vector<float>> bands(ingest_bands,
                                            std::vector<float>(npix));
      for (int b = 0; b < ingest_bands; ++b)
        std::memcpy(bands[b].data(), raw.data() + std::size_t(b) * npix * 4,
                    npix * 4);
      std::vector<std::string> dates;
      if (!ingest_dates.empty()) {
        std::ifstream din(ingest_dates);
        if (!din) throw sargdv::InputError("cannot open dates file");
        std::string line;
        while (std::getline(din, line))
          if (!line.empty()) dates.push_back(line);
      } else {
        const std::int64_t start = sargdv::days_from_civil(2017, 1, 4);
        for (int i = 0; i < ingest_bands; ++i)
          dates.push_back(sargdv::format_iso_date(start + 12ll * i));
      }
      sargdv::GridGeometry g;
      g.width = ingest_w;
      g.height = ingest_h;
      sargdv::DataCube cube(g, sargdv::cube_kind_from_string(ingest_kind),
                            std::move(bands), std::move(dates));
      sargdv::save_cube(cube, ingest_out);
      write_provenance(ingest_out, "ingest", {ingest_raw},
                       json{{"kind", ingest_kind}}, 0);
      std::cout << "ingest: wrote " << ingest_out << "\n";
    } else if (*rast_cmd) {
      require_exists(rast_polygons);
      const auto g = load_geometry(rast_like);
      const auto mask =
          sargdv::rasterize_polygons(sargdv::load_geojson(rast_polygons), g,
                                     threads);
      sargdv::save_mask(mask, rast_out);
      write_provenance(rast_out, "rasterize", {rast_polygons, rast_like},
                       json::object(), 0);
      std::cout << "rasterize: wrote " << rast_out << "\n";
    } else if (*split_cmd) {
      const auto g = load_geometry(split_like);
      const auto s =
          sargdv::split_regions(g, split_fraction, !split_train_right);
      std::ofstream out(split_out);
      out << split_to_json(s).dump(2) << "\n";
      write_provenance(split_out, "split", {split_like},
                       json{{"fraction", split_fraction}}, 0);
      std::cout << "split: train [" << s.train_begin << "," << s.train_end
                << "), validation [" << s.validation_begin << ","
                << s.validation_end << ")\n";
    } else if (*sample_cmd) {
      const auto labels = sargdv::load_mask(sample_labels);
      const auto s = split_from_json_file(sample_split);
      const std::uint64_t seed = seed_given ? seed_flag : 42;
      const auto samples =
          sargdv::undersample(labels, s.train_begin, s.train_end, seed);
      sargdv::save_sample_index(samples, sample_out);
      write_provenance(sample_out, "sample", {sample_labels, sample_split},
                       json::object(), seed);
      std::cout << "sample: " << samples.entries.size() << " entries\n";
    } else if (*train_cmd) {
      const auto cubes = load_cubes(train_vv, train_vh, train_cc);
      const auto samples = sargdv::load_sample_index(train_samples);
      const auto X =
          sargdv::assemble_features(cubes.vv, cubes.vh, cubes.cc, samples);
      sargdv::TrainingConfig tc;
      if (!train_config_path.empty())
        tc = training_config_from_json(load_json_file(train_config_path));
      if (seed_given) tc.seed = seed_flag;
      if (train_baseline) {
        sargdv::save_logreg(sargdv::train_logreg(X), train_out);
      } else {
        sargdv::save_model(sargdv::train(X, tc), train_out);
      }
      write_provenance(train_out, "train",
                       {train_vv, train_vh, train_cc, train_samples},
                       json{{"logreg", train_baseline}}, tc.seed);
      std::cout << "train: wrote " << train_out << "\n";
    } else if (*predict_cmd) {
      const auto cubes = load_cubes(pred_vv, pred_vh, pred_cc);
      const auto& g = cubes.vv.geometry();
      auto X = sargdv::assemble_features(cubes.vv, cubes.vh, cubes.cc, 0,
                                         g.width, threads);
      const json mj = load_json_file(pred_model);
      std::vector<double> proba;
      if (mj.contains("trees"))
        proba = sargdv::predict_proba(sargdv::model_from_json(mj), X, threads);
      else
        proba = sargdv::predict_logreg(sargdv::load_logreg(pred_model), X);
      sargdv::save_float_raster(proba_to_raster(g, X, proba), "PROB", pred_out);
      write_provenance(pred_out, "predict", {pred_model}, json::object(), 0);
      std::cout << "predict: wrote " << pred_out << "\n";
    } else if (*smooth_cmd) {
      smooth_params.validate();
      const auto prob = sargdv::load_float_raster(smooth_prob, "PROB");
      const auto mask = sargdv::smooth(prob, smooth_params, threads);
      sargdv::save_mask(mask, smooth_out);
      write_provenance(smooth_out, "smooth", {smooth_prob},
                       json{{"beta", smooth_params.beta},
                            {"neighborhood", smooth_params.neighborhood}},
                       0);
      std::cout << "smooth: wrote " << smooth_out << "\n";
    } else if (*eval_cmd) {
      if (eval_pred.empty() && eval_prob.empty())
        throw sargdv::InputError("eval: need --pred and/or --prob");
      const auto truth = sargdv::load_mask(eval_truth);
      const auto& g = truth.geometry();
      json out;
      out["schema_version"] = kSchemaVersion;
      std::vector<std::pair<int, int>> regions{{0, g.width}};
      std::vector<std::string> region_names{"all"};
      if (!eval_split.empty()) {
        const auto s = split_from_json_file(eval_split);
        regions = {{s.train_begin, s.train_end},
                   {s.validation_begin, s.validation_end}};
        region_names = {"train", "validation"};
      }
      if (!eval_pred.empty()) {
        const auto pred = sargdv::load_mask(eval_pred);
        for (std::size_t r = 0; r < regions.size(); ++r)
          out["regions"][region_names[r]] = eval_block(
              sargdv::confusion(pred, truth, regions[r].first, regions[r].second));
      }
      if (!eval_prob.empty()) {
        const auto prob = sargdv::load_float_raster(eval_prob, "PROB");
        if (!prob.geometry.same_grid(g))
          throw sargdv::InputError("eval: prob/truth geometry mismatch");
        out["operating_points"] = json::array();
        // operating points use the last-named region (validation when split given)
        const auto [cb, ce] = regions.back();
        std::vector<double> scores;
        std::vector<std::uint8_t> labels;
        for (int row = 0; row < g.height; ++row)
          for (int col = cb; col < ce; ++col) {
            const auto pix = sargdv::linear_index(row, col, g);
            if (std::isnan(prob.values[pix])) continue;
            scores.push_back(prob.values[pix]);
            labels.push_back(truth.values()[pix]);
          }
        for (double t : eval_thresholds) {
          auto block = eval_block(
              sargdv::confusion_at_threshold(scores, labels, t));
          block["threshold"] = t;
          out["operating_points"].push_back(std::move(block));
        }
      }
      std::ofstream os(eval_out);
      os << out.dump(2) << "\n";
      write_provenance(eval_out, "eval", {eval_truth}, json::object(), 0);
      std::cout << "eval: wrote " << eval_out << "\n";
    } else if (*curves_cmd) {
      const auto prob = sargdv::load_float_raster(curves_prob, "PROB");
      const auto truth = sargdv::load_mask(curves_truth);
      if (!prob.geometry.same_grid(truth.geometry()))
        throw sargdv::InputError("curves: prob/truth geometry mismatch");
      const auto& g = truth.geometry();
      int cb = 0, ce = g.width;
      if (!curves_split.empty()) {
        const auto s = split_from_json_file(curves_split);
        cb = s.validation_begin;
        ce = s.validation_end;
      }
      std::vector<double> scores;
      std::vector<std::uint8_t> labels;
      for (int row = 0; row < g.height; ++row)
        for (int col = cb; col < ce; ++col) {
          const auto pix = sargdv::linear_index(row, col, g);
          if (std::isnan(prob.values[pix])) continue;
          scores.push_back(prob.values[pix]);
          labels.push_back(truth.values()[pix]);
        }
      const auto roc = sargdv::roc_curve(scores, labels);
      const auto prc = sargdv::prc_curve(scores, labels);
      sargdv::save_curve_csv(roc, curves_out + ".roc.csv");
      sargdv::save_curve_csv(prc, curves_out + ".prc.csv");
      sargdv::save_curves_svg(roc, prc, curves_markers, curves_out + ".svg");
      write_provenance(curves_out + ".svg", "curves",
                       {curves_prob, curves_truth}, json::object(), 0);
      std::cout << "curves: ROC AUC " << roc.auc << ", PRC AUC " << prc.auc
                << "\n";
    } else if (*idw_cmd) {
      auto records = sargdv::load_boreholes_csv(idw_boreholes);
      sargdv::FilterStats stats;
      records = sargdv::filter_boreholes(records, idw_cutoff, &stats);
      sargdv::IdwParams ip;
      ip.power = idw_power;
      ip.geometry = load_geometry(idw_like);
      const auto dtw = sargdv::idw_interpolate(records, ip, threads);
      sargdv::save_float_raster(dtw, "DTW", idw_out);
      write_provenance(idw_out, "idw", {idw_boreholes, idw_like},
                       json{{"power", idw_power}, {"cutoff", idw_cutoff}}, 0);
      std::cout << "idw: " << records.size() << " records used, wrote "
                << idw_out << "\n";
    } else if (*run_cmd) {
      return cmd_run_all(run_config,
                         seed_given ? std::optional<std::uint64_t>(seed_flag)
                                    : std::nullopt,
                         run_out.empty() ? std::nullopt
                                         : std::optional<fs::path>(run_out),
                         threads);
    }
  } catch (const sargdv::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
