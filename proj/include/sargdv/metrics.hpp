#pragma once

// Confusion-matrix metrics, ROC / PRC curves with trapezoid AUC, and
// operating-point extraction. Threshold semantics are inclusive: a score s
// predicts positive iff s >= threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "sargdv/raster.hpp"
#include "sargdv/util.hpp"

namespace sargdv {

struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }
};

struct MetricsReport {
  double fdr = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
  double for_rate = 0.0;
  double fpr = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
};

// Degenerate-denominator conventions: FDR := 0 when TP+FP = 0, FOR := 0 when
// TN+FN = 0, TPR := 1 when there are no positives (with a warning), TNR := 1
// when there are no negatives.
inline MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  MetricsReport r;
  const double pred_pos = static_cast<double>(cm.tp + cm.fp);
  const double pred_neg = static_cast<double>(cm.tn + cm.fn);
  const double actual_pos = static_cast<double>(cm.tp + cm.fn);
  const double actual_neg = static_cast<double>(cm.tn + cm.fp);

  r.fdr = pred_pos > 0 ? cm.fp / pred_pos : 0.0;
  r.for_rate = pred_neg > 0 ? cm.fn / pred_neg : 0.0;
  if (actual_pos > 0) {
    r.tpr = cm.tp / actual_pos;
  } else {
    log_warn("compute_metrics: no positives in region, TPR := 1");
    r.tpr = 1.0;
  }
  r.tnr = actual_neg > 0 ? cm.tn / actual_neg : 1.0;
  r.fpr = 1.0 - r.tnr;
  r.precision = 1.0 - r.fdr;
  r.recall = r.tpr;
  const auto total = cm.total();
  r.accuracy = total > 0 ? static_cast<double>(cm.tp + cm.tn) / total : 1.0;
  return r;
}

inline ConfusionMatrix confusion(const BinaryMask& pred, const BinaryMask& truth,
                                 int col_begin, int col_end) {
  if (!pred.geometry().same_grid(truth.geometry()))
    throw InputError("confusion: mask geometries do not align");
  const auto& g = pred.geometry();
  if (col_begin < 0 || col_end > g.width || col_begin >= col_end)
    throw InputError("confusion: column interval out of range");
  ConfusionMatrix cm;
  for (int row = 0; row < g.height; ++row) {
    const std::size_t base = static_cast<std::size_t>(row) * g.width;
    for (int col = col_begin; col < col_end; ++col) {
      const bool p = pred.values()[base + col] != 0;
      const bool t = truth.values()[base + col] != 0;
      if (p && t) ++cm.tp;
      else if (!p && !t) ++cm.tn;
      else if (p) ++cm.fp;
      else ++cm.fn;
    }
  }
  return cm;
}

inline ConfusionMatrix confusion(const BinaryMask& pred,
                                 const BinaryMask& truth) {
  return confusion(pred, truth, 0, pred.geometry().width);
}

// Confusion counts of thresholded scores (score >= threshold -> positive).
inline ConfusionMatrix confusion_at_threshold(const std::vector<double>& scores,
                                              const std::vector<std::uint8_t>& truth,
                                              double threshold) {
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool p = scores[i] >= threshold;
    const bool t = truth[i] != 0;
    if (p && t) ++cm.tp;
    else if (!p && !t) ++cm.tn;
    else if (p) ++cm.fp;
    else ++cm.fn;
  }
  return cm;
}

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  double threshold = 0.0;
};

struct CurveSeries {
  std::vector<CurvePoint> points;  // thresholds strictly decreasing
  double auc = 0.0;
};

namespace metrics_detail {

struct Sweep {
  // cumulative (tp, fp) after each distinct-score group, scores descending
  std::vector<double> thresholds;
  std::vector<std::int64_t> tp;
  std::vector<std::int64_t> fp;
  std::int64_t npos = 0;
  std::int64_t nneg = 0;
};

inline Sweep threshold_sweep(const std::vector<double>& scores,
                             const std::vector<std::uint8_t>& truth) {
  if (scores.size() != truth.size())
    throw InputError("curve: scores/labels size mismatch");
  Sweep s;
  for (auto t : truth) (t ? s.npos : s.nneg)++;
  if (s.npos == 0 || s.nneg == 0)
    throw InputError("curve: truth contains a single class, curve undefined");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  std::int64_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (truth[order[k]] ? tp : fp)++;
    // emit once per distinct score (tie group collapses to one point)
    if (k + 1 == order.size() || scores[order[k + 1]] != scores[order[k]]) {
      s.thresholds.push_back(scores[order[k]]);
      s.tp.push_back(tp);
      s.fp.push_back(fp);
    }
  }
  return s;
}

inline double trapezoid_auc(const std::vector<CurvePoint>& pts) {
  double auc = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    auc += 0.5 * (pts[i].x - pts[i - 1].x) * (pts[i].y + pts[i - 1].y);
  return auc;
}

}  // namespace metrics_detail

inline CurveSeries roc_curve(const std::vector<double>& scores,
                             const std::vector<std::uint8_t>& truth) {
  const auto s = metrics_detail::threshold_sweep(scores, truth);
  CurveSeries c;
  c.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  for (std::size_t k = 0; k < s.thresholds.size(); ++k)
    c.points.push_back({static_cast<double>(s.fp[k]) / s.nneg,
                        static_cast<double>(s.tp[k]) / s.npos,
                        s.thresholds[k]});
  c.auc = metrics_detail::trapezoid_auc(c.points);
  return c;
}

inline CurveSeries prc_curve(const std::vector<double>& scores,
                             const std::vector<std::uint8_t>& truth) {
  const auto s = metrics_detail::threshold_sweep(scores, truth);
  CurveSeries c;
  // precision at recall 0 := precision of the highest-score group
  const double first_prec =
      static_cast<double>(s.tp[0]) / (s.tp[0] + s.fp[0]);
  c.points.push_back({0.0, first_prec, std::numeric_limits<double>::infinity()});
  for (std::size_t k = 0; k < s.thresholds.size(); ++k)
    c.points.push_back({static_cast<double>(s.tp[k]) / s.npos,
                        static_cast<double>(s.tp[k]) / (s.tp[k] + s.fp[k]),
                        s.thresholds[k]});
  c.auc = metrics_detail::trapezoid_auc(c.points);
  return c;
}

// --- reporting --------------------------------------------------------------

inline nlohmann::json confusion_to_json(const ConfusionMatrix& cm) {
  return {{"TP", cm.tp}, {"TN", cm.tn}, {"FP", cm.fp}, {"FN", cm.fn}};
}

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
  return {{"FDR", r.fdr},       {"TPR", r.tpr},
          {"TNR", r.tnr},       {"FOR", r.for_rate},
          {"FPR", r.fpr},       {"precision", r.precision},
          {"recall", r.recall}, {"accuracy", r.accuracy}};
}

// aligned plain-text table over (row label, confusion) pairs
inline std::string metrics_table(
    const std::vector<std::pair<std::string, ConfusionMatrix>>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-24s %10s %10s %10s %10s  %6s %6s %6s %6s %6s\n",
                "row", "TP", "TN", "FP", "FN", "FDR", "TPR", "TNR", "FOR", "acc");
  out += buf;
  for (const auto& [label, cm] : rows) {
    const auto m = compute_metrics(cm);
    std::snprintf(buf, sizeof(buf),
                  "%-24s %10lld %10lld %10lld %10lld  %6.3f %6.3f %6.3f %6.3f %6.3f\n",
                  label.c_str(), static_cast<long long>(cm.tp),
                  static_cast<long long>(cm.tn), static_cast<long long>(cm.fp),
                  static_cast<long long>(cm.fn), m.fdr, m.tpr, m.tnr, m.for_rate,
                  m.accuracy);
    out += buf;
  }
  return out;
}

inline void save_curve_csv(const CurveSeries& c,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RasterError("cannot open for write: " + path.string());
  out << "threshold,x,y\n";
  out.precision(17);
  for (const auto& p : c.points)
    out << p.threshold << "," << p.x << "," << p.y << "\n";
}

namespace metrics_detail {

inline void svg_panel(std::string& svg, const CurveSeries& c, double ox,
                      double oy, double size, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<double>& marker_thresholds) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<rect x='%g' y='%g' width='%g' height='%g' fill='white' "
                "stroke='black'/>\n",
                ox, oy, size, size);
  svg += buf;
  svg += "<polyline fill='none' stroke='#1f77b4' stroke-width='1.5' points='";
  for (const auto& p : c.points) {
    std::snprintf(buf, sizeof(buf), "%g,%g ", ox + p.x * size,
                  oy + (1.0 - p.y) * size);
    svg += buf;
  }
  svg += "'/>\n";
  for (double t : marker_thresholds) {
    // closest swept point at threshold >= t (inclusive semantics)
    const CurvePoint* best = nullptr;
    for (const auto& p : c.points)
      if (p.threshold >= t) best = &p;
    if (!best) continue;
    std::snprintf(buf, sizeof(buf),
                  "<circle cx='%g' cy='%g' r='4' fill='#d62728'/>\n"
                  "<text x='%g' y='%g' font-size='11'>p=%g</text>\n",
                  ox + best->x * size, oy + (1.0 - best->y) * size,
                  ox + best->x * size + 6, oy + (1.0 - best->y) * size - 4, t);
    svg += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x='%g' y='%g' font-size='13' font-weight='bold'>%s "
                "(AUC %.4f)</text>\n"
                "<text x='%g' y='%g' font-size='11'>%s</text>\n"
                "<text x='%g' y='%g' font-size='11' transform='rotate(-90 %g %g)'>%s</text>\n",
                ox, oy - 8.0, title.c_str(), c.auc, ox + size / 2 - 20,
                oy + size + 16.0, xlabel.c_str(), ox - 8.0, oy + size / 2, ox - 8.0,
                oy + size / 2, ylabel.c_str());
  svg += buf;
}

}  // namespace metrics_detail

// Two stacked panels, ROC above PRC, with operating-point markers.
inline void save_curves_svg(const CurveSeries& roc, const CurveSeries& prc,
                            const std::vector<double>& marker_thresholds,
                            const std::filesystem::path& path) {
  std::string svg =
      "<svg xmlns='http://www.w3.org/2000/svg' width='400' height='760' "
      "viewBox='0 0 400 760'>\n";
  metrics_detail::svg_panel(svg, roc, 60, 40, 300, "ROC",
                            "false positive rate", "true positive rate",
                            marker_thresholds);
  metrics_detail::svg_panel(svg, prc, 60, 420, 300, "PRC", "recall",
                            "precision", marker_thresholds);
  svg += "</svg>\n";
  std::ofstream out(path);
  if (!out) throw RasterError("cannot open for write: " + path.string());
  out << svg;
}

}  // namespace sargdv
