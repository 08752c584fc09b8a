#pragma once

// Second-order gradient-boosted decision trees with a binary logistic
// objective. Greedy exact split search over sorted unique values up to 1024
// distinct values per feature, 256-bin histogram approximation above that.
// Features are enumerated in ascending index order and thresholds in
// ascending value order, with strict-improvement acceptance, so ties resolve
// to the lowest feature index and lowest threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "sargdv/dataset.hpp"
#include "sargdv/util.hpp"

namespace sargdv {

struct TrainingConfig {
  int max_depth = 50;
  int rounds = 40;
  double learning_rate = 1.0;
  double l2_lambda = 1.0;
  double gamma_min_gain = 0.0;
  double min_child_weight = 1.0;
  double base_score = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_depth < 1) throw InputError("TrainingConfig: max_depth must be >= 1");
    if (rounds < 1) throw InputError("TrainingConfig: rounds must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
      throw InputError("TrainingConfig: learning_rate must be in (0, 1]");
    if (!(base_score > 0.0 && base_score < 1.0))
      throw InputError("TrainingConfig: base_score must be in (0, 1)");
    if (l2_lambda < 0.0 || gamma_min_gain < 0.0 || min_child_weight < 0.0)
      throw InputError("TrainingConfig: regularizers must be non-negative");
  }
};

// Internal node: feature >= 0, children set. Leaf: feature == -1.
struct TreeNode {
  int feature = -1;
  float threshold = 0.0f;
  int left = -1;
  int right = -1;
  double leaf = 0.0;
  bool default_left = true;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root

  double route(const float* row) const {
    int n = 0;
    while (!nodes[n].is_leaf()) {
      const float v = row[nodes[n].feature];
      if (std::isnan(v))
        n = nodes[n].default_left ? nodes[n].left : nodes[n].right;
      else
        n = v < nodes[n].threshold ? nodes[n].left : nodes[n].right;
    }
    return nodes[n].leaf;
  }
};

struct GbtModel {
  std::vector<Tree> trees;
  double base_score = 0.5;
  int feature_count = 0;
  TrainingConfig config;
};

// gain = 1/2 [ GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l) ] - gamma
inline double split_gain(double GL, double HL, double GR, double HR,
                         double lambda, double gamma) {
  auto term = [lambda](double G, double H) {
    const double den = H + lambda;
    return den > 0.0 ? G * G / den : 0.0;
  };
  return 0.5 * (term(GL, HL) + term(GR, HR) - term(GL + GR, HL + HR)) - gamma;
}

namespace gbt_detail {

constexpr int kExactSearchMaxDistinct = 1024;
constexpr int kHistogramBins = 256;
// Splits with gain >= 0 are accepted (zero-gain splits let later levels
// separate symmetric data); strictly negative gain makes a leaf.
constexpr double kGainTolerance = 1e-12;

struct SplitCandidate {
  double gain = -std::numeric_limits<double>::infinity();
  int feature = -1;
  float threshold = 0.0f;
  bool default_left = true;
  bool valid = false;
};

struct NodeStats {
  double G = 0.0;
  double H = 0.0;
};

// Tries a (GL,HL | GR,HR) partition with the missing-value mass routed to
// whichever side gains more; updates `best` on strict improvement.
inline void consider_split(double GL, double HL, double GR, double HR,
                           double Gmiss, double Hmiss,
                           const TrainingConfig& cfg, int feature,
                           float threshold, SplitCandidate& best) {
  for (int miss_left = 1; miss_left >= 0; --miss_left) {
    const double gl = GL + (miss_left ? Gmiss : 0.0);
    const double hl = HL + (miss_left ? Hmiss : 0.0);
    const double gr = GR + (miss_left ? 0.0 : Gmiss);
    const double hr = HR + (miss_left ? 0.0 : Hmiss);
    if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
    const double gain =
        split_gain(gl, hl, gr, hr, cfg.l2_lambda, cfg.gamma_min_gain);
    if (gain > best.gain) {
      best.gain = gain;
      best.feature = feature;
      best.threshold = threshold;
      best.default_left = miss_left != 0;
      best.valid = true;
    }
  }
}

// Exact scan over sorted distinct values of one feature within a node.
inline void search_exact(const FeatureMatrix& X, const std::vector<double>& g,
                         const std::vector<double>& h,
                         const std::vector<std::uint32_t>& node_samples,
                         int feature, const TrainingConfig& cfg,
                         SplitCandidate& best,
                         std::vector<std::pair<float, std::uint32_t>>& scratch) {
  scratch.clear();
  double Gmiss = 0.0, Hmiss = 0.0, Gtot = 0.0, Htot = 0.0;
  for (auto i : node_samples) {
    const float v = X.at(i, feature);
    if (std::isnan(v)) {
      Gmiss += g[i];
      Hmiss += h[i];
    } else {
      scratch.emplace_back(v, i);
    }
    Gtot += g[i];
    Htot += h[i];
  }
  if (scratch.size() < 2) return;
  std::sort(scratch.begin(), scratch.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double GL = 0.0, HL = 0.0;
  for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
    GL += g[scratch[i].second];
    HL += h[scratch[i].second];
    if (scratch[i].first == scratch[i + 1].first) continue;  // tie group
    const float thr = 0.5f * (scratch[i].first + scratch[i + 1].first);
    consider_split(GL, HL, Gtot - Gmiss - GL, Htot - Hmiss - HL, Gmiss, Hmiss,
                   cfg, feature, thr, best);
  }
}

// Histogram approximation: equal-width bins over the node's value range,
// thresholds at interior bin edges.
inline void search_histogram(const FeatureMatrix& X, const std::vector<double>& g,
                             const std::vector<double>& h,
                             const std::vector<std::uint32_t>& node_samples,
                             int feature, const TrainingConfig& cfg,
                             SplitCandidate& best) {
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  double Gmiss = 0.0, Hmiss = 0.0;
  for (auto i : node_samples) {
    const float v = X.at(i, feature);
    if (std::isnan(v)) {
      Gmiss += g[i];
      Hmiss += h[i];
      continue;
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo < hi)) return;

  double Gbin[kHistogramBins] = {0};
  double Hbin[kHistogramBins] = {0};
  const double scale = kHistogramBins / (double(hi) - double(lo));
  for (auto i : node_samples) {
    const float v = X.at(i, feature);
    if (std::isnan(v)) continue;
    int b = static_cast<int>((double(v) - double(lo)) * scale);
    b = std::clamp(b, 0, kHistogramBins - 1);
    Gbin[b] += g[i];
    Hbin[b] += h[i];
  }
  double Gtot = Gmiss, Htot = Hmiss;
  for (int b = 0; b < kHistogramBins; ++b) {
    Gtot += Gbin[b];
    Htot += Hbin[b];
  }

  double GL = 0.0, HL = 0.0;
  for (int b = 0; b + 1 < kHistogramBins; ++b) {
    GL += Gbin[b];
    HL += Hbin[b];
    const float thr = static_cast<float>(double(lo) + (b + 1) / scale);
    consider_split(GL, HL, Gtot - Gmiss - GL, Htot - Hmiss - HL, Gmiss, Hmiss,
                   cfg, feature, thr, best);
  }
}

inline int count_distinct_capped(const FeatureMatrix& X,
                                 const std::vector<std::uint32_t>& node_samples,
                                 int feature, int cap,
                                 std::vector<float>& scratch) {
  scratch.clear();
  for (auto i : node_samples) {
    const float v = X.at(i, feature);
    if (!std::isnan(v)) scratch.push_back(v);
  }
  std::sort(scratch.begin(), scratch.end());
  int distinct = 0;
  for (std::size_t i = 0; i < scratch.size(); ++i) {
    if (i == 0 || scratch[i] != scratch[i - 1]) ++distinct;
    if (distinct > cap) return distinct;
  }
  return distinct;
}

struct BuildContext {
  const FeatureMatrix& X;
  const std::vector<double>& g;
  const std::vector<double>& h;
  const TrainingConfig& cfg;
};

inline int build_node(BuildContext& ctx, Tree& tree,
                      std::vector<std::uint32_t>&& samples, int depth) {
  const auto& cfg = ctx.cfg;
  NodeStats stats;
  for (auto i : samples) {
    stats.G += ctx.g[i];
    stats.H += ctx.h[i];
  }

  const int node_id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  SplitCandidate best;
  if (depth < cfg.max_depth && samples.size() >= 2) {
    std::vector<std::pair<float, std::uint32_t>> pair_scratch;
    std::vector<float> val_scratch;
    for (int f = 0; f < static_cast<int>(ctx.X.cols); ++f) {
      const int distinct = count_distinct_capped(ctx.X, samples, f,
                                                 kExactSearchMaxDistinct,
                                                 val_scratch);
      if (distinct <= 1) continue;
      if (distinct <= kExactSearchMaxDistinct)
        search_exact(ctx.X, ctx.g, ctx.h, samples, f, cfg, best, pair_scratch);
      else
        search_histogram(ctx.X, ctx.g, ctx.h, samples, f, cfg, best);
    }
  }

  if (!best.valid || best.gain < -kGainTolerance) {
    tree.nodes[node_id].leaf =
        -cfg.learning_rate * stats.G / (stats.H + cfg.l2_lambda);
    return node_id;
  }

  std::vector<std::uint32_t> left_samples, right_samples;
  for (auto i : samples) {
    const float v = ctx.X.at(i, best.feature);
    const bool go_left =
        std::isnan(v) ? best.default_left : v < best.threshold;
    (go_left ? left_samples : right_samples).push_back(i);
  }
  if (left_samples.empty() || right_samples.empty()) {
    // histogram threshold failed to separate (all mass in one bin side)
    tree.nodes[node_id].leaf =
        -cfg.learning_rate * stats.G / (stats.H + cfg.l2_lambda);
    return node_id;
  }
  samples.clear();
  samples.shrink_to_fit();

  tree.nodes[node_id].feature = best.feature;
  tree.nodes[node_id].threshold = best.threshold;
  tree.nodes[node_id].default_left = best.default_left;
  const int left = build_node(ctx, tree, std::move(left_samples), depth + 1);
  tree.nodes[node_id].left = left;
  const int right = build_node(ctx, tree, std::move(right_samples), depth + 1);
  tree.nodes[node_id].right = right;
  return node_id;
}

}  // namespace gbt_detail

inline std::vector<double> predict_margin(const GbtModel& model,
                                          const FeatureMatrix& X,
                                          int threads = 1) {
  if (static_cast<int>(X.cols) != model.feature_count)
    throw InputError("predict: feature count mismatch: matrix has " +
                     std::to_string(X.cols) + ", model expects " +
                     std::to_string(model.feature_count));
  std::vector<double> margin(X.rows, logit(model.base_score));
  parallel_for_rows(static_cast<std::int64_t>(X.rows), threads,
                    [&](std::int64_t r0, std::int64_t r1) {
                      for (std::int64_t r = r0; r < r1; ++r) {
                        const float* row = X.row(r);
                        for (const auto& tree : model.trees)
                          margin[r] += tree.route(row);
                      }
                    });
  return margin;
}

inline std::vector<double> predict_proba(const GbtModel& model,
                                         const FeatureMatrix& X,
                                         int threads = 1) {
  auto m = predict_margin(model, X, threads);
  for (auto& v : m) v = sigmoid(v);
  return m;
}

inline GbtModel train(const FeatureMatrix& X, const TrainingConfig& config) {
  config.validate();
  if (X.rows == 0) throw InputError("train: empty feature matrix");
  if (X.labels.size() != X.rows)
    throw InputError("train: labels missing or mismatched");

  GbtModel model;
  model.base_score = config.base_score;
  model.feature_count = static_cast<int>(X.cols);
  model.config = config;

  std::vector<double> margin(X.rows, logit(config.base_score));
  std::vector<double> g(X.rows), h(X.rows);

  for (int round = 0; round < config.rounds; ++round) {
    for (std::size_t i = 0; i < X.rows; ++i) {
      const double p = sigmoid(margin[i]);
      g[i] = p - X.labels[i];
      h[i] = p * (1.0 - p);
    }
    std::vector<std::uint32_t> all(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) all[i] = static_cast<std::uint32_t>(i);

    Tree tree;
    gbt_detail::BuildContext ctx{X, g, h, config};
    gbt_detail::build_node(ctx, tree, std::move(all), 0);

    for (std::size_t i = 0; i < X.rows; ++i) margin[i] += tree.route(X.row(i));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

inline double mean_logistic_loss(const std::vector<double>& proba,
                                 const std::vector<std::uint8_t>& labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < proba.size(); ++i) {
    const double p = std::clamp(proba[i], 1e-15, 1.0 - 1e-15);
    loss += labels[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return loss / proba.size();
}

// --- serialization ----------------------------------------------------------

inline nlohmann::json model_to_json(const GbtModel& m) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["base_score"] = m.base_score;
  j["feature_count"] = m.feature_count;
  j["config"] = {{"max_depth", m.config.max_depth},
                 {"rounds", m.config.rounds},
                 {"learning_rate", m.config.learning_rate},
                 {"l2_lambda", m.config.l2_lambda},
                 {"gamma_min_gain", m.config.gamma_min_gain},
                 {"min_child_weight", m.config.min_child_weight},
                 {"base_score", m.config.base_score},
                 {"seed", m.config.seed}};
  j["trees"] = nlohmann::json::array();
  for (const auto& t : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes)
      nodes.push_back({{"feature", n.feature},
                       {"threshold", static_cast<double>(n.threshold)},
                       {"left", n.left},
                       {"right", n.right},
                       {"leaf", n.leaf},
                       {"default_left", n.default_left}});
    j["trees"].push_back(std::move(nodes));
  }
  return j;
}

inline void save_model(const GbtModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RasterError("cannot open for write: " + path.string());
  out << model_to_json(m).dump(2) << "\n";
}

inline GbtModel model_from_json(const nlohmann::json& j) {
  GbtModel m;
  try {
    m.base_score = j.at("base_score").get<double>();
    m.feature_count = j.at("feature_count").get<int>();
    const auto& c = j.at("config");
    m.config.max_depth = c.at("max_depth").get<int>();
    m.config.rounds = c.at("rounds").get<int>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.l2_lambda = c.at("l2_lambda").get<double>();
    m.config.gamma_min_gain = c.at("gamma_min_gain").get<double>();
    m.config.min_child_weight = c.at("min_child_weight").get<double>();
    m.config.base_score = c.at("base_score").get<double>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    std::size_t tree_index = 0;
    for (const auto& jt : j.at("trees")) {
      Tree t;
      std::size_t node_index = 0;
      for (const auto& jn : jt) {
        TreeNode n;
        n.feature = jn.at("feature").get<int>();
        n.threshold = static_cast<float>(jn.at("threshold").get<double>());
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        n.leaf = jn.at("leaf").get<double>();
        n.default_left = jn.at("default_left").get<bool>();
        const int limit = static_cast<int>(jt.size());
        if (!n.is_leaf() && (n.left < 0 || n.left >= limit || n.right < 0 ||
                             n.right >= limit))
          throw InputError("model parse error: tree " + std::to_string(tree_index) +
                           " node " + std::to_string(node_index) +
                           " has out-of-range children");
        t.nodes.push_back(n);
        ++node_index;
      }
      if (t.nodes.empty())
        throw InputError("model parse error: tree " + std::to_string(tree_index) +
                         " is empty");
      m.trees.push_back(std::move(t));
      ++tree_index;
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model parse error: ") + e.what());
  }
  return m;
}

inline GbtModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("model parse error in " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace sargdv
