#pragma once

// Logistic-regression benchmark. Unregularized logistic loss minimized by
// gradient descent with backtracking line search on internally standardized
// features; the standardization is stored with the model so prediction is
// consistent.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sargdv/dataset.hpp"
#include "sargdv/util.hpp"

namespace sargdv {

struct LogRegModel {
  std::vector<double> weights;  // per standardized column
  double bias = 0.0;
  std::vector<double> means;
  std::vector<double> stds;  // 0 marks a dropped zero-variance column
  int iterations = 0;
  double step_size = 0.0;
  bool converged = false;
};

namespace logreg_detail {

// returns loss; fills grad (weights..., bias last)
inline double loss_and_gradient(const FeatureMatrix& X,
                                const std::vector<double>& means,
                                const std::vector<double>& stds,
                                const std::vector<double>& w, double bias,
                                std::vector<double>* grad) {
  const std::size_t n = X.rows, d = X.cols;
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
  double loss = 0.0;
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = X.row(i);
    double margin = bias;
    for (std::size_t j = 0; j < d; ++j) {
      z[j] = stds[j] > 0.0 ? (row[j] - means[j]) / stds[j] : 0.0;
      margin += w[j] * z[j];
    }
    const double p = sigmoid(margin);
    const double y = X.labels[i];
    const double pc = std::clamp(p, 1e-15, 1.0 - 1e-15);
    loss += y ? -std::log(pc) : -std::log(1.0 - pc);
    if (grad) {
      const double r = p - y;
      for (std::size_t j = 0; j < d; ++j) (*grad)[j] += r * z[j];
      (*grad)[d] += r;
    }
  }
  loss /= n;
  if (grad)
    for (auto& v : *grad) v /= n;
  return loss;
}

}  // namespace logreg_detail

inline LogRegModel train_logreg(const FeatureMatrix& X, int max_iters = 5000,
                                double tolerance = 1e-6) {
  if (X.rows == 0) throw InputError("train_logreg: empty feature matrix");
  if (X.labels.size() != X.rows)
    throw InputError("train_logreg: labels missing or mismatched");
  const std::size_t n = X.rows, d = X.cols;

  LogRegModel m;
  m.means.assign(d, 0.0);
  m.stds.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m.means[j] += X.at(i, j);
  for (auto& v : m.means) v /= n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = X.at(i, j) - m.means[j];
      m.stds[j] += dv * dv;
    }
  for (std::size_t j = 0; j < d; ++j) {
    m.stds[j] = std::sqrt(m.stds[j] / n);
    if (m.stds[j] == 0.0)
      log_warn("train_logreg: zero-variance column " + std::to_string(j) +
               " dropped");
  }

  m.weights.assign(d, 0.0);
  std::vector<double> grad(d + 1, 0.0);
  double loss = logreg_detail::loss_and_gradient(X, m.means, m.stds, m.weights,
                                                 m.bias, &grad);
  double step = 1.0;
  int it = 0;
  for (; it < max_iters; ++it) {
    double gnorm = 0.0, gsq = 0.0;
    for (auto v : grad) {
      gnorm = std::max(gnorm, std::abs(v));
      gsq += v * v;
    }
    if (gnorm < tolerance) {
      m.converged = true;
      break;
    }
    // backtracking with Armijo condition, step grows back after acceptance
    step = std::min(step * 2.0, 1e6);
    bool accepted = false;
    std::vector<double> wtry(d);
    double btry = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t j = 0; j < d; ++j)
        wtry[j] = m.weights[j] - step * grad[j];
      btry = m.bias - step * grad[d];
      const double ltry = logreg_detail::loss_and_gradient(X, m.means, m.stds,
                                                           wtry, btry, nullptr);
      if (ltry <= loss - 1e-4 * step * gsq) {
        m.weights = wtry;
        m.bias = btry;
        loss = ltry;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent step found at machine precision
    logreg_detail::loss_and_gradient(X, m.means, m.stds, m.weights, m.bias,
                                     &grad);
  }
  m.iterations = it;
  m.step_size = step;
  return m;
}

inline std::vector<double> predict_logreg(const LogRegModel& m,
                                          const FeatureMatrix& X) {
  if (X.cols != m.weights.size())
    throw InputError("predict_logreg: feature count mismatch");
  std::vector<double> out(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const float* row = X.row(i);
    double margin = m.bias;
    for (std::size_t j = 0; j < X.cols; ++j)
      if (m.stds[j] > 0.0)
        margin += m.weights[j] * (row[j] - m.means[j]) / m.stds[j];
    out[i] = sigmoid(margin);
  }
  return out;
}

inline void save_logreg(const LogRegModel& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["weights"] = m.weights;
  j["bias"] = m.bias;
  j["means"] = m.means;
  j["stds"] = m.stds;
  j["meta"] = {{"iterations", m.iterations},
               {"step_size", m.step_size},
               {"converged", m.converged}};
  std::ofstream out(path);
  if (!out) throw RasterError("cannot open for write: " + path.string());
  out << j.dump(2) << "\n";
}

inline LogRegModel load_logreg(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("logreg parse error: " + std::string(e.what()));
  }
  LogRegModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.means = j.at("means").get<std::vector<double>>();
  m.stds = j.at("stds").get<std::vector<double>>();
  m.iterations = j.at("meta").at("iterations").get<int>();
  m.step_size = j.at("meta").at("step_size").get<double>();
  m.converged = j.at("meta").at("converged").get<bool>();
  return m;
}

}  // namespace sargdv
