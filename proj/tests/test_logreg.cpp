#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sargdv/logreg.hpp"
#include "sargdv/util.hpp"

using namespace sargdv;

namespace {

FeatureMatrix make_matrix(const std::vector<std::vector<float>>& rows,
                          const std::vector<std::uint8_t>& labels = {}) {
  FeatureMatrix m;
  m.rows = rows.size();
  m.cols = rows.empty() ? 0 : rows[0].size();
  for (const auto& r : rows) m.data.insert(m.data.end(), r.begin(), r.end());
  m.labels = labels;
  return m;
}

}  // namespace

TEST_CASE("all labels 1 drives every training probability high") {
  Rng rng(2);
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 40; ++i) rows.push_back({float(rng.normal())});
  const auto X = make_matrix(rows, std::vector<std::uint8_t>(40, 1));
  const auto m = train_logreg(X);
  CHECK(m.bias > 2.0);
  for (double p : predict_logreg(m, X)) CHECK(p > 0.95);
}

TEST_CASE("linearly separable data reaches training accuracy 1") {
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  Rng rng(14);
  for (int i = 0; i < 60; ++i) {
    const float x = float(rng.normal());
    rows.push_back({x});
    labels.push_back(x >= 0.0f ? 1 : 0);
  }
  const auto X = make_matrix(rows, labels);
  const auto m = train_logreg(X, 5000, 1e-6);
  const auto p = predict_logreg(m, X);
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK((p[i] >= 0.5) == (labels[i] == 1));
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(5);
  const std::size_t n = 30, d = 4;
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> r;
    for (std::size_t j = 0; j < d; ++j) r.push_back(float(rng.normal()));
    rows.push_back(std::move(r));
    labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
  }
  const auto X = make_matrix(rows, labels);

  std::vector<double> means(d, 0.0), stds(d, 1.0);
  std::vector<double> w(d);
  for (auto& v : w) v = rng.normal() * 0.5;
  double bias = rng.normal() * 0.5;

  std::vector<double> grad(d + 1);
  logreg_detail::loss_and_gradient(X, means, stds, w, bias, &grad);

  const double eps = 1e-6;
  for (std::size_t j = 0; j <= d; ++j) {
    auto perturbed = [&](double delta) {
      auto wp = w;
      double bp = bias;
      if (j < d)
        wp[j] += delta;
      else
        bp += delta;
      return logreg_detail::loss_and_gradient(X, means, stds, wp, bp, nullptr);
    };
    const double fd = (perturbed(eps) - perturbed(-eps)) / (2 * eps);
    CHECK(grad[j] == Catch::Approx(fd).epsilon(1e-5).margin(1e-10));
  }
}

TEST_CASE("zero-variance column is dropped with weight zero") {
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  Rng rng(6);
  for (int i = 0; i < 30; ++i) {
    const float x = float(rng.normal());
    rows.push_back({7.0f, x});
    labels.push_back(x > 0 ? 1 : 0);
  }
  const auto X = make_matrix(rows, labels);
  const auto m = train_logreg(X);
  CHECK(m.stds[0] == 0.0);
  CHECK(m.weights[0] == 0.0);
  CHECK(m.weights[1] != 0.0);
}

TEST_CASE("zero model predicts 0.5 everywhere") {
  LogRegModel m;
  m.weights = {0.0, 0.0};
  m.bias = 0.0;
  m.means = {1.0, 2.0};
  m.stds = {1.0, 1.0};
  const auto X = make_matrix({{5.0f, -3.0f}, {0.0f, 0.0f}});
  for (double p : predict_logreg(m, X)) CHECK(p == Catch::Approx(0.5));
}

TEST_CASE("unit weight at the standardized mean predicts 0.5") {
  LogRegModel m;
  m.weights = {1.0};
  m.bias = 0.0;
  m.means = {10.0};
  m.stds = {2.0};
  const auto X = make_matrix({{10.0f}});
  CHECK(predict_logreg(m, X)[0] == Catch::Approx(0.5));
}

TEST_CASE("margin 2 gives sigmoid(2)") {
  LogRegModel m;
  m.weights = {1.0};
  m.bias = 1.0;
  m.means = {0.0};
  m.stds = {1.0};
  const auto X = make_matrix({{1.0f}});
  CHECK(predict_logreg(m, X)[0] == Catch::Approx(0.8807970779778823).epsilon(1e-12));
}

TEST_CASE("prediction is invariant to training row order") {
  Rng rng(9);
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 50; ++i) {
    rows.push_back({float(rng.normal()), float(rng.normal())});
    labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
  }
  auto X = make_matrix(rows, labels);
  const auto m1 = train_logreg(X);

  // reversed row order
  std::vector<std::vector<float>> rrows(rows.rbegin(), rows.rend());
  std::vector<std::uint8_t> rlabels(labels.rbegin(), labels.rend());
  const auto m2 = train_logreg(make_matrix(rrows, rlabels));

  const auto probe = make_matrix({{0.3f, -0.7f}, {1.5f, 0.2f}});
  const auto p1 = predict_logreg(m1, probe);
  const auto p2 = predict_logreg(m2, probe);
  for (std::size_t i = 0; i < p1.size(); ++i)
    CHECK(p1[i] == Catch::Approx(p2[i]).margin(1e-4));
}

TEST_CASE("shape mismatch is rejected") {
  LogRegModel m;
  m.weights = {1.0, 2.0};
  m.means = {0.0, 0.0};
  m.stds = {1.0, 1.0};
  CHECK_THROWS_AS(predict_logreg(m, make_matrix({{1.0f}})), InputError);
}
