#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <vector>

#include "sargdv/gbt.hpp"
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
  for (std::size_t i = 0; i < m.rows; ++i) m.pixel_indices.push_back(i);
  return m;
}

// independently coded gain formula for the duplicate-implementation oracle
double oracle_gain(double GL, double HL, double GR, double HR, double lambda,
                   double gamma) {
  const double left = GL * GL / (HL + lambda);
  const double right = GR * GR / (HR + lambda);
  const double parent = (GL + GR) * (GL + GR) / (HL + HR + lambda);
  return 0.5 * (left + right - parent) - gamma;
}

}  // namespace

TEST_CASE("split_gain matches the stated formula") {
  CHECK(split_gain(0, 4, 0, 4, 1, 0.25) == Catch::Approx(-0.25));
  // GL=-2, HL=4, GR=2, HR=4, lambda=1: 0.5*(4/5 + 4/5 - 0/9) = 0.8
  CHECK(split_gain(-2, 4, 2, 4, 1, 0) == Catch::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("split_gain equals an independent evaluation on random inputs") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double GL = rng.normal() * 5, GR = rng.normal() * 5;
    const double HL = rng.uniform() * 10, HR = rng.uniform() * 10;
    const double lambda = rng.uniform() * 3;
    const double gamma = rng.uniform();
    CHECK(split_gain(GL, HL, GR, HR, lambda, gamma) ==
          Catch::Approx(oracle_gain(GL, HL, GR, HR, lambda, gamma))
              .margin(1e-12));
  }
}

TEST_CASE("logistic gradient and hessian match finite differences") {
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const double margin = rng.normal() * 3;
    const double y = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const double p = sigmoid(margin);
    const double g = p - y;
    const double h = p * (1.0 - p);

    auto loss = [y](double m) {
      const double q = sigmoid(m);
      return y ? -std::log(q) : -std::log(1.0 - q);
    };
    auto grad = [y](double m) { return sigmoid(m) - y; };
    const double eps = 1e-5;
    const double g_fd = (loss(margin + eps) - loss(margin - eps)) / (2 * eps);
    // second-order FD of the loss cancels badly; difference the gradient
    const double h_fd = (grad(margin + eps) - grad(margin - eps)) / (2 * eps);
    CHECK(g == Catch::Approx(g_fd).epsilon(1e-4).margin(1e-7));
    CHECK(h == Catch::Approx(h_fd).epsilon(1e-4).margin(1e-6));
  }
}

TEST_CASE("all-zero labels converge to a near-zero predictor") {
  Rng rng(4);
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 50; ++i)
    rows.push_back({float(rng.normal()), float(rng.normal())});
  const auto X = make_matrix(rows, std::vector<std::uint8_t>(50, 0));
  TrainingConfig cfg;
  cfg.rounds = 5;
  cfg.max_depth = 3;
  const auto model = train(X, cfg);
  for (double p : predict_proba(model, X)) CHECK(p < 0.05);
}

TEST_CASE("1-D separable data yields one clean stump") {
  // x < 0 -> 0, x >= 0 -> 1
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (float x : {-3.0f, -2.0f, -1.5f, -0.5f}) {
    rows.push_back({x});
    labels.push_back(0);
  }
  for (float x : {0.25f, 1.0f, 2.0f, 3.5f}) {
    rows.push_back({x});
    labels.push_back(1);
  }
  const auto X = make_matrix(rows, labels);
  TrainingConfig cfg;
  cfg.max_depth = 1;
  cfg.rounds = 1;
  cfg.learning_rate = 1.0;
  cfg.l2_lambda = 0.0;
  const auto model = train(X, cfg);

  REQUIRE(model.trees.size() == 1);
  const auto& root = model.trees[0].nodes[0];
  REQUIRE_FALSE(root.is_leaf());
  CHECK(root.feature == 0);
  CHECK(root.threshold > -0.5f);
  CHECK(root.threshold <= 0.25f);
  const auto proba = predict_proba(model, X);
  for (std::size_t i = 0; i < proba.size(); ++i)
    CHECK((proba[i] >= 0.5) == (labels[i] == 1));
}

TEST_CASE("XOR needs depth 2") {
  const std::vector<std::vector<float>> rows{
      {0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const std::vector<std::uint8_t> labels{0, 1, 1, 0};
  const auto X = make_matrix(rows, labels);

  TrainingConfig shallow;
  shallow.max_depth = 1;
  shallow.rounds = 1;
  shallow.min_child_weight = 0.0;
  shallow.l2_lambda = 0.0;
  const auto m1 = train(X, shallow);
  int correct = 0;
  for (std::size_t i = 0; i < 4; ++i)
    if ((predict_proba(m1, X)[i] >= 0.5) == (labels[i] == 1)) ++correct;
  CHECK(correct <= 3);

  TrainingConfig deep = shallow;
  deep.max_depth = 2;
  deep.rounds = 2;
  const auto m2 = train(X, deep);
  const auto proba = predict_proba(m2, X);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK((proba[i] >= 0.5) == (labels[i] == 1));
}

TEST_CASE("training loss is non-increasing across rounds") {
  Rng rng(31);
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 200; ++i) {
    const float a = float(rng.normal()), b = float(rng.normal());
    rows.push_back({a, b, float(rng.normal())});
    labels.push_back(a + 0.5f * b + 0.3f * float(rng.normal()) > 0 ? 1 : 0);
  }
  const auto X = make_matrix(rows, labels);

  TrainingConfig cfg;
  cfg.max_depth = 4;
  cfg.rounds = 12;
  cfg.gamma_min_gain = 0.0;
  // retrain with increasing round counts; loss must be non-increasing
  double prev = std::numeric_limits<double>::infinity();
  for (int r = 1; r <= cfg.rounds; r += 3) {
    TrainingConfig c = cfg;
    c.rounds = r;
    const auto model = train(X, c);
    const double loss = mean_logistic_loss(predict_proba(model, X), labels);
    CHECK(loss <= prev + 1e-12);
    prev = loss;
  }
}

TEST_CASE("empty ensemble predicts the base score") {
  GbtModel m;
  m.base_score = 0.5;
  m.feature_count = 2;
  const auto X = make_matrix({{1.0f, 2.0f}, {3.0f, 4.0f}});
  for (double p : predict_proba(m, X)) CHECK(p == Catch::Approx(0.5));
}

TEST_CASE("single-leaf tree shifts every logit by its weight") {
  GbtModel m;
  m.base_score = 0.3;
  m.feature_count = 1;
  const auto X = make_matrix({{0.0f}, {5.0f}, {-2.0f}});
  const auto before = predict_margin(m, X);
  Tree t;
  TreeNode leaf;
  leaf.leaf = 0.7;
  t.nodes.push_back(leaf);
  m.trees.push_back(t);
  const auto after = predict_margin(m, X);
  for (std::size_t i = 0; i < X.rows; ++i)
    CHECK(after[i] - before[i] == Catch::Approx(0.7).margin(1e-15));
}

TEST_CASE("hand-built 2-node tree routes and squashes correctly") {
  GbtModel m;
  m.base_score = 0.5;
  m.feature_count = 4;
  Tree t;
  TreeNode root;
  root.feature = 3;
  root.threshold = 1.5f;
  root.left = 1;
  root.right = 2;
  TreeNode lo, hi;
  lo.leaf = -1.0;
  hi.leaf = 1.0;
  t.nodes = {root, lo, hi};
  m.trees.push_back(t);

  const auto X = make_matrix({{0, 0, 0, 2.0f}, {0, 0, 0, 1.0f}});
  const auto p = predict_proba(m, X);
  CHECK(p[0] == Catch::Approx(sigmoid(1.0)).epsilon(1e-12));  // ~0.7311
  CHECK(p[1] == Catch::Approx(sigmoid(-1.0)).epsilon(1e-12));
}

TEST_CASE("feature-count mismatch is a shape error") {
  GbtModel m;
  m.base_score = 0.5;
  m.feature_count = 3;
  const auto X = make_matrix({{1.0f, 2.0f}});
  CHECK_THROWS_AS(predict_proba(m, X), InputError);
}

TEST_CASE("model save/load round-trip preserves predictions") {
  const auto dir = std::filesystem::temp_directory_path() / "sargdv_gbt_test";
  std::filesystem::create_directories(dir);

  SECTION("empty model") {
    GbtModel m;
    m.base_score = 0.42;
    m.feature_count = 5;
    save_model(m, dir / "empty.json");
    const auto back = load_model(dir / "empty.json");
    CHECK(back.base_score == m.base_score);
    CHECK(back.trees.empty());
  }

  SECTION("trained model, identical predictions on random rows") {
    Rng rng(8);
    std::vector<std::vector<float>> rows;
    std::vector<std::uint8_t> labels;
    for (int i = 0; i < 300; ++i) {
      std::vector<float> r;
      for (int j = 0; j < 6; ++j) r.push_back(float(rng.normal()));
      labels.push_back(r[0] * r[1] > 0 ? 1 : 0);
      rows.push_back(std::move(r));
    }
    const auto X = make_matrix(rows, labels);
    TrainingConfig cfg;
    cfg.max_depth = 50;
    cfg.rounds = 8;
    const auto model = train(X, cfg);
    save_model(model, dir / "trained.json");
    const auto back = load_model(dir / "trained.json");

    std::vector<std::vector<float>> test_rows;
    for (int i = 0; i < 1000; ++i) {
      std::vector<float> r;
      for (int j = 0; j < 6; ++j) r.push_back(float(rng.normal()));
      test_rows.push_back(std::move(r));
    }
    const auto T = make_matrix(test_rows);
    const auto pa = predict_proba(model, T);
    const auto pb = predict_proba(back, T);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
  }

  SECTION("truncated file is a parse error") {
    GbtModel m;
    m.base_score = 0.5;
    m.feature_count = 1;
    save_model(m, dir / "trunc.json");
    const auto full = detail::read_file(dir / "trunc.json");
    detail::write_file(dir / "trunc.json", full.data(), full.size() / 2);
    CHECK_THROWS_AS(load_model(dir / "trunc.json"), InputError);
  }
}

TEST_CASE("training is deterministic") {
  Rng rng(77);
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 150; ++i) {
    rows.push_back({float(rng.normal()), float(rng.normal())});
    labels.push_back(rng.uniform() < 0.4 ? 1 : 0);
  }
  const auto X = make_matrix(rows, labels);
  TrainingConfig cfg;
  cfg.max_depth = 6;
  cfg.rounds = 5;
  const auto a = model_to_json(train(X, cfg)).dump();
  const auto b = model_to_json(train(X, cfg)).dump();
  CHECK(a == b);
}
