#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "logmesh/ocsvdd.hpp"
#include "oracles.hpp"

using namespace logmesh;

namespace {

/// Directed cycles of length 3..12 with one-hot attributes over 12 templates.
std::vector<LogGraph> cycle_graphs() {
  auto emb = onehot_table(12);
  std::vector<LogGraph> out;
  for (std::size_t len = 3; len <= 12; ++len) {
    std::vector<std::size_t> seq;
    for (std::size_t i = 0; i <= len; ++i) seq.push_back(i % len);
    out.push_back(build_graph_from_sequence(seq, emb, "c" + std::to_string(len), Label::Normal));
  }
  return out;
}

ModelConfig small_config() {
  ModelConfig c;
  c.dim = 8;
  return c;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("logmesh_test_" + name)).string();
}

}  // namespace

TEST_CASE("initialisation is seeded and bounded", "[ocsvdd]") {
  ModelConfig cfg;
  cfg.order = 2;
  cfg.layers = 2;
  cfg.dim = 16;
  auto a = init_params(cfg, 10, 1);
  auto b = init_params(cfg, 10, 1);
  auto c = init_params(cfg, 10, 2);
  REQUIRE(a.size() == 2);
  REQUIRE(a[0].theta.size() == 3);
  CHECK(a[0].theta[0].rows() == 10);
  CHECK(a[1].theta[0].rows() == 16);
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(a[l].theta[t] == b[l].theta[t]);
      CHECK(a[l].theta[t] != c[l].theta[t]);
    }
  }

  ModelConfig wide;
  wide.dim = 40;
  const double bound = std::sqrt(6.0 / (25.0 + 40.0));
  auto p = init_params(wide, 25, 3);  // 2 × 25 × 40 = 2000 draws
  for (const auto& t : p[0].theta) {
    CHECK(t.maxCoeff() <= bound);
    CHECK(t.minCoeff() >= -bound);
    CHECK(t.maxCoeff() > 0.9 * bound);
    CHECK(t.minCoeff() < -0.9 * bound);
  }
}

TEST_CASE("center examples", "[ocsvdd]") {
  auto cfg = small_config();
  auto graphs = prepare_all(cycle_graphs(), cfg);
  auto params = init_params(cfg, 12, 5);

  std::vector<PreparedGraph> one = {graphs[0]};
  OneClassModel m{cfg, params, init_center(one, params, cfg), {}};
  CHECK(score(graphs[0], m) == 0.0);

  std::vector<PreparedGraph> three = {graphs[2], graphs[5], graphs[7]};
  Eigen::VectorXd brute = (represent(graphs[2], params, cfg) + represent(graphs[5], params, cfg) +
                           represent(graphs[7], params, cfg)) / 3.0;
  CHECK((init_center(three, params, cfg) - brute).norm() < 1e-14);

  CHECK_THROWS_AS(init_center({}, params, cfg), Error);
}

TEST_CASE("deviations of two mirrored representations cancel", "[ocsvdd]") {
  ModelConfig cfg;
  cfg.dim = 2;
  cfg.readout = Readout::Sum;
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(1, 1);
  auto ops = build_operators(Y, Y, 0.1, 1);
  PreparedGraph a{(Eigen::MatrixXd(1, 2) << 1.0, 0.0).finished(), ops};
  PreparedGraph b{(Eigen::MatrixXd(1, 2) << 0.0, 1.0).finished(), ops};
  // z_a = (1,0), z_b = (0,1): about the center they are z and −z.
  ModelParams p{LayerParams{{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2)}}};
  Eigen::VectorXd o = init_center({a, b}, p, cfg);
  CHECK(o.isApprox(Eigen::Vector2d(0.5, 0.5)));
  CHECK(((represent(a, p, cfg) - o) + (represent(b, p, cfg) - o)).norm() < 1e-15);
}

TEST_CASE("loss is weight decay alone when every graph sits at the center", "[ocsvdd]") {
  auto cfg = small_config();
  auto g = prepare_all({cycle_graphs()[3]}, cfg);
  std::vector<PreparedGraph> same = {g[0], g[0], g[0]};
  OneClassModel m;
  m.config = cfg;
  m.params = init_params(cfg, 12, 9);
  m.center = init_center(same, m.params, cfg);
  const double lambda = 0.02;
  CHECK(objective(same, m, lambda) == 0.5 * lambda * squared_norm(m.params));
  std::vector<const PreparedGraph*> batch = {&same[0], &same[1], &same[2]};
  auto lg = svdd_loss_and_gradient(batch, m.params, cfg, m.center, lambda);
  CHECK(lg.loss == Catch::Approx(0.5 * lambda * squared_norm(m.params)).epsilon(1e-15));
}

TEST_CASE("training reduces the mean distance on toy cycles", "[ocsvdd]") {
  auto cfg = small_config();
  auto graphs = prepare_all(cycle_graphs(), cfg);
  OneClassModel m;
  m.config = cfg;
  m.params = init_params(cfg, 12, 4);
  m.center = init_center(graphs, m.params, cfg);
  const double before = mean_squared_distance(graphs, m);
  TrainConfig tc;
  tc.epochs = 50;
  tc.batch_size = 4;
  tc.learning_rate = 0.01;
  tc.seed = 4;
  Eigen::VectorXd frozen = m.center;
  train(graphs, tc, m);
  CHECK(mean_squared_distance(graphs, m) <= before);
  CHECK(m.center == frozen);
  CHECK(m.meta.loss_trace.size() == 50);
  CHECK(m.meta.epochs_run == 50);
}

TEST_CASE("single graph without decay converges toward zero loss", "[ocsvdd]") {
  auto cfg = small_config();
  auto all = prepare_all(cycle_graphs(), cfg);
  std::vector<PreparedGraph> train_set = {all[0]};
  OneClassModel m;
  m.config = cfg;
  m.params = init_params(cfg, 12, 8);
  // Start off-center so the distance term is active.
  m.center = init_center(train_set, m.params, cfg) + Eigen::VectorXd::Constant(cfg.dim, 0.05);
  TrainConfig tc;
  tc.weight_decay = 0.0;
  tc.learning_rate = 0.005;
  tc.epochs = 400;
  tc.batch_size = 1;
  train(train_set, tc, m);
  const auto& trace = m.meta.loss_trace;
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-15);
  CHECK(trace.back() < 0.5 * trace.front());
}

TEST_CASE("training is deterministic for a fixed seed", "[ocsvdd]") {
  auto cfg = small_config();
  auto graphs = prepare_all(cycle_graphs(), cfg);
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 3;
  tc.seed = 17;
  auto a = fit(graphs, cfg, tc);
  auto b = fit(graphs, cfg, tc);
  CHECK(a.meta.loss_trace == b.meta.loss_trace);
  CHECK(score_all(graphs, a) == score_all(graphs, b));
  tc.optimizer = Optimizer::Adam;
  auto c = fit(graphs, cfg, tc);
  auto d = fit(graphs, cfg, tc);
  CHECK(c.meta.loss_trace == d.meta.loss_trace);
}

TEST_CASE("scores are non-negative and independent of batch", "[ocsvdd]") {
  auto cfg = small_config();
  auto graphs = prepare_all(cycle_graphs(), cfg);
  TrainConfig tc;
  tc.epochs = 3;
  auto m = fit(graphs, cfg, tc);
  auto all = score_all(graphs, m);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    CHECK(all[i] >= 0.0);
    CHECK(std::abs(all[i] - score(graphs[i], m)) < 1e-9);
    CHECK(std::abs(all[i] - score_all({graphs[i]}, m)[0]) < 1e-9);
  }
}

TEST_CASE("zero parameters map every graph to the origin", "[ocsvdd]") {
  auto cfg = small_config();
  auto graphs = prepare_all(cycle_graphs(), cfg);
  OneClassModel m;
  m.config = cfg;
  m.params = zeros_like(init_params(cfg, 12, 1));
  m.center = Eigen::VectorXd::LinSpaced(cfg.dim, 0.1, 0.8);
  for (double s : score_all(graphs, m)) CHECK(s == Catch::Approx(m.center.norm()).epsilon(1e-15));
}

TEST_CASE("validation selects the best epoch", "[ocsvdd]") {
  auto cfg = small_config();
  auto graphs = cycle_graphs();
  std::vector<LogGraph> train_graphs(graphs.begin(), graphs.begin() + 6);
  ValidationSet val;
  for (std::size_t i = 6; i < graphs.size(); ++i) {
    val.graphs.push_back(prepare(graphs[i], cfg));
    val.anomalous.push_back(i >= 8);
  }
  TrainConfig tc;
  tc.epochs = 6;
  auto m = fit(prepare_all(train_graphs, cfg), cfg, tc, &val);
  REQUIRE(m.meta.val_auc_trace.size() == 6);
  const double best = *std::max_element(m.meta.val_auc_trace.begin(), m.meta.val_auc_trace.end());
  CHECK(m.meta.val_auc_trace[static_cast<std::size_t>(m.meta.best_epoch - 1)] == best);
  CHECK(roc_auc(score_all(val.graphs, m), val.anomalous) == best);
}

TEST_CASE("training rejects empty sets and bad configs", "[ocsvdd]") {
  auto cfg = small_config();
  TrainConfig tc;
  CHECK_THROWS_AS(fit({}, cfg, tc), Error);
  tc.learning_rate = -1.0;
  CHECK_FALSE(tc.problems().empty());
  CHECK_THROWS_AS(fit(prepare_all(cycle_graphs(), cfg), cfg, tc), Error);
}

TEST_CASE("non-finite loss aborts training", "[ocsvdd]") {
  auto cfg = small_config();
  auto graphs = prepare_all(cycle_graphs(), cfg);
  TrainConfig tc;
  tc.learning_rate = 1e200;
  tc.epochs = 20;
  try {
    fit(graphs, cfg, tc);
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteLoss);
  }
}

TEST_CASE("model round-trips through JSON", "[ocsvdd]") {
  ModelConfig cfg;
  cfg.dim = 6;
  cfg.order = 2;
  cfg.layers = 2;
  cfg.fusion = Fusion::Concat;
  auto graphs = prepare_all(cycle_graphs(), cfg);
  TrainConfig tc;
  tc.epochs = 2;
  auto m = fit(graphs, cfg, tc);
  const auto path = temp_path("model.json");
  save_model(m, path);
  auto back = load_model(path);
  CHECK(back.config.order == 2);
  CHECK(back.config.fusion == Fusion::Concat);
  CHECK(back.center == m.center);
  for (std::size_t l = 0; l < m.params.size(); ++l) {
    for (std::size_t b = 0; b < m.params[l].theta.size(); ++b) CHECK(back.params[l].theta[b] == m.params[l].theta[b]);
  }
  for (const auto& g : graphs) CHECK(std::abs(score(g, back) - score(g, m)) <= 1e-12);
  std::filesystem::remove(path);
}

TEST_CASE("corrupted or mismatched model files are schema errors", "[ocsvdd]") {
  auto cfg = small_config();
  TrainConfig tc;
  tc.epochs = 1;
  auto m = fit(prepare_all(cycle_graphs(), cfg), cfg, tc);
  auto j = to_json(m);

  auto expect_schema = [](const nlohmann::json& doc) {
    try {
      model_from_json(doc);
      FAIL("expected SchemaError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Schema);
    }
  };
  auto bad_version = j;
  bad_version["version"] = 99;
  expect_schema(bad_version);
  auto no_center = j;
  no_center.erase("center");
  expect_schema(no_center);
  auto short_center = j;
  short_center["center"].erase(0);
  expect_schema(short_center);
  auto bad_theta = j;
  bad_theta["theta"][0][0].erase(0);
  expect_schema(bad_theta);

  const auto path = temp_path("corrupt.json");
  {
    std::ofstream out(path);
    out << "{\"version\": 1, \"config\": ";
  }
  try {
    load_model(path);
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Schema);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(temp_path("does_not_exist.json")), Error);
}
