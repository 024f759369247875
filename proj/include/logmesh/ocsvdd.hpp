#pragma once

// One-class training: parameter initialisation, hypersphere center, stochastic
// optimisation of the SVDD objective, scoring and model persistence.

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "logmesh/digcn.hpp"
#include "logmesh/error.hpp"
#include "logmesh/metrics.hpp"

namespace logmesh {

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  std::size_t batch_size = 128;
  Optimizer optimizer = Optimizer::Sgd;
  double learning_rate = 0.01;
  double weight_decay = 1e-4;
  int epochs = 100;
  std::uint64_t seed = 0;
  bool shuffle = true;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (!(learning_rate > 0.0)) out.push_back("learning rate must be > 0");
    if (weight_decay < 0.0) out.push_back("weight decay must be >= 0");
    if (batch_size < 1) out.push_back("batch size must be >= 1");
    if (epochs < 0) out.push_back("epochs must be >= 0");
    return out;
  }
};

struct TrainMeta {
  std::uint64_t seed = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  double final_loss = 0.0;
  std::vector<double> loss_trace;
  std::vector<double> val_auc_trace;
};

struct OneClassModel {
  ModelConfig config;
  ModelParams params;
  Eigen::VectorXd center;
  TrainMeta meta;
};

/// Uniform Glorot initialisation, one matrix per layer and branch.
inline ModelParams init_params(const ModelConfig& cfg, Eigen::Index attr_dim, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ModelParams params;
  Eigen::Index in_dim = attr_dim;
  for (int l = 0; l < cfg.layers; ++l) {
    LayerParams layer;
    const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + cfg.dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int b = 0; b < cfg.branches(); ++b) {
      Eigen::MatrixXd t(in_dim, cfg.dim);
      for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = dist(rng);
      }
      layer.theta.push_back(std::move(t));
    }
    params.push_back(std::move(layer));
    in_dim = cfg.fused_dim();
  }
  return params;
}

inline std::vector<PreparedGraph> prepare_all(const std::vector<LogGraph>& graphs, const ModelConfig& cfg) {
  std::vector<PreparedGraph> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(prepare(g, cfg));
  return out;
}

inline Eigen::VectorXd represent(const PreparedGraph& g, const ModelParams& params, const ModelConfig& cfg) {
  return forward(g.X, g.ops, params, cfg).z;
}

/// Mean representation under the given parameters.
inline Eigen::VectorXd init_center(const std::vector<PreparedGraph>& graphs, const ModelParams& params,
                                   const ModelConfig& cfg) {
  if (graphs.empty()) throw Error(ErrorCode::EmptyTrainingSet, "center needs at least one training graph");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(cfg.fused_dim());
  for (const auto& g : graphs) sum += represent(g, params, cfg);
  return sum / static_cast<double>(graphs.size());
}

/// Euclidean distance of the graph representation from the center.
inline double score(const PreparedGraph& g, const OneClassModel& model) {
  return (represent(g, model.params, model.config) - model.center).norm();
}

inline double score(const LogGraph& g, const OneClassModel& model) {
  return score(prepare(g, model.config), model);
}

inline std::vector<double> score_all(const std::vector<PreparedGraph>& graphs, const OneClassModel& model) {
  std::vector<double> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(score(g, model));
  return out;
}

inline double mean_squared_distance(const std::vector<PreparedGraph>& graphs, const OneClassModel& model) {
  double s = 0.0;
  for (const auto& g : graphs) {
    double d = score(g, model);
    s += d * d;
  }
  return graphs.empty() ? 0.0 : s / static_cast<double>(graphs.size());
}

/// Full objective over a set of graphs with the model's frozen center.
inline double objective(const std::vector<PreparedGraph>& graphs, const OneClassModel& model, double lambda) {
  return mean_squared_distance(graphs, model) + 0.5 * lambda * squared_norm(model.params);
}

/// Labelled held-out graphs used for epoch-end checkpoint selection.
struct ValidationSet {
  std::vector<PreparedGraph> graphs;
  std::vector<bool> anomalous;
};

namespace detail {

class AdamState {
 public:
  explicit AdamState(const ModelParams& like) : m_(zeros_like(like)), v_(zeros_like(like)) {}

  void step(ModelParams& params, const ModelParams& grad, const TrainConfig& tc) {
    ++t_;
    const double c1 = 1.0 - std::pow(tc.adam_beta1, t_);
    const double c2 = 1.0 - std::pow(tc.adam_beta2, t_);
    for (std::size_t l = 0; l < params.size(); ++l) {
      for (std::size_t b = 0; b < params[l].theta.size(); ++b) {
        auto& m = m_[l].theta[b];
        auto& v = v_[l].theta[b];
        const auto& g = grad[l].theta[b];
        m = tc.adam_beta1 * m + (1.0 - tc.adam_beta1) * g;
        v = tc.adam_beta2 * v + (1.0 - tc.adam_beta2) * g.cwiseProduct(g);
        params[l].theta[b].array() -=
            tc.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + tc.adam_eps);
      }
    }
  }

 private:
  ModelParams m_;
  ModelParams v_;
  int t_ = 0;
};

}  // namespace detail

/// Mini-batch minimisation of the one-class objective. The center must be set
/// beforehand and stays fixed. When a validation set with both classes is
/// given, the parameters with the best validation ROC AUC are kept.
inline void train(const std::vector<PreparedGraph>& graphs, const TrainConfig& tc, OneClassModel& model,
                  const ValidationSet* validation = nullptr) {
  if (graphs.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no training graphs");
  if (auto p = tc.problems(); !p.empty()) throw Error(ErrorCode::Validation, p.front());
  if (model.center.size() != model.config.fused_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "center dimension does not match the model output");
  }

  std::mt19937_64 rng(tc.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  detail::AdamState adam(model.params);

  bool use_val = false;
  if (validation != nullptr && !validation->graphs.empty()) {
    auto n_pos = std::count(validation->anomalous.begin(), validation->anomalous.end(), true);
    use_val = n_pos > 0 && n_pos < static_cast<long>(validation->anomalous.size());
  }
  double best_auc = -1.0;
  ModelParams best_params = model.params;

  model.meta.seed = tc.seed;
  model.meta.loss_trace.clear();
  model.meta.val_auc_trace.clear();
  model.meta.best_epoch = tc.epochs;

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    if (tc.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      std::vector<const PreparedGraph*> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(&graphs[order[i]]);

      auto lg = svdd_loss_and_gradient(batch, model.params, model.config, model.center, tc.weight_decay);
      if (!std::isfinite(lg.loss)) {
        throw Error(ErrorCode::NonFiniteLoss, "loss became non-finite at epoch " + std::to_string(epoch) +
                                                  ", batch starting at " + std::to_string(start));
      }
      epoch_loss += lg.loss;
      ++n_batches;

      if (tc.optimizer == Optimizer::Sgd) {
        for (std::size_t l = 0; l < model.params.size(); ++l) {
          for (std::size_t b = 0; b < model.params[l].theta.size(); ++b) {
            model.params[l].theta[b] -= tc.learning_rate * lg.grad[l].theta[b];
          }
        }
      } else {
        adam.step(model.params, lg.grad, tc);
      }
    }
    model.meta.loss_trace.push_back(epoch_loss / static_cast<double>(n_batches));
    model.meta.epochs_run = epoch;

    if (use_val) {
      std::vector<double> s = score_all(validation->graphs, model);
      double auc = roc_auc(s, validation->anomalous);
      model.meta.val_auc_trace.push_back(auc);
      if (auc > best_auc) {
        best_auc = auc;
        best_params = model.params;
        model.meta.best_epoch = epoch;
      }
    }
  }
  if (use_val) model.params = std::move(best_params);
  model.meta.final_loss = model.meta.loss_trace.empty() ? objective(graphs, model, tc.weight_decay)
                                                        : model.meta.loss_trace.back();
}

/// Initialises parameters and center from the training graphs, then trains.
inline OneClassModel fit(const std::vector<PreparedGraph>& graphs, const ModelConfig& cfg, const TrainConfig& tc,
                         const ValidationSet* validation = nullptr) {
  if (graphs.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no training graphs");
  OneClassModel model;
  model.config = cfg;
  model.params = init_params(cfg, graphs.front().X.cols(), tc.seed);
  model.center = init_center(graphs, model.params, cfg);
  train(graphs, tc, model, validation);
  return model;
}

// ---------------------------------------------------------------------------
// persistence

inline constexpr int kModelVersion = 1;

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::Schema, "matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::Schema, "ragged matrix row");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw Error(ErrorCode::Schema, "matrix entry is not a number");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"layers", c.layers},           {"k", c.order},
          {"d", c.dim},                   {"alpha", c.alpha},
          {"fusion", to_string(c.fusion)}, {"readout", to_string(c.readout)}};
}

/// Reads any subset of the fields on top of `base`.
inline ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {}) {
  try {
    if (j.contains("layers")) base.layers = j.at("layers").get<int>();
    if (j.contains("k")) base.order = j.at("k").get<int>();
    if (j.contains("d")) base.dim = j.at("d").get<int>();
    if (j.contains("alpha")) base.alpha = j.at("alpha").get<double>();
    if (j.contains("fusion")) base.fusion = fusion_from_string(j.at("fusion").get<std::string>());
    if (j.contains("readout")) base.readout = readout_from_string(j.at("readout").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("model config: ") + e.what());
  }
  return base;
}

inline nlohmann::json to_json(const TrainConfig& t) {
  return {{"batch_size", t.batch_size},
          {"optimizer", t.optimizer == Optimizer::Sgd ? "sgd" : "adam"},
          {"lr", t.learning_rate},
          {"weight_decay", t.weight_decay},
          {"epochs", t.epochs},
          {"seed", t.seed},
          {"shuffle", t.shuffle}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
  try {
    if (j.contains("batch_size")) base.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("optimizer")) {
      auto o = j.at("optimizer").get<std::string>();
      if (o == "sgd") {
        base.optimizer = Optimizer::Sgd;
      } else if (o == "adam") {
        base.optimizer = Optimizer::Adam;
      } else {
        throw Error(ErrorCode::Validation, "optimizer must be 'sgd' or 'adam', got '" + o + "'");
      }
    }
    if (j.contains("lr")) base.learning_rate = j.at("lr").get<double>();
    if (j.contains("weight_decay")) base.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("epochs")) base.epochs = j.at("epochs").get<int>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("shuffle")) base.shuffle = j.at("shuffle").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("train config: ") + e.what());
  }
  return base;
}

inline nlohmann::json to_json(const OneClassModel& m) {
  nlohmann::json theta = nlohmann::json::array();
  for (const auto& layer : m.params) {
    for (const auto& t : layer.theta) theta.push_back(matrix_to_json(t));
  }
  nlohmann::json center = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.center.size(); ++i) center.push_back(m.center(i));
  return {{"version", kModelVersion},
          {"config", to_json(m.config)},
          {"theta", std::move(theta)},
          {"center", std::move(center)},
          {"meta",
           {{"seed", m.meta.seed},
            {"epochs_run", m.meta.epochs_run},
            {"best_epoch", m.meta.best_epoch},
            {"final_loss", m.meta.final_loss},
            {"loss_trace", m.meta.loss_trace},
            {"val_auc_trace", m.meta.val_auc_trace}}}};
}

inline OneClassModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Schema, "model must be a JSON object");
  for (const char* key : {"version", "config", "theta", "center"}) {
    if (!j.contains(key)) throw Error(ErrorCode::Schema, std::string("model is missing '") + key + "'");
  }
  if (!j.at("version").is_number_integer() || j.at("version").get<int>() != kModelVersion) {
    throw Error(ErrorCode::Schema, "unsupported model version " + j.at("version").dump());
  }
  OneClassModel m;
  m.config = model_config_from_json(j.at("config"));
  try {
    m.config.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::Schema, e.what());
  }
  const auto& theta = j.at("theta");
  const auto expected = static_cast<std::size_t>(m.config.layers * m.config.branches());
  if (!theta.is_array() || theta.size() != expected) {
    throw Error(ErrorCode::Schema, "theta must hold layers*(k+1) matrices");
  }
  Eigen::Index in_dim = -1;
  for (int l = 0; l < m.config.layers; ++l) {
    LayerParams layer;
    for (int b = 0; b < m.config.branches(); ++b) {
      auto t = matrix_from_json(theta[static_cast<std::size_t>(l * m.config.branches() + b)]);
      if (t.cols() != m.config.dim) throw Error(ErrorCode::Schema, "theta width does not match config d");
      if (l > 0 && t.rows() != m.config.fused_dim()) throw Error(ErrorCode::Schema, "theta height mismatch");
      if (in_dim >= 0 && l == 0 && t.rows() != in_dim) throw Error(ErrorCode::Schema, "theta height mismatch");
      if (l == 0) in_dim = t.rows();
      layer.theta.push_back(std::move(t));
    }
    m.params.push_back(std::move(layer));
  }
  const auto& center = j.at("center");
  if (!center.is_array() || static_cast<int>(center.size()) != m.config.fused_dim()) {
    throw Error(ErrorCode::Schema, "center length does not match the model output");
  }
  m.center.resize(static_cast<Eigen::Index>(center.size()));
  for (std::size_t i = 0; i < center.size(); ++i) {
    if (!center[i].is_number()) throw Error(ErrorCode::Schema, "center entry is not a number");
    m.center(static_cast<Eigen::Index>(i)) = center[i].get<double>();
  }
  if (j.contains("meta")) {
    const auto& meta = j.at("meta");
    try {
      m.meta.seed = meta.value("seed", std::uint64_t{0});
      m.meta.epochs_run = meta.value("epochs_run", 0);
      m.meta.best_epoch = meta.value("best_epoch", 0);
      m.meta.final_loss = meta.value("final_loss", 0.0);
      m.meta.loss_trace = meta.value("loss_trace", std::vector<double>{});
      m.meta.val_auc_trace = meta.value("val_auc_trace", std::vector<double>{});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Schema, std::string("model meta: ") + e.what());
    }
  }
  return m;
}

inline void save_model(const OneClassModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write model file: " + path);
  out << to_json(m).dump() << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing model file: " + path);
}

inline OneClassModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace logmesh
