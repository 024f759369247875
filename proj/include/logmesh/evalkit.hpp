#pragma once

// Evaluation harness: synthetic structural benchmark, rotation fixture,
// contamination, dataset splitting and count-matrix baselines.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "logmesh/error.hpp"
#include "logmesh/graphbuild.hpp"
#include "logmesh/metrics.hpp"

namespace logmesh {

// ---------------------------------------------------------------------------
// synthetic structural anomalies on a directed 4-cycle

enum class Perturbation { None, ReverseEdge, ChangeEndpoint, DeleteEdge, AddEdge };

constexpr std::string_view to_string(Perturbation p) {
  switch (p) {
    case Perturbation::None: return "normal";
    case Perturbation::ReverseEdge: return "S1";
    case Perturbation::ChangeEndpoint: return "S2";
    case Perturbation::DeleteEdge: return "S3";
    case Perturbation::AddEdge: return "S4";
  }
  return "normal";
}

inline Perturbation perturbation_from_string(std::string_view s) {
  for (auto p : {Perturbation::ReverseEdge, Perturbation::ChangeEndpoint, Perturbation::DeleteEdge,
                 Perturbation::AddEdge}) {
    if (s == to_string(p)) return p;
  }
  throw Error(ErrorCode::Validation, "unknown anomaly type '" + std::string(s) + "' (expected S1..S4)");
}

struct SyntheticSpec {
  std::size_t n_normal = 10000;
  std::size_t n_per_type = 200;
  std::vector<Perturbation> types = {Perturbation::ReverseEdge, Perturbation::ChangeEndpoint,
                                     Perturbation::DeleteEdge, Perturbation::AddEdge};
  std::uint64_t seed = 0;
};

struct SyntheticGraph {
  LogGraph graph;
  Perturbation kind = Perturbation::None;
  // The edge that was reversed, redirected (new edge), deleted or added.
  std::optional<std::pair<std::size_t, std::size_t>> touched;
};

inline constexpr std::size_t kCycleNodes = 4;

using EdgeSet = std::vector<std::pair<std::size_t, std::size_t>>;

inline EdgeSet cycle_edges() { return {{0, 1}, {1, 2}, {2, 3}, {3, 0}}; }

/// One-hot attributed graph over templates 0..3 (A, B, C, D) with unit weights.
inline LogGraph graph_from_edges(const EdgeSet& edges, std::string key, Label label) {
  LogGraph g;
  g.group_key = std::move(key);
  g.label = label;
  const auto n = static_cast<Eigen::Index>(kCycleNodes);
  for (std::size_t i = 0; i < kCycleNodes; ++i) g.node_templates.push_back(i);
  g.Y.setZero(n, n);
  for (const auto& [i, j] : edges) g.Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  g.A = g.Y;
  g.X = Eigen::MatrixXd::Identity(n, n);
  return g;
}

namespace detail {

inline bool has_edge(const EdgeSet& e, std::size_t i, std::size_t j) {
  return std::find(e.begin(), e.end(), std::make_pair(i, j)) != e.end();
}

template <class Rng>
std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

template <class Rng>
SyntheticGraph perturb(Perturbation kind, Rng& rng, const std::string& key) {
  EdgeSet edges = cycle_edges();
  SyntheticGraph out;
  out.kind = kind;
  switch (kind) {
    case Perturbation::None: break;
    case Perturbation::ReverseEdge: {
      auto& e = edges[pick(rng, edges.size())];
      e = {e.second, e.first};
      out.touched = e;
      break;
    }
    case Perturbation::ChangeEndpoint: {
      auto& e = edges[pick(rng, edges.size())];
      std::vector<std::size_t> heads;
      for (std::size_t h = 0; h < kCycleNodes; ++h) {
        if (h != e.first && h != e.second && !has_edge(edges, e.first, h)) heads.push_back(h);
      }
      e.second = heads[pick(rng, heads.size())];
      out.touched = e;
      break;
    }
    case Perturbation::DeleteEdge: {
      std::size_t idx = pick(rng, edges.size());
      out.touched = edges[idx];
      edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(idx));
      break;
    }
    case Perturbation::AddEdge: {
      EdgeSet absent;
      for (std::size_t i = 0; i < kCycleNodes; ++i) {
        for (std::size_t j = 0; j < kCycleNodes; ++j) {
          if (i != j && !has_edge(edges, i, j)) absent.emplace_back(i, j);
        }
      }
      auto e = absent[pick(rng, absent.size())];
      edges.push_back(e);
      out.touched = e;
      break;
    }
  }
  out.graph = graph_from_edges(edges, key, kind == Perturbation::None ? Label::Normal : Label::Anomalous);
  return out;
}

}  // namespace detail

/// Normal graphs first, then each anomaly type in the order given.
inline std::vector<SyntheticGraph> gen_synthetic(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::vector<SyntheticGraph> out;
  out.reserve(spec.n_normal + spec.n_per_type * spec.types.size());
  for (std::size_t i = 0; i < spec.n_normal; ++i) {
    out.push_back(detail::perturb(Perturbation::None, rng, "normal-" + std::to_string(i)));
  }
  for (auto type : spec.types) {
    for (std::size_t i = 0; i < spec.n_per_type; ++i) {
      out.push_back(detail::perturb(type, rng, std::string(to_string(type)) + "-" + std::to_string(i)));
    }
  }
  return out;
}

/// Log groups whose template sequences are rotations of A→B→C→D→A.
/// Training holds the first three rotations, testing the unseen fourth.
struct RotationFixture {
  std::vector<LogGroup> train;
  std::vector<LogGroup> test;
};

inline LogGroup group_from_sequence(const std::vector<std::size_t>& seq, std::string key, Label label,
                                    std::size_t& line_no) {
  LogGroup g;
  g.key = key;
  g.label = label;
  for (std::size_t t : seq) {
    LogRecord r;
    r.line_no = ++line_no;
    r.identifier = key;
    r.template_id = t;
    g.records.push_back(std::move(r));
  }
  return g;
}

inline RotationFixture rotation_fixture(std::size_t copies = 1000) {
  const std::array<std::vector<std::size_t>, 4> rotations = {{
      {0, 1, 2, 3, 0},  // ABCDA
      {1, 2, 3, 0, 1},  // BCDAB
      {2, 3, 0, 1, 2},  // CDABC
      {3, 0, 1, 2, 3},  // DABCD
  }};
  RotationFixture fx;
  std::size_t line_no = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t i = 0; i < copies; ++i) {
      fx.train.push_back(group_from_sequence(rotations[r], "rot" + std::to_string(r) + "-" + std::to_string(i),
                                             Label::Normal, line_no));
    }
  }
  for (std::size_t i = 0; i < copies; ++i) {
    fx.test.push_back(group_from_sequence(rotations[3], "rot3-" + std::to_string(i), Label::Normal, line_no));
  }
  return fx;
}

// ---------------------------------------------------------------------------
// contamination and splitting

/// Number of anomalies so that they make up `rate` of the contaminated set.
inline std::size_t contamination_count(std::size_t n_normal, double rate) {
  return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n_normal) / (1.0 - rate) + 1e-9));
}

template <class T>
struct Contaminated {
  std::vector<T> items;
  std::size_t injected = 0;
};

/// Appends ⌊rate·N/(1−rate)⌋ items sampled without replacement from `pool`.
template <class T>
Contaminated<T> contaminate(const std::vector<T>& normal, const std::vector<T>& pool, double rate,
                            std::uint64_t seed) {
  if (rate < 0.0 || rate > 0.5) throw Error(ErrorCode::Validation, "contamination rate must be in [0, 0.5]");
  Contaminated<T> out;
  out.items = normal;
  out.injected = contamination_count(normal.size(), rate);
  if (out.injected > pool.size()) {
    throw Error(ErrorCode::PoolTooSmall, "need " + std::to_string(out.injected) + " anomalies, pool has " +
                                             std::to_string(pool.size()));
  }
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t i = 0; i < out.injected; ++i) out.items.push_back(pool[idx[i]]);
  return out;
}

struct SplitRatios {
  double train = 0.70;
  double val = 0.05;
  double test = 0.25;

  bool valid() const {
    return train >= 0.0 && val >= 0.0 && test >= 0.0 && std::abs(train + val + test - 1.0) < 1e-9;
  }
};

template <class T>
struct Split {
  std::vector<T> train;
  std::vector<T> val;
  std::vector<T> test;
  std::vector<std::string> warnings;
};

/// Normals are divided by the ratios; the validation set receives as many
/// anomalies as normals and the test set every remaining anomaly. Training
/// holds normals only. Items with unknown labels are treated as normal.
template <class T>
Split<T> split(const std::vector<T>& items, const SplitRatios& ratios, std::uint64_t seed) {
  if (!ratios.valid()) throw Error(ErrorCode::Validation, "split ratios must be non-negative and sum to 1");
  std::vector<std::size_t> normals;
  std::vector<std::size_t> anomalies;
  for (std::size_t i = 0; i < items.size(); ++i) {
    (items[i].label == Label::Anomalous ? anomalies : normals).push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(normals.begin(), normals.end(), rng);
  std::shuffle(anomalies.begin(), anomalies.end(), rng);

  const auto n = static_cast<double>(normals.size());
  const auto n_train = std::min(normals.size(), static_cast<std::size_t>(std::llround(ratios.train * n)));
  const auto n_val = std::min(normals.size() - n_train, static_cast<std::size_t>(std::llround(ratios.val * n)));

  Split<T> out;
  for (std::size_t i = 0; i < normals.size(); ++i) {
    auto& dst = i < n_train ? out.train : (i < n_train + n_val ? out.val : out.test);
    dst.push_back(items[normals[i]]);
  }
  std::size_t n_val_anom = n_val;
  if (anomalies.size() < n_val) {
    out.warnings.push_back("only " + std::to_string(anomalies.size()) + " anomalies available for a validation quota of " +
                           std::to_string(n_val));
    n_val_anom = anomalies.size();
  }
  for (std::size_t i = 0; i < anomalies.size(); ++i) {
    (i < n_val_anom ? out.val : out.test).push_back(items[anomalies[i]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// count-matrix baselines

struct PcaModel {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd components;  // columns span the retained principal subspace
};

inline PcaModel fit_pca(const Eigen::MatrixXd& counts, double variance_fraction = 0.95) {
  if (counts.rows() == 0) throw Error(ErrorCode::Validation, "PCA needs at least one row");
  PcaModel m;
  m.mean = counts.colwise().mean();
  Eigen::MatrixXd centered = counts.rowwise() - m.mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(1, counts.rows() - 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double total = values.cwiseMax(0.0).sum();
  Eigen::Index keep = 0;
  if (total > 0.0) {
    double acc = 0.0;
    for (Eigen::Index i = values.size() - 1; i >= 0; --i) {
      acc += std::max(0.0, values(i));
      ++keep;
      if (acc / total >= variance_fraction) break;
    }
  }
  m.components = eig.eigenvectors().rightCols(keep);
  return m;
}

/// Squared norm of each row's residual off the principal subspace.
inline Eigen::VectorXd pca_scores(const PcaModel& m, const Eigen::MatrixXd& counts) {
  Eigen::MatrixXd centered = counts.rowwise() - m.mean;
  Eigen::MatrixXd residual = centered - (centered * m.components) * m.components.transpose();
  return residual.rowwise().squaredNorm();
}

inline Eigen::VectorXd pca_baseline(const Eigen::MatrixXd& counts, double variance_fraction = 0.95) {
  return pca_scores(fit_pca(counts, variance_fraction), counts);
}

struct HbosModel {
  std::size_t bins = 10;
  Eigen::VectorXd lo;
  Eigen::VectorXd width;
  Eigen::MatrixXd density;  // features × bins, relative frequency per bin
};

inline constexpr double kHbosEpsilon = 1e-9;

inline std::size_t hbos_bin(const HbosModel& m, Eigen::Index f, double v) {
  if (m.width(f) <= 0.0) return 0;
  double pos = std::floor((v - m.lo(f)) / m.width(f));
  pos = std::clamp(pos, 0.0, static_cast<double>(m.bins - 1));
  return static_cast<std::size_t>(pos);
}

/// Equal-width histograms per feature over the training rows.
inline HbosModel fit_hbos(const Eigen::MatrixXd& counts, std::size_t bins = 10) {
  if (bins == 0) throw Error(ErrorCode::Validation, "HBOS needs at least one bin");
  if (counts.rows() == 0) throw Error(ErrorCode::Validation, "HBOS needs at least one row");
  HbosModel m;
  m.bins = bins;
  m.lo = counts.colwise().minCoeff().transpose();
  Eigen::VectorXd hi = counts.colwise().maxCoeff().transpose();
  m.width = (hi - m.lo) / static_cast<double>(bins);
  m.density = Eigen::MatrixXd::Zero(counts.cols(), static_cast<Eigen::Index>(bins));
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    for (Eigen::Index f = 0; f < counts.cols(); ++f) {
      m.density(f, static_cast<Eigen::Index>(hbos_bin(m, f, counts(r, f)))) += 1.0;
    }
  }
  m.density /= static_cast<double>(counts.rows());
  return m;
}

/// Σ_f log(1 / (density_f + ε)); values outside the training range fall in the nearest edge bin.
inline Eigen::VectorXd hbos_scores(const HbosModel& m, const Eigen::MatrixXd& counts) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(counts.rows());
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    for (Eigen::Index f = 0; f < counts.cols(); ++f) {
      double d = m.density(f, static_cast<Eigen::Index>(hbos_bin(m, f, counts(r, f))));
      out(r) += std::log(1.0 / (d + kHbosEpsilon));
    }
  }
  return out;
}

inline Eigen::VectorXd hbos_baseline(const Eigen::MatrixXd& counts, std::size_t bins = 10) {
  return hbos_scores(fit_hbos(counts, bins), counts);
}

}  // namespace logmesh
