#pragma once

// Brute-force reference computations shared by the unit and acceptance tests.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "logmesh/digcn.hpp"
#include "logmesh/graphbuild.hpp"

namespace oracle {

using TemplatePair = std::pair<std::size_t, std::size_t>;

/// Counts consecutive (previous, next) template pairs.
inline std::map<TemplatePair, std::size_t> bigrams(const std::vector<std::size_t>& seq) {
  std::map<TemplatePair, std::size_t> out;
  for (std::size_t i = 1; i < seq.size(); ++i) ++out[{seq[i - 1], seq[i]}];
  return out;
}

/// Weighted edges of a graph keyed by template ids instead of node indices.
inline std::map<TemplatePair, std::size_t> template_edges(const logmesh::LogGraph& g) {
  std::map<TemplatePair, std::size_t> out;
  for (const auto& [i, j, w] : logmesh::edge_list(g)) out[{g.node_templates[i], g.node_templates[j]}] = w;
  return out;
}

/// Fraction of (positive, negative) pairs ordered correctly, ties counted half.
inline double pair_auc(const std::vector<double>& s, const std::vector<bool>& y) {
  double good = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      pairs += 1.0;
      if (s[i] > s[j]) good += 1.0;
      if (s[i] == s[j]) good += 0.5;
    }
  }
  return good / pairs;
}

/// Step-summed precision at each positive. A positive tied with others is
/// ranked after every tied negative.
inline double step_ap(const std::vector<double>& s, const std::vector<bool>& y) {
  double total = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    n_pos += 1.0;
    double above = 0.0;     // items ranked at or before i
    double pos_above = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      bool before = s[j] > s[i] || (s[j] == s[i] && (!y[j] || j <= i));
      if (!before) continue;
      above += 1.0;
      if (y[j]) pos_above += 1.0;
    }
    total += pos_above / above;
  }
  return total / n_pos;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0,
                                     double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  }
  return m;
}

/// Random weighted digraph: each off-diagonal and self-loop entry present
/// with probability `density`, weight 1..3.
inline Eigen::MatrixXd random_weights(std::mt19937_64& rng, Eigen::Index n, double density = 0.4) {
  std::bernoulli_distribution edge(density);
  std::uniform_int_distribution<int> w(1, 3);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (edge(rng)) Y(i, j) = w(rng);
    }
  }
  return Y;
}

struct GradientCase {
  logmesh::ModelConfig cfg;
  std::vector<logmesh::PreparedGraph> graphs;
  logmesh::ModelParams params;
  Eigen::VectorXd center;
  double lambda = 1e-3;
};

/// Random instance with n <= 6 nodes, attribute width <= 8, layer width <= 8.
inline GradientCase random_gradient_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  GradientCase gc;
  gc.cfg.layers = pick(1, 2);
  gc.cfg.order = pick(1, 2);
  gc.cfg.dim = pick(1, 8);
  gc.cfg.alpha = 0.1;
  gc.cfg.fusion = pick(0, 1) == 0 ? logmesh::Fusion::Sum : logmesh::Fusion::Concat;
  gc.cfg.readout = pick(0, 1) == 0 ? logmesh::Readout::Mean : logmesh::Readout::Sum;
  const int attr = pick(1, 8);
  for (int g = 0; g < 2; ++g) {
    const Eigen::Index n = pick(1, 6);
    Eigen::MatrixXd Y = random_weights(rng, n);
    Eigen::MatrixXd A = (Y.array() > 0.0).cast<double>();
    gc.graphs.push_back({random_matrix(rng, n, attr), logmesh::build_operators(A, Y, gc.cfg.alpha, gc.cfg.order)});
  }
  Eigen::Index in = attr;
  for (int l = 0; l < gc.cfg.layers; ++l) {
    logmesh::LayerParams lp;
    for (int b = 0; b < gc.cfg.branches(); ++b) lp.theta.push_back(random_matrix(rng, in, gc.cfg.dim));
    gc.params.push_back(lp);
    in = gc.cfg.fused_dim();
  }
  gc.center = random_matrix(rng, gc.cfg.fused_dim(), 1, 0.0, 0.5);
  return gc;
}

/// Largest relative error between the analytic gradient and central
/// differences with step h, over every parameter entry. The denominator is
/// floored at 1e-6 so entries whose true gradient is zero compare absolutely.
inline double max_gradient_error(const GradientCase& gc, double h = 1e-5) {
  std::vector<const logmesh::PreparedGraph*> batch;
  for (const auto& g : gc.graphs) batch.push_back(&g);
  auto analytic = logmesh::svdd_loss_and_gradient(batch, gc.params, gc.cfg, gc.center, gc.lambda);
  double worst = 0.0;
  logmesh::ModelParams p = gc.params;
  for (std::size_t l = 0; l < p.size(); ++l) {
    for (std::size_t b = 0; b < p[l].theta.size(); ++b) {
      auto& t = p[l].theta[b];
      for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) {
          const double keep = t(i, j);
          t(i, j) = keep + h;
          double up = logmesh::svdd_loss_and_gradient(batch, p, gc.cfg, gc.center, gc.lambda).loss;
          t(i, j) = keep - h;
          double down = logmesh::svdd_loss_and_gradient(batch, p, gc.cfg, gc.center, gc.lambda).loss;
          t(i, j) = keep;
          const double fd = (up - down) / (2.0 * h);
          const double an = analytic.grad[l].theta[b](i, j);
          worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6}));
        }
      }
    }
  }
  return worst;
}

/// Minimal recursive-descent checker for the DOT language subset:
/// graph := [strict] (graph|digraph) [ID] '{' stmt_list '}'
/// stmt := node_stmt | edge_stmt | attr_stmt | ID '=' ID, separated by optional ';'.
class DotChecker {
 public:
  explicit DotChecker(std::string text) : s_(std::move(text)) {}

  bool valid() {
    try {
      graph();
      skip();
      return pos_ == s_.size();
    } catch (const Fail&) {
      return false;
    }
  }

  bool directed() const { return directed_; }
  std::size_t nodes() const { return nodes_; }
  std::size_t edges() const { return edges_; }

 private:
  struct Fail {};

  void skip() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else if (s_.compare(pos_, 2, "//") == 0 || s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (s_.compare(pos_, 2, "/*") == 0) {
        auto end = s_.find("*/", pos_ + 2);
        if (end == std::string::npos) throw Fail{};
        pos_ = end + 2;
      } else {
        break;
      }
    }
  }

  bool peek(const std::string& tok) {
    skip();
    return s_.compare(pos_, tok.size(), tok) == 0;
  }

  void expect(const std::string& tok) {
    if (!peek(tok)) throw Fail{};
    pos_ += tok.size();
  }

  bool keyword(const std::string& kw) {
    skip();
    if (s_.compare(pos_, kw.size(), kw) != 0) return false;
    std::size_t end = pos_ + kw.size();
    if (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_')) return false;
    pos_ = end;
    return true;
  }

  bool at_id() {
    skip();
    if (pos_ >= s_.size()) return false;
    char c = s_[pos_];
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '"' || c == '-' || c == '.' || c == '<';
  }

  std::string id() {
    skip();
    if (pos_ >= s_.size()) throw Fail{};
    std::size_t start = pos_;
    char c = s_[pos_];
    if (c == '"') {
      ++pos_;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        if (s_[pos_] == '\\') ++pos_;
        ++pos_;
      }
      if (pos_ >= s_.size()) throw Fail{};
      ++pos_;
    } else if (c == '<') {
      int depth = 0;
      do {
        if (s_[pos_] == '<') ++depth;
        if (s_[pos_] == '>') --depth;
        ++pos_;
      } while (pos_ < s_.size() && depth > 0);
      if (depth != 0) throw Fail{};
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
      ++pos_;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    } else {
      throw Fail{};
    }
    return s_.substr(start, pos_ - start);
  }

  void attr_list() {
    while (peek("[")) {
      expect("[");
      while (!peek("]")) {
        id();
        expect("=");
        id();
        if (peek(",")) expect(",");
        if (peek(";")) expect(";");
      }
      expect("]");
    }
  }

  void stmt() {
    if (keyword("graph") || keyword("node") || keyword("edge")) {
      if (!peek("[")) throw Fail{};
      attr_list();
      return;
    }
    id();
    if (peek("=")) {
      expect("=");
      id();
      return;
    }
    bool is_edge = false;
    while (peek(directed_ ? "->" : "--")) {
      expect(directed_ ? "->" : "--");
      id();
      is_edge = true;
      ++edges_;
    }
    if (!is_edge) ++nodes_;
    attr_list();
  }

  void graph() {
    keyword("strict");
    if (keyword("digraph")) {
      directed_ = true;
    } else if (!keyword("graph")) {
      throw Fail{};
    }
    if (!peek("{")) id();
    expect("{");
    while (!peek("}")) {
      if (pos_ >= s_.size()) throw Fail{};
      stmt();
      if (peek(";")) expect(";");
    }
    expect("}");
  }

  std::string s_;
  std::size_t pos_ = 0;
  bool directed_ = false;
  std::size_t nodes_ = 0;
  std::size_t edges_ = 0;
};

}  // namespace oracle
