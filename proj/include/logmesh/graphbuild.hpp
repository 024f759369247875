#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "logmesh/error.hpp"
#include "logmesh/grouping.hpp"
#include "logmesh/semantics.hpp"

namespace logmesh {

/// Attributed, directed, edge-weighted graph for one log group. Nodes are
/// distinct templates; Y(i,j) counts how often template i was immediately
/// followed by template j.
struct LogGraph {
  std::string group_key;
  Label label = Label::Unknown;
  std::vector<std::size_t> node_templates;
  Eigen::MatrixXd A;  // 0/1 adjacency
  Eigen::MatrixXd Y;  // nonnegative integer edge weights
  Eigen::MatrixXd X;  // node attributes, one row per node

  Eigen::Index n() const { return static_cast<Eigen::Index>(node_templates.size()); }
  Eigen::Index attr_dim() const { return X.cols(); }

  std::size_t edge_count() const {
    return static_cast<std::size_t>((A.array() > 0.0).count());
  }
};

using Edge = std::tuple<std::size_t, std::size_t, std::size_t>;  // (from node, to node, weight)

inline std::vector<Edge> edge_list(const LogGraph& g) {
  std::vector<Edge> out;
  for (Eigen::Index i = 0; i < g.n(); ++i) {
    for (Eigen::Index j = 0; j < g.n(); ++j) {
      if (g.Y(i, j) > 0.0) {
        out.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                         static_cast<std::size_t>(g.Y(i, j)));
      }
    }
  }
  return out;
}

/// Builds the graph from a sequence of template ids. Nodes appear in
/// first-occurrence order.
inline LogGraph build_graph_from_sequence(const std::vector<std::size_t>& sequence,
                                          const TemplateEmbeddingTable& embeddings,
                                          std::string key = {}, Label label = Label::Unknown) {
  if (sequence.empty()) throw Error(ErrorCode::Validation, "cannot build a graph from an empty group");
  LogGraph g;
  g.group_key = std::move(key);
  g.label = label;

  std::unordered_map<std::size_t, Eigen::Index> node_of;
  for (std::size_t t : sequence) {
    if (node_of.try_emplace(t, static_cast<Eigen::Index>(g.node_templates.size())).second) {
      if (t >= embeddings.size()) {
        throw Error(ErrorCode::MissingEmbedding, "no attribute vector for template " + std::to_string(t));
      }
      g.node_templates.push_back(t);
    }
  }
  const Eigen::Index n = g.n();
  g.Y.setZero(n, n);
  for (std::size_t i = 1; i < sequence.size(); ++i) {
    g.Y(node_of[sequence[i - 1]], node_of[sequence[i]]) += 1.0;
  }
  g.A = (g.Y.array() > 0.0).cast<double>();
  g.X.resize(n, embeddings.rows.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    g.X.row(i) = embeddings.rows.row(static_cast<Eigen::Index>(g.node_templates[static_cast<std::size_t>(i)]));
  }
  return g;
}

inline LogGraph build_graph(const LogGroup& group, const TemplateEmbeddingTable& embeddings) {
  if (group.records.empty()) throw Error(ErrorCode::Validation, "group " + group.key + " is empty");
  return build_graph_from_sequence(group.template_sequence(), embeddings, group.key, group.label);
}

/// Reorders nodes so that `order[new] = old`.
inline LogGraph permute_nodes(const LogGraph& g, const std::vector<Eigen::Index>& order) {
  const Eigen::Index n = g.n();
  if (static_cast<Eigen::Index>(order.size()) != n) {
    throw Error(ErrorCode::ShapeMismatch, "permutation size does not match node count");
  }
  LogGraph out;
  out.group_key = g.group_key;
  out.label = g.label;
  out.A.resize(n, n);
  out.Y.resize(n, n);
  out.X.resize(n, g.X.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.node_templates.push_back(g.node_templates[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
    out.X.row(i) = g.X.row(order[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < n; ++j) {
      out.A(i, j) = g.A(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      out.Y(i, j) = g.Y(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

/// Node order sorted by template id, so structurally equal groups compare equal.
inline LogGraph canonicalize(const LogGraph& g) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(g.n()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return g.node_templates[static_cast<std::size_t>(a)] < g.node_templates[static_cast<std::size_t>(b)];
  });
  return permute_nodes(g, order);
}

inline bool same_structure(const LogGraph& a, const LogGraph& b) {
  return a.node_templates == b.node_templates && a.A == b.A && a.Y == b.Y && a.X == b.X;
}

/// Occurrence counts of each template id within the group.
inline Eigen::VectorXd count_vector(const std::vector<std::size_t>& sequence, std::size_t catalog_size) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(catalog_size));
  for (std::size_t t : sequence) {
    if (t >= catalog_size) {
      throw Error(ErrorCode::Validation, "template id " + std::to_string(t) + " outside catalog");
    }
    counts(static_cast<Eigen::Index>(t)) += 1.0;
  }
  return counts;
}

inline Eigen::VectorXd count_vector(const LogGroup& group, std::size_t catalog_size) {
  return count_vector(group.template_sequence(), catalog_size);
}

}  // namespace logmesh
