#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "logmesh/error.hpp"
#include "logmesh/ocsvdd.hpp"

namespace logmesh {

struct NodeImportance {
  std::size_t node = 0;
  std::size_t template_id = 0;
  std::string template_text;
  double importance = 0.0;
};

struct Explanation {
  std::string group_key;
  double score = 0.0;
  std::vector<NodeImportance> nodes;  // in graph node order
  std::vector<std::size_t> ranking;   // node indices, most important first
};

inline constexpr double kMinExplainableScore = 1e-12;

/// Relative change of the anomaly score when one node's final-layer
/// embedding is left out of the readout:
///   |score(G) − score(G without Z_j)| / score(G).
/// The operators and the other node embeddings are not recomputed.
inline Eigen::VectorXd node_importance(const Eigen::MatrixXd& Z, const Eigen::VectorXd& center, Readout mode) {
  if (mode == Readout::Max) {
    throw Error(ErrorCode::NotAttributable, "max readout does not decompose over nodes");
  }
  const Eigen::Index n = Z.rows();
  if (n == 0) throw Error(ErrorCode::EmptyGraph, "graph has no nodes");
  const Eigen::VectorXd z = readout(Z, mode);
  const double full = (z - center).norm();
  if (full < kMinExplainableScore) {
    throw Error(ErrorCode::ZeroScore, "graph score is zero; importance is undefined");
  }
  if (n == 1) return Eigen::VectorXd::Ones(1);

  const Eigen::VectorXd total = Z.colwise().sum().transpose();
  Eigen::VectorXd out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd rest = total - Z.row(j).transpose();
    if (mode == Readout::Mean) rest /= static_cast<double>(n - 1);
    out(j) = std::abs(full - (rest - center).norm()) / full;
  }
  return out;
}

inline Eigen::VectorXd node_importance(const PreparedGraph& g, const OneClassModel& model) {
  auto fr = forward(g.X, g.ops, model.params, model.config);
  return node_importance(fr.node_embeddings(), model.center, model.config.readout);
}

/// Node indices by descending importance; ties go to the lower index.
inline std::vector<std::size_t> rank_nodes(const Eigen::VectorXd& importance) {
  std::vector<std::size_t> order(static_cast<std::size_t>(importance.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return importance(static_cast<Eigen::Index>(a)) > importance(static_cast<Eigen::Index>(b));
  });
  return order;
}

inline Explanation explain(const LogGraph& graph, const PreparedGraph& prepared, const OneClassModel& model,
                           const TemplateCatalog* catalog = nullptr) {
  Explanation e;
  e.group_key = graph.group_key;
  e.score = score(prepared, model);
  Eigen::VectorXd imp = node_importance(prepared, model);
  for (Eigen::Index j = 0; j < imp.size(); ++j) {
    NodeImportance ni;
    ni.node = static_cast<std::size_t>(j);
    ni.template_id = graph.node_templates[static_cast<std::size_t>(j)];
    if (catalog != nullptr && ni.template_id < catalog->size()) {
      ni.template_text = catalog->text(ni.template_id);
    } else {
      ni.template_text = "E" + std::to_string(ni.template_id);
    }
    ni.importance = imp(j);
    e.nodes.push_back(std::move(ni));
  }
  e.ranking = rank_nodes(imp);
  return e;
}

inline std::vector<NodeImportance> top_nodes(const Explanation& e, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::Validation, "top-k needs k >= 1");
  std::vector<NodeImportance> out;
  for (std::size_t i = 0; i < std::min(k, e.ranking.size()); ++i) out.push_back(e.nodes[e.ranking[i]]);
  return out;
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

inline std::string truncate_label(const std::string& s, std::size_t max_len = 40) {
  if (s.size() <= max_len) return s;
  return s.substr(0, max_len - 3) + "...";
}

}  // namespace detail

/// Shade in [0,1] per node: importance over the maximum, or uniform when
/// every importance is zero.
inline std::vector<double> node_shades(const Explanation& e) {
  double max_imp = 0.0;
  for (const auto& n : e.nodes) max_imp = std::max(max_imp, n.importance);
  std::vector<double> out;
  for (const auto& n : e.nodes) out.push_back(max_imp > 0.0 ? n.importance / max_imp : 0.5);
  return out;
}

/// Darker red for larger shade; shade 0 is white.
inline std::string shade_color(double shade) {
  const int gb = static_cast<int>(std::lround(255.0 * (1.0 - std::clamp(shade, 0.0, 1.0))));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#ff%02x%02x", gb, gb);
  return buf;
}

inline void write_dot(std::ostream& out, const LogGraph& g, const Explanation& e) {
  const auto shades = node_shades(e);
  out << "digraph \"" << detail::dot_escape(g.group_key) << "\" {\n";
  out << "  node [shape=box, style=filled, fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < e.nodes.size(); ++i) {
    const auto& n = e.nodes[i];
    char imp[32];
    std::snprintf(imp, sizeof imp, "%.3f", n.importance);
    out << "  n" << i << " [label=\"" << detail::dot_escape(detail::truncate_label(n.template_text)) << "\\n"
        << imp << "\", fillcolor=\"" << shade_color(shades[i]) << "\"];\n";
  }
  for (const auto& [from, to, w] : edge_list(g)) {
    out << "  n" << from << " -> n" << to << " [label=\"" << w << "\"];\n";
  }
  out << "}\n";
}

inline void export_dot(const LogGraph& g, const Explanation& e, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write DOT file: " + path);
  write_dot(out, g, e);
  if (!out) throw Error(ErrorCode::Io, "failed writing DOT file: " + path);
}

}  // namespace logmesh
