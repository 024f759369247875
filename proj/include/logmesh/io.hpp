#pragma once

// File formats shared by the pipeline stages. Every stage reads and writes
// only these formats, so each can be run on its own.

#include <Eigen/Dense>
#include <json.hpp>

#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "logmesh/error.hpp"
#include "logmesh/explain.hpp"
#include "logmesh/graphbuild.hpp"
#include "logmesh/grouping.hpp"
#include "logmesh/logparse.hpp"
#include "logmesh/ocsvdd.hpp"
#include "logmesh/semantics.hpp"

namespace logmesh::io {

using nlohmann::json;

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return in;
}

inline json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, path + ": " + e.what());
  }
}

inline void write_json(const std::string& path, const json& j, int indent = -1) {
  auto out = open_out(path);
  out << j.dump(indent) << '\n';
}

/// Calls `fn` with each non-blank JSON line.
inline void for_each_jsonl(const std::string& path, const std::function<void(const json&)>& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (split_whitespace(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Schema, path + ":" + std::to_string(n) + ": " + e.what());
    }
    try {
      fn(j);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Schema, path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// format descriptor: {"log_format": "...", "id_field": "..." | "id_regex": "..."}
// mask file: one regex per line; blank lines and lines starting with '#' are ignored

inline FormatDescriptor format_from_json(const json& j) {
  if (!j.contains("log_format")) throw Error(ErrorCode::Schema, "format file needs 'log_format'");
  auto fmt = FormatDescriptor::from_layout(j.at("log_format").get<std::string>());
  if (j.contains("id_field")) fmt.set_identifier_field(j.at("id_field").get<std::string>());
  if (j.contains("id_regex")) fmt.set_identifier_regex(j.at("id_regex").get<std::string>());
  for (const auto& m : j.value("masks", std::vector<std::string>{})) fmt.add_mask(m);
  return fmt;
}

inline void load_masks(const std::string& path, FormatDescriptor& fmt) {
  auto in = open_in(path);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fmt.add_mask(line);
  }
}

// ---------------------------------------------------------------------------
// records and catalog

inline json to_json(const LogRecord& r) {
  return {{"line_no", r.line_no}, {"ts", r.timestamp}, {"id", r.identifier}, {"template_id", r.template_id}};
}

inline LogRecord record_from_json(const json& j) {
  LogRecord r;
  r.line_no = j.at("line_no").get<std::size_t>();
  r.timestamp = j.value("ts", std::string{});
  r.identifier = j.value("id", std::string{});
  r.template_id = j.at("template_id").get<std::size_t>();
  return r;
}

inline void write_records(const std::string& path, const std::vector<LogRecord>& records) {
  auto out = open_out(path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<LogRecord> read_records(const std::string& path) {
  std::vector<LogRecord> out;
  for_each_jsonl(path, [&](const json& j) { out.push_back(record_from_json(j)); });
  return out;
}

inline void write_catalog(const std::string& path, const TemplateCatalog& c) {
  write_json(path, json(c.templates));
}

inline TemplateCatalog read_catalog(const std::string& path) {
  json j = read_json(path);
  if (!j.is_array()) throw Error(ErrorCode::Schema, "catalog must be a JSON array of token lists");
  TemplateCatalog c;
  try {
    c.templates = j.get<std::vector<std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("catalog: ") + e.what());
  }
  c.counts.assign(c.templates.size(), 0);
  return c;
}

// ---------------------------------------------------------------------------
// labels CSV: either `line_no,label` (line labels) or `key,label` (group labels);
// a header row is recognised by its first column

struct Labels {
  LineLabels lines;
  GroupLabels groups;
};

inline Labels read_labels(const std::string& path) {
  auto in = open_in(path);
  Labels out;
  std::string line;
  bool first = true;
  bool by_line = false;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::Format, "label line without comma: " + line);
    std::string key = line.substr(0, comma);
    std::string value = line.substr(comma + 1);
    if (first) {
      first = false;
      if (key == "line_no" || key == "LineId" || key == "line") {
        by_line = true;
        continue;
      }
      if (key == "BlockId" || key == "key" || key == "group_key" || key == "id") continue;
      by_line = !key.empty() && std::all_of(key.begin(), key.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
    }
    bool anomalous = label_from_string(value) == Label::Anomalous;
    if (by_line) {
      out.lines[static_cast<std::size_t>(std::stoull(key))] = anomalous;
    } else {
      out.groups[key] = anomalous;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// groups: {key, label, lines:[line_no...], templates:[template_id...]}

inline json to_json(const LogGroup& g) {
  std::vector<std::size_t> lines;
  for (const auto& r : g.records) lines.push_back(r.line_no);
  return {{"key", g.key}, {"label", to_string(g.label)}, {"lines", lines}, {"templates", g.template_sequence()}};
}

inline LogGroup group_from_json(const json& j) {
  LogGroup g;
  g.key = j.at("key").get<std::string>();
  g.label = label_from_string(j.value("label", std::string("unknown")));
  auto lines = j.at("lines").get<std::vector<std::size_t>>();
  auto templates = j.at("templates").get<std::vector<std::size_t>>();
  if (lines.size() != templates.size() || lines.empty()) {
    throw Error(ErrorCode::Schema, "group " + g.key + " needs equally long, non-empty lines and templates");
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    LogRecord r;
    r.line_no = lines[i];
    r.identifier = g.key;
    r.template_id = templates[i];
    g.records.push_back(std::move(r));
  }
  return g;
}

inline void write_groups(const std::string& path, const std::vector<LogGroup>& groups) {
  auto out = open_out(path);
  for (const auto& g : groups) out << to_json(g).dump() << '\n';
}

inline std::vector<LogGroup> read_groups(const std::string& path) {
  std::vector<LogGroup> out;
  for_each_jsonl(path, [&](const json& j) { out.push_back(group_from_json(j)); });
  return out;
}

// ---------------------------------------------------------------------------
// embeddings: {"mode": "semantic"|"onehot", "dim": d, "rows": {"<template id>": [...]}}

inline json to_json(const TemplateEmbeddingTable& t) {
  json rows = json::object();
  for (Eigen::Index i = 0; i < t.rows.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(t.rows.cols()));
    for (Eigen::Index c = 0; c < t.rows.cols(); ++c) row[static_cast<std::size_t>(c)] = t.rows(i, c);
    rows[std::to_string(i)] = row;
  }
  return {{"mode", t.mode == EmbeddingMode::OneHot ? "onehot" : "semantic"}, {"dim", t.dim()}, {"rows", rows}};
}

inline TemplateEmbeddingTable embeddings_from_json(const json& j) {
  TemplateEmbeddingTable t;
  try {
    t.mode = j.at("mode").get<std::string>() == "onehot" ? EmbeddingMode::OneHot : EmbeddingMode::Semantic;
    const auto dim = j.at("dim").get<Eigen::Index>();
    const auto& rows = j.at("rows");
    t.rows.setZero(static_cast<Eigen::Index>(rows.size()), dim);
    for (const auto& [key, row] : rows.items()) {
      auto id = static_cast<Eigen::Index>(std::stoull(key));
      if (id >= t.rows.rows()) throw Error(ErrorCode::Schema, "embedding ids must be dense");
      auto v = row.get<std::vector<double>>();
      if (static_cast<Eigen::Index>(v.size()) != dim) throw Error(ErrorCode::Schema, "embedding row has wrong dimension");
      for (Eigen::Index c = 0; c < dim; ++c) t.rows(id, c) = v[static_cast<std::size_t>(c)];
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("embeddings: ") + e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// graphs: {group_key, label, nodes:[template_id...], edges:[[i,j,w]...], x:[[...]...]}
// written in canonical node order

inline json to_json(const LogGraph& graph) {
  LogGraph g = canonicalize(graph);
  json edges = json::array();
  for (const auto& [i, j, w] : edge_list(g)) edges.push_back({i, j, w});
  return {{"group_key", g.group_key},
          {"label", to_string(g.label)},
          {"nodes", g.node_templates},
          {"edges", edges},
          {"x", matrix_to_json(g.X)}};
}

inline LogGraph graph_from_json(const json& j) {
  LogGraph g;
  g.group_key = j.at("group_key").get<std::string>();
  g.label = label_from_string(j.value("label", std::string("unknown")));
  g.node_templates = j.at("nodes").get<std::vector<std::size_t>>();
  const auto n = g.n();
  if (n == 0) throw Error(ErrorCode::Schema, "graph " + g.group_key + " has no nodes");
  g.Y.setZero(n, n);
  for (const auto& e : j.at("edges")) {
    auto i = e.at(0).get<Eigen::Index>();
    auto k = e.at(1).get<Eigen::Index>();
    auto w = e.at(2).get<double>();
    if (i < 0 || k < 0 || i >= n || k >= n || w <= 0.0) throw Error(ErrorCode::Schema, "bad edge in " + g.group_key);
    g.Y(i, k) = w;
  }
  g.A = (g.Y.array() > 0.0).cast<double>();
  g.X = matrix_from_json(j.at("x"));
  if (g.X.rows() != n) throw Error(ErrorCode::Schema, "attribute rows do not match nodes in " + g.group_key);
  return g;
}

inline void write_graphs(const std::string& path, const std::vector<LogGraph>& graphs) {
  auto out = open_out(path);
  for (const auto& g : graphs) out << to_json(g).dump() << '\n';
}

inline std::vector<LogGraph> read_graphs(const std::string& path) {
  std::vector<LogGraph> out;
  for_each_jsonl(path, [&](const json& j) { out.push_back(graph_from_json(j)); });
  return out;
}

// ---------------------------------------------------------------------------
// scores: {group_key, label, score}

struct ScoreRow {
  std::string group_key;
  Label label = Label::Unknown;
  double score = 0.0;
};

inline void write_scores(const std::string& path, const std::vector<ScoreRow>& rows) {
  auto out = open_out(path);
  for (const auto& r : rows) {
    out << json{{"group_key", r.group_key}, {"label", to_string(r.label)}, {"score", r.score}}.dump() << '\n';
  }
}

inline std::vector<ScoreRow> read_scores(const std::string& path) {
  std::vector<ScoreRow> out;
  for_each_jsonl(path, [&](const json& j) {
    out.push_back({j.at("group_key").get<std::string>(), label_from_string(j.value("label", std::string("unknown"))),
                   j.at("score").get<double>()});
  });
  return out;
}

/// Labelled rows only; unknown labels are left out.
inline ScoredSet scored_set(const std::vector<ScoreRow>& rows) {
  ScoredSet s;
  for (const auto& r : rows) {
    if (r.label == Label::Unknown) continue;
    s.scores.push_back(r.score);
    s.labels.push_back(r.label == Label::Anomalous);
  }
  return s;
}

inline json eval_report(const ScoredSet& s) {
  const auto n_pos = static_cast<std::size_t>(std::count(s.labels.begin(), s.labels.end(), true));
  const std::size_t n_neg = s.labels.size() - n_pos;
  json r = {{"n_pos", n_pos}, {"n_neg", n_neg}, {"roc_auc", nullptr}, {"ap", nullptr}};
  if (n_pos > 0 && n_neg > 0) r["roc_auc"] = roc_auc(s);
  if (n_pos > 0) r["ap"] = average_precision(s);
  return r;
}

// ---------------------------------------------------------------------------
// explanations

inline json to_json(const Explanation& e, std::size_t top) {
  json nodes = json::array();
  std::vector<std::size_t> rank(e.nodes.size());
  for (std::size_t r = 0; r < e.ranking.size(); ++r) rank[e.ranking[r]] = r + 1;
  for (const auto& n : e.nodes) {
    nodes.push_back({{"node", n.node},
                     {"template_id", n.template_id},
                     {"template", n.template_text},
                     {"importance", n.importance},
                     {"rank", rank[n.node]}});
  }
  json top_ids = json::array();
  for (const auto& n : top_nodes(e, top)) top_ids.push_back(n.template_id);
  return {{"group_key", e.group_key}, {"score", e.score}, {"nodes", nodes}, {"top_templates", top_ids}};
}

}  // namespace logmesh::io
