#pragma once

// End-to-end orchestration: parse → group → embed → graphs → split → train →
// score → explain → eval, with every intermediate artifact written to disk.

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "logmesh/error.hpp"
#include "logmesh/evalkit.hpp"
#include "logmesh/explain.hpp"
#include "logmesh/io.hpp"
#include "logmesh/ocsvdd.hpp"

namespace logmesh {

inline constexpr const char* kVersion = "0.1.0";

enum class InputMode { Logs, Synthetic };

struct PipelineConfig {
  InputMode mode = InputMode::Logs;
  std::string log_path;
  std::string format_path;
  std::string mask_path;
  std::string labels_path;
  DrainConfig drain;
  bool window = false;
  std::size_t window_size = 100;
  EmbeddingMode embedding = EmbeddingMode::Semantic;
  std::string vectors_path;
  ModelConfig model;
  TrainConfig train;
  SplitRatios ratios;
  double contamination = 0.0;
  SyntheticSpec synthetic;
  double explain_quantile = 0.99;
  std::size_t explain_top = 3;
  bool write_dot = true;
  std::uint64_t seed = 0;
  std::string out_dir = "logmesh-out";
  nlohmann::json source;  // the configuration as given, for the manifest
};

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  c.source = j;
  try {
    const auto mode = j.value("mode", std::string("logs"));
    if (mode == "logs") {
      c.mode = InputMode::Logs;
    } else if (mode == "synthetic") {
      c.mode = InputMode::Synthetic;
    } else {
      throw Error(ErrorCode::Validation, "mode must be 'logs' or 'synthetic'");
    }
    c.log_path = j.value("log", std::string{});
    c.format_path = j.value("format", std::string{});
    c.mask_path = j.value("masks", std::string{});
    c.labels_path = j.value("labels", std::string{});
    if (j.contains("drain")) {
      const auto& d = j.at("drain");
      c.drain.depth = d.value("depth", c.drain.depth);
      c.drain.similarity_threshold = d.value("st", c.drain.similarity_threshold);
      c.drain.max_children = d.value("max_children", c.drain.max_children);
    }
    if (j.contains("grouping")) {
      const auto& g = j.at("grouping");
      const auto by = g.value("by", std::string("id"));
      if (by != "id" && by != "id-window") throw Error(ErrorCode::Validation, "grouping.by must be id or id-window");
      c.window = by == "id-window";
      c.window_size = g.value("window", c.window_size);
    }
    if (j.contains("embedding")) {
      const auto& e = j.at("embedding");
      const auto m = e.value("mode", std::string("semantic"));
      if (m != "semantic" && m != "onehot") throw Error(ErrorCode::Validation, "embedding.mode must be semantic or onehot");
      c.embedding = m == "onehot" ? EmbeddingMode::OneHot : EmbeddingMode::Semantic;
      c.vectors_path = e.value("vectors", std::string{});
    }
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.ratios.train = s.value("train", c.ratios.train);
      c.ratios.val = s.value("val", c.ratios.val);
      c.ratios.test = s.value("test", c.ratios.test);
    }
    c.contamination = j.value("contamination", 0.0);
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      c.synthetic.n_normal = s.value("n_normal", c.synthetic.n_normal);
      c.synthetic.n_per_type = s.value("n_per_type", c.synthetic.n_per_type);
      if (s.contains("types")) {
        c.synthetic.types.clear();
        for (const auto& t : s.at("types")) c.synthetic.types.push_back(perturbation_from_string(t.get<std::string>()));
      }
    }
    if (j.contains("explain")) {
      const auto& e = j.at("explain");
      c.explain_quantile = e.value("quantile", c.explain_quantile);
      c.explain_top = e.value("top", c.explain_top);
      c.write_dot = e.value("dot", c.write_dot);
    }
    c.seed = j.value("seed", std::uint64_t{0});
    c.out_dir = j.value("out_dir", c.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("config: ") + e.what());
  }
  return c;
}

/// All problems found in the configuration; empty means valid.
inline std::vector<std::string> validate_config(const PipelineConfig& c) {
  namespace fs = std::filesystem;
  std::vector<std::string> out;
  auto need_file = [&](const std::string& path, const char* what) {
    if (path.empty()) {
      out.push_back(std::string(what) + " path is required");
    } else if (!fs::is_regular_file(path)) {
      out.push_back(std::string(what) + " file not found: " + path);
    }
  };
  if (c.mode == InputMode::Logs) {
    need_file(c.log_path, "log");
    need_file(c.format_path, "format");
    if (!c.mask_path.empty()) need_file(c.mask_path, "mask");
    if (!c.labels_path.empty()) need_file(c.labels_path, "labels");
    if (c.embedding == EmbeddingMode::Semantic) need_file(c.vectors_path, "word vector");
    if (c.window && c.window_size < 1) out.push_back("window size must be >= 1");
    if (c.drain.depth < 3) out.push_back("drain depth must be >= 3");
    if (!(c.drain.similarity_threshold > 0.0 && c.drain.similarity_threshold < 1.0)) {
      out.push_back("drain similarity threshold must be in (0,1)");
    }
  }
  for (auto& p : c.model.problems()) out.push_back(p);
  for (auto& p : c.train.problems()) out.push_back(p);
  if (!c.ratios.valid()) out.push_back("split ratios must be non-negative and sum to 1");
  if (c.contamination < 0.0 || c.contamination > 0.5) out.push_back("contamination must be in [0, 0.5]");
  if (!(c.explain_quantile >= 0.0 && c.explain_quantile <= 1.0)) out.push_back("explain quantile must be in [0,1]");
  if (c.explain_top < 1) out.push_back("explain top must be >= 1");
  return out;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunReport {
  nlohmann::json metrics;
  std::vector<StageTiming> timings;
  std::size_t n_graphs = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  std::size_t n_templates = 0;
  std::size_t malformed_lines = 0;
  std::size_t contamination_injected = 0;
  std::size_t explanations = 0;
  std::vector<std::string> warnings;
  std::vector<double> test_scores;

  nlohmann::json to_json() const {
    nlohmann::json t = nlohmann::json::object();
    for (const auto& s : timings) t[s.stage] = s.seconds;
    return {{"metrics", metrics},
            {"timing_seconds", t},
            {"counts",
             {{"graphs", n_graphs},
              {"train", n_train},
              {"val", n_val},
              {"test", n_test},
              {"templates", n_templates},
              {"malformed_lines", malformed_lines},
              {"contamination_injected", contamination_injected},
              {"explanations", explanations}}},
            {"warnings", warnings}};
  }
};

namespace detail {

template <class Fn>
auto run_stage(const std::string& name, RunReport& report, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    report.timings.push_back(
        {name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto r = fn();
      finish();
      return r;
    }
  } catch (const Error& e) {
    throw Error(e.code(), "stage " + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Io, "stage " + name + ": " + e.what());
  }
}

}  // namespace detail

/// Runs every stage and writes the artifacts plus `report.json` and
/// `manifest.json` to the output directory.
inline RunReport run_pipeline(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  if (auto problems = validate_config(cfg); !problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::Validation, msg);
  }
  fs::create_directories(cfg.out_dir);
  auto out = [&](const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); };

  const std::uint64_t split_seed = cfg.seed + 1;
  const std::uint64_t contamination_seed = cfg.seed + 2;
  const std::uint64_t synthetic_seed = cfg.seed + 3;
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;

  nlohmann::json manifest = {{"version", kVersion},
                             {"config", cfg.source},
                             {"config_hash", hex64(fnv1a(cfg.source.dump()))},
                             {"seeds",
                              {{"seed", cfg.seed},
                               {"train", tc.seed},
                               {"split", split_seed},
                               {"contamination", contamination_seed},
                               {"synthetic", synthetic_seed}}},
                             {"stages", {"parse", "group", "embed", "graphs", "split", "train", "score", "explain", "eval"}}};
  io::write_json(out("manifest.json"), manifest, 2);

  RunReport report;
  std::vector<LogGraph> graphs;
  TemplateCatalog catalog;
  std::vector<SyntheticGraph> anomaly_pool;

  if (cfg.mode == InputMode::Logs) {
    auto parsed = detail::run_stage("parse", report, [&] {
      auto fmt = io::format_from_json(io::read_json(cfg.format_path));
      if (!cfg.mask_path.empty()) io::load_masks(cfg.mask_path, fmt);
      auto r = parse_file(cfg.log_path, fmt, cfg.drain);
      io::write_records(out("records.jsonl"), r.records);
      io::write_catalog(out("catalog.json"), r.catalog);
      return r;
    });
    catalog = parsed.catalog;
    report.malformed_lines = parsed.malformed;
    report.n_templates = catalog.size();

    auto groups = detail::run_stage("group", report, [&] {
      auto gs = group_by_identifier(parsed.records);
      if (!cfg.labels_path.empty()) {
        auto labels = io::read_labels(cfg.labels_path);
        if (!labels.lines.empty()) {
          if (cfg.window) gs = window_split_all(gs, cfg.window_size);
          label_groups(gs, labels.lines);
        } else {
          label_groups_by_key(gs, labels.groups);
          if (cfg.window) gs = window_split_all(gs, cfg.window_size);
        }
      } else if (cfg.window) {
        gs = window_split_all(gs, cfg.window_size);
      }
      io::write_groups(out("groups.jsonl"), gs);
      return gs;
    });

    auto table = detail::run_stage("embed", report, [&] {
      auto t = cfg.embedding == EmbeddingMode::OneHot ? onehot_table(catalog)
                                                      : semantic_table(catalog, load_vectors(cfg.vectors_path));
      io::write_json(out("embeddings.json"), io::to_json(t));
      return t;
    });

    graphs = detail::run_stage("graphs", report, [&] {
      std::vector<LogGraph> gs;
      gs.reserve(groups.size());
      for (const auto& g : groups) gs.push_back(canonicalize(build_graph(g, table)));
      io::write_graphs(out("graphs.jsonl"), gs);
      return gs;
    });
  } else {
    graphs = detail::run_stage("graphs", report, [&] {
      SyntheticSpec spec = cfg.synthetic;
      spec.seed = synthetic_seed;
      std::vector<LogGraph> gs;
      for (auto& sg : gen_synthetic(spec)) gs.push_back(std::move(sg.graph));
      io::write_graphs(out("graphs.jsonl"), gs);
      return gs;
    });
    for (std::size_t i = 0; i < kCycleNodes; ++i) catalog.templates.push_back({std::string(1, static_cast<char>('A' + i))});
    catalog.counts.assign(kCycleNodes, 0);
    report.n_templates = kCycleNodes;
  }
  report.n_graphs = graphs.size();

  auto parts = detail::run_stage("split", report, [&] {
    auto s = split(graphs, cfg.ratios, split_seed);
    if (cfg.contamination > 0.0) {
      // Contaminating anomalies come out of the test pool so no graph is both trained on and tested.
      std::vector<LogGraph> test_normals;
      std::vector<LogGraph> test_anomalies;
      for (auto& g : s.test) (g.label == Label::Anomalous ? test_anomalies : test_normals).push_back(std::move(g));
      auto mixed = contaminate(s.train, test_anomalies, cfg.contamination, contamination_seed);
      report.contamination_injected = mixed.injected;
      std::vector<LogGraph> injected(mixed.items.begin() + static_cast<std::ptrdiff_t>(s.train.size()), mixed.items.end());
      s.train = std::move(mixed.items);
      s.test = std::move(test_normals);
      for (auto& g : test_anomalies) {
        bool used = std::any_of(injected.begin(), injected.end(), [&](const LogGraph& x) { return x.group_key == g.group_key; });
        if (!used) s.test.push_back(std::move(g));
      }
    }
    return s;
  });
  for (auto& w : parts.warnings) report.warnings.push_back(w);
  report.n_train = parts.train.size();
  report.n_val = parts.val.size();
  report.n_test = parts.test.size();
  if (parts.train.empty()) throw Error(ErrorCode::EmptyTrainingSet, "stage split: no training graphs");

  auto model = detail::run_stage("train", report, [&] {
    auto train_prepared = prepare_all(parts.train, cfg.model);
    ValidationSet val;
    val.graphs = prepare_all(parts.val, cfg.model);
    for (const auto& g : parts.val) val.anomalous.push_back(g.label == Label::Anomalous);
    auto m = fit(train_prepared, cfg.model, tc, &val);
    save_model(m, out("model.json"));
    return m;
  });

  auto test_prepared = prepare_all(parts.test, cfg.model);
  auto scores = detail::run_stage("score", report, [&] {
    auto s = score_all(test_prepared, model);
    std::vector<io::ScoreRow> rows;
    for (std::size_t i = 0; i < s.size(); ++i) rows.push_back({parts.test[i].group_key, parts.test[i].label, s[i]});
    io::write_scores(out("scores.jsonl"), rows);
    return rows;
  });
  for (const auto& r : scores) report.test_scores.push_back(r.score);

  detail::run_stage("explain", report, [&] {
    if (scores.empty() || model.config.readout == Readout::Max) return;
    std::vector<double> sorted = report.test_scores;
    std::sort(sorted.begin(), sorted.end());
    const auto q_idx = static_cast<std::size_t>(std::floor(cfg.explain_quantile * static_cast<double>(sorted.size() - 1)));
    const double cutoff = sorted[std::min(q_idx, sorted.size() - 1)];
    if (cfg.write_dot) fs::create_directories(out("dot"));
    auto file = io::open_out(out("explanations.jsonl"));
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i].score < cutoff || scores[i].score < kMinExplainableScore) continue;
      auto e = explain(parts.test[i], test_prepared[i], model, &catalog);
      file << io::to_json(e, cfg.explain_top).dump() << '\n';
      if (cfg.write_dot) export_dot(parts.test[i], e, out("dot/explanation-" + std::to_string(report.explanations) + ".dot"));
      ++report.explanations;
    }
  });

  detail::run_stage("eval", report, [&] {
    report.metrics = io::eval_report(io::scored_set(scores));
  });

  io::write_json(out("report.json"), report.to_json(), 2);
  return report;
}

// ---------------------------------------------------------------------------
// synthetic structural benchmark

struct BenchSpec {
  std::size_t n_train = 1000;
  std::size_t n_test_normal = 250;
  std::size_t n_per_type = 50;
  std::vector<Perturbation> types = {Perturbation::ReverseEdge, Perturbation::ChangeEndpoint,
                                     Perturbation::DeleteEdge, Perturbation::AddEdge};
  double contamination = 0.0;
  std::uint64_t seed = 0;
  ModelConfig model;
  TrainConfig train;
};

struct BenchResult {
  std::vector<SyntheticGraph> test;
  std::vector<double> scores;
  std::vector<std::pair<Perturbation, double>> auc_by_type;
  double auc = 0.0;
  double ap = 0.0;
  std::size_t injected = 0;
  OneClassModel model;
};

inline BenchSpec bench_spec_from_json(const nlohmann::json& j) {
  BenchSpec b;
  try {
    b.n_train = j.value("n_train", b.n_train);
    b.n_test_normal = j.value("n_test_normal", b.n_test_normal);
    b.n_per_type = j.value("n_per_type", b.n_per_type);
    if (j.contains("types")) {
      b.types.clear();
      for (const auto& t : j.at("types")) b.types.push_back(perturbation_from_string(t.get<std::string>()));
    }
    b.contamination = j.value("contamination", 0.0);
    b.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("model")) b.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) b.train = train_config_from_json(j.at("train"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("bench spec: ") + e.what());
  }
  return b;
}

/// Trains on normal 4-cycles (optionally contaminated with anomalies drawn
/// from a separate pool) and scores held-out normals plus each anomaly type.
inline BenchResult bench_synth(const BenchSpec& spec) {
  spec.model.validate();
  if (spec.contamination < 0.0 || spec.contamination > 0.5) {
    throw Error(ErrorCode::Validation, "contamination must be in [0, 0.5]");
  }
  SyntheticSpec gen;
  gen.n_normal = spec.n_train + spec.n_test_normal;
  gen.n_per_type = spec.n_per_type;
  gen.types = spec.types;
  gen.seed = spec.seed;
  auto all = gen_synthetic(gen);

  std::vector<LogGraph> train;
  BenchResult r;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i < spec.n_train) {
      train.push_back(all[i].graph);
    } else {
      r.test.push_back(std::move(all[i]));
    }
  }
  if (spec.contamination > 0.0) {
    SyntheticSpec pool_spec = gen;
    pool_spec.n_normal = 0;
    pool_spec.n_per_type = contamination_count(spec.n_train, spec.contamination) / std::max<std::size_t>(1, spec.types.size()) + 1;
    pool_spec.seed = spec.seed + 1000003;
    std::vector<LogGraph> pool;
    for (auto& sg : gen_synthetic(pool_spec)) pool.push_back(std::move(sg.graph));
    auto mixed = contaminate(train, pool, spec.contamination, spec.seed + 7);
    train = std::move(mixed.items);
    r.injected = mixed.injected;
  }

  TrainConfig tc = spec.train;
  tc.seed = spec.seed;
  auto prepared = prepare_all(train, spec.model);
  r.model = fit(prepared, spec.model, tc);

  ScoredSet all_scores;
  for (const auto& sg : r.test) {
    double s = score(sg.graph, r.model);
    r.scores.push_back(s);
    all_scores.scores.push_back(s);
    all_scores.labels.push_back(sg.kind != Perturbation::None);
  }
  for (auto type : spec.types) {
    ScoredSet subset;
    for (std::size_t i = 0; i < r.test.size(); ++i) {
      if (r.test[i].kind == Perturbation::None || r.test[i].kind == type) {
        subset.scores.push_back(r.scores[i]);
        subset.labels.push_back(r.test[i].kind == type);
      }
    }
    r.auc_by_type.emplace_back(type, roc_auc(subset));
  }
  r.auc = roc_auc(all_scores);
  r.ap = average_precision(all_scores);
  return r;
}

inline nlohmann::json to_json(const BenchResult& r) {
  nlohmann::json by_type = nlohmann::json::object();
  for (const auto& [t, auc] : r.auc_by_type) by_type[std::string(to_string(t))] = auc;
  return {{"roc_auc_by_type", by_type}, {"roc_auc", r.auc}, {"ap", r.ap}, {"contamination_injected", r.injected},
          {"n_test", r.test.size()}};
}

}  // namespace logmesh
