// logmesh: command-line front end for the log-graph anomaly detection pipeline.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "logmesh/pipeline.hpp"

namespace {

using namespace logmesh;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("LOGMESH_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw Error(ErrorCode::Validation, std::string("LOGMESH_SEED is not an unsigned integer: ") + s);
  }
}

struct ParseArgs {
  std::string format, mask, in, out_records, out_catalog;
  DrainConfig drain;
};

int cmd_parse(const ParseArgs& a) {
  auto fmt = io::format_from_json(io::read_json(a.format));
  if (!a.mask.empty()) io::load_masks(a.mask, fmt);
  auto r = parse_file(a.in, fmt, a.drain);
  io::write_records(a.out_records, r.records);
  io::write_catalog(a.out_catalog, r.catalog);
  std::cerr << "parsed " << r.records.size() << " records, " << r.catalog.size() << " templates, " << r.malformed
            << " malformed lines skipped\n";
  return kExitOk;
}

struct GroupArgs {
  std::string records, by = "id", labels, out;
  std::size_t window = 100;
};

int cmd_group(const GroupArgs& a) {
  if (a.by != "id" && a.by != "id-window") throw Error(ErrorCode::Validation, "--by must be id or id-window");
  auto groups = group_by_identifier(io::read_records(a.records));
  const bool windowed = a.by == "id-window";
  if (!a.labels.empty()) {
    auto labels = io::read_labels(a.labels);
    if (!labels.lines.empty()) {
      if (windowed) groups = window_split_all(groups, a.window);
      label_groups(groups, labels.lines);
    } else {
      label_groups_by_key(groups, labels.groups);
      if (windowed) groups = window_split_all(groups, a.window);
    }
  } else if (windowed) {
    groups = window_split_all(groups, a.window);
  }
  io::write_groups(a.out, groups);
  std::cerr << "wrote " << groups.size() << " groups\n";
  return kExitOk;
}

struct EmbedArgs {
  std::string catalog, vectors, out;
  bool onehot = false;
};

int cmd_embed(const EmbedArgs& a) {
  auto catalog = io::read_catalog(a.catalog);
  if (!a.onehot && a.vectors.empty()) throw Error(ErrorCode::Validation, "--vectors is required unless --onehot");
  auto table = a.onehot ? onehot_table(catalog) : semantic_table(catalog, load_vectors(a.vectors));
  io::write_json(a.out, io::to_json(table));
  return kExitOk;
}

struct GraphsArgs {
  std::string groups, embeddings, out;
};

int cmd_graphs(const GraphsArgs& a) {
  auto table = io::embeddings_from_json(io::read_json(a.embeddings));
  std::vector<LogGraph> graphs;
  for (const auto& g : io::read_groups(a.groups)) graphs.push_back(build_graph(g, table));
  io::write_graphs(a.out, graphs);
  std::cerr << "wrote " << graphs.size() << " graphs\n";
  return kExitOk;
}

struct TrainArgs {
  std::string graphs, cfg, out, val_graphs;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
  ModelConfig mc;
  TrainConfig tc;
  if (!a.cfg.empty()) {
    json j = io::read_json(a.cfg);
    if (j.contains("model")) mc = model_config_from_json(j.at("model"));
    if (j.contains("train")) tc = train_config_from_json(j.at("train"));
    if (j.contains("seed")) tc.seed = j.at("seed").get<std::uint64_t>();
  }
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.lr) tc.learning_rate = *a.lr;
  if (a.seed) tc.seed = *a.seed;
  if (auto s = env_seed()) tc.seed = *s;
  mc.validate();
  if (auto p = tc.problems(); !p.empty()) throw Error(ErrorCode::Validation, p.front());

  std::vector<LogGraph> train;
  for (auto& g : io::read_graphs(a.graphs)) {
    if (g.label != Label::Anomalous) train.push_back(std::move(g));
  }
  ValidationSet val;
  if (!a.val_graphs.empty()) {
    auto vg = io::read_graphs(a.val_graphs);
    val.graphs = prepare_all(vg, mc);
    for (const auto& g : vg) val.anomalous.push_back(g.label == Label::Anomalous);
  }
  auto model = fit(prepare_all(train, mc), mc, tc, a.val_graphs.empty() ? nullptr : &val);
  save_model(model, a.out);
  std::cerr << "trained on " << train.size() << " graphs, final loss " << model.meta.final_loss << "\n";
  return kExitOk;
}

struct ScoreArgs {
  std::string model, graphs, out;
};

int cmd_score(const ScoreArgs& a) {
  auto model = load_model(a.model);
  std::vector<io::ScoreRow> rows;
  for (const auto& g : io::read_graphs(a.graphs)) rows.push_back({g.group_key, g.label, score(g, model)});
  io::write_scores(a.out, rows);
  return kExitOk;
}

struct ExplainArgs {
  std::string model, graphs, dot_dir, out, catalog;
  std::size_t top = 3;
  double min_score = 0.0;
};

int cmd_explain(const ExplainArgs& a) {
  auto model = load_model(a.model);
  std::optional<TemplateCatalog> catalog;
  if (!a.catalog.empty()) catalog = io::read_catalog(a.catalog);
  if (!a.dot_dir.empty()) std::filesystem::create_directories(a.dot_dir);
  auto out = io::open_out(a.out);
  std::size_t written = 0;
  std::size_t skipped = 0;
  for (const auto& g : io::read_graphs(a.graphs)) {
    auto prepared = prepare(g, model.config);
    if (score(prepared, model) < std::max(a.min_score, kMinExplainableScore)) {
      ++skipped;
      continue;
    }
    auto e = explain(g, prepared, model, catalog ? &*catalog : nullptr);
    out << io::to_json(e, a.top).dump() << '\n';
    if (!a.dot_dir.empty()) {
      export_dot(g, e, (std::filesystem::path(a.dot_dir) / ("explanation-" + std::to_string(written) + ".dot")).string());
    }
    ++written;
  }
  std::cerr << "explained " << written << " graphs, skipped " << skipped << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string scores, out;
};

int cmd_eval(const EvalArgs& a) {
  auto report = io::eval_report(io::scored_set(io::read_scores(a.scores)));
  io::write_json(a.out, report, 2);
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

struct BenchArgs {
  std::string spec, out_dir;
};

int cmd_bench(const BenchArgs& a) {
  BenchSpec spec = a.spec.empty() ? BenchSpec{} : bench_spec_from_json(io::read_json(a.spec));
  if (auto s = env_seed()) spec.seed = *s;
  std::filesystem::create_directories(a.out_dir);
  auto r = bench_synth(spec);
  std::vector<LogGraph> graphs;
  std::vector<io::ScoreRow> rows;
  for (std::size_t i = 0; i < r.test.size(); ++i) {
    graphs.push_back(r.test[i].graph);
    rows.push_back({r.test[i].graph.group_key, r.test[i].graph.label, r.scores[i]});
  }
  auto dir = std::filesystem::path(a.out_dir);
  io::write_graphs((dir / "test_graphs.jsonl").string(), graphs);
  io::write_scores((dir / "scores.jsonl").string(), rows);
  save_model(r.model, (dir / "model.json").string());
  json report = to_json(r);
  io::write_json((dir / "report.json").string(), report, 2);
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

struct RunArgs {
  std::string config, out_dir;
};

int cmd_run(const RunArgs& a) {
  auto cfg = pipeline_config_from_json(io::read_json(a.config));
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (auto s = env_seed()) cfg.seed = *s;
  if (auto problems = validate_config(cfg); !problems.empty()) {
    for (const auto& p : problems) std::cerr << "config error: " << p << "\n";
    return kExitValidation;
  }
  auto report = run_pipeline(cfg);
  std::cout << report.to_json().dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"logmesh: graph-based anomaly detection for event logs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", logmesh::kVersion);

  ParseArgs parse_args;
  auto* parse = app.add_subcommand("parse", "Parse a log file into records and a template catalog");
  parse->add_option("--format", parse_args.format, "Format descriptor (JSON)")->required()->check(CLI::ExistingFile);
  parse->add_option("--mask", parse_args.mask, "Mask regexes, one per line")->check(CLI::ExistingFile);
  parse->add_option("--in", parse_args.in, "Raw log file")->required()->check(CLI::ExistingFile);
  parse->add_option("--out-records", parse_args.out_records, "Records (JSON Lines)")->required();
  parse->add_option("--out-catalog", parse_args.out_catalog, "Template catalog (JSON)")->required();
  parse->add_option("--depth", parse_args.drain.depth, "Parse tree depth")->capture_default_str();
  parse->add_option("--st", parse_args.drain.similarity_threshold, "Similarity threshold")->capture_default_str();
  parse->add_option("--max-children", parse_args.drain.max_children, "Children per tree node")->capture_default_str();

  GroupArgs group_args;
  auto* group = app.add_subcommand("group", "Group records by identifier");
  group->add_option("--records", group_args.records)->required()->check(CLI::ExistingFile);
  group->add_option("--by", group_args.by, "id | id-window")->capture_default_str();
  group->add_option("--window", group_args.window, "Window size for id-window")->capture_default_str();
  group->add_option("--labels", group_args.labels, "Labels CSV (line_no,label or key,label)")->check(CLI::ExistingFile);
  group->add_option("--out", group_args.out)->required();

  EmbedArgs embed_args;
  auto* embed = app.add_subcommand("embed", "Compute template attribute vectors");
  embed->add_option("--catalog", embed_args.catalog)->required()->check(CLI::ExistingFile);
  embed->add_option("--vectors", embed_args.vectors, "Word vectors, `word v1 ... vd` per line")->check(CLI::ExistingFile);
  embed->add_flag("--onehot", embed_args.onehot, "One-hot template encoding");
  embed->add_option("--out", embed_args.out)->required();

  GraphsArgs graphs_args;
  auto* graphs = app.add_subcommand("graphs", "Build one graph per group");
  graphs->add_option("--groups", graphs_args.groups)->required()->check(CLI::ExistingFile);
  graphs->add_option("--embeddings", graphs_args.embeddings)->required()->check(CLI::ExistingFile);
  graphs->add_option("--out", graphs_args.out)->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train the one-class model on normal graphs");
  train->add_option("--graphs", train_args.graphs)->required()->check(CLI::ExistingFile);
  train->add_option("--cfg", train_args.cfg, "JSON with 'model' and 'train' sections")->check(CLI::ExistingFile);
  train->add_option("--val-graphs", train_args.val_graphs, "Labelled validation graphs")->check(CLI::ExistingFile);
  train->add_option("--epochs", train_args.epochs);
  train->add_option("--lr", train_args.lr);
  train->add_option("--seed", train_args.seed);
  train->add_option("--out", train_args.out)->required();

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "Score graphs with a trained model");
  score_cmd->add_option("--model", score_args.model)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--graphs", score_args.graphs)->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--out", score_args.out)->required();

  ExplainArgs explain_args;
  auto* explain_cmd = app.add_subcommand("explain", "Per-node importance for scored graphs");
  explain_cmd->add_option("--model", explain_args.model)->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--graphs", explain_args.graphs)->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--catalog", explain_args.catalog, "Catalog for template text")->check(CLI::ExistingFile);
  explain_cmd->add_option("--top", explain_args.top)->capture_default_str()->check(CLI::PositiveNumber);
  explain_cmd->add_option("--min-score", explain_args.min_score, "Only explain graphs at or above this score");
  explain_cmd->add_option("--dot-dir", explain_args.dot_dir, "Write one DOT file per explanation");
  explain_cmd->add_option("--out", explain_args.out)->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "ROC AUC and average precision of a score file");
  eval->add_option("--scores", eval_args.scores)->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_args.out)->required();

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench-synth", "Synthetic structural-anomaly benchmark");
  bench->add_option("--spec", bench_args.spec, "Benchmark spec (JSON)")->check(CLI::ExistingFile);
  bench->add_option("--out-dir", bench_args.out_dir)->required();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
  run->add_option("--config", run_args.config)->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", run_args.out_dir, "Overrides out_dir in the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (parse->parsed()) return cmd_parse(parse_args);
    if (group->parsed()) return cmd_group(group_args);
    if (embed->parsed()) return cmd_embed(embed_args);
    if (graphs->parsed()) return cmd_graphs(graphs_args);
    if (train->parsed()) return cmd_train(train_args);
    if (score_cmd->parsed()) return cmd_score(score_args);
    if (explain_cmd->parsed()) return cmd_explain(explain_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (bench->parsed()) return cmd_bench(bench_args);
    if (run->parsed()) return cmd_run(run_args);
  } catch (const logmesh::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == logmesh::ErrorCode::Validation ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
