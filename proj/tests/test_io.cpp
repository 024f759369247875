#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "logmesh/evalkit.hpp"
#include "logmesh/io.hpp"

using namespace logmesh;
namespace fs = std::filesystem;

namespace {

std::string data(const std::string& name) { return std::string(LOGMESH_TEST_DATA) + "/" + name; }

std::string scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "logmesh_io_tests";
  fs::create_directories(dir);
  return (dir / name).string();
}

FormatDescriptor hdfs_format() {
  auto fmt = io::format_from_json(io::read_json(data("hdfs_format.json")));
  io::load_masks(data("hdfs_masks.txt"), fmt);
  return fmt;
}

}  // namespace

TEST_CASE("format and masks load from the fixtures", "[io]") {
  auto fmt = hdfs_format();
  auto p = parse_line({1, "081109 203615 148 INFO dfs.DataNode$PacketResponder: PacketResponder 1 for block blk_38865049064139660 terminating"}, fmt);
  REQUIRE(p);
  CHECK(p->identifier == "blk_38865049064139660");
  CHECK(p->timestamp == "081109 203615");
  CHECK_THROWS_AS(io::format_from_json(nlohmann::json::object()), Error);
  CHECK_THROWS_AS(io::read_json(data("missing.json")), Error);
}

TEST_CASE("records and catalog round-trip", "[io]") {
  auto parsed = parse_file(data("hdfs_20.log"), hdfs_format(), DrainConfig{});
  io::write_records(scratch("records.jsonl"), parsed.records);
  io::write_catalog(scratch("catalog.json"), parsed.catalog);
  auto records = io::read_records(scratch("records.jsonl"));
  auto catalog = io::read_catalog(scratch("catalog.json"));
  REQUIRE(records.size() == parsed.records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].line_no == parsed.records[i].line_no);
    CHECK(records[i].identifier == parsed.records[i].identifier);
    CHECK(records[i].timestamp == parsed.records[i].timestamp);
    CHECK(records[i].template_id == parsed.records[i].template_id);
  }
  CHECK(catalog.templates == parsed.catalog.templates);
}

TEST_CASE("groups round-trip", "[io]") {
  auto parsed = parse_file(data("hdfs_20.log"), hdfs_format(), DrainConfig{});
  auto groups = group_by_identifier(parsed.records);
  groups[0].label = Label::Anomalous;
  io::write_groups(scratch("groups.jsonl"), groups);
  auto back = io::read_groups(scratch("groups.jsonl"));
  REQUIRE(back.size() == groups.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].key == groups[i].key);
    CHECK(back[i].label == groups[i].label);
    CHECK(back[i].template_sequence() == groups[i].template_sequence());
  }
}

TEST_CASE("embeddings and graphs round-trip", "[io]") {
  TemplateEmbeddingTable t;
  t.mode = EmbeddingMode::Semantic;
  t.rows.resize(3, 2);
  t.rows << 0.5, -1.25, 0, 0, 3, 1e-7;
  auto back = io::embeddings_from_json(io::to_json(t));
  CHECK(back.mode == EmbeddingMode::Semantic);
  CHECK(back.rows == t.rows);

  auto g = build_graph_from_sequence({2, 0, 1, 0, 2}, t, "k", Label::Anomalous);
  io::write_graphs(scratch("graphs.jsonl"), {g});
  auto gs = io::read_graphs(scratch("graphs.jsonl"));
  REQUIRE(gs.size() == 1);
  auto c = canonicalize(g);
  CHECK(gs[0].group_key == "k");
  CHECK(gs[0].label == Label::Anomalous);
  CHECK(gs[0].node_templates == c.node_templates);
  CHECK(gs[0].Y == c.Y);
  CHECK(gs[0].A == c.A);
  CHECK(gs[0].X == c.X);

  nlohmann::json bad = io::to_json(g);
  bad["edges"].push_back({0, 9, 1.0});
  CHECK_THROWS_AS(io::graph_from_json(bad), Error);
}

TEST_CASE("scores and evaluation report", "[io]") {
  std::vector<io::ScoreRow> rows = {{"a", Label::Normal, 0.1}, {"b", Label::Anomalous, 0.9}, {"c", Label::Unknown, 5.0}};
  io::write_scores(scratch("scores.jsonl"), rows);
  auto back = io::read_scores(scratch("scores.jsonl"));
  REQUIRE(back.size() == 3);
  CHECK(back[1].group_key == "b");
  CHECK(back[1].score == 0.9);
  auto set = io::scored_set(back);
  CHECK(set.scores.size() == 2);
  auto rep = io::eval_report(set);
  CHECK(rep["n_pos"] == 1);
  CHECK(rep["n_neg"] == 1);
  CHECK(rep["roc_auc"].get<double>() == 1.0);
  CHECK(rep["ap"].get<double>() == 1.0);
  auto one_class = io::eval_report(io::scored_set({{"a", Label::Normal, 0.1}}));
  CHECK(one_class["roc_auc"].is_null());
  CHECK(one_class["ap"].is_null());
}

TEST_CASE("label files by key and by line", "[io]") {
  auto by_key = io::read_labels(data("hdfs_labels.csv"));
  CHECK(by_key.lines.empty());
  CHECK(by_key.groups.size() == 4);
  CHECK(by_key.groups.at("blk_-3544583377289625738"));

  {
    std::ofstream f(scratch("line_labels.csv"));
    f << "3,Anomaly\n7,Normal\n";
  }
  auto by_line = io::read_labels(scratch("line_labels.csv"));
  CHECK(by_line.groups.empty());
  CHECK(by_line.lines.at(3));
  CHECK_FALSE(by_line.lines.at(7));

  {
    std::ofstream f(scratch("broken_labels.csv"));
    f << "3 Anomaly\n";
  }
  CHECK_THROWS_AS(io::read_labels(scratch("broken_labels.csv")), Error);
}

TEST_CASE("malformed JSON lines report a schema error", "[io]") {
  {
    std::ofstream f(scratch("bad.jsonl"));
    f << "{\"line_no\": 1, \"template_id\": 0}\n{not json\n";
  }
  try {
    io::read_records(scratch("bad.jsonl"));
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Schema);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}
