#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "logmesh/logparse.hpp"

using namespace logmesh;

namespace {

FormatDescriptor hdfs_format() {
  auto fmt = FormatDescriptor::from_layout("<Date> <Time> <Pid> <Level> <Component>: <Content>");
  fmt.set_identifier_regex(R"((blk_-?\d+))");
  fmt.add_mask(R"(blk_-?\d+)");
  fmt.add_mask(R"((\d+\.){3}\d+(:\d+)?)");
  return fmt;
}

using Tokens = std::vector<std::string>;

}  // namespace

TEST_CASE("parse_line splits header and masks content", "[logparse]") {
  auto fmt = FormatDescriptor::from_layout("<Date> <Time> <Pid> <Level> <Component>: <Content>");
  fmt.add_mask(R"(blk_\d+)");
  auto p = parse_line({1, "081109 203518 143 INFO dfs.DataNode: PacketResponder 1 for block blk_38865 terminating"}, fmt);
  REQUIRE(p);
  CHECK(p->tokens == Tokens{"PacketResponder", "1", "for", "block", "<*>", "terminating"});
  CHECK(p->timestamp == "081109 203518");
  REQUIRE(p->header.size() == 5);
  CHECK(p->header[4] == std::pair<std::string, std::string>{"Component", "dfs.DataNode"});
}

TEST_CASE("parse_line without content is malformed", "[logparse]") {
  auto fmt = FormatDescriptor::from_layout("<Date> <Time> <Pid> <Level> <Component>: <Content>");
  CHECK_FALSE(parse_line({1, "081109 203518 143 INFO dfs.DataNode: "}, fmt));
  CHECK_FALSE(parse_line({2, "not a log line"}, fmt));
}

TEST_CASE("parse_line with no masks leaves tokens untouched", "[logparse]") {
  auto fmt = FormatDescriptor::from_layout("<Level> <Content>");
  auto p = parse_line({1, "WARN disk blk_12 at 10.0.0.1"}, fmt);
  REQUIRE(p);
  CHECK(p->tokens == Tokens{"disk", "blk_12", "at", "10.0.0.1"});
}

TEST_CASE("identifier comes from a field or a content regex", "[logparse]") {
  auto fmt = FormatDescriptor::from_layout("<User> <Level> <Content>");
  fmt.set_identifier_field("User");
  auto p = parse_line({1, "alice INFO login ok"}, fmt);
  REQUIRE(p);
  CHECK(p->identifier == "alice");

  auto h = hdfs_format();
  auto q = parse_line({1, "081109 203518 143 INFO dfs.DataNode: Served block blk_-42 to /10.1.2.3"}, h);
  REQUIRE(q);
  CHECK(q->identifier == "blk_-42");
  CHECK(q->tokens == Tokens{"Served", "block", "<*>", "to", "/<*>"});
}

TEST_CASE("format descriptor rejects bad layouts and regexes", "[logparse]") {
  CHECK_THROWS_AS(FormatDescriptor::from_layout("<Date> <Time>"), Error);
  CHECK_THROWS_AS(FormatDescriptor::from_layout("<Content> <Content>"), Error);
  auto fmt = FormatDescriptor::from_layout("<Content>");
  CHECK_THROWS_AS(fmt.add_mask("(unclosed"), Error);
  CHECK_THROWS_AS(fmt.set_identifier_field("Nope"), Error);
}

TEST_CASE("drain merges sequences that differ in one of three tokens", "[logparse]") {
  DrainTree tree({4, 0.4, 100});
  auto a = tree.insert({"open", "file", "A"});
  auto b = tree.insert({"open", "file", "B"});
  CHECK(a == b);
  REQUIRE(tree.catalog().size() == 1);
  CHECK(tree.catalog().templates[0] == Tokens{"open", "file", "<*>"});
  CHECK(tree.catalog().counts[0] == 2);
}

TEST_CASE("drain repeated sequence gets the same id", "[logparse]") {
  DrainTree tree;
  auto a = tree.insert({"connection", "closed"});
  auto b = tree.insert({"connection", "closed"});
  CHECK(a == b);
  CHECK(tree.catalog().counts[a] == 2);
}

TEST_CASE("drain never merges across lengths", "[logparse]") {
  DrainTree tree;
  auto a = tree.insert({"open", "file"});
  auto b = tree.insert({"open", "file", "now"});
  CHECK(a != b);
  CHECK(tree.catalog().size() == 2);
}

TEST_CASE("drain below threshold opens a new template", "[logparse]") {
  DrainTree tree({4, 0.7, 100});
  auto a = tree.insert({"open", "file", "A"});
  auto b = tree.insert({"open", "file", "B"});  // 2/3 < 0.7
  CHECK(a != b);
}

TEST_CASE("drain similarity counts positional matches", "[logparse]") {
  CHECK(DrainTree::similarity({"a", "b", "c"}, {"a", "x", "c"}) == Catch::Approx(2.0 / 3.0));
  CHECK(DrainTree::similarity({"a", "<*>"}, {"a", "b"}) == Catch::Approx(0.5));
}

TEST_CASE("drain routes digit tokens through the wildcard branch", "[logparse]") {
  DrainTree tree({5, 0.5, 100});
  auto a = tree.insert({"job", "17", "started", "now"});
  auto b = tree.insert({"job", "42", "started", "now"});
  CHECK(a == b);
  CHECK(tree.catalog().templates[a] == Tokens{"job", "<*>", "started", "now"});
}

TEST_CASE("drain rejects invalid configuration", "[logparse]") {
  CHECK_THROWS_AS(DrainTree({2, 0.4, 100}), Error);
  CHECK_THROWS_AS(DrainTree({4, 0.0, 100}), Error);
  CHECK_THROWS_AS(DrainTree({4, 1.0, 100}), Error);
}

TEST_CASE("parse of empty input gives empty catalog", "[logparse]") {
  std::istringstream in("");
  DrainTree tree;
  auto r = parse_stream(in, hdfs_format(), tree);
  CHECK(r.records.empty());
  CHECK(r.catalog.empty());
}

TEST_CASE("single-template file yields one template", "[logparse]") {
  std::istringstream in(
      "081109 203518 143 INFO dfs.DataNode: PacketResponder 1 for block blk_1 terminating\n"
      "081109 203519 143 INFO dfs.DataNode: PacketResponder 2 for block blk_2 terminating\n"
      "081109 203520 143 INFO dfs.DataNode: PacketResponder 0 for block blk_3 terminating\n");
  DrainTree tree;
  auto r = parse_stream(in, hdfs_format(), tree);
  CHECK(r.records.size() == 3);
  CHECK(r.catalog.size() == 1);
}

TEST_CASE("20-line fixture has the three hand-listed templates", "[logparse]") {
  auto r = parse_file(LOGMESH_TEST_DATA "/hdfs_20.log", hdfs_format());
  CHECK(r.records.size() == 20);
  CHECK(r.malformed == 0);
  REQUIRE(r.catalog.size() == 3);
  const std::vector<Tokens> expected = {
      {"Receiving", "block", "<*>", "src:", "/<*>", "dest:", "/<*>"},
      {"BLOCK*", "NameSystem.allocateBlock:", "<*>", "<*>"},
      {"PacketResponder", "<*>", "for", "block", "<*>", "terminating"},
  };
  CHECK(r.catalog.templates == expected);
  CHECK(r.catalog.counts == std::vector<std::size_t>{8, 5, 7});
  for (const auto& rec : r.records) CHECK(rec.template_id < r.catalog.size());
  CHECK(r.records.front().identifier == "blk_-1608999687919862906");
}

TEST_CASE("malformed lines are skipped and counted", "[logparse]") {
  std::istringstream in(
      "081109 203518 143 INFO dfs.DataNode: PacketResponder 1 for block blk_1 terminating\n"
      "garbage\n"
      "\n"
      "081109 203519 143 INFO dfs.DataNode: \n");
  DrainTree tree;
  auto r = parse_stream(in, hdfs_format(), tree);
  CHECK(r.records.size() == 1);
  CHECK(r.malformed == 2);
  CHECK(r.records[0].line_no == 1);
}

TEST_CASE("parsing is deterministic and prefix consistent", "[logparse]") {
  std::mt19937_64 rng(7);
  const std::vector<Tokens> pool = {{"a", "b", "c"}, {"a", "x", "c"}, {"q", "r"}, {"q", "7"},
                                    {"z", "y", "x", "w"}, {"z", "y", "v", "u"}, {"n", "1", "2"}};
  std::vector<Tokens> seq;
  for (int i = 0; i < 300; ++i) seq.push_back(pool[rng() % pool.size()]);

  DrainTree full;
  DrainTree again;
  std::vector<std::size_t> ids;
  for (const auto& t : seq) ids.push_back(full.insert(t));
  for (std::size_t i = 0; i < seq.size(); ++i) CHECK(again.insert(seq[i]) == ids[i]);
  CHECK(full.catalog().templates == again.catalog().templates);

  for (std::size_t cut : {10u, 77u, 150u}) {
    DrainTree prefix;
    for (std::size_t i = 0; i < cut; ++i) REQUIRE(prefix.insert(seq[i]) == ids[i]);
    CHECK(prefix.catalog().size() <= full.catalog().size());
  }
}
