#pragma once

// Log line parsing and online template mining with a fixed-depth prefix tree.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "logmesh/error.hpp"

namespace logmesh {

inline constexpr std::string_view kWildcard = "<*>";

struct RawLine {
  std::size_t line_no = 0;
  std::string text;
};

struct MaskRule {
  std::string pattern;
  std::regex re;
};

/// Describes how one log line splits into header fields and content.
///
/// The layout string uses `<Name>` placeholders separated by literal text,
/// e.g. `<Date> <Time> <Pid> <Level> <Component>: <Content>`. Runs of spaces
/// in the literal text match any amount of whitespace.
class FormatDescriptor {
 public:
  FormatDescriptor() = default;

  static FormatDescriptor from_layout(const std::string& layout) {
    FormatDescriptor fmt;
    fmt.layout_ = layout;
    static const std::regex placeholder(R"(<([^<>]+)>)");
    std::string pattern = "^";
    std::size_t pos = 0;
    int contents = 0;
    for (auto it = std::sregex_iterator(layout.begin(), layout.end(), placeholder);
         it != std::sregex_iterator(); ++it) {
      pattern += escape_literal(layout.substr(pos, it->position() - pos));
      std::string name = (*it)[1].str();
      if (name == "Content") {
        ++contents;
        pattern += "(.*)";
      } else {
        pattern += "(.*?)";
      }
      fmt.fields_.push_back(name);
      pos = it->position() + it->length();
    }
    pattern += escape_literal(layout.substr(pos)) + "$";
    if (contents != 1) {
      throw Error(ErrorCode::Format, "layout must contain exactly one <Content> field: " + layout);
    }
    fmt.line_re_ = std::regex(pattern);
    return fmt;
  }

  void add_mask(const std::string& pattern) {
    try {
      masks_.push_back({pattern, std::regex(pattern)});
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::Format, "invalid mask regex '" + pattern + "': " + e.what());
    }
  }

  void set_identifier_field(std::string field) {
    if (std::find(fields_.begin(), fields_.end(), field) == fields_.end()) {
      throw Error(ErrorCode::Format, "identifier field not in layout: " + field);
    }
    id_field_ = std::move(field);
    id_regex_.reset();
  }

  /// The first match in the content becomes the identifier; capture group 1
  /// is used when the pattern has one.
  void set_identifier_regex(const std::string& pattern) {
    try {
      id_regex_ = std::regex(pattern);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::Format, "invalid identifier regex '" + pattern + "': " + e.what());
    }
    id_pattern_ = pattern;
    id_field_.clear();
  }

  const std::string& layout() const { return layout_; }
  const std::vector<std::string>& fields() const { return fields_; }
  const std::vector<MaskRule>& masks() const { return masks_; }
  const std::regex& line_regex() const { return line_re_; }
  const std::string& identifier_field() const { return id_field_; }
  const std::optional<std::regex>& identifier_regex() const { return id_regex_; }
  const std::string& identifier_pattern() const { return id_pattern_; }

 private:
  static std::string escape_literal(const std::string& text) {
    std::string out;
    bool in_space = false;
    for (char c : text) {
      if (c == ' ') {
        if (!in_space) out += "\\s+";
        in_space = true;
        continue;
      }
      in_space = false;
      if (std::string_view(R"(\^$.|?*+()[]{}/)").find(c) != std::string_view::npos) out += '\\';
      out += c;
    }
    return out;
  }

  std::string layout_;
  std::vector<std::string> fields_;
  std::regex line_re_;
  std::vector<MaskRule> masks_;
  std::string id_field_;
  std::string id_pattern_;
  std::optional<std::regex> id_regex_;
};

struct ParsedLine {
  std::vector<std::pair<std::string, std::string>> header;
  std::string timestamp;
  std::string identifier;
  std::vector<std::string> tokens;
};

inline std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string apply_masks(std::string content, const std::vector<MaskRule>& masks) {
  for (const auto& m : masks) content = std::regex_replace(content, m.re, std::string(kWildcard));
  return content;
}

/// Splits a raw line per the descriptor. Returns nullopt for a malformed line
/// (no layout match or empty content).
inline std::optional<ParsedLine> parse_line(const RawLine& raw, const FormatDescriptor& fmt) {
  std::smatch m;
  std::string text = raw.text;
  while (!text.empty() && (text.back() == '\r' || text.back() == '\n')) text.pop_back();
  if (!std::regex_match(text, m, fmt.line_regex())) return std::nullopt;

  ParsedLine out;
  std::string content;
  for (std::size_t i = 0; i < fmt.fields().size(); ++i) {
    const auto& name = fmt.fields()[i];
    std::string value = m[i + 1].str();
    if (name == "Content") {
      content = value;
    } else {
      out.header.emplace_back(name, value);
      if (name == "Date" || name == "Time" || name == "Timestamp") {
        if (!out.timestamp.empty()) out.timestamp += ' ';
        out.timestamp += value;
      }
      if (name == fmt.identifier_field()) out.identifier = value;
    }
  }
  if (split_whitespace(content).empty()) return std::nullopt;

  if (const auto& id_re = fmt.identifier_regex()) {
    std::smatch idm;
    if (std::regex_search(content, idm, *id_re)) {
      out.identifier = idm.size() > 1 && idm[1].matched ? idm[1].str() : idm[0].str();
    }
  }
  out.tokens = split_whitespace(apply_masks(content, fmt.masks()));
  return out;
}

struct TemplateCatalog {
  std::vector<std::vector<std::string>> templates;
  std::vector<std::size_t> counts;

  std::size_t size() const { return templates.size(); }
  bool empty() const { return templates.empty(); }

  std::string text(std::size_t id) const {
    std::string out;
    for (const auto& t : templates.at(id)) {
      if (!out.empty()) out += ' ';
      out += t;
    }
    return out;
  }
};

struct DrainConfig {
  std::size_t depth = 4;
  double similarity_threshold = 0.4;
  std::size_t max_children = 100;
};

inline bool has_digit(std::string_view token) {
  return std::any_of(token.begin(), token.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

/// Online template miner. Sequences are partitioned by length, then routed
/// through `depth - 3` layers keyed by their leading tokens; the leaf holds
/// candidate templates compared by positional similarity.
class DrainTree {
 public:
  explicit DrainTree(DrainConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.depth < 3) throw Error(ErrorCode::Validation, "drain depth must be >= 3");
    if (!(cfg_.similarity_threshold > 0.0 && cfg_.similarity_threshold < 1.0)) {
      throw Error(ErrorCode::Validation, "drain similarity threshold must be in (0,1)");
    }
    if (cfg_.max_children < 2) throw Error(ErrorCode::Validation, "drain max_children must be >= 2");
  }

  const DrainConfig& config() const { return cfg_; }
  const TemplateCatalog& catalog() const { return catalog_; }

  /// Fraction of positions where template and sequence hold the same token.
  static double similarity(const std::vector<std::string>& tmpl, const std::vector<std::string>& seq) {
    if (tmpl.size() != seq.size() || seq.empty()) return 0.0;
    std::size_t same = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) same += tmpl[i] == seq[i] ? 1 : 0;
    return static_cast<double>(same) / static_cast<double>(seq.size());
  }

  std::size_t insert(const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw Error(ErrorCode::Validation, "cannot insert an empty token list");

    if (Node* leaf = find_leaf(tokens)) {
      std::optional<std::size_t> best;
      double best_sim = -1.0;
      std::size_t best_wild = 0;
      for (std::size_t id : leaf->clusters) {
        const auto& t = catalog_.templates[id];
        double sim = similarity(t, tokens);
        auto wild = static_cast<std::size_t>(std::count(t.begin(), t.end(), kWildcard));
        if (sim > best_sim || (sim == best_sim && wild > best_wild)) {
          best = id;
          best_sim = sim;
          best_wild = wild;
        }
      }
      if (best && best_sim >= cfg_.similarity_threshold) {
        auto& t = catalog_.templates[*best];
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (t[i] != tokens[i]) t[i] = std::string(kWildcard);
        }
        ++catalog_.counts[*best];
        return *best;
      }
    }

    std::size_t id = catalog_.templates.size();
    catalog_.templates.push_back(tokens);
    catalog_.counts.push_back(1);
    add_path(tokens)->clusters.push_back(id);
    return id;
  }

 private:
  struct Node {
    std::map<std::string, std::unique_ptr<Node>> children;
    std::vector<std::size_t> clusters;
  };

  std::size_t token_layers() const { return cfg_.depth - 3; }

  // Lookup only: exact token branch first, then the wildcard branch.
  Node* find_leaf(const std::vector<std::string>& tokens) {
    auto len = by_length_.find(tokens.size());
    if (len == by_length_.end()) return nullptr;
    Node* node = &len->second;
    const std::string wild(kWildcard);
    for (std::size_t i = 0; i < token_layers() && i < tokens.size(); ++i) {
      auto found = node->children.find(tokens[i]);
      if (found == node->children.end()) found = node->children.find(wild);
      if (found == node->children.end()) return nullptr;
      node = found->second.get();
    }
    return node;
  }

  Node* child(Node* parent, const std::string& key) {
    auto& slot = parent->children[key];
    if (!slot) slot = std::make_unique<Node>();
    return slot.get();
  }

  // Creates the branch for a new template. Tokens with digits go to the
  // wildcard branch, as do tokens arriving at a node that is full.
  Node* add_path(const std::vector<std::string>& tokens) {
    Node* node = &by_length_[tokens.size()];
    const std::string wild(kWildcard);
    for (std::size_t i = 0; i < token_layers() && i < tokens.size(); ++i) {
      const std::string& tok = tokens[i];
      if (auto found = node->children.find(tok); found != node->children.end()) {
        node = found->second.get();
      } else if (has_digit(tok)) {
        node = child(node, wild);
      } else if (node->children.count(wild) > 0) {
        node = node->children.size() < cfg_.max_children ? child(node, tok) : child(node, wild);
      } else if (node->children.size() + 1 < cfg_.max_children) {
        node = child(node, tok);
      } else {
        node = child(node, wild);
      }
    }
    return node;
  }

  DrainConfig cfg_;
  std::map<std::size_t, Node> by_length_;
  TemplateCatalog catalog_;
};

struct LogRecord {
  std::size_t line_no = 0;
  std::string timestamp;
  std::string identifier;
  std::vector<std::string> tokens;
  std::size_t template_id = 0;
};

struct ParseResult {
  std::vector<LogRecord> records;
  TemplateCatalog catalog;
  std::size_t malformed = 0;
};

/// Parses a stream line by line. Blank lines are ignored; lines that do not
/// fit the descriptor are skipped and counted.
inline ParseResult parse_stream(std::istream& in, const FormatDescriptor& fmt, DrainTree& tree) {
  ParseResult out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_whitespace(line).empty()) continue;
    auto parsed = parse_line({line_no, line}, fmt);
    if (!parsed) {
      ++out.malformed;
      continue;
    }
    LogRecord rec;
    rec.line_no = line_no;
    rec.timestamp = std::move(parsed->timestamp);
    rec.identifier = std::move(parsed->identifier);
    rec.tokens = std::move(parsed->tokens);
    rec.template_id = tree.insert(rec.tokens);
    out.records.push_back(std::move(rec));
  }
  out.catalog = tree.catalog();
  return out;
}

inline ParseResult parse_file(const std::string& path, const FormatDescriptor& fmt,
                              const DrainConfig& cfg = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open log file: " + path);
  DrainTree tree(cfg);
  return parse_stream(in, fmt, tree);
}

}  // namespace logmesh
