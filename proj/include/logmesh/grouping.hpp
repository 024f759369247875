#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "logmesh/error.hpp"
#include "logmesh/logparse.hpp"

namespace logmesh {

enum class Label { Normal, Anomalous, Unknown };

constexpr std::string_view to_string(Label l) {
  switch (l) {
    case Label::Normal: return "normal";
    case Label::Anomalous: return "anomalous";
    case Label::Unknown: return "unknown";
  }
  return "unknown";
}

inline Label label_from_string(std::string_view s) {
  if (s == "normal" || s == "0" || s == "Normal" || s == "-") return Label::Normal;
  if (s == "anomalous" || s == "anomaly" || s == "1" || s == "Anomaly" || s == "Anomalous") {
    return Label::Anomalous;
  }
  if (s == "unknown" || s.empty()) return Label::Unknown;
  throw Error(ErrorCode::Format, "unrecognised label: " + std::string(s));
}

struct LogGroup {
  std::string key;
  std::vector<LogRecord> records;
  Label label = Label::Unknown;

  std::vector<std::size_t> template_sequence() const {
    std::vector<std::size_t> seq;
    seq.reserve(records.size());
    for (const auto& r : records) seq.push_back(r.template_id);
    return seq;
  }
};

/// One group per distinct identifier, ordered by first appearance.
inline std::vector<LogGroup> group_by_identifier(const std::vector<LogRecord>& records) {
  std::vector<LogGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : records) {
    if (r.identifier.empty()) {
      throw Error(ErrorCode::MissingIdentifier,
                  "record at line " + std::to_string(r.line_no) + " has no identifier");
    }
    auto [it, fresh] = index.try_emplace(r.identifier, groups.size());
    if (fresh) groups.push_back(LogGroup{r.identifier, {}, Label::Unknown});
    groups[it->second].records.push_back(r);
  }
  return groups;
}

/// Consecutive chunks of `window_size` records; a short tail is kept as its own group.
inline std::vector<LogGroup> window_split(const LogGroup& group, std::size_t window_size = 100) {
  if (window_size == 0) throw Error(ErrorCode::Validation, "window size must be >= 1");
  std::vector<LogGroup> out;
  for (std::size_t start = 0, w = 0; start < group.records.size(); start += window_size, ++w) {
    LogGroup g;
    g.key = group.key + "#" + std::to_string(w);
    g.label = group.label;
    std::size_t end = std::min(group.records.size(), start + window_size);
    g.records.assign(group.records.begin() + static_cast<std::ptrdiff_t>(start),
                     group.records.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(g));
  }
  return out;
}

inline std::vector<LogGroup> window_split_all(const std::vector<LogGroup>& groups,
                                              std::size_t window_size) {
  std::vector<LogGroup> out;
  for (const auto& g : groups) {
    auto parts = window_split(g, window_size);
    out.insert(out.end(), std::make_move_iterator(parts.begin()), std::make_move_iterator(parts.end()));
  }
  return out;
}

/// Line labels keyed by line number. An empty map means no labels are available.
using LineLabels = std::unordered_map<std::size_t, bool>;

/// Group-level labels keyed by group key (HDFS-style label files).
using GroupLabels = std::unordered_map<std::string, bool>;

/// A group is anomalous iff it contains at least one anomalous line.
inline void label_groups(std::vector<LogGroup>& groups, const LineLabels& line_labels) {
  for (auto& g : groups) {
    if (line_labels.empty()) {
      g.label = Label::Unknown;
      continue;
    }
    bool anomalous = false;
    for (const auto& r : g.records) {
      auto it = line_labels.find(r.line_no);
      if (it != line_labels.end() && it->second) {
        anomalous = true;
        break;
      }
    }
    g.label = anomalous ? Label::Anomalous : Label::Normal;
  }
}

/// Applies identifier-level labels; a window inherits its identifier's label.
inline void label_groups_by_key(std::vector<LogGroup>& groups, const GroupLabels& labels) {
  for (auto& g : groups) {
    std::string key = g.key.substr(0, g.key.find('#'));
    auto it = labels.find(key);
    g.label = it == labels.end() ? Label::Unknown : (it->second ? Label::Anomalous : Label::Normal);
  }
}

}  // namespace logmesh
