#pragma once

// Template attribute vectors: word preprocessing, TF-IDF weighting and
// weighted sums of pre-trained word vectors, plus the one-hot encoding.

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "logmesh/error.hpp"
#include "logmesh/logparse.hpp"

namespace logmesh {

inline const std::unordered_set<std::string>& stop_words() {
  static const std::unordered_set<std::string> words = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're", "you've",
      "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he", "him", "his",
      "himself", "she", "she's", "her", "hers", "herself", "it", "it's", "its", "itself",
      "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom", "this",
      "that", "that'll", "these", "those", "am", "is", "are", "was", "were", "be", "been",
      "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an", "the",
      "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by", "for",
      "with", "about", "against", "between", "into", "through", "during", "before", "after",
      "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under",
      "again", "further", "then", "once", "here", "there", "when", "where", "why", "how", "all",
      "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
      "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don",
      "don't", "should", "should've", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain",
      "aren", "aren't", "couldn", "couldn't", "didn", "didn't", "doesn", "doesn't", "hadn",
      "hadn't", "hasn", "hasn't", "haven", "haven't", "isn", "isn't", "ma", "mightn",
      "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't", "shouldn",
      "shouldn't", "wasn", "wasn't", "weren", "weren't", "won", "won't", "wouldn", "wouldn't"};
  return words;
}

namespace detail {

inline bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
inline bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }

// camelCase / PascalCase / ACRONYMWord boundaries.
inline std::vector<std::string> split_camel(const std::string& word) {
  std::vector<std::string> parts;
  std::string cur;
  for (std::size_t i = 0; i < word.size(); ++i) {
    char c = word[i];
    if (!cur.empty() && is_upper(c)) {
      char prev = word[i - 1];
      bool next_lower = i + 1 < word.size() && is_lower(word[i + 1]);
      if (is_lower(prev) || (is_upper(prev) && next_lower)) {
        parts.push_back(cur);
        cur.clear();
      }
    }
    cur += c;
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

inline std::string trim_punct(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

/// Template tokens to lower-case content words. Wildcards are dropped,
/// surrounding punctuation is trimmed, compound words are split on `_`, `-`
/// and case changes, and any part that is not purely alphabetic or is a stop
/// word is removed.
inline std::vector<std::string> preprocess(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  for (const auto& tok : tokens) {
    if (tok == kWildcard) continue;
    std::string trimmed = detail::trim_punct(tok);
    std::string piece;
    std::vector<std::string> pieces;
    for (char c : trimmed) {
      if (c == '_' || c == '-') {
        if (!piece.empty()) pieces.push_back(piece);
        piece.clear();
      } else {
        piece += c;
      }
    }
    if (!piece.empty()) pieces.push_back(piece);

    for (const auto& p : pieces) {
      for (auto& w : detail::split_camel(p)) {
        if (w.empty() || !std::all_of(w.begin(), w.end(), detail::is_alpha)) continue;
        std::transform(w.begin(), w.end(), w.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (stop_words().count(w) > 0) continue;
        out.push_back(w);
      }
    }
  }
  return out;
}

struct WordVectorTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, Eigen::VectorXd> vectors;
  std::size_t duplicates = 0;

  const Eigen::VectorXd* find(const std::string& w) const {
    auto it = vectors.find(w);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

/// Text format: `word v1 ... v_d` per line. Repeated words keep the last entry.
inline WordVectorTable load_vectors(std::istream& in) {
  WordVectorTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    std::vector<double> values;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorCode::Format, "non-numeric value on line " + std::to_string(line_no));
      }
    }
    if (values.empty()) throw Error(ErrorCode::Format, "no vector on line " + std::to_string(line_no));
    if (table.dim == 0) table.dim = values.size();
    if (values.size() != table.dim) {
      throw Error(ErrorCode::Format, "line " + std::to_string(line_no) + " has " +
                                         std::to_string(values.size()) + " values, expected " +
                                         std::to_string(table.dim));
    }
    Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    auto [it, fresh] = table.vectors.insert_or_assign(word, std::move(v));
    if (!fresh) ++table.duplicates;
  }
  return table;
}

inline WordVectorTable load_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open vector file: " + path);
  return load_vectors(in);
}

using WordWeights = std::map<std::string, double>;

/// Documents are templates: tf = count/len, idf = ln(N/df), no smoothing.
inline std::vector<WordWeights> tfidf(const std::vector<std::vector<std::string>>& corpus) {
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    for (const auto& w : std::set<std::string>(doc.begin(), doc.end())) ++df[w];
  }
  const double n_docs = static_cast<double>(corpus.size());
  std::vector<WordWeights> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus) {
    WordWeights weights;
    std::map<std::string, std::size_t> tf;
    for (const auto& w : doc) ++tf[w];
    for (const auto& [w, c] : tf) {
      double idf = std::log(n_docs / static_cast<double>(df[w]));
      weights[w] = static_cast<double>(c) / static_cast<double>(doc.size()) * idf;
    }
    out.push_back(std::move(weights));
  }
  return out;
}

/// Weighted sum of word vectors; out-of-vocabulary words contribute nothing.
inline Eigen::VectorXd embed_template(const std::vector<std::string>& words, const WordWeights& weights,
                                      const WordVectorTable& table) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table.dim));
  for (const auto& w : std::set<std::string>(words.begin(), words.end())) {
    const Eigen::VectorXd* wv = table.find(w);
    if (wv == nullptr) continue;
    auto it = weights.find(w);
    double weight = it == weights.end() ? 0.0 : it->second;
    v += weight * *wv;
  }
  return v;
}

enum class EmbeddingMode { Semantic, OneHot };

struct TemplateEmbeddingTable {
  EmbeddingMode mode = EmbeddingMode::Semantic;
  Eigen::MatrixXd rows;  // one row per template id

  std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(rows.cols()); }
};

inline TemplateEmbeddingTable onehot_table(std::size_t n_templates) {
  if (n_templates == 0) throw Error(ErrorCode::Validation, "one-hot table needs at least one template");
  auto n = static_cast<Eigen::Index>(n_templates);
  return {EmbeddingMode::OneHot, Eigen::MatrixXd::Identity(n, n)};
}

inline TemplateEmbeddingTable onehot_table(const TemplateCatalog& catalog) {
  return onehot_table(catalog.size());
}

inline TemplateEmbeddingTable semantic_table(const TemplateCatalog& catalog, const WordVectorTable& table) {
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(catalog.size());
  for (const auto& t : catalog.templates) corpus.push_back(preprocess(t));
  auto weights = tfidf(corpus);
  TemplateEmbeddingTable out;
  out.mode = EmbeddingMode::Semantic;
  out.rows.setZero(static_cast<Eigen::Index>(catalog.size()), static_cast<Eigen::Index>(table.dim));
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    out.rows.row(static_cast<Eigen::Index>(i)) = embed_template(corpus[i], weights[i], table).transpose();
  }
  return out;
}

}  // namespace logmesh
