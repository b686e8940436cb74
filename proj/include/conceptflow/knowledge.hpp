#pragma once

// Commonsense knowledge substrate: concept/relation vocabularies, triples
// with bidirectional adjacency, conversation ingestion and keyword entity
// linking.

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "conceptflow/errors.hpp"
#include "conceptflow/tensor.hpp"

namespace conceptflow {

// getline that tolerates CRLF input.
inline bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

class Vocab {
 public:
  int add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(items_.size());
    items_.push_back(token);
    index_.emplace(token, id);
    return id;
  }

  // -1 when absent.
  int find(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
  }

  const std::string& name(int id) const { return items_[static_cast<size_t>(id)]; }
  int size() const { return static_cast<int>(items_.size()); }
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
};

struct Triple {
  int head;
  int relation;
  int tail;
  bool operator<(const Triple& o) const {
    return std::tie(head, relation, tail) < std::tie(o.head, o.relation, o.tail);
  }
};

struct AdjacencyEntry {
  int relation;
  int neighbor;
  bool inverse;  // true when this concept is the triple's tail
};

struct KnowledgeGraph {
  Vocab concepts;
  Vocab relations;
  std::vector<Triple> triples;
  std::vector<std::vector<AdjacencyEntry>> adjacency;  // per concept id

  int concept_count() const { return concepts.size(); }
  int relation_count() const { return relations.size(); }

  void rebuild_adjacency() {
    adjacency.assign(static_cast<size_t>(concepts.size()), {});
    for (const Triple& t : triples) {
      adjacency[static_cast<size_t>(t.head)].push_back({t.relation, t.tail, false});
      if (t.tail != t.head)
        adjacency[static_cast<size_t>(t.tail)].push_back({t.relation, t.head, true});
    }
  }
};

// Triple file: "head<TAB>relation<TAB>tail" per line, '#' comments ignored.
// Vocabularies are assigned in first-appearance order; duplicate triples are
// dropped.
inline KnowledgeGraph load_triples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open triple file: " + path);
  KnowledgeGraph kg;
  std::set<Triple> seen;
  std::string line;
  long line_no = 0;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    size_t first = line.find('\t');
    size_t second = first == std::string::npos ? std::string::npos : line.find('\t', first + 1);
    if (first == std::string::npos || second == std::string::npos ||
        line.find('\t', second + 1) != std::string::npos)
      throw ParseError(path, line_no, "expected 3 tab-separated fields");
    std::string head = line.substr(0, first);
    std::string rel = line.substr(first + 1, second - first - 1);
    std::string tail = line.substr(second + 1);
    if (head.empty() || rel.empty() || tail.empty())
      throw ParseError(path, line_no, "empty field in triple");
    Triple t{kg.concepts.add(head), kg.relations.add(rel), kg.concepts.add(tail)};
    if (seen.insert(t).second) kg.triples.push_back(t);
  }
  if (kg.triples.empty()) throw DataError("triple file has no triples: " + path);
  kg.rebuild_adjacency();
  return kg;
}

// Ids of concepts whose surface form equals a post token, ascending and
// deduplicated.
inline std::vector<int> link_entities(const std::vector<std::string>& tokens,
                                      const KnowledgeGraph& kg) {
  std::set<int> ids;
  for (const std::string& tok : tokens) {
    int id = kg.concepts.find(tok);
    if (id >= 0) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

struct ConversationExample {
  std::vector<std::string> post;
  std::vector<std::string> response;
  std::vector<int> zero_hop;  // concepts linked from the post
  std::vector<int> golden;    // concepts linked from the response
};

// Conversation file: one JSON record per line with token arrays "post" and
// "response".
inline std::vector<ConversationExample> load_conversations(const std::string& path,
                                                           const KnowledgeGraph& kg) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open conversation file: " + path);
  std::vector<ConversationExample> examples;
  std::string line;
  long line_no = 0;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded())
      throw ParseError(path, line_no, "invalid JSON record");
    if (!record.contains("post") || !record.contains("response"))
      throw ParseError(path, line_no, "record needs 'post' and 'response' fields");
    ConversationExample ex;
    for (const char* field : {"post", "response"}) {
      const auto& arr = record.at(field);
      if (!arr.is_array() || arr.empty())
        throw ParseError(path, line_no, std::string(field) + " must be a nonempty token array");
      auto& dst = field[0] == 'p' ? ex.post : ex.response;
      for (const auto& tok : arr) {
        if (!tok.is_string()) throw ParseError(path, line_no, "tokens must be strings");
        dst.push_back(tok.get<std::string>());
      }
    }
    ex.zero_hop = link_entities(ex.post, kg);
    ex.golden = link_entities(ex.response, kg);
    examples.push_back(std::move(ex));
  }
  return examples;
}

// Embedding file: header "<count> <dim>" then "<token> <v1> ... <vd>" per
// line. Doubles round-trip exactly.
inline void save_embedding_file(const std::string& path,
                                const std::vector<std::string>& names,
                                const std::vector<Vec>& rows) {
  if (names.size() != rows.size())
    throw DataError("embedding save: name/row count mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embedding file: " + path);
  size_t dim = rows.empty() ? 0 : rows.front().size();
  out << names.size() << ' ' << dim << '\n';
  out.precision(17);
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i].find_first_of(" \t") != std::string::npos)
      throw DataError("embedding save: token contains whitespace: " + names[i]);
    if (rows[i].size() != dim) throw DataError("embedding save: ragged rows");
    out << names[i];
    for (double v : rows[i]) out << ' ' << v;
    out << '\n';
  }
}

struct EmbeddingFile {
  std::vector<std::string> names;
  std::vector<Vec> rows;
};

inline EmbeddingFile load_embedding_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);
  std::string line;
  if (!read_line(in, line)) throw ParseError(path, 1, "missing header");
  std::istringstream header(line);
  long count = -1, dim = -1;
  if (!(header >> count >> dim) || count < 0 || dim < 0)
    throw ParseError(path, 1, "header must be '<count> <dim>'");
  EmbeddingFile table;
  long line_no = 1;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row_in(line);
    std::string name;
    row_in >> name;
    Vec values;
    double v;
    while (row_in >> v) values.push_back(v);
    if (static_cast<long>(values.size()) != dim)
      throw ParseError(path, line_no, "expected " + std::to_string(dim) + " values");
    for (double x : values)
      if (!std::isfinite(x)) throw ParseError(path, line_no, "non-finite embedding value");
    table.names.push_back(std::move(name));
    table.rows.push_back(std::move(values));
  }
  if (static_cast<long>(table.names.size()) != count)
    throw ParseError(path, line_no, "header count " + std::to_string(count) +
                                        " does not match " + std::to_string(table.names.size()) +
                                        " rows");
  return table;
}

}  // namespace conceptflow
