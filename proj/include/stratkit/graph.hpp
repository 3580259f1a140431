#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stratkit/cohort.hpp"
#include "stratkit/common.hpp"

namespace stratkit {

// Node tokens are namespaced and whitespace-sanitized so they survive the
// space-separated edge-list and .emb formats:
//   P:<phenotype>   G:<gene>-PATH|-VUS   D:gender_male|gender_female
inline std::string sanitize_token(std::string t) {
  for (char& c : t) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') c = '_';
  }
  return t;
}

inline std::string node_token(FeatureKind kind, const std::string& raw) {
  switch (kind) {
    case FeatureKind::phenotype: return "P:" + sanitize_token(raw);
    case FeatureKind::genetic: return "G:" + sanitize_token(raw);
    case FeatureKind::demographic: return "D:" + sanitize_token(raw);
  }
  return raw;
}

inline std::string gender_node_token(Gender g) {
  return g == Gender::male ? "D:gender_male" : "D:gender_female";
}

// Undirected weighted graph over feature nodes. Phenotype and demographic
// nodes form one side, genetic nodes the other.
struct FeatureGraph {
  std::vector<std::string> tokens;  // node id -> namespaced token
  std::vector<FeatureKind> kinds;
  std::unordered_map<std::string, int> index;
  std::vector<std::vector<std::pair<int, double>>> adj;  // sorted by neighbor
  std::size_t num_edges = 0;

  std::size_t num_nodes() const { return tokens.size(); }

  static bool genetic_side(FeatureKind k) { return k == FeatureKind::genetic; }

  int find_node(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? -1 : it->second;
  }

  int add_node(const std::string& token, FeatureKind kind) {
    auto it = index.find(token);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(tokens.size());
    tokens.push_back(token);
    kinds.push_back(kind);
    adj.emplace_back();
    index.emplace(token, id);
    return id;
  }

  bool has_edge(int u, int v) const {
    const auto& nbrs = adj[static_cast<std::size_t>(u)];
    auto it = std::lower_bound(
        nbrs.begin(), nbrs.end(), v,
        [](const std::pair<int, double>& e, int node) { return e.first < node; });
    return it != nbrs.end() && it->first == v;
  }

  double edge_weight(int u, int v) const {
    const auto& nbrs = adj[static_cast<std::size_t>(u)];
    auto it = std::lower_bound(
        nbrs.begin(), nbrs.end(), v,
        [](const std::pair<int, double>& e, int node) { return e.first < node; });
    return (it != nbrs.end() && it->first == v) ? it->second : 0.0;
  }

  // Inserts an undirected edge keeping adjacency sorted. Duplicates and
  // self-loops are contract violations here; callers validate first.
  void add_edge(int u, int v, double w) {
    auto insert_dir = [this](int a, int b, double weight) {
      auto& nbrs = adj[static_cast<std::size_t>(a)];
      auto it = std::lower_bound(nbrs.begin(), nbrs.end(), b,
                                 [](const std::pair<int, double>& e, int node) {
                                   return e.first < node;
                                 });
      nbrs.insert(it, {b, weight});
    };
    insert_dir(u, v, w);
    insert_dir(v, u, w);
    ++num_edges;
  }

  std::vector<std::pair<int, int>> edge_list() const {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(num_edges);
    for (int u = 0; u < static_cast<int>(num_nodes()); ++u) {
      for (const auto& [v, w] : adj[static_cast<std::size_t>(u)]) {
        if (u < v) edges.emplace_back(u, v);
      }
    }
    return edges;
  }
};

struct GraphOptions {
  bool weighted = false;   // accumulate co-occurrence counts instead of w=1
  bool bipartite = true;   // reject same-side edges on read
};

// Links every phenotype-side feature of a patient with every genetic feature
// of the same patient. Gender enters as a phenotype-side node. Nodes that end
// up with no incident edge are not part of the graph.
inline FeatureGraph build_graph(const std::vector<PatientRecord>& records,
                                const FeatureVocabulary& vocab,
                                const GraphOptions& opts = {}) {
  // Token-keyed accumulation keeps the result independent of patient order.
  std::map<std::pair<std::string, std::string>, double> edges;
  for (const auto& rec : records) {
    std::vector<std::string> pheno_side;
    for (const auto& p : rec.phenotypes) {
      if (vocab.find(FeatureKind::phenotype, p)) {
        pheno_side.push_back(node_token(FeatureKind::phenotype, p));
      }
    }
    pheno_side.push_back(gender_node_token(rec.gender));
    std::vector<std::string> genetic;
    for (const auto& m : rec.mutations) {
      if (vocab.find(FeatureKind::genetic, m)) {
        genetic.push_back(node_token(FeatureKind::genetic, m));
      }
    }
    for (const auto& p : pheno_side) {
      for (const auto& g : genetic) {
        auto key = std::make_pair(p, g);
        if (opts.weighted) {
          edges[key] += 1.0;
        } else {
          edges.emplace(key, 1.0);
        }
      }
    }
  }

  FeatureGraph graph;
  // Vocabulary order first so node ids are stable across runs.
  for (const auto& e : vocab.entries()) {
    if (e.kind == FeatureKind::demographic) continue;
    std::string tok = node_token(e.kind, e.token);
    bool used = false;
    if (e.kind == FeatureKind::phenotype) {
      used = std::any_of(edges.begin(), edges.end(),
                         [&](const auto& kv) { return kv.first.first == tok; });
    } else {
      used = std::any_of(edges.begin(), edges.end(),
                         [&](const auto& kv) { return kv.first.second == tok; });
    }
    if (used) graph.add_node(tok, e.kind);
  }
  for (Gender g : {Gender::male, Gender::female}) {
    std::string tok = gender_node_token(g);
    bool used = std::any_of(edges.begin(), edges.end(),
                            [&](const auto& kv) { return kv.first.first == tok; });
    if (used) graph.add_node(tok, FeatureKind::demographic);
  }
  for (const auto& [key, w] : edges) {
    int u = graph.find_node(key.first);
    int v = graph.find_node(key.second);
    graph.add_edge(u, v, w);
  }
  return graph;
}

// One edge per line: "<token> <token>［ <weight>]". The weight field is
// written only when some edge weight differs from 1.
inline void write_edge_list(const FeatureGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(str_cat("cannot write edge list: ", path));
  bool any_weight = false;
  for (const auto& nbrs : graph.adj) {
    for (const auto& [v, w] : nbrs) {
      if (w != 1.0) any_weight = true;
    }
  }
  for (int u = 0; u < static_cast<int>(graph.num_nodes()); ++u) {
    for (const auto& [v, w] : graph.adj[static_cast<std::size_t>(u)]) {
      if (u >= v) continue;
      out << graph.tokens[static_cast<std::size_t>(u)] << ' '
          << graph.tokens[static_cast<std::size_t>(v)];
      if (any_weight) out << ' ' << fmt_g(w);
      out << '\n';
    }
  }
}

namespace detail {

inline FeatureKind kind_from_token(const std::string& token,
                                   const std::string& path, std::size_t lineno) {
  if (token.rfind("P:", 0) == 0) return FeatureKind::phenotype;
  if (token.rfind("G:", 0) == 0) return FeatureKind::genetic;
  if (token.rfind("D:", 0) == 0) return FeatureKind::demographic;
  throw DataError(str_cat(path, ": line ", lineno, ": unknown node namespace in '",
                          token, "' (expected P:, G: or D: prefix)"));
}

}  // namespace detail

inline FeatureGraph read_edge_list(const std::string& path,
                                   const GraphOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw DataError(str_cat("cannot open edge list: ", path));
  FeatureGraph graph;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_ws(line);
    if (fields.size() != 2 && fields.size() != 3) {
      throw DataError(str_cat(path, ": line ", lineno,
                              ": expected 2 or 3 fields, got ", fields.size()));
    }
    FeatureKind ka = detail::kind_from_token(fields[0], path, lineno);
    FeatureKind kb = detail::kind_from_token(fields[1], path, lineno);
    if (fields[0] == fields[1]) {
      throw DataError(str_cat(path, ": line ", lineno, ": self-loop on '",
                              fields[0], "'"));
    }
    if (opts.bipartite &&
        FeatureGraph::genetic_side(ka) == FeatureGraph::genetic_side(kb)) {
      throw DataError(str_cat(path, ": line ", lineno,
                              ": edge joins two nodes on the same side (", fields[0],
                              ", ", fields[1], "); pass --no-bipartite to allow"));
    }
    double w = 1.0;
    if (fields.size() == 3) {
      try {
        std::size_t used = 0;
        w = std::stod(fields[2], &used);
        if (used != fields[2].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw DataError(str_cat(path, ": line ", lineno, ": bad weight '",
                                fields[2], "'"));
      }
      if (!(w > 0.0)) {
        throw DataError(str_cat(path, ": line ", lineno,
                                ": edge weight must be > 0"));
      }
    }
    int u = graph.add_node(fields[0], ka);
    int v = graph.add_node(fields[1], kb);
    if (graph.has_edge(u, v)) {
      throw DataError(str_cat(path, ": line ", lineno, ": duplicate edge ",
                              fields[0], " ", fields[1]));
    }
    graph.add_edge(u, v, w);
  }
  return graph;
}

}  // namespace stratkit
