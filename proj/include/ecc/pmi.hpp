#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecc/common.hpp"
#include "ecc/events.hpp"

namespace ecc {

// A graph node: verb lemma plus the grammatical role the protagonist filled.
struct VerbDepKey {
  std::string lemma;
  Role role = Role::Subj;

  bool operator==(const VerbDepKey&) const = default;
  // Ordering uses the printed role label, so ("hit", OBJ) < ("hit", SUBJ).
  bool operator<(const VerbDepKey& other) const {
    if (lemma != other.lemma) return lemma < other.lemma;
    return std::string_view(to_string(role)) < std::string_view(to_string(other.role));
  }
};

inline VerbDepKey first_key(const UnorderedEventPair& pair) {
  return {pair.first.verb, pair.role_in_first};
}

inline VerbDepKey second_key(const UnorderedEventPair& pair) {
  return {pair.second.verb, pair.role_in_second};
}

struct PairCountTable {
  // Keyed canonically: key.first < key.second always holds.
  std::map<std::pair<VerbDepKey, VerbDepKey>, long long> counts;
  long long total = 0;         // observed pairs, self pairs excluded
  long long self_skipped = 0;  // pairs whose two keys coincided
};

inline std::pair<VerbDepKey, VerbDepKey> canonical_pair(const VerbDepKey& a, const VerbDepKey& b) {
  return a < b ? std::pair(a, b) : std::pair(b, a);
}

// Tallies canonical key pairs. A pair whose two nodes coincide carries no
// co-occurrence signal and is dropped (but remembered in self_skipped).
inline PairCountTable count_pairs(const std::vector<UnorderedEventPair>& pairs) {
  PairCountTable table;
  for (const auto& pair : pairs) {
    VerbDepKey a = first_key(pair);
    VerbDepKey b = second_key(pair);
    if (a == b) {
      ++table.self_skipped;
      continue;
    }
    ++table.counts[canonical_pair(a, b)];
    ++table.total;
  }
  return table;
}

// Raw occurrence count of one node across all counted pairs.
inline long long node_count(const PairCountTable& table, const VerbDepKey& key) {
  long long n = 0;
  for (const auto& [pair, count] : table.counts) {
    if (pair.first == key) n += count;
    if (pair.second == key) n += count;
  }
  return n;
}

inline double joint_probability(const PairCountTable& table, const VerbDepKey& a,
                                const VerbDepKey& b) {
  if (table.total == 0) throw ValidationError("joint probability undefined: no counted pairs");
  auto it = table.counts.find(canonical_pair(a, b));
  long long count = it == table.counts.end() ? 0 : it->second;
  return static_cast<double>(count) / static_cast<double>(table.total);
}

// Each counted pair contributes two node slots, hence the 2N denominator;
// marginals over all nodes then sum to one, matching the joints.
inline double marginal_probability(const PairCountTable& table, const VerbDepKey& key) {
  if (table.total == 0) throw ValidationError("marginal probability undefined: no counted pairs");
  return static_cast<double>(node_count(table, key)) / (2.0 * static_cast<double>(table.total));
}

// Natural-log PMI; nullopt when the pair was never observed together.
inline std::optional<double> pmi(const PairCountTable& table, const VerbDepKey& a,
                                 const VerbDepKey& b) {
  if (table.total == 0) throw ValidationError("pmi undefined: no counted pairs");
  auto it = table.counts.find(canonical_pair(a, b));
  if (it == table.counts.end() || it->second == 0) return std::nullopt;
  double joint = joint_probability(table, a, b);
  return std::log(joint / (marginal_probability(table, a) * marginal_probability(table, b)));
}

struct PmiNode {
  VerbDepKey key;
  long long count = 0;

  bool operator==(const PmiNode&) const = default;
};

struct PmiEdge {
  VerbDepKey a;  // a < b by key ordering
  VerbDepKey b;
  long long count = 0;
  double pmi = 0.0;

  bool operator==(const PmiEdge&) const = default;
};

struct PmiGraph {
  long long total = 0;
  long long self_skipped = 0;
  std::vector<PmiNode> nodes;  // sorted by key
  std::vector<PmiEdge> edges;  // sorted by (a, b)
};

// Materializes every pair seen at least min_count times. Nodes are listed with
// their full occurrence counts even when all their edges fall under the cut.
inline PmiGraph build_graph(const PairCountTable& table, long long min_count = 1) {
  PmiGraph graph;
  graph.total = table.total;
  graph.self_skipped = table.self_skipped;

  std::map<VerbDepKey, long long> nodes;
  for (const auto& [pair, count] : table.counts) {
    nodes[pair.first] += count;
    nodes[pair.second] += count;
  }
  for (const auto& [key, count] : nodes) graph.nodes.push_back({key, count});

  for (const auto& [pair, count] : table.counts) {
    if (count < min_count) continue;
    PmiEdge edge;
    edge.a = pair.first;
    edge.b = pair.second;
    edge.count = count;
    edge.pmi = *pmi(table, pair.first, pair.second);
    graph.edges.push_back(std::move(edge));
  }
  return graph;
}

inline std::optional<double> edge_pmi(const PmiGraph& graph, const VerbDepKey& a,
                                      const VerbDepKey& b) {
  auto key = canonical_pair(a, b);
  for (const auto& edge : graph.edges)
    if (edge.a == key.first && edge.b == key.second) return edge.pmi;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Tab-separated graph file:
//   total <TAB> N
//   self_skipped <TAB> N
//   node <TAB> lemma <TAB> role <TAB> count
//   edge <TAB> lemma1 <TAB> role1 <TAB> lemma2 <TAB> role2 <TAB> count <TAB> pmi
// PMI values are printed with six decimals.
// ---------------------------------------------------------------------------

inline std::string serialize_graph(const PmiGraph& graph) {
  std::string out;
  out += "total\t" + std::to_string(graph.total) + "\n";
  out += "self_skipped\t" + std::to_string(graph.self_skipped) + "\n";
  for (const auto& node : graph.nodes) {
    out += "node\t" + node.key.lemma + "\t" + to_string(node.key.role) + "\t" +
           std::to_string(node.count) + "\n";
  }
  for (const auto& edge : graph.edges) {
    out += "edge\t" + edge.a.lemma + "\t" + to_string(edge.a.role) + "\t" + edge.b.lemma + "\t" +
           to_string(edge.b.role) + "\t" + std::to_string(edge.count) + "\t" +
           format_fixed(edge.pmi, 6) + "\n";
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

inline Role parse_role_field(const std::string& text, const std::string& context) {
  auto role = role_from_string(text);
  if (!role) throw ParseError("bad graph file: unknown role in " + context);
  return *role;
}

}  // namespace detail

inline PmiGraph load_graph(std::string_view text) {
  PmiGraph graph;
  bool saw_total = false;
  for (const auto& line : split_lines(text)) {
    if (line.empty()) continue;
    auto fields = detail::split_tabs(line);
    const std::string& kind = fields[0];
    if (kind == "total" && fields.size() == 2) {
      graph.total = std::stoll(fields[1]);
      saw_total = true;
    } else if (kind == "self_skipped" && fields.size() == 2) {
      graph.self_skipped = std::stoll(fields[1]);
    } else if (kind == "node" && fields.size() == 4) {
      PmiNode node;
      node.key = {fields[1], detail::parse_role_field(fields[2], "node line")};
      node.count = std::stoll(fields[3]);
      graph.nodes.push_back(std::move(node));
    } else if (kind == "edge" && fields.size() == 7) {
      PmiEdge edge;
      edge.a = {fields[1], detail::parse_role_field(fields[2], "edge line")};
      edge.b = {fields[3], detail::parse_role_field(fields[4], "edge line")};
      edge.count = std::stoll(fields[5]);
      edge.pmi = std::stod(fields[6]);
      graph.edges.push_back(std::move(edge));
    } else {
      throw ParseError("bad graph file: unrecognized line '" + std::string(line) + "'");
    }
  }
  if (!saw_total) throw ParseError("bad graph file: missing total line");
  return graph;
}

}  // namespace ecc
