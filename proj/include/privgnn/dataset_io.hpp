// Copyright 2026 The privgnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Dataset directory format (UTF-8, LF):
//   edges.csv    one "u,v" pair per line, 0-based combined node ids
//   features.csv row i = comma-separated reals for node i
//   labels.csv   "node_id,label" per line
//   split.json   {"private_nodes": [...], "public_train_nodes": [...],
//                 "public_test_nodes": [...]}
// The three split sets must be disjoint and cover every node, and no edge
// may cross the private/public boundary. Violations are reported with file
// and line number.

#ifndef PRIVGNN_DATASET_IO_HPP_
#define PRIVGNN_DATASET_IO_HPP_

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "privgnn/graph.hpp"

namespace privgnn {

struct Dataset {
  Graph private_graph;
  Graph public_graph;
  NodeSet public_train;  // local ids within public_graph
  NodeSet public_test;
  std::vector<NodeId> private_to_combined;
  std::vector<NodeId> public_to_combined;
};

namespace detail {

[[noreturn]] inline void io_fail(const std::string& file, std::size_t line,
                                 const std::string& message) {
  throw std::runtime_error(file + ":" + std::to_string(line) + ": " + message);
}

inline std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("failed to open " + path.string());
  return in;
}

inline long parse_int(std::string_view token, const std::string& file, std::size_t line) {
  long value = 0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    io_fail(file, line, "expected integer, got '" + std::string(token) + "'");
  return value;
}

inline double parse_double(std::string_view token, const std::string& file, std::size_t line) {
  double value = 0.0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    io_fail(file, line, "expected real number, got '" + std::string(token) + "'");
  return value;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

}  // namespace detail

inline Dataset load_dataset(const std::filesystem::path& dir) {
  namespace d = detail;

  // features.csv fixes the node count and feature dimension
  std::vector<std::vector<double>> rows;
  {
    auto in = d::open_or_throw(dir / "features.csv");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto stripped = d::strip(line);
      if (stripped.empty()) continue;
      std::vector<double> row;
      for (const auto tok : d::split_csv(stripped))
        row.push_back(d::parse_double(d::strip(tok), "features.csv", lineno));
      if (!rows.empty() && row.size() != rows.front().size())
        d::io_fail("features.csv", lineno, "row has " + std::to_string(row.size()) +
                                               " values, expected " +
                                               std::to_string(rows.front().size()));
      rows.push_back(std::move(row));
    }
    if (rows.empty()) d::io_fail("features.csv", 1, "no feature rows");
  }
  const auto num_nodes = static_cast<NodeId>(rows.size());
  const auto dim = static_cast<int>(rows.front().size());
  Eigen::MatrixXd features(num_nodes, dim);
  for (NodeId v = 0; v < num_nodes; ++v)
    for (int j = 0; j < dim; ++j) features(v, j) = rows[static_cast<std::size_t>(v)][static_cast<std::size_t>(j)];

  struct EdgeRecord {
    NodeId u, v;
    std::size_t line;
  };
  std::vector<EdgeRecord> edges;
  {
    auto in = d::open_or_throw(dir / "edges.csv");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto stripped = d::strip(line);
      if (stripped.empty()) continue;
      const auto toks = d::split_csv(stripped);
      if (toks.size() != 2) d::io_fail("edges.csv", lineno, "expected 'u,v'");
      const long u = d::parse_int(d::strip(toks[0]), "edges.csv", lineno);
      const long v = d::parse_int(d::strip(toks[1]), "edges.csv", lineno);
      if (u < 0 || u >= num_nodes || v < 0 || v >= num_nodes)
        d::io_fail("edges.csv", lineno, "edge endpoint out of range");
      edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), lineno});
    }
  }

  std::vector<NodeId> labels(static_cast<std::size_t>(num_nodes), Graph::kNoLabel);
  NodeId num_classes = 0;
  {
    auto in = d::open_or_throw(dir / "labels.csv");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto stripped = d::strip(line);
      if (stripped.empty()) continue;
      const auto toks = d::split_csv(stripped);
      if (toks.size() != 2) d::io_fail("labels.csv", lineno, "expected 'node_id,label'");
      const long v = d::parse_int(d::strip(toks[0]), "labels.csv", lineno);
      const long y = d::parse_int(d::strip(toks[1]), "labels.csv", lineno);
      if (v < 0 || v >= num_nodes) d::io_fail("labels.csv", lineno, "node id out of range");
      if (y < 0) d::io_fail("labels.csv", lineno, "label must be non-negative");
      labels[static_cast<std::size_t>(v)] = static_cast<NodeId>(y);
      num_classes = std::max(num_classes, static_cast<NodeId>(y + 1));
    }
  }

  nlohmann::json split;
  try {
    auto in = d::open_or_throw(dir / "split.json");
    in >> split;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("split.json: " + std::string(e.what()));
  }
  const auto read_ids = [&](const char* key) {
    if (!split.contains(key))
      throw std::runtime_error("split.json: missing array '" + std::string(key) + "'");
    std::vector<NodeId> ids;
    for (const auto& x : split.at(key)) {
      const auto v = x.get<long>();
      if (v < 0 || v >= num_nodes)
        throw std::runtime_error("split.json: node id " + std::to_string(v) + " out of range in '" +
                                 key + "'");
      ids.push_back(static_cast<NodeId>(v));
    }
    return ids;
  };
  const auto priv_ids = read_ids("private_nodes");
  const auto train_ids = read_ids("public_train_nodes");
  const auto test_ids = read_ids("public_test_nodes");

  // the three sets must partition the node ids
  std::vector<int> membership(static_cast<std::size_t>(num_nodes), 0);
  const auto mark = [&](const std::vector<NodeId>& ids, int bit, const char* key) {
    for (const NodeId v : ids) {
      if (membership[static_cast<std::size_t>(v)] != 0)
        throw std::runtime_error("split.json: node " + std::to_string(v) +
                                 " listed in more than one set (last in '" + key + "')");
      membership[static_cast<std::size_t>(v)] = bit;
    }
  };
  mark(priv_ids, 1, "private_nodes");
  mark(train_ids, 2, "public_train_nodes");
  mark(test_ids, 3, "public_test_nodes");
  for (NodeId v = 0; v < num_nodes; ++v) {
    if (membership[static_cast<std::size_t>(v)] == 0)
      throw std::runtime_error("split.json: node " + std::to_string(v) + " missing from all sets");
  }

  for (const auto& e : edges) {
    const bool up = membership[static_cast<std::size_t>(e.u)] == 1;
    const bool vp = membership[static_cast<std::size_t>(e.v)] == 1;
    if (up != vp)
      d::io_fail("edges.csv", e.line,
                 "edge crosses the private/public boundary (" + std::to_string(e.u) + "," +
                     std::to_string(e.v) + ")");
  }

  for (const NodeId v : priv_ids) {
    if (labels[static_cast<std::size_t>(v)] == Graph::kNoLabel)
      throw std::runtime_error("labels.csv: private node " + std::to_string(v) + " has no label");
  }

  std::vector<std::pair<NodeId, NodeId>> edge_pairs;
  edge_pairs.reserve(edges.size());
  for (const auto& e : edges) edge_pairs.emplace_back(e.u, e.v);
  const Graph combined(num_nodes, edge_pairs, std::move(features), std::move(labels),
                       std::max<NodeId>(num_classes, 1), GraphRole::kPublic);

  Dataset ds;
  {
    auto sub = induced_subgraph(combined, NodeSet::of(priv_ids));
    ds.private_to_combined = sub.to_parent;
    // rebuild with the private role
    std::vector<std::pair<NodeId, NodeId>> sub_edges;
    for (NodeId v = 0; v < sub.graph.num_nodes(); ++v)
      for (const NodeId w : sub.graph.neighbors(v))
        if (v < w) sub_edges.emplace_back(v, w);
    std::vector<NodeId> sub_labels(static_cast<std::size_t>(sub.graph.num_nodes()));
    for (NodeId v = 0; v < sub.graph.num_nodes(); ++v) sub_labels[static_cast<std::size_t>(v)] = sub.graph.label(v);
    ds.private_graph = Graph(sub.graph.num_nodes(), sub_edges, sub.graph.feature_matrix(),
                             std::move(sub_labels), combined.num_classes(), GraphRole::kPrivate);
  }
  {
    std::vector<NodeId> public_ids = train_ids;
    public_ids.insert(public_ids.end(), test_ids.begin(), test_ids.end());
    auto sub = induced_subgraph(combined, NodeSet::of(public_ids));
    ds.public_graph = sub.graph;
    ds.public_to_combined = sub.to_parent;
    const auto to_local = [&](const std::vector<NodeId>& ids) {
      std::vector<NodeId> local;
      local.reserve(ids.size());
      for (const NodeId v : ids) {
        const auto it = std::lower_bound(sub.to_parent.begin(), sub.to_parent.end(), v);
        local.push_back(static_cast<NodeId>(it - sub.to_parent.begin()));
      }
      return NodeSet::of(std::move(local));
    };
    ds.public_train = to_local(train_ids);
    ds.public_test = to_local(test_ids);
  }
  return ds;
}

// Writes the combined-graph directory format; private nodes take combined
// ids [0, p), public nodes [p, p + q).
inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const NodeId p = ds.private_graph.num_nodes();
  const NodeId q = ds.public_graph.num_nodes();

  {
    std::ofstream out(dir / "edges.csv");
    for (NodeId v = 0; v < p; ++v)
      for (const NodeId w : ds.private_graph.neighbors(v))
        if (v < w) out << v << "," << w << "\n";
    for (NodeId v = 0; v < q; ++v)
      for (const NodeId w : ds.public_graph.neighbors(v))
        if (v < w) out << (p + v) << "," << (p + w) << "\n";
  }
  {
    std::ofstream out(dir / "features.csv");
    char buf[64];
    const auto write_row = [&](const Eigen::RowVectorXd& row) {
      for (int j = 0; j < row.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", row(j));
        out << (j ? "," : "") << buf;
      }
      out << "\n";
    };
    for (NodeId v = 0; v < p; ++v) write_row(ds.private_graph.feature(v));
    for (NodeId v = 0; v < q; ++v) write_row(ds.public_graph.feature(v));
  }
  {
    std::ofstream out(dir / "labels.csv");
    for (NodeId v = 0; v < p; ++v)
      if (ds.private_graph.has_label(v)) out << v << "," << ds.private_graph.label(v) << "\n";
    for (NodeId v = 0; v < q; ++v)
      if (ds.public_graph.has_label(v)) out << (p + v) << "," << ds.public_graph.label(v) << "\n";
  }
  {
    nlohmann::json split;
    auto& priv = split["private_nodes"] = nlohmann::json::array();
    for (NodeId v = 0; v < p; ++v) priv.push_back(v);
    auto& train = split["public_train_nodes"] = nlohmann::json::array();
    for (const NodeId v : ds.public_train.ids()) train.push_back(p + v);
    auto& test = split["public_test_nodes"] = nlohmann::json::array();
    for (const NodeId v : ds.public_test.ids()) test.push_back(p + v);
    std::ofstream out(dir / "split.json");
    out << split.dump(2) << "\n";
  }
}

}  // namespace privgnn

#endif  // PRIVGNN_DATASET_IO_HPP_
