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
// Immutable graph storage plus the selection primitives of the labeling
// pipeline: Poisson node sampling, exhaustive K-nearest-neighbor search over
// dense features, induced subgraphs, and l-hop neighborhoods.

#ifndef PRIVGNN_GRAPH_HPP_
#define PRIVGNN_GRAPH_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "privgnn/rng.hpp"

namespace privgnn {

using NodeId = std::int32_t;

enum class GraphRole { kPrivate, kPublic };
enum class DistanceMetric { kEuclidean, kCosine };

// Sorted, deduplicated set of node ids within one parent graph.
class NodeSet {
 public:
  NodeSet() = default;

  static NodeSet of(std::vector<NodeId> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (!ids.empty() && ids.front() < 0) throw std::invalid_argument("NodeSet: negative node id");
    NodeSet s;
    s.ids_ = std::move(ids);
    return s;
  }

  static NodeSet full(NodeId n) {
    std::vector<NodeId> ids(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    NodeSet s;
    s.ids_ = std::move(ids);
    return s;
  }

  const std::vector<NodeId>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  bool contains(NodeId id) const {
    return std::binary_search(ids_.begin(), ids_.end(), id);
  }

  bool operator==(const NodeSet&) const = default;

 private:
  std::vector<NodeId> ids_;
};

// Undirected graph with dense per-node features and optional class labels.
// Immutable after construction; adjacency is normalized on build (self loops
// and duplicate edges dropped, neighbor lists sorted, symmetric).
//
// Every read of features, labels, or edges bumps an access counter, so
// pipelines can assert that a phase performed no private-data reads. A copy
// starts a fresh counter (its reads are a new instrumentation scope); moves
// keep the counter.
class Graph {
 public:
  Graph() : accesses_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

  Graph(const Graph& other)
      : num_nodes_(other.num_nodes_),
        num_classes_(other.num_classes_),
        num_edges_(other.num_edges_),
        role_(other.role_),
        adj_(other.adj_),
        features_(other.features_),
        labels_(other.labels_),
        accesses_(std::make_shared<std::atomic<std::uint64_t>>(0)) {}

  Graph& operator=(const Graph& other) {
    if (this != &other) {
      num_nodes_ = other.num_nodes_;
      num_classes_ = other.num_classes_;
      num_edges_ = other.num_edges_;
      role_ = other.role_;
      adj_ = other.adj_;
      features_ = other.features_;
      labels_ = other.labels_;
      accesses_ = std::make_shared<std::atomic<std::uint64_t>>(0);
    }
    return *this;
  }

  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Graph(NodeId num_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges,
        Eigen::MatrixXd features, std::vector<NodeId> labels, NodeId num_classes, GraphRole role)
      : num_nodes_(num_nodes),
        num_classes_(num_classes),
        role_(role),
        features_(std::move(features)),
        labels_(std::move(labels)),
        accesses_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
    if (num_nodes_ < 0) throw std::invalid_argument("Graph: negative node count");
    if (features_.rows() != num_nodes_)
      throw std::invalid_argument("Graph: feature row count must equal node count");
    if (labels_.empty()) labels_.assign(static_cast<std::size_t>(num_nodes_), kNoLabel);
    if (static_cast<NodeId>(labels_.size()) != num_nodes_)
      throw std::invalid_argument("Graph: label count must equal node count");
    for (const NodeId y : labels_) {
      if (y != kNoLabel && (y < 0 || y >= num_classes_))
        throw std::invalid_argument("Graph: label id out of range");
    }
    adj_.assign(static_cast<std::size_t>(num_nodes_), {});
    for (const auto& [u, v] : edges) {
      if (u < 0 || u >= num_nodes_ || v < 0 || v >= num_nodes_)
        throw std::invalid_argument("Graph: edge endpoint out of range");
      if (u == v) continue;
      adj_[static_cast<std::size_t>(u)].push_back(v);
      adj_[static_cast<std::size_t>(v)].push_back(u);
    }
    num_edges_ = 0;
    for (auto& nbrs : adj_) {
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
      num_edges_ += static_cast<std::int64_t>(nbrs.size());
    }
    num_edges_ /= 2;
  }

  static constexpr NodeId kNoLabel = -1;

  NodeId num_nodes() const { return num_nodes_; }
  std::int64_t num_edges() const { return num_edges_; }
  NodeId num_classes() const { return num_classes_; }
  int feature_dim() const { return static_cast<int>(features_.cols()); }
  GraphRole role() const { return role_; }

  const std::vector<NodeId>& neighbors(NodeId v) const {
    check_node(v);
    touch();
    return adj_[static_cast<std::size_t>(v)];
  }

  NodeId degree(NodeId v) const { return static_cast<NodeId>(neighbors(v).size()); }

  const Eigen::MatrixXd& feature_matrix() const {
    touch();
    return features_;
  }

  Eigen::RowVectorXd feature(NodeId v) const {
    check_node(v);
    touch();
    return features_.row(v);
  }

  NodeId label(NodeId v) const {
    check_node(v);
    touch();
    return labels_[static_cast<std::size_t>(v)];
  }

  bool has_label(NodeId v) const { return label(v) != kNoLabel; }

  // Number of feature/label/edge reads through this graph (and its copies).
  std::uint64_t data_access_count() const { return accesses_->load(std::memory_order_relaxed); }

 private:
  void check_node(NodeId v) const {
    if (v < 0 || v >= num_nodes_)
      throw std::out_of_range("Graph: node id " + std::to_string(v) + " out of range");
  }
  void touch() const { accesses_->fetch_add(1, std::memory_order_relaxed); }

  NodeId num_nodes_ = 0;
  NodeId num_classes_ = 0;
  std::int64_t num_edges_ = 0;
  GraphRole role_ = GraphRole::kPublic;
  std::vector<std::vector<NodeId>> adj_;
  Eigen::MatrixXd features_;
  std::vector<NodeId> labels_;
  std::shared_ptr<std::atomic<std::uint64_t>> accesses_;
};

// Independent Bernoulli(gamma) inclusion per node.
inline NodeSet poisson_sample(const Graph& graph, double gamma, RngStream& rng) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("poisson_sample: gamma must lie in [0,1]");
  std::vector<NodeId> picked;
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    if (rng.bernoulli(gamma)) picked.push_back(v);
  }
  NodeSet s = NodeSet::of(std::move(picked));
  return s;
}

// The k candidates closest to `query` in feature space; ties broken by
// ascending node id. When fewer than k candidates exist, all are returned
// and *truncated is set.
inline NodeSet knn_select(const Eigen::RowVectorXd& query, const NodeSet& candidates,
                          const Graph& graph, int k, DistanceMetric metric,
                          bool* truncated = nullptr) {
  if (candidates.empty()) throw std::invalid_argument("knn_select: empty candidate set");
  if (k < 1) throw std::invalid_argument("knn_select: k must be >= 1");
  if (query.size() != graph.feature_dim())
    throw std::invalid_argument("knn_select: query dimension mismatch");
  if (truncated != nullptr) *truncated = false;
  if (static_cast<std::size_t>(k) >= candidates.size()) {
    if (truncated != nullptr && static_cast<std::size_t>(k) > candidates.size()) *truncated = true;
    return candidates;
  }

  const Eigen::MatrixXd& features = graph.feature_matrix();
  const double query_norm = query.norm();
  std::vector<std::pair<double, NodeId>> scored;
  scored.reserve(candidates.size());
  for (const NodeId v : candidates.ids()) {
    double dist;
    if (metric == DistanceMetric::kEuclidean) {
      dist = (features.row(v) - query).squaredNorm();
    } else {
      const double denom = features.row(v).norm() * query_norm;
      dist = denom > 0.0 ? 1.0 - features.row(v).dot(query) / denom : 1.0;
    }
    scored.emplace_back(dist, v);
  }
  std::nth_element(scored.begin(), scored.begin() + k, scored.end());
  scored.resize(static_cast<std::size_t>(k));
  std::vector<NodeId> picked;
  picked.reserve(scored.size());
  for (const auto& [dist, v] : scored) picked.push_back(v);
  return NodeSet::of(std::move(picked));
}

// Subgraph on `nodes` with ids remapped densely; to_parent maps local id i
// back to the parent node id.
struct InducedSubgraph {
  Graph graph;
  std::vector<NodeId> to_parent;
};

inline InducedSubgraph induced_subgraph(const Graph& graph, const NodeSet& nodes) {
  const auto& ids = nodes.ids();
  if (!ids.empty() && ids.back() >= graph.num_nodes())
    throw std::out_of_range("induced_subgraph: node id out of range");
  const auto n = static_cast<NodeId>(ids.size());

  std::vector<std::pair<NodeId, NodeId>> edges;
  Eigen::MatrixXd features(n, graph.feature_dim());
  std::vector<NodeId> labels(static_cast<std::size_t>(n), Graph::kNoLabel);
  for (NodeId local = 0; local < n; ++local) {
    const NodeId parent = ids[static_cast<std::size_t>(local)];
    features.row(local) = graph.feature(parent);
    labels[static_cast<std::size_t>(local)] = graph.label(parent);
    for (const NodeId nbr : graph.neighbors(parent)) {
      if (nbr <= parent) continue;  // count each edge once
      const auto it = std::lower_bound(ids.begin(), ids.end(), nbr);
      if (it != ids.end() && *it == nbr) {
        edges.emplace_back(local, static_cast<NodeId>(it - ids.begin()));
      }
    }
  }
  return InducedSubgraph{
      Graph(n, edges, std::move(features), std::move(labels), graph.num_classes(), graph.role()),
      ids};
}

// All nodes within l hops of v (including v), by breadth-first expansion.
inline NodeSet l_hop_neighborhood(const Graph& graph, NodeId v, int l) {
  if (v < 0 || v >= graph.num_nodes()) throw std::out_of_range("l_hop_neighborhood: invalid node");
  if (l < 0) throw std::invalid_argument("l_hop_neighborhood: l must be >= 0");
  std::vector<char> seen(static_cast<std::size_t>(graph.num_nodes()), 0);
  std::vector<NodeId> frontier{v}, out{v};
  seen[static_cast<std::size_t>(v)] = 1;
  for (int depth = 0; depth < l && !frontier.empty(); ++depth) {
    std::vector<NodeId> next;
    for (const NodeId u : frontier) {
      for (const NodeId w : graph.neighbors(u)) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          next.push_back(w);
          out.push_back(w);
        }
      }
    }
    frontier = std::move(next);
  }
  return NodeSet::of(std::move(out));
}

}  // namespace privgnn

#endif  // PRIVGNN_GRAPH_HPP_
