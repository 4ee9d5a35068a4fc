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
// End-to-end pipelines. privgnn_run trains one fresh teacher per public
// query on the subgraph induced by the K nearest Poisson-sampled private
// nodes, releases a Laplace-noised argmax pseudo-label, and trains a student
// on the public graph from those labels alone. pate_run is the
// teacher-ensemble baseline (disjoint partitions, noisy vote counts);
// baseline_b1/b2 are the non-private reference points.
//
// Determinism contract: every random decision derives from
// (master_seed, stream tag, job index), so results are byte-identical for a
// fixed master seed no matter how many worker threads run or in which order
// jobs are dispatched. The student phase performs zero private-data reads;
// this is enforced with the graphs' access counters on every run.

#ifndef PRIVGNN_PIPELINES_HPP_
#define PRIVGNN_PIPELINES_HPP_

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "privgnn/accountant.hpp"
#include "privgnn/dataset_io.hpp"
#include "privgnn/graph.hpp"
#include "privgnn/nn.hpp"
#include "privgnn/rng.hpp"

namespace privgnn {

struct PrivGnnConfig {
  PrivacyParams privacy;  // gamma, lambda, num_queries (= |Q|), delta
  int k_neighbors = 100;
  DistanceMetric metric = DistanceMetric::kEuclidean;
  ModelConfig teacher = ModelConfig::gnn(0);
  ModelConfig student = ModelConfig::gnn(0);
  bool resample_per_query = true;
  bool clean_labels = false;  // diagnostic mode: release the exact argmax
  std::uint64_t master_seed = 0;

  int query_count() const { return privacy.num_queries; }

  void validate(const Dataset& data) const {
    privacy.validate();
    if (privacy.num_queries < 1) throw std::invalid_argument("config: need at least one query");
    if (k_neighbors < 1) throw std::invalid_argument("config: k_neighbors must be >= 1");
    if (static_cast<std::size_t>(privacy.num_queries) > data.public_train.size())
      throw std::invalid_argument("config: more queries than public train nodes");
    if (data.private_graph.feature_dim() != data.public_graph.feature_dim())
      throw std::invalid_argument("config: private/public feature dimensions differ");
    if (data.private_graph.num_classes() != data.public_graph.num_classes())
      throw std::invalid_argument("config: private/public class counts differ");
  }
};

struct QueryOutcome {
  NodeId query = -1;               // public-graph node id
  Eigen::VectorXd posterior;       // clean per-class scores (simplex)
  NodeId pseudo_label = -1;
  NodeId teacher_subgraph_size = 0;
};

struct ExperimentReport {
  std::string method;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int num_queries = 0;
  double accuracy = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  int optimal_alpha = 0;
  double crude_epsilon = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t student_phase_private_reads = 0;
  double wall_time_seconds = 0.0;  // not part of the canonical record

  // Canonical key/value record; deterministic bytes for a fixed master seed.
  std::string to_record() const {
    char buf[400];
    std::snprintf(buf, sizeof(buf),
                  "method: %s\n"
                  "config_hash: %016llx\n"
                  "seed: %llu\n"
                  "queries: %d\n"
                  "accuracy: %.17g\n"
                  "epsilon: %.17g\n"
                  "delta: %.17g\n"
                  "optimal_alpha: %d\n"
                  "crude_epsilon: %.17g\n"
                  "student_phase_private_reads: %llu\n",
                  method.c_str(), static_cast<unsigned long long>(config_hash),
                  static_cast<unsigned long long>(seed), num_queries, accuracy, epsilon, delta,
                  optimal_alpha, crude_epsilon,
                  static_cast<unsigned long long>(student_phase_private_reads));
    return buf;
  }

  static std::string csv_header() {
    return "config_hash,seed,accuracy,epsilon,delta,optimal_alpha,wall_time_s";
  }

  std::string to_csv_row() const {
    char buf[240];
    std::snprintf(buf, sizeof(buf), "%016llx,%llu,%.10g,%.10g,%.3g,%d,%.3f",
                  static_cast<unsigned long long>(config_hash),
                  static_cast<unsigned long long>(seed), accuracy, epsilon, delta, optimal_alpha,
                  wall_time_seconds >= 0 ? wall_time_seconds : 0.0);
    std::string row = buf;
    // wall time occupies the final column
    return row;
  }
};

inline std::string pseudo_labels_csv(const std::vector<QueryOutcome>& outcomes) {
  std::string out = "query,pseudo_label\n";
  for (const QueryOutcome& o : outcomes) {
    out += std::to_string(o.query);
    out += ',';
    out += std::to_string(o.pseudo_label);
    out += '\n';
  }
  return out;
}

struct RunOptions {
  int threads = 1;
  std::uint64_t schedule_seed = 0;  // nonzero: shuffle job dispatch order
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string config_fingerprint(const PrivGnnConfig& c, std::string_view method) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%s|gamma=%.17g|lambda=%.17g|queries=%d|delta=%.17g|k=%d|metric=%d|"
                "resample=%d|clean=%d|teacher=%d,%d,%d,%.17g,%.17g,%d,%d|student=%d,%d,%d,%.17g,"
                "%.17g,%d,%d",
                std::string(method).c_str(), c.privacy.gamma, c.privacy.lambda,
                c.privacy.num_queries, c.privacy.delta, c.k_neighbors,
                static_cast<int>(c.metric), c.resample_per_query ? 1 : 0, c.clean_labels ? 1 : 0,
                static_cast<int>(c.teacher.kind), c.teacher.hidden_dim, c.teacher.num_layers,
                c.teacher.dropout, c.teacher.learning_rate, c.teacher.epochs,
                c.teacher.batch_norm_after_first ? 1 : 0, static_cast<int>(c.student.kind),
                c.student.hidden_dim, c.student.num_layers, c.student.dropout,
                c.student.learning_rate, c.student.epochs,
                c.student.batch_norm_after_first ? 1 : 0);
  return buf;
}

// Runs fn(job) for every job index, using `threads` workers pulling from a
// (possibly shuffled) dispatch queue. Output slots are owned by job index,
// so schedules cannot change results. The first exception wins and stops
// remaining work.
inline void run_jobs(std::size_t num_jobs, const RunOptions& options,
                     const std::function<void(std::size_t)>& fn) {
  std::vector<std::size_t> order(num_jobs);
  std::iota(order.begin(), order.end(), 0);
  if (options.schedule_seed != 0) {
    RngStream schedule(options.schedule_seed);
    schedule.shuffle(order);
  }
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(num_jobs)));
  if (threads == 1) {
    for (const std::size_t job : order) fn(job);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::exception_ptr first_error;
  const auto worker = [&]() {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t k = next.fetch_add(1, std::memory_order_relaxed);
      if (k >= order.size()) return;
      try {
        fn(order[k]);
      } catch (...) {
        std::scoped_lock lock(mu);
        if (!first_error) first_error = std::current_exception();
        stop.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline NodeId argmax_lowest(const Eigen::VectorXd& scores) {
  NodeId best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i)
    if (scores(i) > scores(best)) best = static_cast<NodeId>(i);
  return best;
}

// Uniform without replacement from the public train pool, as a sorted set.
inline NodeSet select_queries(const Dataset& data, int count, std::uint64_t master_seed) {
  RngStream rng = RngStream(master_seed).child(stream_tag::kQuerySelect);
  const auto picks =
      rng.sample_without_replacement(static_cast<NodeId>(data.public_train.size()),
                                     static_cast<NodeId>(count));
  std::vector<NodeId> ids;
  ids.reserve(picks.size());
  for (const NodeId i : picks) ids.push_back(data.public_train.ids()[static_cast<std::size_t>(i)]);
  return NodeSet::of(std::move(ids));
}

inline std::vector<NodeId> labels_of(const Graph& graph, const NodeSet& nodes) {
  std::vector<NodeId> labels;
  labels.reserve(nodes.size());
  for (const NodeId v : nodes.ids()) {
    const NodeId y = graph.label(v);
    if (y == Graph::kNoLabel)
      throw std::invalid_argument("node " + std::to_string(v) + " has no label");
    labels.push_back(y);
  }
  return labels;
}

inline void warn_delta(const PrivacyParams& privacy, const Graph& private_graph) {
  if (private_graph.num_nodes() > 0 &&
      privacy.delta >= 1.0 / static_cast<double>(private_graph.num_nodes())) {
    std::cerr << "warning: delta=" << privacy.delta << " is not below 1/|V_private|=1/"
              << private_graph.num_nodes() << "\n";
  }
}

}  // namespace detail

// Argmax of posterior + i.i.d. Laplace(0, beta) per coordinate; ties go to
// the lowest class id.
inline NodeId noisy_pseudo_label(const Eigen::VectorXd& posterior, double beta, RngStream& rng) {
  if (posterior.size() < 1) throw std::invalid_argument("noisy_pseudo_label: empty posterior");
  if (!(beta > 0.0)) throw std::invalid_argument("noisy_pseudo_label: beta must be positive");
  Eigen::VectorXd noisy = posterior;
  for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy(i) += rng.laplace(beta);
  return detail::argmax_lowest(noisy);
}

struct PrivGnnResult {
  Model student;
  ExperimentReport report;
  std::vector<QueryOutcome> outcomes;
};

inline PrivGnnResult privgnn_run(const PrivGnnConfig& config, const Dataset& data,
                                 const RunOptions& options = {}) {
  const auto started = std::chrono::steady_clock::now();
  config.validate(data);
  detail::warn_delta(config.privacy, data.private_graph);

  const Graph& priv = data.private_graph;
  const Graph& pub = data.public_graph;
  const double beta = config.privacy.beta();

  ModelConfig teacher_cfg = config.teacher;
  teacher_cfg.num_classes = priv.num_classes();
  teacher_cfg.validate();
  ModelConfig student_cfg = config.student;
  student_cfg.num_classes = pub.num_classes();
  student_cfg.validate();

  const NodeSet queries = detail::select_queries(data, config.query_count(), config.master_seed);

  // Algorithm-level mode switch: one shared Poisson sample drawn before the
  // query loop, or a fresh sample per query (matching the per-query
  // composition the accountant assumes). Accounting is identical.
  NodeSet shared_sample;
  if (!config.resample_per_query) {
    RngStream poisson = RngStream(config.master_seed).child(stream_tag::kPoisson);
    shared_sample = poisson_sample(priv, config.privacy.gamma, poisson);
  }

  std::vector<QueryOutcome> outcomes(queries.size());
  std::atomic<bool> any_truncated{false};
  const bool sequential = std::max(1, options.threads) == 1;

  detail::run_jobs(queries.size(), options, [&](std::size_t i) {
    const NodeId query = queries.ids()[i];
    RngStream job = RngStream(config.master_seed).child(stream_tag::kQueryJob, i);

    NodeSet sample = config.resample_per_query
                         ? poisson_sample(priv, config.privacy.gamma, job)
                         : shared_sample;
    if (sample.empty())
      throw std::runtime_error("query " + std::to_string(query) +
                               ": Poisson sample of the private graph is empty");
    bool truncated = false;
    const NodeSet knn = knn_select(pub.feature(query), sample, priv, config.k_neighbors,
                                   config.metric, &truncated);
    if (truncated) any_truncated.store(true, std::memory_order_relaxed);
    const InducedSubgraph teacher_data = induced_subgraph(priv, knn);

    // From here to the end of the prediction the private graph itself must
    // stay untouched; the teacher sees only its induced copy.
    const std::uint64_t reads_before = sequential ? priv.data_access_count() : 0;

    const NodeSet all_teacher_nodes = NodeSet::full(teacher_data.graph.num_nodes());
    const std::vector<NodeId> teacher_labels =
        detail::labels_of(teacher_data.graph, all_teacher_nodes);
    Model teacher = Model::init(teacher_cfg, teacher_data.graph.feature_dim(), job);
    teacher.train(teacher_data.graph, all_teacher_nodes, teacher_labels, job);

    QueryOutcome& out = outcomes[i];
    out.query = query;
    out.posterior = teacher.predict_posterior(pub, query, teacher_cfg.receptive_depth());
    out.teacher_subgraph_size = teacher_data.graph.num_nodes();
    out.pseudo_label = config.clean_labels ? detail::argmax_lowest(out.posterior)
                                           : noisy_pseudo_label(out.posterior, beta, job);

    if (sequential && priv.data_access_count() != reads_before)
      throw std::logic_error("per-query isolation violated: teacher touched the private graph");
  });
  if (any_truncated.load())
    std::cerr << "warning: K exceeded the Poisson sample size for at least one query; "
                 "truncated to the full sample\n";

  // Student phase: strictly post-processing of the pseudo-labels.
  const std::uint64_t private_reads_before_student = priv.data_access_count();
  std::vector<NodeId> pseudo_labels;
  pseudo_labels.reserve(outcomes.size());
  for (const QueryOutcome& o : outcomes) pseudo_labels.push_back(o.pseudo_label);

  RngStream student_rng = RngStream(config.master_seed).child(stream_tag::kStudent);
  Model student = Model::init(student_cfg, pub.feature_dim(), student_rng);
  student.train(pub, queries, pseudo_labels, student_rng);
  const double accuracy = evaluate_accuracy(student, pub, data.public_test);
  const std::uint64_t student_phase_reads =
      priv.data_access_count() - private_reads_before_student;
  if (student_phase_reads != 0)
    throw std::logic_error("post-processing violated: student phase read private data");

  const PrivGnnBudget budget = privgnn_budget(config.privacy);

  PrivGnnResult result{std::move(student), {}, std::move(outcomes)};
  ExperimentReport& report = result.report;
  report.method = "privgnn";
  report.config_hash = detail::fnv1a(detail::config_fingerprint(config, "privgnn"));
  report.seed = config.master_seed;
  report.num_queries = config.query_count();
  report.accuracy = accuracy;
  report.epsilon = budget.tight.epsilon;
  report.delta = config.privacy.delta;
  report.optimal_alpha = budget.tight.optimal_order;
  report.crude_epsilon = budget.crude;
  report.student_phase_private_reads = student_phase_reads;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

struct PateResult {
  Model student;
  ExperimentReport report;
  std::vector<QueryOutcome> outcomes;
};

// Teacher-ensemble baseline: disjoint random partition of the private nodes,
// one teacher per part (GNN on the induced part, or MLP on bare features),
// Laplace(0, 1/lambda) noise on each vote count.
inline PateResult pate_run(const PrivGnnConfig& config, const Dataset& data, int n_teachers,
                           ModelConfig::Kind teacher_kind, const RunOptions& options = {}) {
  const auto started = std::chrono::steady_clock::now();
  config.validate(data);
  detail::warn_delta(config.privacy, data.private_graph);
  if (n_teachers < 2) throw std::invalid_argument("pate_run: need at least two teachers");

  const Graph& priv = data.private_graph;
  const Graph& pub = data.public_graph;
  if (priv.num_nodes() < n_teachers)
    throw std::invalid_argument("pate_run: fewer private nodes than teachers");
  const double beta = config.privacy.beta();
  const NodeId num_classes = priv.num_classes();

  ModelConfig teacher_cfg = config.teacher;
  teacher_cfg.kind = teacher_kind;
  teacher_cfg.num_layers = teacher_kind == ModelConfig::Kind::kGnn ? 2 : 3;
  teacher_cfg.num_classes = num_classes;
  teacher_cfg.validate();
  ModelConfig student_cfg = config.student;
  student_cfg.num_classes = pub.num_classes();
  student_cfg.validate();

  // uniform random partition into n disjoint parts
  std::vector<NodeId> shuffled(static_cast<std::size_t>(priv.num_nodes()));
  std::iota(shuffled.begin(), shuffled.end(), 0);
  {
    RngStream part = RngStream(config.master_seed).child(stream_tag::kPartition);
    part.shuffle(shuffled);
  }
  std::vector<NodeSet> parts;
  const std::size_t base = shuffled.size() / static_cast<std::size_t>(n_teachers);
  const std::size_t extra = shuffled.size() % static_cast<std::size_t>(n_teachers);
  std::size_t cursor = 0;
  for (int t = 0; t < n_teachers; ++t) {
    const std::size_t take = base + (static_cast<std::size_t>(t) < extra ? 1 : 0);
    if (take == 0) throw std::invalid_argument("pate_run: a partition came out empty");
    std::vector<NodeId> ids(shuffled.begin() + static_cast<std::ptrdiff_t>(cursor),
                            shuffled.begin() + static_cast<std::ptrdiff_t>(cursor + take));
    cursor += take;
    parts.push_back(NodeSet::of(std::move(ids)));
  }

  std::vector<Model> teachers(static_cast<std::size_t>(n_teachers));
  detail::run_jobs(static_cast<std::size_t>(n_teachers), options, [&](std::size_t t) {
    RngStream job = RngStream(config.master_seed).child(stream_tag::kTeacherJob, t);
    const InducedSubgraph part = induced_subgraph(priv, parts[t]);
    const NodeSet all = NodeSet::full(part.graph.num_nodes());
    const std::vector<NodeId> labels = detail::labels_of(part.graph, all);
    Model teacher = Model::init(teacher_cfg, part.graph.feature_dim(), job);
    teacher.train(part.graph, all, labels, job);
    teachers[t] = std::move(teacher);
  });

  const NodeSet queries = detail::select_queries(data, config.query_count(), config.master_seed);
  std::vector<QueryOutcome> outcomes(queries.size());
  detail::run_jobs(queries.size(), options, [&](std::size_t i) {
    const NodeId query = queries.ids()[i];
    RngStream job = RngStream(config.master_seed).child(stream_tag::kQueryJob, i);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_classes);
    for (const Model& teacher : teachers) {
      const Eigen::VectorXd post =
          teacher.predict_posterior(pub, query, teacher_cfg.receptive_depth());
      counts(detail::argmax_lowest(post)) += 1.0;
    }
    QueryOutcome& out = outcomes[i];
    out.query = query;
    out.posterior = counts / static_cast<double>(n_teachers);
    out.teacher_subgraph_size = static_cast<NodeId>(parts[0].size());
    out.pseudo_label = config.clean_labels ? detail::argmax_lowest(counts)
                                           : noisy_pseudo_label(counts, beta, job);
  });

  const std::uint64_t private_reads_before_student = priv.data_access_count();
  std::vector<NodeId> pseudo_labels;
  pseudo_labels.reserve(outcomes.size());
  for (const QueryOutcome& o : outcomes) pseudo_labels.push_back(o.pseudo_label);
  RngStream student_rng = RngStream(config.master_seed).child(stream_tag::kStudent);
  Model student = Model::init(student_cfg, pub.feature_dim(), student_rng);
  student.train(pub, queries, pseudo_labels, student_rng);
  const double accuracy = evaluate_accuracy(student, pub, data.public_test);
  const std::uint64_t student_phase_reads =
      priv.data_access_count() - private_reads_before_student;
  if (student_phase_reads != 0)
    throw std::logic_error("post-processing violated: student phase read private data");

  const DpGuarantee budget =
      pate_budget(config.privacy.lambda, config.query_count(), config.privacy.delta);

  PateResult result{std::move(student), {}, std::move(outcomes)};
  ExperimentReport& report = result.report;
  report.method = teacher_kind == ModelConfig::Kind::kGnn ? "pate-g" : "pate-m";
  report.config_hash = detail::fnv1a(detail::config_fingerprint(config, report.method) + "|n=" +
                                     std::to_string(n_teachers));
  report.seed = config.master_seed;
  report.num_queries = config.query_count();
  report.accuracy = accuracy;
  report.epsilon = budget.epsilon;
  report.delta = config.privacy.delta;
  report.optimal_alpha = budget.optimal_order;
  report.crude_epsilon = pate_crude_bound(config.privacy.lambda, config.query_count());
  report.student_phase_private_reads = student_phase_reads;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

// Non-private inductive reference: one model trained on the full private
// graph, evaluated on the public test nodes.
inline double baseline_b1(const Dataset& data, const ModelConfig& model_config,
                          std::uint64_t seed) {
  ModelConfig cfg = model_config;
  cfg.num_classes = data.private_graph.num_classes();
  cfg.validate();
  const NodeSet all = NodeSet::full(data.private_graph.num_nodes());
  const std::vector<NodeId> labels = detail::labels_of(data.private_graph, all);
  RngStream rng(seed);
  Model model = Model::init(cfg, data.private_graph.feature_dim(), rng);
  model.train(data.private_graph, all, labels, rng);
  return evaluate_accuracy(model, data.public_graph, data.public_test);
}

// Non-private transductive reference: trained on the public train labels,
// evaluated on the public test nodes.
inline double baseline_b2(const Dataset& data, const ModelConfig& model_config,
                          std::uint64_t seed) {
  ModelConfig cfg = model_config;
  cfg.num_classes = data.public_graph.num_classes();
  cfg.validate();
  const std::vector<NodeId> labels = detail::labels_of(data.public_graph, data.public_train);
  RngStream rng(seed);
  Model model = Model::init(cfg, data.public_graph.feature_dim(), rng);
  model.train(data.public_graph, data.public_train, labels, rng);
  return evaluate_accuracy(model, data.public_graph, data.public_test);
}

}  // namespace privgnn

#endif  // PRIVGNN_PIPELINES_HPP_
