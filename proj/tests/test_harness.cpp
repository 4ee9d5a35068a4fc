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

#include "privgnn/harness.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>

using namespace privgnn;

#ifndef PRIVGNN_SOURCE_DIR
#define PRIVGNN_SOURCE_DIR "."
#endif

namespace {

SbmSpec tiny_spec() {
  SbmSpec spec;
  spec.num_classes = 2;
  spec.nodes_per_class = 40;
  spec.intra_p = 0.15;
  spec.inter_p = 0.02;
  spec.feature_dim = 6;
  spec.private_fraction = 0.5;
  spec.public_train_fraction = 0.25;
  spec.public_test_fraction = 0.25;
  return spec;
}

PrivGnnConfig tiny_config(std::uint64_t seed) {
  PrivGnnConfig c;
  c.privacy = {0.5, 1.0, 8, 1e-4};
  c.k_neighbors = 10;
  c.teacher.hidden_dim = 8;
  c.teacher.epochs = 30;
  c.student.hidden_dim = 8;
  c.student.epochs = 40;
  c.master_seed = seed;
  return c;
}

// modularity of a labeling: sum_c (e_c/m - (d_c/2m)^2)
double modularity(const Graph& g, const std::vector<int>& community) {
  const double m = static_cast<double>(g.num_edges());
  if (m == 0) return 0.0;
  std::vector<double> intra(16, 0.0), deg(16, 0.0);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    for (const NodeId w : g.neighbors(v)) {
      deg[static_cast<std::size_t>(community[static_cast<std::size_t>(v)])] += 0.5;
      if (v < w && community[static_cast<std::size_t>(v)] == community[static_cast<std::size_t>(w)])
        intra[static_cast<std::size_t>(community[static_cast<std::size_t>(v)])] += 1.0;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < intra.size(); ++c)
    q += intra[c] / m - (deg[c] / m) * (deg[c] / m);  // deg[] holds d_c / 2
  return q;
}

}  // namespace

TEST_CASE("generate_sbm produces the advertised shapes") {
  SbmSpec spec;  // defaults: 4 classes x 200
  RngStream rng(1);
  const Dataset ds = generate_sbm(spec, rng);
  REQUIRE(ds.private_graph.num_nodes() == 240);
  REQUIRE(ds.public_graph.num_nodes() == 560);
  REQUIRE(ds.public_train.size() == 360);
  REQUIRE(ds.public_test.size() == 200);
  REQUIRE(ds.private_graph.role() == GraphRole::kPrivate);
  REQUIRE(ds.public_graph.role() == GraphRole::kPublic);
  REQUIRE(ds.private_graph.num_classes() == 4);
  REQUIRE(ds.private_graph.feature_dim() == 8);
  // every private node labeled; classes balanced
  std::vector<int> counts(4, 0);
  for (NodeId v = 0; v < ds.private_graph.num_nodes(); ++v)
    ++counts[static_cast<std::size_t>(ds.private_graph.label(v))];
  for (const int c : counts) REQUIRE(c == 60);
}

TEST_CASE("generate_sbm is deterministic in the stream") {
  RngStream a(9), b(9), c(10);
  const Dataset da = generate_sbm(tiny_spec(), a);
  const Dataset db = generate_sbm(tiny_spec(), b);
  const Dataset dc = generate_sbm(tiny_spec(), c);
  REQUIRE(da.private_graph.num_edges() == db.private_graph.num_edges());
  for (NodeId v = 0; v < da.private_graph.num_nodes(); ++v)
    REQUIRE(da.private_graph.neighbors(v) == db.private_graph.neighbors(v));
  REQUIRE(da.public_graph.feature_matrix() == db.public_graph.feature_matrix());
  REQUIRE(da.private_graph.feature_matrix() != dc.private_graph.feature_matrix());
}

TEST_CASE("disconnected blocks maximize the planted partition's modularity") {
  SbmSpec spec = tiny_spec();
  spec.inter_p = 0.0;
  spec.intra_p = 0.2;
  RngStream rng(4);
  const Dataset ds = generate_sbm(spec, rng);
  const Graph& g = ds.public_graph;

  // no edge joins the two blocks
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    for (const NodeId w : g.neighbors(v)) REQUIRE(g.label(v) == g.label(w));

  std::vector<int> planted(static_cast<std::size_t>(g.num_nodes()));
  for (NodeId v = 0; v < g.num_nodes(); ++v) planted[static_cast<std::size_t>(v)] = g.label(v);
  const double planted_q = modularity(g, planted);
  RngStream shuffler(5);
  std::vector<int> random_partition = planted;
  for (int trial = 0; trial < 25; ++trial) {
    shuffler.shuffle(random_partition);
    REQUIRE(modularity(g, random_partition) <= planted_q);
  }
}

TEST_CASE("zero separation gives chance-level neighborhood purity") {
  SbmSpec spec;  // default 4-class graph
  spec.class_mean_separation = 0.0;
  spec.feature_noise_sigma = 1.0;
  RngStream rng(6);
  const Dataset ds = generate_sbm(spec, rng);

  const NodeSet candidates = NodeSet::full(ds.private_graph.num_nodes());
  RngStream probe_rng(7);
  double matches = 0.0, total = 0.0;
  for (int probe = 0; probe < 1000; ++probe) {
    const auto v = static_cast<NodeId>(
        probe_rng.uniform_below(static_cast<std::uint64_t>(ds.public_graph.num_nodes())));
    const NodeSet nn = knn_select(ds.public_graph.feature(v), candidates, ds.private_graph, 10,
                                  DistanceMetric::kEuclidean);
    for (const NodeId u : nn.ids()) {
      total += 1.0;
      if (ds.private_graph.label(u) == ds.public_graph.label(v)) matches += 1.0;
    }
  }
  REQUIRE(std::abs(matches / total - 0.25) < 0.05);
}

TEST_CASE("degenerate sbm specs are rejected") {
  SbmSpec spec = tiny_spec();
  spec.num_classes = 0;
  REQUIRE_THROWS_AS(SbmSpec(spec).validate(), std::invalid_argument);
  spec = tiny_spec();
  spec.inter_p = spec.intra_p;
  REQUIRE_THROWS_AS(SbmSpec(spec).validate(), std::invalid_argument);
  spec = tiny_spec();
  spec.private_fraction = 0.9;
  REQUIRE_THROWS_AS(SbmSpec(spec).validate(), std::invalid_argument);
}

TEST_CASE("single-cell sweep equals the direct run") {
  RngStream rng(2);
  const Dataset ds = generate_sbm(tiny_spec(), rng);
  SweepSpec sweep;
  sweep.base = tiny_config(21);
  sweep.seeds = {21};
  const auto rows = run_sweep(sweep, ds);
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].error.empty());

  const PrivGnnResult direct = privgnn_run(tiny_config(21), ds);
  REQUIRE(rows[0].acc_mean == direct.report.accuracy);
  REQUIRE(rows[0].epsilon == direct.report.epsilon);
  REQUIRE(rows[0].acc_std == 0.0);
  REQUIRE(rows[0].num_seeds == 1);
}

TEST_CASE("sweep cells aggregate seeds and keep epsilon constant") {
  RngStream rng(3);
  const Dataset ds = generate_sbm(tiny_spec(), rng);
  SweepSpec sweep;
  sweep.base = tiny_config(0);
  sweep.lambdas = {0.5, 1.0};
  sweep.gammas = {0.2, 0.5};
  sweep.seeds = {1, 2};
  const auto rows = run_sweep(sweep, ds, {2, {}});
  REQUIRE(rows.size() == 4);
  for (const SweepRow& row : rows) {
    REQUIRE(row.error.empty());
    REQUIRE(row.num_seeds == 2);
    // epsilon is independent of the seed, so it must equal the accountant's
    const PrivGnnBudget b = privgnn_budget({row.gamma, row.lambda, row.queries, row.delta});
    REQUIRE(row.epsilon == b.tight.epsilon);
  }
  // epsilon strictly increases along lambda at fixed gamma and along gamma
  // at fixed lambda (rows are lambda-major)
  REQUIRE(rows[0].epsilon < rows[2].epsilon);
  REQUIRE(rows[1].epsilon < rows[3].epsilon);
  REQUIRE(rows[0].epsilon < rows[1].epsilon);
  REQUIRE(rows[2].epsilon < rows[3].epsilon);
}

TEST_CASE("failed sweep cells carry an error and do not stop the sweep") {
  RngStream rng(5);
  const Dataset ds = generate_sbm(tiny_spec(), rng);
  SweepSpec sweep;
  sweep.base = tiny_config(4);
  sweep.query_counts = {8, 100000};  // second cell exceeds the train pool
  const auto rows = run_sweep(sweep, ds);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].error.empty());
  REQUIRE_FALSE(rows[1].error.empty());
}

TEST_CASE("sweep csv round-trips") {
  RngStream rng(2);
  const Dataset ds = generate_sbm(tiny_spec(), rng);
  SweepSpec sweep;
  sweep.base = tiny_config(21);
  sweep.lambdas = {0.5, 1.0};
  const auto rows = run_sweep(sweep, ds);
  const std::string csv = sweep_csv(rows);
  REQUIRE(csv.rfind(sweep_csv_header(), 0) == 0);

  const auto path = std::filesystem::temp_directory_path() / "privgnn_sweep_test.csv";
  {
    std::ofstream out(path);
    out << csv;
  }
  const auto reloaded = load_sweep_csv(path);
  std::filesystem::remove(path);
  REQUIRE(reloaded.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(reloaded[i].lambda == rows[i].lambda);
    REQUIRE(reloaded[i].queries == rows[i].queries);
    REQUIRE_THAT(reloaded[i].epsilon, Catch::Matchers::WithinRel(rows[i].epsilon, 1e-9));
  }
}

TEST_CASE("reference budgets load and compare against our accountant") {
  const auto path = std::filesystem::path(PRIVGNN_SOURCE_DIR) / "data" / "reference_budgets.csv";
  const auto refs = load_reference_budgets(path);
  REQUIRE(refs.size() == 25);
  REQUIRE(refs[0].source == "amazon-q500");
  REQUIRE(refs[0].reported_epsilon == 2.67);

  const auto report = budget_report_for(refs);
  const auto rows = compare_to_reference(report, refs);
  REQUIRE(rows.size() == 25);
  for (const ComparisonRow& row : rows) {
    REQUIRE(row.found);
    REQUIRE(std::isfinite(row.tight_ratio));
    REQUIRE(row.ours_tight <= row.ours_crude);
    REQUIRE(row.tight_ratio > 0.0);
  }
  // frozen spot value: ours 5.0411 vs reported 2.67
  REQUIRE_THAT(rows[0].tight_ratio, Catch::Matchers::WithinAbs(5.0410689614566617 / 2.67, 1e-9));

  const std::string csv = comparison_csv(rows);
  REQUIRE(csv.find("amazon-q1000") != std::string::npos);
  REQUIRE(csv.find("tight_ratio") != std::string::npos);
}

TEST_CASE("missing reference tuples are flagged") {
  const auto path = std::filesystem::path(PRIVGNN_SOURCE_DIR) / "data" / "reference_budgets.csv";
  const auto refs = load_reference_budgets(path);
  auto report = budget_report_for(refs);
  report.resize(3);  // drop most rows
  const auto rows = compare_to_reference(report, refs);
  std::size_t found = 0;
  for (const ComparisonRow& row : rows) {
    if (row.found) ++found;
    else REQUIRE(std::isnan(row.ours_tight));
  }
  REQUIRE(found == 3);
}
