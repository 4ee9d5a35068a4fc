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

#include "privgnn/dataset_io.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <string>

using namespace privgnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("privgnn_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

// 6 combined nodes: private {0,1,2} (triangle), public {3,4,5} (path),
// train {3,4}, test {5}.
void write_valid_dataset(const fs::path& dir) {
  write_file(dir / "edges.csv", "0,1\n1,2\n0,2\n3,4\n4,5\n");
  write_file(dir / "features.csv",
             "1.0,0.0\n0.5,0.25\n0.0,1.0\n1.5,1.5\n2.0,0.125\n0.0,2.0\n");
  write_file(dir / "labels.csv", "0,0\n1,1\n2,0\n3,1\n4,0\n5,1\n");
  write_file(dir / "split.json",
             R"({"private_nodes":[0,1,2],"public_train_nodes":[3,4],"public_test_nodes":[5]})");
}

}  // namespace

TEST_CASE("load_dataset builds both graphs with local ids") {
  TempDir tmp;
  write_valid_dataset(tmp.path);
  const Dataset ds = load_dataset(tmp.path);

  REQUIRE(ds.private_graph.num_nodes() == 3);
  REQUIRE(ds.private_graph.num_edges() == 3);
  REQUIRE(ds.private_graph.role() == GraphRole::kPrivate);
  REQUIRE(ds.private_graph.num_classes() == 2);
  REQUIRE(ds.private_graph.label(1) == 1);
  REQUIRE(ds.private_to_combined == std::vector<NodeId>{0, 1, 2});

  REQUIRE(ds.public_graph.num_nodes() == 3);
  REQUIRE(ds.public_graph.num_edges() == 2);
  REQUIRE(ds.public_graph.role() == GraphRole::kPublic);
  REQUIRE(ds.public_to_combined == std::vector<NodeId>{3, 4, 5});
  REQUIRE(ds.public_train == NodeSet::of({0, 1}));
  REQUIRE(ds.public_test == NodeSet::of({2}));
  REQUIRE(ds.public_graph.feature(0)(0) == 1.5);
}

TEST_CASE("save/load round trip preserves everything") {
  TempDir src, dst;
  write_valid_dataset(src.path);
  const Dataset a = load_dataset(src.path);
  save_dataset(a, dst.path / "out");
  const Dataset b = load_dataset(dst.path / "out");

  REQUIRE(b.private_graph.num_nodes() == a.private_graph.num_nodes());
  REQUIRE(b.public_graph.num_nodes() == a.public_graph.num_nodes());
  REQUIRE(b.private_graph.num_edges() == a.private_graph.num_edges());
  REQUIRE(b.public_train == a.public_train);
  REQUIRE(b.public_test == a.public_test);
  for (NodeId v = 0; v < a.private_graph.num_nodes(); ++v) {
    REQUIRE(b.private_graph.neighbors(v) == a.private_graph.neighbors(v));
    REQUIRE(b.private_graph.label(v) == a.private_graph.label(v));
    REQUIRE(b.private_graph.feature(v) == a.private_graph.feature(v));
  }
  for (NodeId v = 0; v < a.public_graph.num_nodes(); ++v) {
    REQUIRE(b.public_graph.neighbors(v) == a.public_graph.neighbors(v));
    REQUIRE(b.public_graph.feature(v) == a.public_graph.feature(v));
  }
}

TEST_CASE("loader reports crossing edges with their line number") {
  TempDir tmp;
  write_valid_dataset(tmp.path);
  write_file(tmp.path / "edges.csv", "0,1\n1,2\n0,2\n3,4\n4,5\n2,3\n");
  REQUIRE_THROWS_WITH(load_dataset(tmp.path),
                      Catch::Matchers::ContainsSubstring("edges.csv:6") &&
                          Catch::Matchers::ContainsSubstring("crosses"));
}

TEST_CASE("loader rejects malformed and inconsistent files") {
  SECTION("ragged feature rows") {
    TempDir tmp;
    write_valid_dataset(tmp.path);
    write_file(tmp.path / "features.csv", "1.0,2.0\n3.0\n");
    REQUIRE_THROWS_WITH(load_dataset(tmp.path),
                        Catch::Matchers::ContainsSubstring("features.csv:2"));
  }
  SECTION("non-integer edge endpoint") {
    TempDir tmp;
    write_valid_dataset(tmp.path);
    write_file(tmp.path / "edges.csv", "0,1\nx,2\n");
    REQUIRE_THROWS_WITH(load_dataset(tmp.path), Catch::Matchers::ContainsSubstring("edges.csv:2"));
  }
  SECTION("edge endpoint out of range") {
    TempDir tmp;
    write_valid_dataset(tmp.path);
    write_file(tmp.path / "edges.csv", "0,99\n");
    REQUIRE_THROWS_WITH(load_dataset(tmp.path), Catch::Matchers::ContainsSubstring("edges.csv:1"));
  }
  SECTION("overlapping split sets") {
    TempDir tmp;
    write_valid_dataset(tmp.path);
    write_file(tmp.path / "split.json",
               R"({"private_nodes":[0,1,2,3],"public_train_nodes":[3,4],"public_test_nodes":[5]})");
    REQUIRE_THROWS_WITH(load_dataset(tmp.path),
                        Catch::Matchers::ContainsSubstring("more than one set"));
  }
  SECTION("node missing from the split") {
    TempDir tmp;
    write_valid_dataset(tmp.path);
    write_file(tmp.path / "split.json",
               R"({"private_nodes":[0,1,2],"public_train_nodes":[3,4],"public_test_nodes":[]})");
    REQUIRE_THROWS_WITH(load_dataset(tmp.path),
                        Catch::Matchers::ContainsSubstring("missing from all sets"));
  }
  SECTION("unlabeled private node") {
    TempDir tmp;
    write_valid_dataset(tmp.path);
    write_file(tmp.path / "labels.csv", "0,0\n2,0\n3,1\n4,0\n5,1\n");
    REQUIRE_THROWS_WITH(load_dataset(tmp.path),
                        Catch::Matchers::ContainsSubstring("private node 1 has no label"));
  }
}
