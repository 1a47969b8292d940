// Copyright 2026 The HQLM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hqlm/circuits.hpp"

namespace hqlm {

/// Undirected physical-qubit adjacency. Node positions are optional and only
/// used for export.
class CouplingGraph {
 public:
  struct Point {
    int x = 0;
    int y = 0;
  };

  CouplingGraph() = default;
  explicit CouplingGraph(std::size_t num_nodes) : adjacency_(num_nodes) {}

  std::size_t num_nodes() const noexcept { return adjacency_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  void add_edge(std::size_t a, std::size_t b);
  bool has_edge(std::size_t a, std::size_t b) const;
  std::size_t degree(std::size_t node) const;
  const std::set<std::size_t>& neighbors(std::size_t node) const;
  /// Edges as (low, high) pairs, sorted.
  const std::set<std::pair<std::size_t, std::size_t>>& edges() const noexcept { return edges_; }
  std::size_t max_degree() const;
  bool is_connected() const;

  const std::vector<Point>& positions() const noexcept { return positions_; }
  void set_positions(std::vector<Point> positions);

 private:
  void check_node(std::size_t node) const;

  std::vector<std::set<std::size_t>> adjacency_;
  std::set<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<Point> positions_;
};

/// Heavy-hex lattice of `rows` x `cols` hexagonal cells (brick-wall layout):
/// degree-3 vertex nodes joined through degree-2 edge nodes. Nodes are
/// numbered row-major over doubled lattice coordinates.
CouplingGraph build_heavy_hex(std::size_t rows, std::size_t cols);

enum class RegisterTag { Embedding, Hidden, Prediction, Other };

std::string register_tag_name(RegisterTag tag);
RegisterTag parse_register_tag(const std::string& text);

/// Injective logical -> physical map with register annotations.
class PhysicalLayout {
 public:
  void assign(std::size_t logical, std::size_t physical, RegisterTag tag = RegisterTag::Other);

  std::optional<std::size_t> physical(std::size_t logical) const;
  RegisterTag tag(std::size_t logical) const;
  std::size_t size() const noexcept { return map_.size(); }
  const std::map<std::size_t, std::pair<std::size_t, RegisterTag>>& entries() const noexcept { return map_; }
  bool has_tag(RegisterTag tag) const;

 private:
  std::map<std::size_t, std::pair<std::size_t, RegisterTag>> map_;
  std::set<std::size_t> used_;
};

struct GateViolation {
  std::size_t gate_index = 0;
  std::pair<std::size_t, std::size_t> logical;
  std::pair<std::size_t, std::size_t> physical;
  bool operator==(const GateViolation&) const = default;
};

struct LayoutReport {
  bool ok = true;
  std::vector<GateViolation> violations;
};

/// A two-qubit gate violates iff its mapped endpoints are not adjacent.
/// Throws LayoutError when a circuit qubit is unmapped or maps off-graph.
LayoutReport validate_layout(const ParamCircuit& circuit, const PhysicalLayout& layout,
                             const CouplingGraph& graph);

/// Two-qubit gates acting entirely inside the embedding register. Needs
/// register annotations (LayoutError otherwise).
LayoutReport embedding_register_independence_check(const ParamCircuit& circuit, const PhysicalLayout& layout);

/// `logical physical tag` per line; blank lines and `#` comments skipped.
PhysicalLayout read_layout(std::istream& in, const std::string& source = "<layout>");
PhysicalLayout load_layout(const std::filesystem::path& path);
void write_layout(std::ostream& out, const PhysicalLayout& layout);

/// Optional `nodes N` header, then `a b` per edge. Without a header the node
/// count is one past the largest index.
CouplingGraph read_graph(std::istream& in, const std::string& source = "<graph>");
CouplingGraph load_graph(const std::filesystem::path& path);
void write_graph(std::ostream& out, const CouplingGraph& graph);

/// Node index of the heavy-hex node at doubled coordinates (x, y), if any.
std::optional<std::size_t> node_at(const CouplingGraph& graph, int x, int y);

}  // namespace hqlm
