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

#include "hqlm/hexmap.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>

#include "hqlm/errors.hpp"

namespace hqlm {

void CouplingGraph::check_node(std::size_t node) const {
  if (node >= adjacency_.size()) {
    throw IndexError("node " + std::to_string(node) + " outside graph of " + std::to_string(adjacency_.size()));
  }
}

void CouplingGraph::add_edge(std::size_t a, std::size_t b) {
  check_node(a);
  check_node(b);
  if (a == b) throw LayoutError("self-loop on node " + std::to_string(a));
  adjacency_[a].insert(b);
  adjacency_[b].insert(a);
  edges_.emplace(std::min(a, b), std::max(a, b));
}

bool CouplingGraph::has_edge(std::size_t a, std::size_t b) const {
  if (a >= adjacency_.size() || b >= adjacency_.size()) return false;
  return adjacency_[a].contains(b);
}

std::size_t CouplingGraph::degree(std::size_t node) const {
  check_node(node);
  return adjacency_[node].size();
}

const std::set<std::size_t>& CouplingGraph::neighbors(std::size_t node) const {
  check_node(node);
  return adjacency_[node];
}

std::size_t CouplingGraph::max_degree() const {
  std::size_t m = 0;
  for (const auto& a : adjacency_) m = std::max(m, a.size());
  return m;
}

bool CouplingGraph::is_connected() const {
  if (adjacency_.empty()) return true;
  std::vector<char> seen(adjacency_.size(), 0);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (auto v : adjacency_[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
    }
  }
  return count == adjacency_.size();
}

void CouplingGraph::set_positions(std::vector<Point> positions) {
  if (!positions.empty() && positions.size() != adjacency_.size()) {
    throw ShapeError("position count differs from node count");
  }
  positions_ = std::move(positions);
}

CouplingGraph build_heavy_hex(std::size_t rows, std::size_t cols) {
  if (rows < 1 || cols < 1) throw ArgumentError("heavy-hex needs at least one row and one column of cells");
  // Lattice vertices (r, c); every cell spans columns c0..c0+2 on rows r and r+1,
  // with c0 shifted by one on odd rows.
  using V = std::pair<int, int>;
  std::set<std::pair<V, V>> lattice;
  for (std::size_t i = 0; i < rows; ++i) {
    const int r = static_cast<int>(i);
    for (std::size_t j = 0; j < cols; ++j) {
      const int c0 = static_cast<int>(2 * j + i % 2);
      for (int rr : {r, r + 1}) {
        lattice.insert({{rr, c0}, {rr, c0 + 1}});
        lattice.insert({{rr, c0 + 1}, {rr, c0 + 2}});
      }
      lattice.insert({{r, c0}, {r + 1, c0}});
      lattice.insert({{r, c0 + 2}, {r + 1, c0 + 2}});
    }
  }
  // Doubled coordinates (x = 2c, y = 2r); each lattice edge gains a midpoint node.
  std::set<std::pair<int, int>> points;  // (y, x) for row-major ordering
  for (const auto& [a, b] : lattice) {
    points.insert({2 * a.first, 2 * a.second});
    points.insert({2 * b.first, 2 * b.second});
    points.insert({a.first + b.first, a.second + b.second});
  }
  std::map<std::pair<int, int>, std::size_t> index;
  std::vector<CouplingGraph::Point> positions;
  for (const auto& p : points) {
    index.emplace(p, positions.size());
    positions.push_back({p.second, p.first});
  }
  CouplingGraph g(positions.size());
  for (const auto& [a, b] : lattice) {
    const std::size_t mid = index.at({a.first + b.first, a.second + b.second});
    g.add_edge(index.at({2 * a.first, 2 * a.second}), mid);
    g.add_edge(mid, index.at({2 * b.first, 2 * b.second}));
  }
  g.set_positions(std::move(positions));
  return g;
}

std::optional<std::size_t> node_at(const CouplingGraph& graph, int x, int y) {
  const auto& pos = graph.positions();
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (pos[i].x == x && pos[i].y == y) return i;
  }
  return std::nullopt;
}

std::string register_tag_name(RegisterTag tag) {
  switch (tag) {
    case RegisterTag::Embedding:
      return "E";
    case RegisterTag::Hidden:
      return "H";
    case RegisterTag::Prediction:
      return "P";
    case RegisterTag::Other:
      break;
  }
  return "-";
}

RegisterTag parse_register_tag(const std::string& text) {
  if (text == "E" || text == "embedding") return RegisterTag::Embedding;
  if (text == "H" || text == "hidden") return RegisterTag::Hidden;
  if (text == "P" || text == "prediction") return RegisterTag::Prediction;
  if (text == "-" || text == "other") return RegisterTag::Other;
  throw LayoutError("unknown register tag '" + text + "'");
}

void PhysicalLayout::assign(std::size_t logical, std::size_t physical, RegisterTag tag) {
  if (map_.contains(logical)) throw LayoutError("logical qubit " + std::to_string(logical) + " mapped twice");
  if (used_.contains(physical)) {
    throw LayoutError("physical qubit " + std::to_string(physical) + " assigned to two logical qubits");
  }
  map_.emplace(logical, std::make_pair(physical, tag));
  used_.insert(physical);
}

std::optional<std::size_t> PhysicalLayout::physical(std::size_t logical) const {
  auto it = map_.find(logical);
  if (it == map_.end()) return std::nullopt;
  return it->second.first;
}

RegisterTag PhysicalLayout::tag(std::size_t logical) const {
  auto it = map_.find(logical);
  return it == map_.end() ? RegisterTag::Other : it->second.second;
}

bool PhysicalLayout::has_tag(RegisterTag tag) const {
  return std::any_of(map_.begin(), map_.end(), [&](const auto& e) { return e.second.second == tag; });
}

LayoutReport validate_layout(const ParamCircuit& circuit, const PhysicalLayout& layout,
                             const CouplingGraph& graph) {
  for (std::size_t q = 0; q < circuit.num_qubits(); ++q) {
    const auto p = layout.physical(q);
    if (!p) throw LayoutError("logical qubit " + std::to_string(q) + " is not mapped");
    if (*p >= graph.num_nodes()) {
      throw LayoutError("logical qubit " + std::to_string(q) + " maps to node " + std::to_string(*p) +
                        " outside the " + std::to_string(graph.num_nodes()) + "-node graph");
    }
  }
  LayoutReport report;
  const auto& gates = circuit.gates();
  for (std::size_t i = 0; i < gates.size(); ++i) {
    if (gate_arity(gates[i].kind) != 2) continue;
    const auto [a, b] = gates[i].qubits;
    const std::size_t pa = *layout.physical(a), pb = *layout.physical(b);
    if (!graph.has_edge(pa, pb)) report.violations.push_back({i, {a, b}, {pa, pb}});
  }
  report.ok = report.violations.empty();
  return report;
}

LayoutReport embedding_register_independence_check(const ParamCircuit& circuit, const PhysicalLayout& layout) {
  if (!layout.has_tag(RegisterTag::Embedding)) {
    throw LayoutError("layout has no embedding-register annotations");
  }
  LayoutReport report;
  const auto& gates = circuit.gates();
  for (std::size_t i = 0; i < gates.size(); ++i) {
    if (gate_arity(gates[i].kind) != 2) continue;
    const auto [a, b] = gates[i].qubits;
    if (layout.tag(a) == RegisterTag::Embedding && layout.tag(b) == RegisterTag::Embedding) {
      report.violations.push_back(
          {i, {a, b}, {layout.physical(a).value_or(0), layout.physical(b).value_or(0)}});
    }
  }
  report.ok = report.violations.empty();
  return report;
}

static bool content_line(std::string& line) {
  if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line.find_first_not_of(" \t") != std::string::npos;
}

static std::size_t parse_index(const std::string& tok, const std::string& source, std::size_t line) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != tok.size() || tok[0] == '-') {
    throw FormatError(source, line, "expected a non-negative index, got '" + tok + "'");
  }
  return static_cast<std::size_t>(v);
}

PhysicalLayout read_layout(std::istream& in, const std::string& source) {
  PhysicalLayout layout;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!content_line(line)) continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.size() != 3) throw FormatError(source, lineno, "expected 'logical physical tag'");
    RegisterTag tag;
    try {
      tag = parse_register_tag(tok[2]);
    } catch (const LayoutError& e) {
      throw FormatError(source, lineno, e.what());
    }
    // Duplicate assignments stay LayoutErrors: the file parses, the layout is invalid.
    layout.assign(parse_index(tok[0], source, lineno), parse_index(tok[1], source, lineno), tag);
  }
  return layout;
}

PhysicalLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open layout '" + path.string() + "'");
  return read_layout(in, path.string());
}

void write_layout(std::ostream& out, const PhysicalLayout& layout) {
  out << "# logical physical register\n";
  for (const auto& [logical, entry] : layout.entries()) {
    out << logical << ' ' << entry.first << ' ' << register_tag_name(entry.second) << '\n';
  }
}

CouplingGraph read_graph(std::istream& in, const std::string& source) {
  std::optional<std::size_t> declared;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::size_t> edge_lines;
  std::string line;
  std::size_t lineno = 0;
  std::size_t max_index = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!content_line(line)) continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.size() == 2 && tok[0] == "nodes") {
      if (declared || !edges.empty()) throw FormatError(source, lineno, "'nodes' header must come first");
      declared = parse_index(tok[1], source, lineno);
      continue;
    }
    if (tok.size() != 2) throw FormatError(source, lineno, "expected an edge 'a b'");
    const std::size_t a = parse_index(tok[0], source, lineno), b = parse_index(tok[1], source, lineno);
    if (a == b) throw FormatError(source, lineno, "self-loop on node " + tok[0]);
    if (declared && std::max(a, b) >= *declared) {
      throw FormatError(source, lineno, "node index outside declared node count");
    }
    max_index = std::max({max_index, a, b});
    edges.emplace_back(a, b);
  }
  const std::size_t n = declared ? *declared : (edges.empty() ? 0 : max_index + 1);
  CouplingGraph g(n);
  for (const auto& [a, b] : edges) g.add_edge(a, b);
  return g;
}

CouplingGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open graph '" + path.string() + "'");
  return read_graph(in, path.string());
}

void write_graph(std::ostream& out, const CouplingGraph& graph) {
  out << "nodes " << graph.num_nodes() << '\n';
  for (const auto& [a, b] : graph.edges()) out << a << ' ' << b << '\n';
}

}  // namespace hqlm
