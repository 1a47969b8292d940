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

#include "hqlm/circuits.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "hqlm/errors.hpp"

namespace hqlm {

void ParamCircuit::touch(std::size_t q) { num_qubits_ = std::max(num_qubits_, q + 1); }

void ParamCircuit::set_measured_qubits(std::vector<std::size_t> qubits) {
  for (auto q : qubits) touch(q);
  measured_ = std::move(qubits);
}

std::size_t ParamCircuit::slot(const std::string& name) {
  if (name.empty()) throw ConfigError("empty slot name");
  auto [it, inserted] = slot_lookup_.try_emplace(name, slot_names_.size());
  if (inserted) slot_names_.push_back(name);
  return it->second;
}

std::size_t ParamCircuit::slot_index(const std::string& name) const {
  auto it = slot_lookup_.find(name);
  if (it == slot_lookup_.end()) throw BindingError("unknown slot '" + name + "'");
  return it->second;
}

void ParamCircuit::add_gate(CircuitGate gate, const std::string& slot_name) {
  const bool rotation = is_rotation(gate.kind);
  if (!slot_name.empty()) {
    if (!rotation) throw MalformedGateError(std::string(gate_name(gate.kind)) + " takes no angle");
    gate.angle = SlotRef{slot(slot_name)};
  }
  if (rotation && std::holds_alternative<std::monostate>(gate.angle)) {
    throw MalformedGateError(std::string(gate_name(gate.kind)) + " requires an angle");
  }
  if (!rotation && !std::holds_alternative<std::monostate>(gate.angle)) {
    throw MalformedGateError(std::string(gate_name(gate.kind)) + " takes no angle");
  }
  if (gate_arity(gate.kind) == 2) {
    if (gate.qubits[0] == gate.qubits[1]) {
      throw IndexError("two-qubit gate on identical qubits " + std::to_string(gate.qubits[0]));
    }
    touch(gate.qubits[1]);
  } else {
    gate.qubits[1] = 0;
  }
  touch(gate.qubits[0]);
  gates_.push_back(gate);
}

void ParamCircuit::add_ry(std::size_t q, const std::string& slot_name) {
  add_gate({GateKind::RY, {q, 0}, {}}, slot_name);
}

void ParamCircuit::add_rz(std::size_t q, const std::string& slot_name) {
  add_gate({GateKind::RZ, {q, 0}, {}}, slot_name);
}

void ParamCircuit::add_fixed(GateKind kind, std::size_t q, double angle) {
  add_gate({kind, {q, 0}, angle});
}

void ParamCircuit::add(GateKind kind, std::size_t q) { add_gate({kind, {q, 0}, {}}); }

void ParamCircuit::add_cnot(std::size_t control, std::size_t target) {
  add_gate({GateKind::CNOT, {control, target}, {}});
}

void ParamCircuit::add_cz(std::size_t a, std::size_t b) { add_gate({GateKind::CZ, {a, b}, {}}); }

void ParamCircuit::append(const ParamCircuit& fragment) {
  std::vector<std::size_t> remap(fragment.slot_names_.size());
  for (std::size_t i = 0; i < remap.size(); ++i) remap[i] = slot(fragment.slot_names_[i]);
  for (CircuitGate g : fragment.gates_) {
    if (auto* ref = std::get_if<SlotRef>(&g.angle)) ref->index = remap[ref->index];
    gates_.push_back(g);
  }
  num_qubits_ = std::max(num_qubits_, fragment.num_qubits_);
}

void apply_circuit(StateVector& state, const ParamCircuit& circuit,
                   std::span<const double> bindings) {
  if (bindings.size() < circuit.num_slots()) {
    throw BindingError("circuit has " + std::to_string(circuit.num_slots()) +
                       " slots but only " + std::to_string(bindings.size()) + " bindings");
  }
  if (circuit.num_qubits() > state.num_qubits()) {
    throw IndexError("circuit needs " + std::to_string(circuit.num_qubits()) +
                     " qubits, state has " + std::to_string(state.num_qubits()));
  }
  for (const auto& g : circuit.gates()) {
    const auto [a, b] = g.qubits;
    switch (g.kind) {
      case GateKind::RY:
      case GateKind::RZ: {
        const double theta = std::holds_alternative<SlotRef>(g.angle)
                                 ? bindings[std::get<SlotRef>(g.angle).index]
                                 : std::get<double>(g.angle);
        if (g.kind == GateKind::RY) {
          state.ry(a, theta);
        } else {
          state.rz(a, theta);
        }
        break;
      }
      case GateKind::H: state.h(a); break;
      case GateKind::X: state.x(a); break;
      case GateKind::CNOT: state.cnot(a, b); break;
      case GateKind::CZ: state.cz(a, b); break;
    }
  }
}

StateVector run_circuit(const ParamCircuit& circuit, std::span<const double> bindings) {
  StateVector state(std::max<std::size_t>(circuit.num_qubits(), 1));
  apply_circuit(state, circuit, bindings);
  return state;
}

StateVector run_circuit(const ParamCircuit& circuit, const NamedBindings& bindings) {
  std::vector<double> values(circuit.num_slots());
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto it = bindings.find(circuit.slot_names()[i]);
    if (it == bindings.end()) {
      throw BindingError("slot '" + circuit.slot_names()[i] + "' has no binding");
    }
    values[i] = it->second;
  }
  return run_circuit(circuit, values);
}

ParamCircuit build_embedding_encoder(std::span<const std::size_t> register_qubits,
                                     std::span<const std::string> angle_slots) {
  if (register_qubits.size() != angle_slots.size()) {
    throw ConfigError("embedding encoder: " + std::to_string(register_qubits.size()) +
                      " qubits but " + std::to_string(angle_slots.size()) + " angle slots");
  }
  if (register_qubits.empty()) throw ConfigError("embedding encoder: empty register");
  ParamCircuit c;
  for (std::size_t j = 0; j < register_qubits.size(); ++j) c.add_ry(register_qubits[j], angle_slots[j]);
  return c;
}

ParamCircuit build_pqc_block(const PQCLayerSpec& spec, std::size_t num_layers,
                             const std::string& prefix) {
  if (spec.qubits.empty()) throw ConfigError("PQC block on empty qubit list");
  ParamCircuit c;
  const auto& qs = spec.qubits;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const std::string layer = prefix + ".l" + std::to_string(l) + ".q";
    for (std::size_t i = 0; i < qs.size(); ++i) {
      c.add_ry(qs[i], layer + std::to_string(i) + ".ry");
      c.add_rz(qs[i], layer + std::to_string(i) + ".rz");
    }
    for (std::size_t i = 0; i + 1 < qs.size(); ++i) c.add_cnot(qs[i], qs[i + 1]);
    if (spec.entangler == Entangler::Ring && qs.size() > 2) c.add_cnot(qs.back(), qs.front());
  }
  return c;
}

// ---------------------------------------------------------------------------
// QRNN

void QRNNConfig::validate() const {
  if (emb_size < 1) throw ConfigError("QRNN emb_size must be >= 1");
  if (hidden() < emb_size) {
    throw ConfigError("QRNN hidden_size must be >= emb_size (one transfer CNOT per embedding qubit)");
  }
  if (seq_len < 1) throw ConfigError("QRNN seq_len must be >= 1");
}

std::vector<std::size_t> qrnn_embedding_qubits(const QRNNConfig& config) {
  std::vector<std::size_t> q(config.emb_size);
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = j;
  return q;
}

std::vector<std::size_t> qrnn_hidden_qubits(const QRNNConfig& config) {
  std::vector<std::size_t> q(config.hidden());
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = config.emb_size + j;
  return q;
}

std::string qrnn_token_slot(std::size_t t, std::size_t j) {
  return "x" + std::to_string(t) + ".e" + std::to_string(j);
}

ParamCircuit build_qrnn_step(const QRNNConfig& config, std::size_t t) {
  const auto e = qrnn_embedding_qubits(config);
  const auto h = qrnn_hidden_qubits(config);
  std::vector<std::string> slots(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) slots[j] = qrnn_token_slot(t, j);
  ParamCircuit c = build_embedding_encoder(e, slots);
  for (std::size_t j = 0; j < e.size(); ++j) c.add_cnot(e[j], h[j]);
  if (config.rec_layers > 0) c.append(build_pqc_block({h, config.entangler}, config.rec_layers, "rec"));
  return c;
}

ParamCircuit build_qrnn_prediction(const QRNNConfig& config) {
  ParamCircuit c;
  const auto h = qrnn_hidden_qubits(config);
  if (config.pred_layers > 0) c = build_pqc_block({h, config.entangler}, config.pred_layers, "pred");
  c.set_measured_qubits(h);
  return c;
}

ParamCircuit build_qrnn_circuit(const QRNNConfig& config, std::size_t token_count) {
  config.validate();
  if (token_count < 1 || token_count > config.seq_len) {
    throw ConfigError("QRNN token count " + std::to_string(token_count) + " outside [1, " +
                      std::to_string(config.seq_len) + "]");
  }
  ParamCircuit c(config.total_qubits());
  for (std::size_t t = 0; t < token_count; ++t) c.append(build_qrnn_step(config, t));
  c.append(build_qrnn_prediction(config));
  c.set_measured_qubits(qrnn_hidden_qubits(config));
  return c;
}

// ---------------------------------------------------------------------------
// QCNN

void QCNNConfig::validate() const {
  if (emb_size < 1) throw ConfigError("QCNN emb_size must be >= 1");
  if (num_registers < 1) throw ConfigError("QCNN needs at least one register");
  for (auto k : kernels) {
    if (k < 2) throw ConfigError("QCNN kernel sizes must be >= 2");
    if (overlap >= k) throw ConfigError("QCNN overlap must be smaller than every kernel");
  }
  (void)qcnn_plan(*this);
}

std::vector<QCNNLevel> qcnn_plan(const QCNNConfig& config) {
  std::vector<std::size_t> alive(config.num_registers);
  for (std::size_t r = 0; r < alive.size(); ++r) alive[r] = r;
  std::vector<QCNNLevel> levels;
  for (std::size_t k : config.kernels) {
    if (k < 2 || config.overlap >= k) throw ConfigError("invalid QCNN kernel " + std::to_string(k));
    QCNNLevel level;
    const std::size_t stride = k - config.overlap;
    std::size_t start = 0;
    while (start < alive.size()) {
      const std::size_t end = std::min(start + k, alive.size());
      level.groups.emplace_back(alive.begin() + static_cast<std::ptrdiff_t>(start),
                                alive.begin() + static_cast<std::ptrdiff_t>(end));
      if (end == alive.size()) break;
      start += stride;
    }
    for (const auto& g : level.groups) {
      level.kept.push_back(config.pool_keep == PoolKeep::First ? g.front() : g.back());
    }
    alive = level.kept;
    levels.push_back(std::move(level));
  }
  if (alive.size() != 1) {
    std::string ks;
    for (auto k : config.kernels) ks += (ks.empty() ? "" : ",") + std::to_string(k);
    throw ConfigError("QCNN kernels [" + ks + "] leave " + std::to_string(alive.size()) +
                      " registers of " + std::to_string(config.num_registers) +
                      "; the product of kernels must reduce the window to exactly one register");
  }
  return levels;
}

std::size_t qcnn_output_register(const QCNNConfig& config) {
  const auto levels = qcnn_plan(config);
  return levels.empty() ? 0 : levels.back().kept.front();
}

std::vector<std::size_t> qcnn_register_qubits(const QCNNConfig& config, std::size_t reg) {
  std::vector<std::size_t> q(config.emb_size);
  for (std::size_t j = 0; j < q.size(); ++j) q[j] = reg * config.emb_size + j;
  return q;
}

std::string qcnn_token_slot(std::size_t reg, std::size_t j) {
  return "x" + std::to_string(reg) + ".e" + std::to_string(j);
}

std::string qcnn_conv_prefix(const QCNNConfig& config, std::size_t level, std::size_t group) {
  std::string p = "conv" + std::to_string(level);
  if (!config.share_block_params) p += ".g" + std::to_string(group);
  return p;
}

std::size_t qcnn_pqc_param_count(const QCNNConfig& config) {
  const auto levels = qcnn_plan(config);
  std::size_t count = 0;
  for (const auto& level : levels) {
    // With sharing, blocks of one level share angles position-wise, so the
    // widest block determines the slot count.
    std::size_t widest = 0;
    for (const auto& g : level.groups) {
      if (g.size() < 2) continue;
      const std::size_t n = 2 * g.size() * config.emb_size * config.conv_layers_per_block;
      if (config.share_block_params) {
        widest = std::max(widest, n);
      } else {
        count += n;
      }
    }
    count += widest;
  }
  return count + 2 * config.emb_size * config.pred_layers;
}

ParamCircuit build_qcnn_circuit(const QCNNConfig& config) {
  config.validate();
  ParamCircuit c(config.total_qubits());
  for (std::size_t r = 0; r < config.num_registers; ++r) {
    const auto qs = qcnn_register_qubits(config, r);
    std::vector<std::string> slots(qs.size());
    for (std::size_t j = 0; j < qs.size(); ++j) slots[j] = qcnn_token_slot(r, j);
    c.append(build_embedding_encoder(qs, slots));
  }
  const auto levels = qcnn_plan(config);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    for (std::size_t g = 0; g < levels[l].groups.size(); ++g) {
      const auto& group = levels[l].groups[g];
      if (group.size() < 2 || config.conv_layers_per_block == 0) continue;
      PQCLayerSpec spec{{}, config.entangler};
      for (auto r : group) {
        const auto qs = qcnn_register_qubits(config, r);
        spec.qubits.insert(spec.qubits.end(), qs.begin(), qs.end());
      }
      c.append(build_pqc_block(spec, config.conv_layers_per_block, qcnn_conv_prefix(config, l, g)));
    }
  }
  const auto out = qcnn_register_qubits(config, qcnn_output_register(config));
  if (config.pred_layers > 0) c.append(build_pqc_block({out, config.entangler}, config.pred_layers, "pred"));
  c.set_measured_qubits(out);
  return c;
}

// ---------------------------------------------------------------------------
// Statistics

CircuitStats circuit_stats(const ParamCircuit& circuit) {
  CircuitStats s;
  s.num_qubits = circuit.num_qubits();
  std::vector<std::size_t> frontier(circuit.num_qubits(), 0);
  for (const auto& g : circuit.gates()) {
    ++s.total_gates;
    if (gate_arity(g.kind) != 2) continue;
    ++s.two_qubit_gates;
    auto& fa = frontier[g.qubits[0]];
    auto& fb = frontier[g.qubits[1]];
    const std::size_t layer = std::max(fa, fb) + 1;
    fa = fb = layer;
    s.two_qubit_depth = std::max(s.two_qubit_depth, layer);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Dump format

void write_circuit_dump(std::ostream& out, const ParamCircuit& circuit) {
  out << "QUBITS " << circuit.num_qubits() << '\n';
  if (!circuit.measured_qubits().empty()) {
    out << "MEASURE";
    for (auto q : circuit.measured_qubits()) out << ' ' << q;
    out << '\n';
  }
  char buf[64];
  for (const auto& g : circuit.gates()) {
    out << gate_name(g.kind) << ' ' << g.qubits[0];
    if (gate_arity(g.kind) == 2) out << ' ' << g.qubits[1];
    if (const auto* ref = std::get_if<SlotRef>(&g.angle)) {
      out << ' ' << circuit.slot_names()[ref->index];
    } else if (const auto* v = std::get_if<double>(&g.angle)) {
      std::snprintf(buf, sizeof buf, "%.17g", *v);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

std::string circuit_dump(const ParamCircuit& circuit) {
  std::ostringstream os;
  write_circuit_dump(os, circuit);
  return os.str();
}

static std::size_t parse_index(const std::string& tok, const std::string& source, std::size_t line) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size()) {
    throw FormatError(source, line, "expected qubit index, got '" + tok + "'");
  }
  return v;
}

ParamCircuit parse_circuit_dump(std::istream& in, const std::string& source) {
  ParamCircuit c;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok[0] == "QUBITS") {
      if (tok.size() != 2) throw FormatError(source, lineno, "QUBITS takes one count");
      c = ParamCircuit(parse_index(tok[1], source, lineno));
      header = true;
      continue;
    }
    if (!header) throw FormatError(source, lineno, "missing QUBITS header");
    if (tok[0] == "MEASURE") {
      std::vector<std::size_t> qs;
      for (std::size_t i = 1; i < tok.size(); ++i) qs.push_back(parse_index(tok[i], source, lineno));
      c.set_measured_qubits(std::move(qs));
      continue;
    }
    auto kind = parse_gate_kind(tok[0]);
    if (!kind) throw FormatError(source, lineno, "unknown gate '" + tok[0] + "'");
    const std::size_t arity = gate_arity(*kind);
    const std::size_t expected = arity + 1 + (is_rotation(*kind) ? 1 : 0);
    if (tok.size() != expected) {
      throw FormatError(source, lineno, "expected " + std::to_string(expected - 1) +
                                            " operands for " + tok[0]);
    }
    CircuitGate g{*kind, {parse_index(tok[1], source, lineno), 0}, {}};
    if (arity == 2) g.qubits[1] = parse_index(tok[2], source, lineno);
    std::string slot;
    if (is_rotation(*kind)) {
      const std::string& a = tok.back();
      const char first = a[0];
      if ((first >= '0' && first <= '9') || first == '-' || first == '+' || first == '.') {
        char* end = nullptr;
        const double v = std::strtod(a.c_str(), &end);
        if (end != a.c_str() + a.size()) throw FormatError(source, lineno, "bad angle '" + a + "'");
        g.angle = v;
      } else {
        slot = a;
      }
    }
    try {
      c.add_gate(g, slot);
    } catch (const Error& e) {
      throw FormatError(source, lineno, e.what());
    }
  }
  if (!header) throw FormatError(source, 0, "empty circuit dump");
  return c;
}

}  // namespace hqlm
