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
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "hqlm/simcore.hpp"

namespace hqlm {

/// Rotation angle of a circuit gate: either a literal or a reference into the
/// circuit's slot table.
struct SlotRef {
  std::size_t index = 0;
  bool operator==(const SlotRef&) const = default;
};
using AngleSource = std::variant<std::monostate, double, SlotRef>;

struct CircuitGate {
  GateKind kind = GateKind::H;
  std::array<std::size_t, 2> qubits{};
  AngleSource angle;
};

/// Ordered gate list with named parameter slots. Slot names are unique;
/// appending a fragment merges slots with equal names.
class ParamCircuit {
 public:
  ParamCircuit() = default;
  explicit ParamCircuit(std::size_t num_qubits) : num_qubits_(num_qubits) {}

  std::size_t num_qubits() const noexcept { return num_qubits_; }
  const std::vector<CircuitGate>& gates() const noexcept { return gates_; }
  const std::vector<std::string>& slot_names() const noexcept { return slot_names_; }
  std::size_t num_slots() const noexcept { return slot_names_.size(); }

  /// Qubits whose Z/ZZ expectations form the model features.
  const std::vector<std::size_t>& measured_qubits() const noexcept { return measured_; }
  void set_measured_qubits(std::vector<std::size_t> qubits);

  /// Index of `name`, registering it if new.
  std::size_t slot(const std::string& name);
  /// Index of an existing slot; throws BindingError when absent.
  std::size_t slot_index(const std::string& name) const;
  bool has_slot(const std::string& name) const { return slot_lookup_.contains(name); }

  void add_ry(std::size_t q, const std::string& slot_name);
  void add_rz(std::size_t q, const std::string& slot_name);
  void add_fixed(GateKind kind, std::size_t q, double angle);
  void add(GateKind kind, std::size_t q);
  void add_cnot(std::size_t control, std::size_t target);
  void add_cz(std::size_t a, std::size_t b);
  /// Generic append used by the dump parser; validates arity and angle presence.
  void add_gate(CircuitGate gate, const std::string& slot_name = {});

  void append(const ParamCircuit& fragment);

 private:
  void touch(std::size_t q);

  std::size_t num_qubits_ = 0;
  std::vector<CircuitGate> gates_;
  std::vector<std::string> slot_names_;
  std::unordered_map<std::string, std::size_t> slot_lookup_;
  std::vector<std::size_t> measured_;
};

using NamedBindings = std::unordered_map<std::string, double>;

/// Applies `circuit` to `state` with `bindings[slot]` angles.
void apply_circuit(StateVector& state, const ParamCircuit& circuit,
                   std::span<const double> bindings);
StateVector run_circuit(const ParamCircuit& circuit, std::span<const double> bindings);
StateVector run_circuit(const ParamCircuit& circuit, const NamedBindings& bindings);

enum class Entangler { Chain, Ring };

struct PQCLayerSpec {
  std::vector<std::size_t> qubits;
  Entangler entangler = Entangler::Chain;
};

/// One RY per register qubit, no entangling gates.
ParamCircuit build_embedding_encoder(std::span<const std::size_t> register_qubits,
                                     std::span<const std::string> angle_slots);

/// Per layer: RY then RZ on every qubit, then the entangler CNOTs. Slots are
/// named `<prefix>.l<layer>.q<position>.ry|rz`.
ParamCircuit build_pqc_block(const PQCLayerSpec& spec, std::size_t num_layers,
                             const std::string& prefix);

struct QRNNConfig {
  std::size_t emb_size = 3;
  std::size_t hidden_size = 0;  // 0 means emb_size
  std::size_t rec_layers = 1;
  std::size_t pred_layers = 2;
  std::size_t seq_len = 6;
  Entangler entangler = Entangler::Chain;

  std::size_t hidden() const noexcept { return hidden_size ? hidden_size : emb_size; }
  std::size_t total_qubits() const noexcept { return emb_size + hidden(); }
  std::size_t pqc_param_count() const noexcept { return 2 * hidden() * (rec_layers + pred_layers); }
  void validate() const;
};

/// Qubit roles for a built QRNN: embedding register first, hidden register after.
std::vector<std::size_t> qrnn_embedding_qubits(const QRNNConfig& config);
std::vector<std::size_t> qrnn_hidden_qubits(const QRNNConfig& config);

/// Token slot name for QRNN timestep `t`, embedding component `j`.
std::string qrnn_token_slot(std::size_t t, std::size_t j);

/// One timestep: re-embed token angles on E, transfer E_i -> H_i, recurrent
/// block on H. Token slots use timestep `t`; recurrent slots are shared.
ParamCircuit build_qrnn_step(const QRNNConfig& config, std::size_t t);
ParamCircuit build_qrnn_prediction(const QRNNConfig& config);
ParamCircuit build_qrnn_circuit(const QRNNConfig& config, std::size_t token_count);

/// Which register of a pooling group survives to the next level. `Last` keeps
/// the most recent token's register in a left-to-right window.
enum class PoolKeep { First, Last };

struct QCNNConfig {
  std::size_t emb_size = 3;
  std::size_t num_registers = 6;
  std::vector<std::size_t> kernels{3, 3};
  std::size_t conv_layers_per_block = 2;
  std::size_t pred_layers = 2;
  bool share_block_params = false;
  std::size_t overlap = 0;  // registers shared between neighbouring groups
  Entangler entangler = Entangler::Chain;
  PoolKeep pool_keep = PoolKeep::Last;

  std::size_t total_qubits() const noexcept { return emb_size * num_registers; }
  void validate() const;
};

/// Register grouping for one pooling level. `groups[g]` lists register indices
/// and `kept[g]` is the one that survives. Single-register groups pass through.
struct QCNNLevel {
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> kept;
};

/// Throws ConfigError when the kernels never reduce the window to one register.
std::vector<QCNNLevel> qcnn_plan(const QCNNConfig& config);
/// The register measured after the last level.
std::size_t qcnn_output_register(const QCNNConfig& config);
std::vector<std::size_t> qcnn_register_qubits(const QCNNConfig& config, std::size_t reg);
std::string qcnn_token_slot(std::size_t reg, std::size_t j);
std::string qcnn_conv_prefix(const QCNNConfig& config, std::size_t level, std::size_t group);
std::size_t qcnn_pqc_param_count(const QCNNConfig& config);

ParamCircuit build_qcnn_circuit(const QCNNConfig& config);

struct CircuitStats {
  std::size_t num_qubits = 0;
  std::size_t total_gates = 0;
  std::size_t two_qubit_gates = 0;
  std::size_t two_qubit_depth = 0;
  bool operator==(const CircuitStats&) const = default;
};

CircuitStats circuit_stats(const ParamCircuit& circuit);

/// Text dump: `QUBITS n`, optional `MEASURE q...`, then one gate per line as
/// `KIND q [q] [angle-or-slot]`.
void write_circuit_dump(std::ostream& out, const ParamCircuit& circuit);
std::string circuit_dump(const ParamCircuit& circuit);
ParamCircuit parse_circuit_dump(std::istream& in, const std::string& source = "<dump>");

}  // namespace hqlm
