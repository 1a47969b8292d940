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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "hqlm/circuits.hpp"
#include "hqlm/errors.hpp"

using namespace hqlm;

namespace {

std::size_t count_kind(const ParamCircuit& c, GateKind k) {
  return static_cast<std::size_t>(
      std::count_if(c.gates().begin(), c.gates().end(), [&](const CircuitGate& g) { return g.kind == k; }));
}

// Repeatedly peels off a layer: a 2-qubit gate joins the current layer when no
// earlier unscheduled 2-qubit gate touches its qubits and its qubits are free.
std::size_t reference_depth(const ParamCircuit& c) {
  std::vector<std::array<std::size_t, 2>> pending;
  for (const auto& g : c.gates()) {
    if (gate_arity(g.kind) == 2) pending.push_back(g.qubits);
  }
  std::size_t layers = 0;
  while (!pending.empty()) {
    std::vector<char> blocked(c.num_qubits(), 0);
    std::vector<std::array<std::size_t, 2>> rest;
    for (const auto& q : pending) {
      if (!blocked[q[0]] && !blocked[q[1]]) {
        blocked[q[0]] = blocked[q[1]] = 1;
      } else {
        blocked[q[0]] = blocked[q[1]] = 1;
        rest.push_back(q);
      }
    }
    pending.swap(rest);
    ++layers;
  }
  return layers;
}

std::size_t qrnn_two_qubit_formula(const QRNNConfig& c, std::size_t T) {
  return T * (c.emb_size + c.rec_layers * (c.hidden() - 1)) + c.pred_layers * (c.hidden() - 1);
}

}  // namespace

TEST(EmbeddingEncoder, OneRyPerQubit) {
  std::vector<std::size_t> q{0, 1, 2};
  std::vector<std::string> s{"a", "b", "c"};
  const auto c = build_embedding_encoder(q, s);
  EXPECT_EQ(count_kind(c, GateKind::RY), 3u);
  EXPECT_EQ(circuit_stats(c).two_qubit_gates, 0u);
  EXPECT_EQ(c.num_slots(), 3u);

  std::vector<std::size_t> one{0};
  std::vector<std::string> name{"x"};
  EXPECT_EQ(build_embedding_encoder(one, name).gates().size(), 1u);

  const auto st = run_circuit(c, std::vector<double>{0.0, 0.0, 0.0});
  EXPECT_NEAR(std::norm(st[0]), 1.0, 1e-15);

  std::vector<std::string> short_names{"a", "b"};
  EXPECT_THROW(build_embedding_encoder(q, short_names), ConfigError);
}

TEST(PQCBlock, CountsByConstruction) {
  const auto one = build_pqc_block({{0, 1, 2}, Entangler::Chain}, 1, "p");
  EXPECT_EQ(count_kind(one, GateKind::RY) + count_kind(one, GateKind::RZ), 6u);
  EXPECT_EQ(count_kind(one, GateKind::CNOT), 2u);
  const auto two = build_pqc_block({{0, 1, 2}, Entangler::Chain}, 2, "p");
  EXPECT_EQ(count_kind(two, GateKind::RY) + count_kind(two, GateKind::RZ), 12u);
  EXPECT_EQ(count_kind(two, GateKind::CNOT), 4u);
  EXPECT_EQ(two.num_slots(), 12u);
  for (auto e : {Entangler::Chain, Entangler::Ring}) {
    const auto single = build_pqc_block({{0}, e}, 1, "p");
    EXPECT_EQ(single.num_slots(), 2u);
    EXPECT_EQ(count_kind(single, GateKind::CNOT), 0u);
  }
  EXPECT_EQ(count_kind(build_pqc_block({{0, 1, 2, 3}, Entangler::Ring}, 1, "p"), GateKind::CNOT), 4u);
  EXPECT_THROW(build_pqc_block({{}, Entangler::Chain}, 1, "p"), ConfigError);
}

TEST(PQCBlock, LayerOrderRyRzThenEntangler) {
  const auto c = build_pqc_block({{0, 1}, Entangler::Chain}, 1, "p");
  ASSERT_EQ(c.gates().size(), 5u);
  EXPECT_EQ(c.gates()[0].kind, GateKind::RY);
  EXPECT_EQ(c.gates()[1].kind, GateKind::RZ);
  EXPECT_EQ(c.gates()[0].qubits[0], 0u);
  EXPECT_EQ(c.gates()[2].kind, GateKind::RY);
  EXPECT_EQ(c.gates()[2].qubits[0], 1u);
  EXPECT_EQ(c.gates()[4].kind, GateKind::CNOT);
}

TEST(QRNN, ReferenceStatistics) {
  QRNNConfig cfg;
  const auto c = build_qrnn_circuit(cfg, 6);
  const auto s = circuit_stats(c);
  EXPECT_EQ(s.num_qubits, 6u);
  EXPECT_EQ(s.two_qubit_gates, 34u);
  EXPECT_EQ(s.two_qubit_depth, 22u);
  EXPECT_EQ(s.total_gates, 100u);
  EXPECT_LE(std::abs(static_cast<double>(s.total_gates) - 106.0), 0.1 * 106.0);
  EXPECT_EQ(c.measured_qubits(), (std::vector<std::size_t>{3, 4, 5}));
}

TEST(QRNN, RingAndLayerSplitAlternatives) {
  QRNNConfig ring;
  ring.entangler = Entangler::Ring;
  const auto r = circuit_stats(build_qrnn_circuit(ring, 6));
  EXPECT_EQ(r.two_qubit_gates, 42u);
  // Three mutually overlapping CNOTs per ring layer: 6 * (1 + 3) + 2 * 3.
  EXPECT_EQ(r.two_qubit_depth, 30u);
  EXPECT_EQ(r.two_qubit_depth, reference_depth(build_qrnn_circuit(ring, 6)));
  QRNNConfig swapped;
  swapped.rec_layers = 2;
  swapped.pred_layers = 1;
  // Two recurrent layers per step: 6 * (3 + 4) + 2 CNOTs, depth 6 * (1 + 2 * 2) + 2.
  const auto sw = circuit_stats(build_qrnn_circuit(swapped, 6));
  EXPECT_EQ(sw.two_qubit_gates, 44u);
  EXPECT_EQ(sw.two_qubit_depth, 32u);
  EXPECT_EQ(sw.two_qubit_depth, reference_depth(build_qrnn_circuit(swapped, 6)));
}

TEST(QRNN, SingleStepNoPrediction) {
  QRNNConfig cfg;
  cfg.pred_layers = 0;
  const auto c = build_qrnn_circuit(cfg, 1);
  EXPECT_EQ(c.gates().size(), 14u);
}

TEST(QRNN, TokenCountRange) {
  QRNNConfig cfg;
  EXPECT_THROW(build_qrnn_circuit(cfg, 0), ConfigError);
  EXPECT_THROW(build_qrnn_circuit(cfg, 7), ConfigError);
}

TEST(QRNN, TwoQubitFormulaAndDepthOracle) {
  for (std::size_t e = 1; e <= 4; ++e) {
    for (std::size_t extra = 0; extra <= 2; ++extra) {
      for (std::size_t rec = 0; rec <= 2; ++rec) {
        for (std::size_t pred = 0; pred <= 2; ++pred) {
          QRNNConfig cfg;
          cfg.emb_size = e;
          cfg.hidden_size = e + extra;
          cfg.rec_layers = rec;
          cfg.pred_layers = pred;
          for (std::size_t T = 1; T <= cfg.seq_len; ++T) {
            const auto c = build_qrnn_circuit(cfg, T);
            const auto s = circuit_stats(c);
            EXPECT_EQ(s.two_qubit_gates, qrnn_two_qubit_formula(cfg, T));
            EXPECT_EQ(s.two_qubit_depth, reference_depth(c));
            EXPECT_LE(s.two_qubit_depth, s.two_qubit_gates);
            EXPECT_LE(s.two_qubit_gates, s.total_gates);
          }
        }
      }
    }
  }
}

TEST(QRNN, RecurrentSlotsSharedAcrossSteps) {
  QRNNConfig cfg;
  const auto c = build_qrnn_circuit(cfg, 5);
  std::map<std::string, std::size_t> uses;
  for (const auto& g : c.gates()) {
    if (const auto* ref = std::get_if<SlotRef>(&g.angle)) ++uses[c.slot_names()[ref->index]];
  }
  std::size_t rec_slots = 0;
  for (const auto& [name, n] : uses) {
    if (name.rfind("rec.", 0) == 0) {
      ++rec_slots;
      EXPECT_EQ(n, 5u) << name;
    } else {
      EXPECT_EQ(n, 1u) << name;
    }
  }
  EXPECT_EQ(rec_slots, 2 * cfg.hidden() * cfg.rec_layers);
  EXPECT_EQ(c.num_slots(), 5 * 3 + cfg.pqc_param_count());
}

TEST(QRNN, ParameterCountIdentity) {
  QRNNConfig cfg;
  EXPECT_EQ(cfg.pqc_param_count(), 18u);
  EXPECT_EQ(24u * 3u + cfg.pqc_param_count(), 90u);
}

TEST(QCNN, PlanForPresets) {
  QCNNConfig a;
  const auto plan = qcnn_plan(a);
  ASSERT_EQ(plan.size(), 2u);
  EXPECT_EQ(plan[0].groups, (std::vector<std::vector<std::size_t>>{{0, 1, 2}, {3, 4, 5}}));
  EXPECT_EQ(plan[0].kept, (std::vector<std::size_t>{2, 5}));
  EXPECT_EQ(plan[1].groups, (std::vector<std::vector<std::size_t>>{{2, 5}}));
  const auto c = build_qcnn_circuit(a);
  EXPECT_EQ(c.measured_qubits(), (std::vector<std::size_t>{15, 16, 17}));
  EXPECT_EQ(c.num_qubits(), 18u);

  QCNNConfig first = a;
  first.pool_keep = PoolKeep::First;
  const auto fp = qcnn_plan(first);
  EXPECT_EQ(fp[1].groups, (std::vector<std::vector<std::size_t>>{{0, 3}}));
  EXPECT_EQ(qcnn_output_register(first), 0u);
  EXPECT_EQ(build_qcnn_circuit(first).measured_qubits(), (std::vector<std::size_t>{0, 1, 2}));
  // The pooling rule moves the readout but leaves the gate budget alone.
  EXPECT_EQ(circuit_stats(build_qcnn_circuit(first)).two_qubit_gates,
            circuit_stats(c).two_qubit_gates);

  QCNNConfig rp;
  rp.num_registers = 4;
  rp.kernels = {2, 2};
  const auto p = qcnn_plan(rp);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].groups.size(), 2u);
  EXPECT_EQ(p[1].groups.size(), 1u);
}

TEST(QCNN, BlockWidthsAndCounts) {
  QCNNConfig a;
  const auto c = build_qcnn_circuit(a);
  // Level 1: two 9-qubit blocks, level 2: one 6-qubit block, then prediction on 3 qubits.
  const std::size_t cnots = 2 * 2 * 8 + 2 * 5 + 2 * 2;
  EXPECT_EQ(circuit_stats(c).two_qubit_gates, cnots);
  EXPECT_EQ(circuit_stats(c).two_qubit_depth, reference_depth(c));
  EXPECT_EQ(qcnn_pqc_param_count(a), 2u * 9 * 2 * 2 + 2u * 6 * 2 + 2u * 3 * 2);
  EXPECT_EQ(c.num_slots(), 18u + qcnn_pqc_param_count(a));
}

TEST(QCNN, DegenerateAndLeftovers) {
  QCNNConfig one;
  one.num_registers = 1;
  one.kernels = {};
  const auto c = build_qcnn_circuit(one);
  EXPECT_EQ(c.num_qubits(), 3u);
  EXPECT_EQ(count_kind(c, GateKind::RY), 3u + 2u * 3u);

  QCNNConfig odd;
  odd.num_registers = 5;
  odd.kernels = {2, 3};  // 5 -> {0,1},{2,3},{4} -> 3 survivors -> 1
  const auto plan = qcnn_plan(odd);
  EXPECT_EQ(plan[0].groups.back(), (std::vector<std::size_t>{4}));
  EXPECT_EQ(plan[1].groups, (std::vector<std::vector<std::size_t>>{{1, 3, 4}}));
  EXPECT_EQ(qcnn_output_register(odd), 4u);
  odd.pool_keep = PoolKeep::First;
  EXPECT_EQ(qcnn_plan(odd)[1].groups, (std::vector<std::vector<std::size_t>>{{0, 2, 4}}));
  EXPECT_EQ(qcnn_output_register(odd), 0u);

  QCNNConfig stuck;
  stuck.kernels = {2};
  EXPECT_THROW(build_qcnn_circuit(stuck), ConfigError);
}

TEST(QCNN, SharedBlocksReuseSlots) {
  QCNNConfig shared;
  shared.share_block_params = true;
  const auto c = build_qcnn_circuit(shared);
  EXPECT_EQ(c.num_slots(), 18u + qcnn_pqc_param_count(shared));
  EXPECT_LT(qcnn_pqc_param_count(shared), qcnn_pqc_param_count(QCNNConfig{}));
}

TEST(Stats, SmallCases) {
  ParamCircuit a(2);
  a.add_cnot(0, 1);
  EXPECT_EQ(circuit_stats(a), (CircuitStats{2, 1, 1, 1}));
  ParamCircuit b(4);
  b.add_cnot(0, 1);
  b.add_cnot(2, 3);
  EXPECT_EQ(circuit_stats(b).two_qubit_depth, 1u);
  ParamCircuit c(3);
  c.add_cnot(0, 1);
  c.add_cnot(1, 2);
  EXPECT_EQ(circuit_stats(c).two_qubit_depth, 2u);
}

TEST(Stats, MonotoneUnderAppend) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    ParamCircuit c(5);
    CircuitStats prev = circuit_stats(c);
    for (int k = 0; k < 30; ++k) {
      const std::size_t a = rng() % 5;
      std::size_t b = rng() % 5;
      if (b == a) b = (a + 1) % 5;
      switch (rng() % 3) {
        case 0:
          c.add_fixed(GateKind::RY, a, 0.1);
          break;
        case 1:
          c.add_cnot(a, b);
          break;
        default:
          c.add_cz(a, b);
      }
      const auto s = circuit_stats(c);
      EXPECT_GE(s.total_gates, prev.total_gates);
      EXPECT_GE(s.two_qubit_gates, prev.two_qubit_gates);
      EXPECT_GE(s.two_qubit_depth, prev.two_qubit_depth);
      EXPECT_EQ(s.two_qubit_depth, reference_depth(c));
      prev = s;
    }
  }
}

TEST(RunCircuit, BindingsAndClosedForms) {
  ParamCircuit empty(3);
  const auto z = run_circuit(empty, std::vector<double>{});
  EXPECT_NEAR(std::norm(z[0]), 1.0, 1e-15);

  ParamCircuit c(2);
  c.add_ry(0, "theta");
  const auto s = run_circuit(c, NamedBindings{{"theta", std::numbers::pi / 2}});
  EXPECT_NEAR(s[0].real(), std::cos(std::numbers::pi / 4), 1e-15);
  EXPECT_NEAR(s[1].real(), std::sin(std::numbers::pi / 4), 1e-15);
  EXPECT_NEAR(std::abs(s[2]) + std::abs(s[3]), 0.0, 1e-15);
  EXPECT_THROW(run_circuit(c, NamedBindings{}), BindingError);
  EXPECT_THROW(run_circuit(c, std::vector<double>{}), BindingError);

  ParamCircuit bell(2);
  bell.add(GateKind::H, 0);
  bell.add_cnot(0, 1);
  const auto b = run_circuit(bell, std::vector<double>{});
  EXPECT_NEAR(b[0].real(), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(b[3].real(), 1 / std::sqrt(2.0), 1e-15);
}

TEST(Dump, RoundTripAndErrors) {
  const auto c = build_qrnn_circuit(QRNNConfig{}, 3);
  const std::string text = circuit_dump(c);
  std::istringstream in(text);
  const auto back = parse_circuit_dump(in);
  EXPECT_EQ(circuit_dump(back), text);
  EXPECT_EQ(back.slot_names(), c.slot_names());
  EXPECT_EQ(back.measured_qubits(), c.measured_qubits());

  std::istringstream bad("QUBITS 2\nCNOT 0 1\nFOO 1\n");
  try {
    parse_circuit_dump(bad, "bad.txt");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream missing_angle("QUBITS 1\nRY 0\n");
  EXPECT_THROW(parse_circuit_dump(missing_angle), FormatError);
}
