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

#include "hqlm/simcore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "hqlm/errors.hpp"

namespace hqlm {

StateVector::StateVector(std::size_t num_qubits) : num_qubits_(num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw CapacityError("qubit count " + std::to_string(num_qubits) + " outside [1, " +
                        std::to_string(kMaxQubits) + "]");
  }
  amplitudes_.assign(std::size_t{1} << num_qubits, Complex{0.0, 0.0});
  amplitudes_[0] = 1.0;
}

StateVector StateVector::from_amplitudes(std::vector<Complex> amplitudes) {
  const std::size_t n = amplitudes.size();
  if (n < 2 || !std::has_single_bit(n)) {
    throw ArgumentError("amplitude count must be a power of two >= 2");
  }
  const auto qubits = static_cast<std::size_t>(std::countr_zero(n));
  if (qubits > kMaxQubits) {
    throw CapacityError("qubit count " + std::to_string(qubits) + " exceeds capacity");
  }
  StateVector s;
  s.num_qubits_ = qubits;
  s.amplitudes_ = std::move(amplitudes);
  return s;
}

double StateVector::norm_squared() const noexcept {
  double total = 0.0;
  for (const auto& a : amplitudes_) total += std::norm(a);
  return total;
}

std::vector<double> StateVector::probabilities() const {
  std::vector<double> p(amplitudes_.size());
  std::transform(amplitudes_.begin(), amplitudes_.end(), p.begin(),
                 [](const Complex& a) { return std::norm(a); });
  return p;
}

void StateVector::check_qubit(std::size_t q) const {
  if (q >= num_qubits_) {
    throw IndexError("qubit " + std::to_string(q) + " out of range for " +
                     std::to_string(num_qubits_) + "-qubit state");
  }
}

void StateVector::check_pair(std::size_t a, std::size_t b) const {
  check_qubit(a);
  check_qubit(b);
  if (a == b) throw IndexError("two-qubit gate on identical qubits " + std::to_string(a));
}

// Visits every (i0, i1) index pair that differs only in bit q, with bit q of i0 clear.
template <typename F>
static void for_each_pair(std::size_t dim, std::size_t q, F&& f) {
  const std::size_t stride = std::size_t{1} << q;
  for (std::size_t block = 0; block < dim; block += 2 * stride) {
    for (std::size_t i = block; i < block + stride; ++i) f(i, i + stride);
  }
}

void StateVector::ry(std::size_t q, double theta) {
  check_qubit(q);
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  for_each_pair(amplitudes_.size(), q, [&](std::size_t i0, std::size_t i1) {
    const Complex a0 = amplitudes_[i0], a1 = amplitudes_[i1];
    amplitudes_[i0] = c * a0 - s * a1;
    amplitudes_[i1] = s * a0 + c * a1;
  });
}

void StateVector::rz(std::size_t q, double phi) {
  check_qubit(q);
  const Complex lo = std::polar(1.0, -phi / 2), hi = std::polar(1.0, phi / 2);
  for_each_pair(amplitudes_.size(), q, [&](std::size_t i0, std::size_t i1) {
    amplitudes_[i0] *= lo;
    amplitudes_[i1] *= hi;
  });
}

void StateVector::h(std::size_t q) {
  check_qubit(q);
  const double r = 1.0 / std::sqrt(2.0);
  for_each_pair(amplitudes_.size(), q, [&](std::size_t i0, std::size_t i1) {
    const Complex a0 = amplitudes_[i0], a1 = amplitudes_[i1];
    amplitudes_[i0] = r * (a0 + a1);
    amplitudes_[i1] = r * (a0 - a1);
  });
}

void StateVector::x(std::size_t q) {
  check_qubit(q);
  for_each_pair(amplitudes_.size(), q,
                [&](std::size_t i0, std::size_t i1) { std::swap(amplitudes_[i0], amplitudes_[i1]); });
}

void StateVector::cnot(std::size_t control, std::size_t target) {
  check_pair(control, target);
  const std::size_t cmask = std::size_t{1} << control;
  for_each_pair(amplitudes_.size(), target, [&](std::size_t i0, std::size_t i1) {
    if (i0 & cmask) std::swap(amplitudes_[i0], amplitudes_[i1]);
  });
}

void StateVector::cz(std::size_t a, std::size_t b) {
  check_pair(a, b);
  const std::size_t mask = (std::size_t{1} << a) | (std::size_t{1} << b);
  for (std::size_t i = 0; i < amplitudes_.size(); ++i) {
    if ((i & mask) == mask) amplitudes_[i] = -amplitudes_[i];
  }
}

std::string_view gate_name(GateKind kind) noexcept {
  switch (kind) {
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::H: return "H";
    case GateKind::X: return "X";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CZ: return "CZ";
  }
  return "?";
}

std::optional<GateKind> parse_gate_kind(std::string_view name) noexcept {
  for (GateKind k : {GateKind::RY, GateKind::RZ, GateKind::H, GateKind::X, GateKind::CNOT,
                     GateKind::CZ}) {
    if (gate_name(k) == name) return k;
  }
  return std::nullopt;
}

std::size_t gate_arity(GateKind kind) noexcept {
  return (kind == GateKind::CNOT || kind == GateKind::CZ) ? 2 : 1;
}

bool is_rotation(GateKind kind) noexcept { return kind == GateKind::RY || kind == GateKind::RZ; }

StateVector init_zero(std::size_t num_qubits) { return StateVector(num_qubits); }

void apply_gate_inplace(StateVector& state, const GateOp& gate) {
  if (is_rotation(gate.kind) != gate.angle.has_value()) {
    throw MalformedGateError(std::string(gate_name(gate.kind)) +
                             (gate.angle ? " must not carry an angle" : " requires an angle"));
  }
  const auto [a, b] = gate.qubits;
  switch (gate.kind) {
    case GateKind::RY: state.ry(a, *gate.angle); break;
    case GateKind::RZ: state.rz(a, *gate.angle); break;
    case GateKind::H: state.h(a); break;
    case GateKind::X: state.x(a); break;
    case GateKind::CNOT: state.cnot(a, b); break;
    case GateKind::CZ: state.cz(a, b); break;
  }
}

StateVector apply_gate(StateVector state, const GateOp& gate) {
  apply_gate_inplace(state, gate);
  return state;
}

static void check_observable(const ObservableSpec& obs, std::size_t num_qubits) {
  const auto [a, b] = obs.qubits;
  if (a >= num_qubits || (obs.kind == ObservableKind::ZZ && b >= num_qubits)) {
    throw IndexError("observable qubit out of range for " + std::to_string(num_qubits) +
                     " qubits");
  }
  if (obs.kind == ObservableKind::ZZ && a == b) {
    throw IndexError("ZZ observable needs two distinct qubits");
  }
}

static std::uint64_t observable_mask(const ObservableSpec& obs) {
  std::uint64_t mask = std::uint64_t{1} << obs.qubits[0];
  if (obs.kind == ObservableKind::ZZ) mask |= std::uint64_t{1} << obs.qubits[1];
  return mask;
}

double expectation_exact(const StateVector& state, const ObservableSpec& obs) {
  check_observable(obs, state.num_qubits());
  const std::uint64_t mask = observable_mask(obs);
  double total = 0.0;
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double p = std::norm(amps[i]);
    total += (std::popcount(i & mask) & 1) ? -p : p;
  }
  return std::clamp(total, -1.0, 1.0);
}

std::vector<std::size_t> sample_histogram(std::span<const double> probabilities,
                                          std::size_t shots, Rng& rng) {
  std::vector<double> cdf(probabilities.size());
  double running = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    running += probabilities[i];
    cdf[i] = running;
  }
  std::vector<std::size_t> hist(probabilities.size(), 0);
  if (cdf.empty()) return hist;
  for (std::size_t s = 0; s < shots; ++s) {
    const double u = uniform01(rng) * running;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t k = it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
    // Zero-probability buckets can share a cdf value with their predecessor;
    // upper_bound already skips them.
    ++hist[k];
  }
  return hist;
}

std::string to_bitstring(std::uint64_t index, std::size_t num_qubits) {
  std::string s(num_qubits, '0');
  for (std::size_t q = 0; q < num_qubits; ++q) {
    if ((index >> q) & 1) s[num_qubits - 1 - q] = '1';
  }
  return s;
}

ShotCounts sample_bitstrings(const StateVector& state, std::int64_t shots, Rng& rng) {
  if (shots <= 0) throw ArgumentError("shots must be positive, got " + std::to_string(shots));
  const auto probs = state.probabilities();
  const auto hist = sample_histogram(probs, static_cast<std::size_t>(shots), rng);
  ShotCounts out;
  out.num_qubits = state.num_qubits();
  out.shots = static_cast<std::size_t>(shots);
  for (std::size_t i = 0; i < hist.size(); ++i) {
    if (hist[i]) out.counts.emplace(to_bitstring(i, state.num_qubits()), hist[i]);
  }
  return out;
}

double expectation_from_counts(const ShotCounts& counts, const ObservableSpec& obs) {
  std::size_t total = 0;
  for (const auto& [key, n] : counts.counts) total += n;
  if (total == 0) throw ArgumentError("expectation from empty counts");
  double acc = 0.0;
  for (const auto& [key, n] : counts.counts) {
    const std::size_t width = key.size();
    check_observable(obs, width);
    auto bit = [&](std::size_t q) { return key[width - 1 - q] == '1'; };
    bool odd = bit(obs.qubits[0]);
    if (obs.kind == ObservableKind::ZZ) odd ^= bit(obs.qubits[1]);
    acc += odd ? -static_cast<double>(n) : static_cast<double>(n);
  }
  return acc / static_cast<double>(total);
}

}  // namespace hqlm
