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

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hqlm {

using Complex = std::complex<double>;
using Rng = std::mt19937_64;

inline constexpr std::size_t kMaxQubits = 24;

/// Pure state over `num_qubits` qubits. Qubit q is bit q of the basis index
/// (little-endian); printed bitstrings put qubit 0 rightmost.
class StateVector {
 public:
  /// |0...0> on `num_qubits` qubits. Throws CapacityError outside [1, 24].
  explicit StateVector(std::size_t num_qubits);

  /// Adopts raw amplitudes; length must be a power of two. Not renormalized.
  static StateVector from_amplitudes(std::vector<Complex> amplitudes);

  std::size_t num_qubits() const noexcept { return num_qubits_; }
  std::size_t dimension() const noexcept { return amplitudes_.size(); }

  std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }
  std::span<Complex> mutable_amplitudes() noexcept { return amplitudes_; }
  const Complex& operator[](std::size_t index) const { return amplitudes_[index]; }

  double norm_squared() const noexcept;
  std::vector<double> probabilities() const;

  // In-place gate kernels. Indices are checked; out of range throws IndexError.
  void ry(std::size_t q, double theta);
  void rz(std::size_t q, double phi);
  void h(std::size_t q);
  void x(std::size_t q);
  void cnot(std::size_t control, std::size_t target);
  void cz(std::size_t a, std::size_t b);

 private:
  StateVector() = default;
  void check_qubit(std::size_t q) const;
  void check_pair(std::size_t a, std::size_t b) const;

  std::size_t num_qubits_ = 0;
  std::vector<Complex> amplitudes_;
};

enum class GateKind { RY, RZ, H, X, CNOT, CZ };

std::string_view gate_name(GateKind kind) noexcept;
std::optional<GateKind> parse_gate_kind(std::string_view name) noexcept;
std::size_t gate_arity(GateKind kind) noexcept;
bool is_rotation(GateKind kind) noexcept;

struct GateOp {
  GateKind kind = GateKind::H;
  std::array<std::size_t, 2> qubits{};  // second entry unused for 1-qubit kinds
  std::optional<double> angle;

  static GateOp ry(std::size_t q, double theta) { return {GateKind::RY, {q, 0}, theta}; }
  static GateOp rz(std::size_t q, double phi) { return {GateKind::RZ, {q, 0}, phi}; }
  static GateOp h(std::size_t q) { return {GateKind::H, {q, 0}, std::nullopt}; }
  static GateOp x(std::size_t q) { return {GateKind::X, {q, 0}, std::nullopt}; }
  static GateOp cnot(std::size_t c, std::size_t t) { return {GateKind::CNOT, {c, t}, std::nullopt}; }
  static GateOp cz(std::size_t a, std::size_t b) { return {GateKind::CZ, {a, b}, std::nullopt}; }
};

enum class ObservableKind { Z, ZZ };

struct ObservableSpec {
  ObservableKind kind = ObservableKind::Z;
  std::array<std::size_t, 2> qubits{};

  static ObservableSpec z(std::size_t q) { return {ObservableKind::Z, {q, 0}}; }
  static ObservableSpec zz(std::size_t a, std::size_t b) { return {ObservableKind::ZZ, {a, b}}; }
};

struct ShotCounts {
  std::size_t num_qubits = 0;
  std::size_t shots = 0;
  std::map<std::string, std::size_t> counts;  // bitstring, qubit 0 rightmost
};

StateVector init_zero(std::size_t num_qubits);

/// Validates `gate` and applies it in place.
void apply_gate_inplace(StateVector& state, const GateOp& gate);
StateVector apply_gate(StateVector state, const GateOp& gate);

double expectation_exact(const StateVector& state, const ObservableSpec& obs);

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Multinomial draw: histogram of `shots` i.i.d. outcomes from `probabilities`
/// (need not be exactly normalized; the last bucket absorbs rounding).
std::vector<std::size_t> sample_histogram(std::span<const double> probabilities,
                                          std::size_t shots, Rng& rng);

ShotCounts sample_bitstrings(const StateVector& state, std::int64_t shots, Rng& rng);
double expectation_from_counts(const ShotCounts& counts, const ObservableSpec& obs);

std::string to_bitstring(std::uint64_t index, std::size_t num_qubits);

}  // namespace hqlm
