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
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hqlm/circuits.hpp"
#include "hqlm/data.hpp"
#include "hqlm/simcore.hpp"

namespace hqlm {

enum class Arch { QRNN, QCNN };

std::string_view arch_name(Arch arch) noexcept;
std::string_view task_name(Task task) noexcept;

/// Feature estimation: exact expectations (shots == 0) or a finite shot budget.
struct Estimation {
  std::int64_t shots = 0;

  static Estimation exact() { return {}; }
  static Estimation with_shots(std::int64_t n) { return {n}; }
  bool is_exact() const noexcept { return shots == 0; }
  bool operator==(const Estimation&) const = default;
};

/// How QCNN windows are simulated. `Pooled` keeps each surviving register as a
/// purified state after pooling; `Full` runs the whole statevector circuit.
/// Both give identical features; `Pooled` needs non-overlapping groups.
enum class QCNNEvaluation { Pooled, Full };

struct HQLMConfig {
  Arch arch = Arch::QRNN;
  Task task = Task::LM;
  std::size_t emb_size = 3;
  std::size_t seq_len = 6;
  std::vector<std::size_t> kernels;  // QCNN pooling kernels per level
  std::size_t hidden_size = 0;       // QRNN; 0 means emb_size
  std::size_t rec_layers = 1;
  std::size_t pred_layers = 2;
  std::size_t conv_layers = 2;
  bool share_block_params = false;
  std::size_t overlap = 0;
  Entangler entangler = Entangler::Chain;
  Estimation estimation;
  QCNNEvaluation qcnn_evaluation = QCNNEvaluation::Pooled;
  PoolKeep qcnn_pool = PoolKeep::Last;

  QRNNConfig qrnn() const;
  QCNNConfig qcnn() const;
  void validate() const;

  /// Flat `key=value` lines; `from_kv` accepts exactly the keys `to_kv` emits.
  std::map<std::string, std::string> to_kv() const;
  static HQLMConfig from_kv(const std::map<std::string, std::string>& kv);
  bool operator==(const HQLMConfig&) const = default;
};

std::string entangler_name(Entangler e);
std::vector<std::size_t> parse_size_list(const std::string& text);
std::string format_size_list(const std::vector<std::size_t>& values);

/// d + d(d-1)/2 features: all Z, then ZZ over pairs (i < j) in lexicographic order.
std::size_t feature_count(std::size_t measured_qubits) noexcept;

using FeatureVector = std::vector<double>;

/// Z then ZZ expectations over `measured`. SHOTS mode draws one shot set from
/// `rng` and reads every feature from it.
FeatureVector extract_features(const StateVector& state, std::span<const std::size_t> measured,
                               const Estimation& mode, Rng* rng = nullptr);

/// Row-major F x C weights: logits[c] = sum_f features[f] * W[f][c] + b[c].
struct ProjectionHead {
  std::size_t features = 0;
  std::size_t classes = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  ProjectionHead() = default;
  ProjectionHead(std::size_t f, std::size_t c)
      : features(f), classes(c), weights(f * c, 0.0), bias(c, 0.0) {}

  double& w(std::size_t f, std::size_t c) { return weights[f * classes + c]; }
  double w(std::size_t f, std::size_t c) const { return weights[f * classes + c]; }
  std::size_t param_count() const noexcept { return weights.size() + bias.size(); }
  bool operator==(const ProjectionHead&) const = default;
};

std::vector<double> project(std::span<const double> features, const ProjectionHead& head);

struct SoftmaxResult {
  std::vector<double> probabilities;
  double loss = 0.0;  // nats
};

std::vector<double> softmax(std::span<const double> logits);
SoftmaxResult softmax_xent(std::span<const double> logits, std::size_t target);

/// Quantum block: embedding rows (V + 1, last row PAD) then PQC angles in the
/// order their slots first appear in the architecture circuit.
struct HQLMParams {
  std::vector<double> quantum;
  std::size_t embedding_count = 0;
  ProjectionHead head;
  bool operator==(const HQLMParams&) const = default;
};

struct ParamCount {
  std::size_t quantum = 0;           // trained, PAD row included
  std::size_t quantum_reported = 0;  // PAD row excluded
  std::size_t classical = 0;
};

/// `outputs` defaults to V for LM and 2 for CLS.
ParamCount count_params(const HQLMConfig& config, std::size_t vocab_size, std::size_t outputs = 0);

class FeatureMap;

/// Hybrid quantum language model: quantum feature extraction followed by a
/// linear head and softmax.
class HybridModel {
 public:
  HybridModel(HQLMConfig config, Vocabulary vocab);
  HybridModel(const HybridModel& other);
  HybridModel& operator=(const HybridModel& other);
  HybridModel(HybridModel&&) noexcept;
  HybridModel& operator=(HybridModel&&) noexcept;
  ~HybridModel();

  const HQLMConfig& config() const noexcept { return config_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  HQLMParams& params() noexcept { return params_; }
  const HQLMParams& params() const noexcept { return params_; }

  std::size_t vocab_size() const noexcept { return vocab_.size(); }
  std::size_t pad_index() const noexcept { return vocab_.size(); }
  std::size_t num_outputs() const noexcept { return params_.head.classes; }
  std::size_t feature_size() const noexcept { return params_.head.features; }
  std::size_t pqc_param_count() const noexcept;
  /// Slot names of the PQC angles, parallel to the non-embedding quantum entries.
  const std::vector<std::string>& pqc_slot_names() const noexcept;

  /// Embeddings ~ U(0, pi), PQC angles ~ U(-pi/2, pi/2), zero head.
  void initialize(std::uint64_t seed);

  /// Architecture circuit for a `length`-token input (QRNN) or a window (QCNN).
  ParamCircuit circuit(std::size_t length) const;
  /// Slot bindings of `circuit(...)` for a concrete input; QCNN takes the padded window.
  std::vector<double> bindings(std::span<const double> quantum, const Sentence& input) const;
  /// Left-padded last-seq_len window ending after `t` tokens of `prefix`.
  Sentence window(const Sentence& prefix, std::size_t t) const;

  /// Features after the first `t` tokens of `prefix`.
  FeatureVector prefix_features(std::span<const double> quantum, const Sentence& prefix,
                                std::size_t t, Rng* rng = nullptr) const;
  /// Features for every LM prediction of `sentence`: entry k predicts token k + 1.
  std::vector<FeatureVector> lm_features(std::span<const double> quantum, const Sentence& sentence,
                                         Rng* rng = nullptr) const;
  FeatureVector cls_features(std::span<const double> quantum, const Sentence& sentence,
                             Rng* rng = nullptr) const;

  /// Distribution over the V output tokens for token t + 1 given tokens 1..t.
  std::vector<double> forward_lm(const Sentence& prefix, std::size_t t, Rng* rng = nullptr) const;
  std::vector<double> forward_cls(const Sentence& sentence, Rng* rng = nullptr) const;

  void check_tokens(const Sentence& sentence) const;

 private:
  HQLMConfig config_;
  Vocabulary vocab_;
  HQLMParams params_;
  std::unique_ptr<FeatureMap> map_;
};

/// Textual checkpoint with exact (hex-float) parameter round-trip.
void save_checkpoint(const std::filesystem::path& path, const HybridModel& model);
HybridModel load_checkpoint(const std::filesystem::path& path);
void write_checkpoint(std::ostream& out, const HybridModel& model);
HybridModel read_checkpoint(std::istream& in, const std::string& source = "<checkpoint>");

}  // namespace hqlm
