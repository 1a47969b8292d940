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
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hqlm/data.hpp"
#include "hqlm/model.hpp"

namespace hqlm {

struct SPSAConfig {
  std::size_t population = 8;
  double epsilon = 0.05;
  /// Perturb only embedding rows of tokens present in the batch (plus all PQC angles).
  bool mask_absent_tokens = false;

  void validate() const;
  bool operator==(const SPSAConfig&) const = default;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double learning_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr) : m(n, 0.0), v(n, 0.0), learning_rate(lr) {}
};

/// Bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> gradient);

/// Loss at `theta`; `evaluation` is the 0-based index of the call within one
/// gradient estimate (plus-side 2p, minus-side 2p+1).
using LossFn = std::function<double(std::span<const double> theta, std::size_t evaluation)>;

/// Multi-sample SPSA with Rademacher directions. Exactly 2P loss calls. With
/// threads > 1 the calls run concurrently; the reduction order is fixed.
/// `mask` (optional) zeroes the direction of coordinates where it is 0.
std::vector<double> spsa_gradient(const LossFn& loss, std::span<const double> theta, const SPSAConfig& config,
                                  Rng& rng, std::size_t threads = 1, std::span<const char> mask = {});

struct HeadGradient {
  std::vector<double> weights;  // F x C, row-major like ProjectionHead
  std::vector<double> bias;
  double loss = 0.0;  // mean cross-entropy over the batch
};

/// Softmax cross-entropy gradient of the head, averaged over the batch.
HeadGradient head_gradient(const std::vector<FeatureVector>& features, std::span<const std::size_t> targets,
                           const ProjectionHead& head);

/// LM: sentences only. CLS: sentences with parallel labels.
struct Batch {
  std::vector<Sentence> inputs;
  std::vector<int> labels;
};

/// Features and targets for every prediction in `batch` under `quantum`.
void batch_features(const HybridModel& model, std::span<const double> quantum, const Batch& batch,
                    std::uint64_t noise_seed, std::vector<FeatureVector>& features,
                    std::vector<std::size_t>& targets);

/// Mean loss over every prediction in `batch` with the model's current head.
double batch_loss(const HybridModel& model, std::span<const double> quantum, const Batch& batch,
                  std::uint64_t noise_seed = 0);

struct StepResult {
  double loss = 0.0;  // unperturbed batch loss before the update
  std::size_t evaluations = 0;
};

struct StepOptions {
  std::size_t threads = 1;
  std::uint64_t noise_seed = 0;  // shot-noise streams for this step
};

/// One hybrid step: exact head gradient at the current point, SPSA over the
/// whole quantum vector with the head held fixed, then Adam on both blocks.
StepResult train_step(HybridModel& model, const Batch& batch, const SPSAConfig& spsa, AdamState& adam_quantum,
                      AdamState& adam_classical, Rng& rng, const StepOptions& options = {});

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  bool shuffle = true;
  std::size_t threads = 1;
  bool record_wall_time = false;  // off keeps metrics byte-reproducible
  SPSAConfig spsa;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;
  double loss = 0.0;
  double perplexity = 0.0;
  double accuracy = 0.0;  // avg correct prob (LM) or accuracy (CLS)
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

struct RunMetrics {
  std::vector<EpochRecord> records;

  const EpochRecord* last(const std::string& split) const;
};

std::string metrics_csv_header();
void write_metrics_csv(std::ostream& out, const RunMetrics& metrics);
void save_metrics_csv(const std::filesystem::path& path, const RunMetrics& metrics);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains `model` in place from its current parameters. After every epoch the
/// train and test splits are evaluated and recorded.
RunMetrics fit(HybridModel& model, const SentenceDataset& data, const TrainConfig& config,
               const EpochCallback& on_record = {});

/// splitmix64-style mixing, used to derive independent stream seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace hqlm
