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
#include <vector>

#include "hqlm/data.hpp"
#include "hqlm/model.hpp"

namespace hqlm {

/// One predicted distribution and the index it should have ranked first.
struct Prediction {
  std::vector<double> probabilities;
  std::size_t target = 0;
};

struct EvalReport {
  std::string split;
  Task task = Task::LM;
  double mean_loss = 0.0;         // nats per prediction
  double perplexity = 0.0;        // exp(mean_loss)
  double avg_correct_prob = 0.0;  // LM
  double accuracy = 0.0;          // CLS
  std::size_t count = 0;          // predictions (LM) or examples (CLS)

  /// Table-style accuracy column: avg correct-token probability for LM, accuracy for CLS.
  double headline_accuracy() const noexcept { return task == Task::LM ? avg_correct_prob : accuracy; }
};

/// Micro-averaged over predictions. Empty input throws ArgumentError.
double perplexity(std::span<const Prediction> predictions);
double avg_correct_prob(std::span<const Prediction> predictions);
/// Argmax accuracy, ties toward the lower class index.
double cls_accuracy(std::span<const Prediction> predictions);
double mean_nll(std::span<const Prediction> predictions);

struct Baselines {
  double perplexity = 0.0;
  double accuracy = 0.0;
};
/// Uniform guessing over V tokens: (V, 1/V).
Baselines random_baselines(std::size_t vocab_size);

EvalReport summarize(std::string split, Task task, std::span<const Prediction> predictions);

/// Every next-token prediction (positions 2..T) of every sentence.
std::vector<Prediction> lm_predictions(const HybridModel& model, const std::vector<Sentence>& sentences,
                                       Rng* rng = nullptr);
std::vector<Prediction> cls_predictions(const HybridModel& model, const std::vector<Sentence>& sentences,
                                        const std::vector<int>& labels, Rng* rng = nullptr);

EvalReport evaluate(const HybridModel& model, const SentenceDataset& data, bool test_split,
                    Rng* rng = nullptr);
double perplexity(const HybridModel& model, const std::vector<Sentence>& sentences);
double avg_correct_prob(const HybridModel& model, const std::vector<Sentence>& sentences);
double cls_accuracy(const HybridModel& model, const std::vector<Sentence>& sentences,
                    const std::vector<int>& labels);

/// Throws CompatibilityError unless the model's task and vocabulary match `data`.
void check_compatible(const HybridModel& model, const SentenceDataset& data);

/// `split,task,count,loss_nats,ppl,avg_correct_prob,acc`
std::string eval_csv_header();
std::string eval_csv_row(const EvalReport& report);

/// Aligned text table with columns Model, Tr PPL, Ts PPL, Acc (%).
struct TableRow {
  std::string label;
  EvalReport train;
  EvalReport test;
};
void render_table(std::ostream& out, const std::vector<TableRow>& rows);

}  // namespace hqlm
