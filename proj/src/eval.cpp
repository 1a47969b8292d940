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

#include "hqlm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "hqlm/errors.hpp"

namespace hqlm {

static void require_nonempty(std::span<const Prediction> predictions, const char* what) {
  if (predictions.empty()) throw ArgumentError(std::string(what) + " of an empty prediction set");
  for (const auto& p : predictions) {
    if (p.target >= p.probabilities.size()) {
      throw IndexError("prediction target " + std::to_string(p.target) + " outside " +
                       std::to_string(p.probabilities.size()) + " classes");
    }
  }
}

double mean_nll(std::span<const Prediction> predictions) {
  require_nonempty(predictions, "mean NLL");
  double total = 0.0;
  for (const auto& p : predictions) total -= std::log(p.probabilities[p.target]);
  return total / static_cast<double>(predictions.size());
}

double perplexity(std::span<const Prediction> predictions) { return std::exp(mean_nll(predictions)); }

double avg_correct_prob(std::span<const Prediction> predictions) {
  require_nonempty(predictions, "average correct probability");
  double total = 0.0;
  for (const auto& p : predictions) total += p.probabilities[p.target];
  return total / static_cast<double>(predictions.size());
}

double cls_accuracy(std::span<const Prediction> predictions) {
  require_nonempty(predictions, "accuracy");
  std::size_t hits = 0;
  for (const auto& p : predictions) {
    // max_element returns the first maximum, so ties go to the lower index.
    const auto best = std::max_element(p.probabilities.begin(), p.probabilities.end());
    hits += static_cast<std::size_t>(best - p.probabilities.begin()) == p.target;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

Baselines random_baselines(std::size_t vocab_size) {
  if (vocab_size == 0) throw ArgumentError("random baseline needs V >= 1");
  return {static_cast<double>(vocab_size), 1.0 / static_cast<double>(vocab_size)};
}

EvalReport summarize(std::string split, Task task, std::span<const Prediction> predictions) {
  EvalReport r;
  r.split = std::move(split);
  r.task = task;
  r.count = predictions.size();
  r.mean_loss = mean_nll(predictions);
  r.perplexity = std::exp(r.mean_loss);
  r.avg_correct_prob = avg_correct_prob(predictions);
  r.accuracy = cls_accuracy(predictions);
  return r;
}

std::vector<Prediction> lm_predictions(const HybridModel& model, const std::vector<Sentence>& sentences,
                                       Rng* rng) {
  std::vector<Prediction> out;
  const auto& p = model.params();
  for (const auto& s : sentences) {
    const auto features = model.lm_features(p.quantum, s, rng);
    for (std::size_t k = 0; k < features.size(); ++k) {
      out.push_back({softmax(project(features[k], p.head)), s[k + 1]});
    }
  }
  return out;
}

std::vector<Prediction> cls_predictions(const HybridModel& model, const std::vector<Sentence>& sentences,
                                        const std::vector<int>& labels, Rng* rng) {
  if (labels.size() != sentences.size()) {
    throw ShapeError(std::to_string(sentences.size()) + " sentences but " + std::to_string(labels.size()) +
                     " labels");
  }
  std::vector<Prediction> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    out.push_back({model.forward_cls(sentences[i], rng), static_cast<std::size_t>(labels[i])});
  }
  return out;
}

void check_compatible(const HybridModel& model, const SentenceDataset& data) {
  if (model.config().task != data.task) {
    throw CompatibilityError("model task " + std::string(task_name(model.config().task)) +
                             " does not match dataset task " + std::string(task_name(data.task)));
  }
  if (!(model.vocab() == data.vocab)) {
    throw CompatibilityError("model vocabulary (" + std::to_string(model.vocab_size()) +
                             " tokens) does not match dataset vocabulary (" +
                             std::to_string(data.vocab.size()) + " tokens)");
  }
}

EvalReport evaluate(const HybridModel& model, const SentenceDataset& data, bool test_split, Rng* rng) {
  check_compatible(model, data);
  const auto& sentences = test_split ? data.test : data.train;
  const auto preds = data.task == Task::LM
                         ? lm_predictions(model, sentences, rng)
                         : cls_predictions(model, sentences, test_split ? data.test_labels : data.train_labels, rng);
  return summarize(test_split ? "test" : "train", data.task, preds);
}

double perplexity(const HybridModel& model, const std::vector<Sentence>& sentences) {
  return perplexity(lm_predictions(model, sentences));
}

double avg_correct_prob(const HybridModel& model, const std::vector<Sentence>& sentences) {
  return avg_correct_prob(lm_predictions(model, sentences));
}

double cls_accuracy(const HybridModel& model, const std::vector<Sentence>& sentences,
                    const std::vector<int>& labels) {
  return cls_accuracy(cls_predictions(model, sentences, labels));
}

std::string eval_csv_header() { return "split,task,count,loss_nats,ppl,avg_correct_prob,acc"; }

std::string eval_csv_row(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.12g,%.12g,%.12g,%.12g", r.split.c_str(),
                std::string(task_name(r.task)).c_str(), r.count, r.mean_loss, r.perplexity, r.avg_correct_prob,
                r.accuracy);
  return buf;
}

void render_table(std::ostream& out, const std::vector<TableRow>& rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %8s\n", static_cast<int>(width), "Model", "Tr PPL", "Ts PPL",
                "Acc (%)");
  out << buf;
  for (const auto& r : rows) {
    const bool lm = r.test.task == Task::LM;
    if (lm) {
      std::snprintf(buf, sizeof buf, "%-*s  %8.2f  %8.2f  %8.2f\n", static_cast<int>(width), r.label.c_str(),
                    r.train.perplexity, r.test.perplexity, 100.0 * r.test.headline_accuracy());
    } else {
      std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s  %8.2f\n", static_cast<int>(width), r.label.c_str(), "-",
                    "-", 100.0 * r.test.headline_accuracy());
    }
    out << buf;
  }
}

}  // namespace hqlm
