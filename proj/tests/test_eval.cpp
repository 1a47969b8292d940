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

#include <cmath>
#include <random>
#include <sstream>

#include "hqlm/errors.hpp"
#include "hqlm/eval.hpp"

using namespace hqlm;

namespace {

std::vector<Prediction> uniform_predictions(std::size_t V, std::size_t n) {
  std::vector<Prediction> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({std::vector<double>(V, 1.0 / static_cast<double>(V)), i % V});
  return p;
}

}  // namespace

TEST(Metrics, UniformModelMatchesVocabularySize) {
  for (std::size_t V : {19u, 24u}) {
    const auto p = uniform_predictions(V, 50);
    EXPECT_NEAR(perplexity(p), static_cast<double>(V), 1e-9);
    EXPECT_NEAR(avg_correct_prob(p), 1.0 / static_cast<double>(V), 1e-15);
    const auto b = random_baselines(V);
    EXPECT_DOUBLE_EQ(b.perplexity, static_cast<double>(V));
    EXPECT_DOUBLE_EQ(b.accuracy, 1.0 / static_cast<double>(V));
  }
  EXPECT_THROW(random_baselines(0), ArgumentError);
}

TEST(Metrics, IndependentOracle) {
  // Perplexity is exp of the micro-averaged negative log-likelihood.
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0.01, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Prediction> preds;
    double nll = 0, correct = 0;
    const std::size_t n = 1 + g() % 30;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> p(6);
      double s = 0;
      for (auto& x : p) s += (x = u(g));
      for (auto& x : p) x /= s;
      const std::size_t t = g() % 6;
      nll -= std::log(p[t]);
      correct += p[t];
      preds.push_back({p, t});
    }
    EXPECT_NEAR(perplexity(preds), std::exp(nll / static_cast<double>(n)), 1e-9);
    EXPECT_NEAR(mean_nll(preds), nll / static_cast<double>(n), 1e-12);
    EXPECT_NEAR(avg_correct_prob(preds), correct / static_cast<double>(n), 1e-12);
    EXPECT_GE(perplexity(preds), 1.0);
  }
}

TEST(Metrics, PerfectAndSharpenedPredictions) {
  std::vector<Prediction> perfect{{{0, 1, 0}, 1}, {{1, 0, 0}, 0}};
  EXPECT_DOUBLE_EQ(perplexity(perfect), 1.0);
  EXPECT_DOUBLE_EQ(avg_correct_prob(perfect), 1.0);
  EXPECT_DOUBLE_EQ(cls_accuracy(perfect), 1.0);
  // Moving mass toward the target never raises perplexity.
  double last = INFINITY;
  for (double q = 0.25; q < 1.0; q += 0.05) {
    std::vector<Prediction> p{{{(1 - q) / 3, q, (1 - q) / 3, (1 - q) / 3}, 1}};
    EXPECT_LE(perplexity(p), last);
    last = perplexity(p);
  }
}

TEST(Metrics, AccuracyTiesAndEdgeCases) {
  std::vector<Prediction> tie{{{0.5, 0.5}, 0}, {{0.5, 0.5}, 1}};
  EXPECT_DOUBLE_EQ(cls_accuracy(tie), 0.5);
  std::vector<Prediction> mixed{{{0.9, 0.1}, 0}, {{0.2, 0.8}, 0}, {{0.3, 0.7}, 1}};
  EXPECT_NEAR(cls_accuracy(mixed), 2.0 / 3, 1e-15);
  const std::vector<Prediction> none;
  EXPECT_THROW(perplexity(none), ArgumentError);
  EXPECT_THROW(cls_accuracy(none), ArgumentError);
  EXPECT_THROW(avg_correct_prob(none), ArgumentError);
  std::vector<Prediction> zero{{{1.0, 0.0}, 1}};
  EXPECT_TRUE(std::isinf(perplexity(zero)));
}

TEST(Evaluate, ZeroHeadModelIsUniform) {
  const auto data = generate_tslm(1234);
  HybridModel m(HQLMConfig{}, data.vocab);
  m.initialize(1);
  std::vector<Sentence> few(data.test.begin(), data.test.begin() + 5);
  const double V = static_cast<double>(data.vocab.size());
  EXPECT_NEAR(perplexity(m, few), V, 1e-9);
  EXPECT_NEAR(avg_correct_prob(m, few), 1 / V, 1e-12);
  std::size_t preds = 0;
  for (const auto& s : few) preds += s.size() - 1;
  EXPECT_EQ(lm_predictions(m, few).size(), preds);

  SentenceDataset small = data;
  small.train.resize(3);
  small.test.resize(4);
  const auto r = evaluate(m, small, true);
  EXPECT_EQ(r.split, "test");
  EXPECT_EQ(r.task, Task::LM);
  EXPECT_NEAR(r.perplexity, V, 1e-9);
  EXPECT_DOUBLE_EQ(r.headline_accuracy(), r.avg_correct_prob);
}

TEST(Evaluate, ClassificationAndCompatibility) {
  const auto data = generate_topic_cls(5);
  HQLMConfig c;
  c.task = Task::CLS;
  HybridModel m(c, data.vocab);
  m.initialize(1);
  m.params().head.bias = {0.0, 1.0};
  const double expected = static_cast<double>(std::count(data.test_labels.begin(), data.test_labels.end(), 1)) /
                          static_cast<double>(data.test_labels.size());
  EXPECT_NEAR(cls_accuracy(m, data.test, data.test_labels), expected, 1e-15);
  const auto r = evaluate(m, data, true);
  EXPECT_EQ(r.count, data.test.size());
  EXPECT_DOUBLE_EQ(r.headline_accuracy(), r.accuracy);

  HybridModel lm(HQLMConfig{}, data.vocab);
  EXPECT_THROW(check_compatible(lm, data), CompatibilityError);
  HybridModel other(c, Vocabulary({"x", "y"}));
  EXPECT_THROW(check_compatible(other, data), CompatibilityError);
  EXPECT_NO_THROW(check_compatible(m, data));
}

TEST(Report, CsvAndTable) {
  const auto p = uniform_predictions(4, 8);
  const auto r = summarize("train", Task::LM, p);
  EXPECT_EQ(r.count, 8u);
  EXPECT_EQ(eval_csv_header(), "split,task,count,loss_nats,ppl,avg_correct_prob,acc");
  const std::string row = eval_csv_row(r);
  EXPECT_EQ(row.substr(0, 11), "train,LM,8,");
  std::ostringstream out;
  render_table(out, {{"QRNN", r, summarize("test", Task::LM, p)}});
  const std::string text = out.str();
  EXPECT_NE(text.find("Tr PPL"), std::string::npos);
  EXPECT_NE(text.find("QRNN"), std::string::npos);
  EXPECT_NE(text.find("4.00"), std::string::npos);
  EXPECT_NE(text.find("25.00"), std::string::npos);
}
