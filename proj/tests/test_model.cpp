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
#include "hqlm/model.hpp"

using namespace hqlm;

namespace {

// Z then lexicographic ZZ, computed one observable at a time.
std::vector<double> reference_features(const StateVector& s, const std::vector<std::size_t>& measured) {
  std::vector<double> f;
  for (auto q : measured) f.push_back(expectation_exact(s, ObservableSpec::z(q)));
  for (std::size_t a = 0; a < measured.size(); ++a) {
    for (std::size_t b = a + 1; b < measured.size(); ++b) {
      f.push_back(expectation_exact(s, ObservableSpec::zz(measured[a], measured[b])));
    }
  }
  return f;
}

Vocabulary small_vocab(std::size_t n) {
  std::vector<std::string> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back("w" + std::to_string(10 + i));
  return Vocabulary(t);
}

HQLMConfig qcnn_config() {
  HQLMConfig c;
  c.arch = Arch::QCNN;
  c.kernels = {3, 3};
  return c;
}

Sentence random_sentence(std::size_t len, std::size_t V, std::mt19937_64& rng) {
  Sentence s(len);
  for (auto& t : s) t = rng() % V;
  return s;
}

}  // namespace

TEST(Features, CountsAndBasisState) {
  EXPECT_EQ(feature_count(3), 6u);
  EXPECT_EQ(feature_count(1), 1u);
  EXPECT_EQ(feature_count(10), 55u);
  const std::vector<std::size_t> m{0, 1, 2};
  EXPECT_EQ(extract_features(init_zero(3), m, Estimation::exact()), (FeatureVector{1, 1, 1, 1, 1, 1}));
  EXPECT_EQ(extract_features(init_zero(3), std::vector<std::size_t>{2}, Estimation::exact()).size(), 1u);
  Rng rng(1);
  EXPECT_THROW(extract_features(init_zero(3), m, Estimation::with_shots(-3), &rng), ArgumentError);
  EXPECT_THROW(extract_features(init_zero(3), m, Estimation::with_shots(10), nullptr), ArgumentError);
}

TEST(Features, MatchIndependentObservables) {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> ang(-3, 3);
  for (int trial = 0; trial < 30; ++trial) {
    StateVector s = init_zero(5);
    for (int k = 0; k < 25; ++k) {
      s.ry(g() % 5, ang(g));
      s.rz(g() % 5, ang(g));
      const std::size_t a = g() % 5;
      s.cnot(a, (a + 1 + g() % 4) % 5);
    }
    const std::vector<std::size_t> m{4, 1, 3};
    const auto f = extract_features(s, m, Estimation::exact());
    const auto ref = reference_features(s, m);
    ASSERT_EQ(f.size(), ref.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      EXPECT_NEAR(f[i], ref[i], 1e-12);
      EXPECT_GE(f[i], -1.0);
      EXPECT_LE(f[i], 1.0);
    }
  }
}

TEST(Features, ShotEstimatesConverge) {
  std::mt19937_64 g(12);
  std::uniform_real_distribution<double> ang(-3, 3);
  StateVector s = init_zero(4);
  for (int k = 0; k < 20; ++k) {
    s.ry(g() % 4, ang(g));
    s.cnot(k % 4, (k + 1) % 4);
  }
  const std::vector<std::size_t> m{0, 1, 2, 3};
  const auto exact = extract_features(s, m, Estimation::exact());
  Rng rng(5);
  const auto shot = extract_features(s, m, Estimation::with_shots(1000000), &rng);
  for (std::size_t i = 0; i < exact.size(); ++i) EXPECT_LE(std::abs(shot[i] - exact[i]), 0.02);
  Rng a(9), b(9);
  EXPECT_EQ(extract_features(s, m, Estimation::with_shots(256), &a),
            extract_features(s, m, Estimation::with_shots(256), &b));
}

TEST(Features, ShotFeaturesShareOneShotSet) {
  // On a Bell pair every shot has equal bits, so ZZ is exactly +1 whatever the draw.
  StateVector bell = init_zero(2);
  bell.h(0);
  bell.cnot(0, 1);
  Rng rng(3);
  const auto f = extract_features(bell, std::vector<std::size_t>{0, 1}, Estimation::with_shots(37), &rng);
  EXPECT_DOUBLE_EQ(f[2], 1.0);
  EXPECT_DOUBLE_EQ(f[0], f[1]);
}

TEST(Head, ProjectExamples) {
  ProjectionHead zero(3, 4);
  EXPECT_EQ(project(std::vector<double>{0.3, -1, 2}, zero), (std::vector<double>(4, 0.0)));
  ProjectionHead h(1, 1);
  h.w(0, 0) = 2;
  h.bias[0] = 1;
  EXPECT_DOUBLE_EQ(project(std::vector<double>{0.5}, h)[0], 2.0);
  ProjectionHead id(3, 3);
  for (std::size_t i = 0; i < 3; ++i) id.w(i, i) = 1;
  EXPECT_EQ(project(std::vector<double>{0.1, 0.2, 0.3}, id), (std::vector<double>{0.1, 0.2, 0.3}));
  EXPECT_THROW(project(std::vector<double>{1, 2}, id), ShapeError);
}

TEST(Head, SoftmaxExamples) {
  const auto u = softmax_xent(std::vector<double>(24, 0.0), 5);
  for (double p : u.probabilities) EXPECT_NEAR(p, 1.0 / 24, 1e-15);
  EXPECT_NEAR(u.loss, std::log(24.0), 1e-14);
  const auto big = softmax_xent(std::vector<double>{1000, 0}, 0);
  EXPECT_TRUE(std::isfinite(big.loss));
  EXPECT_NEAR(big.loss, 0.0, 1e-12);
  const auto l2 = softmax_xent(std::vector<double>{std::log(2.0), 0}, 0);
  EXPECT_NEAR(l2.probabilities[0], 2.0 / 3, 1e-15);
  EXPECT_NEAR(l2.probabilities[1], 1.0 / 3, 1e-15);
  EXPECT_NEAR(l2.loss, std::log(1.5), 1e-15);
  EXPECT_THROW(softmax_xent(std::vector<double>{0, 0}, 2), IndexError);
}

TEST(Head, SoftmaxShiftInvariance) {
  std::mt19937_64 g(4);
  std::normal_distribution<double> n(0, 3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> l(7), shifted(7);
    const double c = n(g) * 10;
    for (std::size_t i = 0; i < l.size(); ++i) shifted[i] = (l[i] = n(g)) + c;
    const auto p = softmax(l), q = softmax(shifted);
    double sum = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_NEAR(p[i], q[i], 1e-12);
      EXPECT_GT(p[i], 0.0);
      sum += p[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(), std::max_element(q.begin(), q.end()) - q.begin());
  }
}

TEST(ParamCount, ReferenceAndMinimal) {
  HQLMConfig c;
  const auto p = count_params(c, 24);
  EXPECT_EQ(p.quantum_reported, 90u);
  EXPECT_EQ(p.quantum, 93u);
  EXPECT_EQ(p.classical, 168u);

  HQLMConfig tiny;
  tiny.emb_size = 1;
  tiny.rec_layers = 0;
  tiny.pred_layers = 0;
  const auto t = count_params(tiny, 1);
  EXPECT_EQ(t.quantum, 2u);
  EXPECT_EQ(t.classical, 2u * 1);

  HQLMConfig cls;
  cls.task = Task::CLS;
  EXPECT_EQ(count_params(cls, 17).classical, 14u);

  HybridModel m(c, small_vocab(24));
  EXPECT_EQ(m.params().quantum.size(), p.quantum);
  EXPECT_EQ(m.params().head.param_count(), p.classical);
  EXPECT_EQ(m.params().embedding_count, 25u * 3);
}

TEST(Config, KeyValueRoundTrip) {
  HQLMConfig c = qcnn_config();
  c.estimation = Estimation::with_shots(4096);
  c.share_block_params = true;
  EXPECT_EQ(HQLMConfig::from_kv(c.to_kv()), c);
  c.qcnn_pool = PoolKeep::First;
  EXPECT_EQ(c.to_kv().at("qcnn_pool"), "first");
  EXPECT_EQ(HQLMConfig::from_kv(c.to_kv()), c);
  auto kv = c.to_kv();
  kv["qcnn_pool"] = "middle";
  EXPECT_THROW(HQLMConfig::from_kv(kv), ConfigError);
  kv = c.to_kv();
  kv["bogus"] = "1";
  EXPECT_THROW(HQLMConfig::from_kv(kv), ConfigError);
  HQLMConfig overlap = qcnn_config();
  overlap.overlap = 1;
  EXPECT_THROW(overlap.validate(), ConfigError);
}

TEST(HybridModel, ZeroHeadIsUniform) {
  for (const auto& cfg : {HQLMConfig{}, qcnn_config()}) {
    HybridModel m(cfg, small_vocab(24));
    m.initialize(3);
    const auto p = m.forward_lm({1, 2, 3, 4}, 3);
    ASSERT_EQ(p.size(), 24u);
    for (double x : p) EXPECT_DOUBLE_EQ(x, 1.0 / 24);
  }
  HQLMConfig cls;
  cls.task = Task::CLS;
  HybridModel m(cls, small_vocab(5));
  m.initialize(1);
  EXPECT_EQ(m.forward_cls({0, 1, 2}), (std::vector<double>{0.5, 0.5}));
}

TEST(HybridModel, InitializationRanges) {
  HybridModel m(HQLMConfig{}, small_vocab(24));
  m.initialize(42);
  const auto& p = m.params();
  for (std::size_t i = 0; i < p.quantum.size(); ++i) {
    if (i < p.embedding_count) {
      EXPECT_GE(p.quantum[i], 0.0);
      EXPECT_LT(p.quantum[i], M_PI);
    } else {
      EXPECT_GE(p.quantum[i], -M_PI / 2);
      EXPECT_LT(p.quantum[i], M_PI / 2);
    }
  }
  HybridModel again(HQLMConfig{}, small_vocab(24));
  again.initialize(42);
  EXPECT_EQ(again.params(), p);
}

TEST(HybridModel, QrnnFeaturesMatchFullCircuit) {
  HybridModel m(HQLMConfig{}, small_vocab(24));
  m.initialize(7);
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Sentence s = random_sentence(2 + trial % 5, 24, g);
    const auto all = m.lm_features(m.params().quantum, s);
    ASSERT_EQ(all.size(), s.size() - 1);
    for (std::size_t t = 1; t < s.size(); ++t) {
      const Sentence prefix(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(t));
      const auto c = m.circuit(t);
      const auto state = run_circuit(c, m.bindings(m.params().quantum, prefix));
      const auto ref = reference_features(state, c.measured_qubits());
      for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_NEAR(all[t - 1][i], ref[i], 1e-12);
      }
      EXPECT_EQ(m.prefix_features(m.params().quantum, s, t), all[t - 1]);
    }
  }
}

TEST(HybridModel, QrnnPrefixCausality) {
  HybridModel m(HQLMConfig{}, small_vocab(24));
  m.initialize(5);
  auto& h = m.params().head;
  std::mt19937_64 g(2);
  std::normal_distribution<double> n;
  for (auto& w : h.weights) w = n(g);
  const Sentence a{3, 7, 1, 9, 4}, b{3, 7, 1, 2, 20};
  for (std::size_t t = 1; t <= 3; ++t) EXPECT_EQ(m.forward_lm(a, t), m.forward_lm(b, t));
  EXPECT_NE(m.forward_lm(a, 4), m.forward_lm(b, 4));
}

class QcnnPoolRule : public ::testing::TestWithParam<PoolKeep> {};

TEST_P(QcnnPoolRule, PooledMatchesFullStatevector) {
  HQLMConfig pooled = qcnn_config();
  pooled.qcnn_pool = GetParam();
  HQLMConfig full = pooled;
  full.qcnn_evaluation = QCNNEvaluation::Full;
  HybridModel a(pooled, small_vocab(24)), b(full, small_vocab(24));
  a.initialize(9);
  b.params() = a.params();
  std::mt19937_64 g(3);
  for (int trial = 0; trial < 6; ++trial) {
    const Sentence s = random_sentence(6, 24, g);
    for (std::size_t t : {1u, 3u, 6u}) {
      const auto fa = a.prefix_features(a.params().quantum, s, t);
      const auto fb = b.prefix_features(b.params().quantum, s, t);
      // Independent route: the architecture circuit bound to the padded window.
      const auto c = a.circuit(6);
      const auto state = run_circuit(c, a.bindings(a.params().quantum, a.window(s, t)));
      const auto ref = reference_features(state, c.measured_qubits());
      for (std::size_t i = 0; i < ref.size(); ++i) {
        EXPECT_NEAR(fa[i], ref[i], 1e-10);
        EXPECT_NEAR(fb[i], ref[i], 1e-10);
      }
    }
  }
}

TEST_P(QcnnPoolRule, PooledMatchesFullOnOtherPlans) {
  for (auto [regs, kernels] : std::vector<std::pair<std::size_t, std::vector<std::size_t>>>{
           {4, {2, 2}}, {5, {2, 3}}, {3, {3}}}) {
    HQLMConfig pooled = qcnn_config();
    pooled.qcnn_pool = GetParam();
    pooled.seq_len = regs;
    pooled.kernels = kernels;
    HQLMConfig full = pooled;
    full.qcnn_evaluation = QCNNEvaluation::Full;
    HybridModel a(pooled, small_vocab(6)), b(full, small_vocab(6));
    a.initialize(regs);
    b.params() = a.params();
    const Sentence s{1, 4, 2, 5, 0, 3};
    for (std::size_t t = 1; t <= s.size(); ++t) {
      const auto fa = a.prefix_features(a.params().quantum, s, t);
      const auto fb = b.prefix_features(b.params().quantum, s, t);
      for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_NEAR(fa[i], fb[i], 1e-10);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Both, QcnnPoolRule, ::testing::Values(PoolKeep::First, PoolKeep::Last));

TEST(HybridModel, QcnnPoolRuleChangesFeatures) {
  HQLMConfig last = qcnn_config();
  HQLMConfig first = last;
  first.qcnn_pool = PoolKeep::First;
  HybridModel a(last, small_vocab(24)), b(first, small_vocab(24));
  a.initialize(5);
  b.params() = a.params();
  const Sentence s{3, 9, 14, 1, 20, 7};
  EXPECT_NE(a.prefix_features(a.params().quantum, s, 6), b.prefix_features(b.params().quantum, s, 6));
}

TEST(HybridModel, QcnnLeftPadding) {
  HybridModel m(qcnn_config(), small_vocab(24));
  m.initialize(4);
  const Sentence s{5, 8, 13};
  const Sentence w = m.window(s, 2);
  EXPECT_EQ(w, (Sentence{24, 24, 24, 24, 5, 8}));
  const auto c = m.circuit(6);
  const auto b = m.bindings(m.params().quantum, w);
  const auto& q = m.params().quantum;
  for (std::size_t r = 0; r < 6; ++r) {
    const std::size_t token = r < 4 ? m.pad_index() : s[r - 4];
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(b[c.slot_index(qcnn_token_slot(r, j))], q[token * 3 + j]) << r << "," << j;
    }
  }
  EXPECT_EQ(m.window(Sentence{1, 2, 3, 4, 5, 6, 7, 8}, 8), (Sentence{3, 4, 5, 6, 7, 8}));
}

TEST(HybridModel, Errors) {
  HybridModel m(HQLMConfig{}, small_vocab(4));
  m.initialize(1);
  EXPECT_THROW(m.forward_lm({0, 9}, 2), VocabError);
  EXPECT_THROW(m.forward_lm({0, 1}, 0), ArgumentError);
  EXPECT_THROW(m.forward_lm({0, 1}, 3), ArgumentError);
  HQLMConfig cls;
  cls.task = Task::CLS;
  HybridModel c(cls, small_vocab(4));
  EXPECT_THROW(c.forward_cls({}), ArgumentError);
}

TEST(HybridModel, DeterministicForwardAndValidDistributions) {
  HQLMConfig cls;
  cls.task = Task::CLS;
  HybridModel m(cls, small_vocab(8));
  m.initialize(2);
  std::mt19937_64 g(6);
  std::normal_distribution<double> n;
  for (auto& w : m.params().head.weights) w = n(g);
  for (int t = 0; t < 20; ++t) {
    const Sentence s = random_sentence(1 + t % 4, 8, g);
    const auto p = m.forward_cls(s);
    EXPECT_EQ(p, m.forward_cls(s));
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-9);
    EXPECT_GT(p[0], 0.0);
    EXPECT_GT(p[1], 0.0);
  }
}

TEST(Checkpoint, BitExactRoundTrip) {
  for (auto cfg : {HQLMConfig{}, qcnn_config()}) {
    cfg.estimation = Estimation::with_shots(1024);
    HybridModel m(cfg, small_vocab(11));
    m.initialize(13);
    std::mt19937_64 g(1);
    std::normal_distribution<double> n;
    for (auto& w : m.params().head.weights) w = n(g) * 1e-7;
    for (auto& b : m.params().head.bias) b = n(g);
    std::stringstream ss;
    write_checkpoint(ss, m);
    const auto back = read_checkpoint(ss);
    EXPECT_EQ(back.config(), m.config());
    EXPECT_TRUE(back.vocab() == m.vocab());
    EXPECT_EQ(back.params(), m.params());
  }
}

TEST(Checkpoint, MalformedInput) {
  HybridModel m(HQLMConfig{}, small_vocab(3));
  std::stringstream ss;
  write_checkpoint(ss, m);
  std::string text = ss.str();
  std::istringstream truncated(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_checkpoint(truncated), FormatError);
  std::istringstream wrong("something else\n");
  EXPECT_THROW(read_checkpoint(wrong), FormatError);
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.ckpt"), IoError);
}
