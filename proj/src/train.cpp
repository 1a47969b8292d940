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

#include "hqlm/train.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

#include "hqlm/errors.hpp"
#include "hqlm/eval.hpp"

namespace hqlm {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

void SPSAConfig::validate() const {
  if (population < 1) throw ConfigError("SPSA population must be >= 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("SPSA epsilon must be > 0");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be > 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  spsa.validate();
}

void adam_step(AdamState& s, std::span<double> params, std::span<const double> g) {
  if (params.size() != g.size() || s.m.size() != g.size() || s.v.size() != g.size()) {
    throw ShapeError("adam: parameter, gradient and state lengths differ");
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) throw OptimizationError("non-finite gradient entry " + std::to_string(i), i);
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < g.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g[i] * g[i];
    params[i] -= s.learning_rate * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + s.eps);
  }
}

std::vector<double> spsa_gradient(const LossFn& loss, std::span<const double> theta, const SPSAConfig& config,
                                  Rng& rng, std::size_t threads, std::span<const char> mask) {
  config.validate();
  if (!mask.empty() && mask.size() != theta.size()) throw ShapeError("SPSA mask length differs from theta");
  const std::size_t n = theta.size();
  const std::size_t P = config.population;
  std::vector<std::vector<double>> deltas(P, std::vector<double>(n));
  for (auto& d : deltas) {
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = (rng() >> 63) ? 1.0 : -1.0;
      if (!mask.empty() && !mask[i]) d[i] = 0.0;
    }
  }
  std::vector<double> values(2 * P);
  std::vector<std::exception_ptr> errors(2 * P);
  auto run = [&](std::size_t e) {
    try {
      const auto& d = deltas[e / 2];
      const double sign = (e % 2 == 0) ? 1.0 : -1.0;
      std::vector<double> point(theta.begin(), theta.end());
      for (std::size_t i = 0; i < n; ++i) point[i] += sign * config.epsilon * d[i];
      const double v = loss(point, e);
      if (!std::isfinite(v)) {
        throw OptimizationError("non-finite loss at SPSA evaluation " + std::to_string(e), e);
      }
      values[e] = v;
    } catch (...) {
      errors[e] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(threads, 2 * P);
  if (workers <= 1) {
    for (std::size_t e = 0; e < 2 * P; ++e) run(e);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t e; (e = next.fetch_add(1)) < 2 * P;) run(e);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  std::vector<double> g(n, 0.0);
  for (std::size_t p = 0; p < P; ++p) {
    const double scale = (values[2 * p] - values[2 * p + 1]) / (2.0 * config.epsilon);
    for (std::size_t i = 0; i < n; ++i) g[i] += scale * deltas[p][i];
  }
  for (auto& x : g) x /= static_cast<double>(P);
  return g;
}

HeadGradient head_gradient(const std::vector<FeatureVector>& features, std::span<const std::size_t> targets,
                           const ProjectionHead& head) {
  if (features.empty()) throw ShapeError("head gradient of an empty batch");
  if (features.size() != targets.size()) throw ShapeError("features and targets differ in length");
  HeadGradient g;
  g.weights.assign(head.features * head.classes, 0.0);
  g.bias.assign(head.classes, 0.0);
  const double inv = 1.0 / static_cast<double>(features.size());
  for (std::size_t n = 0; n < features.size(); ++n) {
    const auto r = softmax_xent(project(features[n], head), targets[n]);
    g.loss += r.loss;
    for (std::size_t c = 0; c < head.classes; ++c) {
      const double dl = (r.probabilities[c] - (c == targets[n] ? 1.0 : 0.0)) * inv;
      g.bias[c] += dl;
      for (std::size_t f = 0; f < head.features; ++f) g.weights[f * head.classes + c] += features[n][f] * dl;
    }
  }
  g.loss *= inv;
  return g;
}

void batch_features(const HybridModel& model, std::span<const double> quantum, const Batch& batch,
                    std::uint64_t noise_seed, std::vector<FeatureVector>& features,
                    std::vector<std::size_t>& targets) {
  features.clear();
  targets.clear();
  const bool lm = model.config().task == Task::LM;
  if (!lm && batch.labels.size() != batch.inputs.size()) throw ShapeError("CLS batch needs one label per input");
  const bool exact = model.config().estimation.is_exact();
  // Exact QCNN features depend only on the window, and prefixes repeat a lot
  // within a batch.
  const bool dedupe = exact && lm && model.config().arch == Arch::QCNN;
  std::map<Sentence, std::size_t> seen;
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    Rng rng(derive_seed(noise_seed, i));
    Rng* r = exact ? nullptr : &rng;
    const auto& s = batch.inputs[i];
    if (dedupe) {
      for (std::size_t t = 1; t < s.size(); ++t) {
        Sentence w = model.window(s, t);
        auto [it, fresh] = seen.emplace(std::move(w), features.size());
        features.push_back(fresh ? model.prefix_features(quantum, it->first, it->first.size())
                                 : features[it->second]);
        targets.push_back(s[t]);
      }
    } else if (lm) {
      auto f = model.lm_features(quantum, s, r);
      for (std::size_t k = 0; k < f.size(); ++k) {
        features.push_back(std::move(f[k]));
        targets.push_back(s[k + 1]);
      }
    } else {
      features.push_back(model.cls_features(quantum, s, r));
      targets.push_back(static_cast<std::size_t>(batch.labels[i]));
    }
  }
  if (features.empty()) throw ArgumentError("batch yields no predictions");
}

double batch_loss(const HybridModel& model, std::span<const double> quantum, const Batch& batch,
                  std::uint64_t noise_seed) {
  std::vector<FeatureVector> features;
  std::vector<std::size_t> targets;
  batch_features(model, quantum, batch, noise_seed, features, targets);
  double total = 0.0;
  for (std::size_t n = 0; n < features.size(); ++n) {
    total += softmax_xent(project(features[n], model.params().head), targets[n]).loss;
  }
  return total / static_cast<double>(features.size());
}

static std::vector<char> token_mask(const HybridModel& model, const Batch& batch) {
  const auto& p = model.params();
  const std::size_t d = model.config().emb_size;
  std::vector<char> mask(p.quantum.size(), 0);
  for (std::size_t i = p.embedding_count; i < mask.size(); ++i) mask[i] = 1;
  auto mark = [&](std::size_t token) {
    for (std::size_t j = 0; j < d; ++j) mask[token * d + j] = 1;
  };
  for (const auto& s : batch.inputs) {
    for (auto t : s) mark(t);
  }
  if (model.config().arch == Arch::QCNN) mark(model.pad_index());
  return mask;
}

StepResult train_step(HybridModel& model, const Batch& batch, const SPSAConfig& spsa, AdamState& adam_quantum,
                      AdamState& adam_classical, Rng& rng, const StepOptions& options) {
  if (batch.inputs.empty()) throw ArgumentError("empty training batch");
  spsa.validate();
  auto& params = model.params();
  std::atomic<std::size_t> evaluations{0};
  const std::size_t unperturbed = 2 * spsa.population;

  std::vector<FeatureVector> features;
  std::vector<std::size_t> targets;
  batch_features(model, params.quantum, batch, derive_seed(options.noise_seed, unperturbed), features, targets);
  ++evaluations;
  const HeadGradient hg = head_gradient(features, targets, params.head);
  if (!std::isfinite(hg.loss)) throw OptimizationError("non-finite loss at the unperturbed point", unperturbed);

  const HybridModel& frozen = model;
  LossFn loss = [&](std::span<const double> theta, std::size_t e) {
    ++evaluations;
    return batch_loss(frozen, theta, batch, derive_seed(options.noise_seed, e));
  };
  std::vector<char> mask;
  if (spsa.mask_absent_tokens) mask = token_mask(model, batch);
  const auto gq = spsa_gradient(loss, params.quantum, spsa, rng, options.threads, mask);

  std::vector<double> head(params.head.weights);
  head.insert(head.end(), params.head.bias.begin(), params.head.bias.end());
  std::vector<double> gh(hg.weights);
  gh.insert(gh.end(), hg.bias.begin(), hg.bias.end());
  adam_step(adam_classical, head, gh);
  std::copy(head.begin(), head.begin() + static_cast<std::ptrdiff_t>(params.head.weights.size()),
            params.head.weights.begin());
  std::copy(head.begin() + static_cast<std::ptrdiff_t>(params.head.weights.size()), head.end(),
            params.head.bias.begin());
  adam_step(adam_quantum, params.quantum, gq);
  return {hg.loss, evaluations.load()};
}

const EpochRecord* RunMetrics::last(const std::string& split) const {
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    if (it->split == split) return &*it;
  }
  return nullptr;
}

std::string metrics_csv_header() { return "epoch,split,loss_nats,ppl,acc,wall_s,seed"; }

void write_metrics_csv(std::ostream& out, const RunMetrics& metrics) {
  out << metrics_csv_header() << '\n';
  char buf[256];
  for (const auto& r : metrics.records) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%.12g,%.12g,%.12g,%.3f,%llu\n", r.epoch, r.split.c_str(), r.loss,
                  r.perplexity, r.accuracy, r.wall_seconds, static_cast<unsigned long long>(r.seed));
    out << buf;
  }
}

void save_metrics_csv(const std::filesystem::path& path, const RunMetrics& metrics) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_metrics_csv(out, metrics);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

RunMetrics fit(HybridModel& model, const SentenceDataset& data, const TrainConfig& config,
               const EpochCallback& on_record) {
  config.validate();
  check_compatible(model, data);
  RunMetrics metrics;
  if (config.epochs == 0) return metrics;
  if (data.train.empty()) throw ArgumentError("empty training split");

  Rng rng(derive_seed(config.seed, 0x5e55));
  auto& params = model.params();
  AdamState adam_q(params.quantum.size(), config.learning_rate);
  AdamState adam_c(params.head.param_count(), config.learning_rate);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  const bool lm = data.task == Task::LM;
  const bool exact = model.config().estimation.is_exact();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    if (config.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
      }
    }
    std::size_t step = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++step) {
      Batch batch;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      for (std::size_t k = begin; k < end; ++k) {
        batch.inputs.push_back(data.train[order[k]]);
        if (!lm) batch.labels.push_back(data.train_labels[order[k]]);
      }
      StepOptions opts;
      opts.threads = config.threads;
      opts.noise_seed = derive_seed(config.seed, epoch, step);
      train_step(model, batch, config.spsa, adam_q, adam_c, rng, opts);
    }
    const double wall =
        config.record_wall_time
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
            : 0.0;
    for (int split = 0; split < 2; ++split) {
      const bool test = split == 1;
      if (test && data.test.empty()) continue;
      Rng eval_rng(derive_seed(config.seed, epoch, 0xe7a1 + split));
      const EvalReport r = evaluate(model, data, test, exact ? nullptr : &eval_rng);
      EpochRecord rec{epoch, r.split, r.mean_loss, r.perplexity, r.headline_accuracy(), wall, config.seed};
      metrics.records.push_back(rec);
      if (on_record) on_record(rec);
    }
  }
  return metrics;
}

}  // namespace hqlm
