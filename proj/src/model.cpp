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

#include "hqlm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hqlm/errors.hpp"

namespace hqlm {

std::string_view arch_name(Arch arch) noexcept { return arch == Arch::QRNN ? "QRNN" : "QCNN"; }
std::string_view task_name(Task task) noexcept { return task == Task::LM ? "LM" : "CLS"; }
std::string entangler_name(Entangler e) { return e == Entangler::Chain ? "chain" : "ring"; }

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.empty() || text == "/" || text == "none") return out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size()) throw ConfigError("bad integer list '" + text + "'");
    out.push_back(v);
  }
  return out;
}

std::string format_size_list(const std::vector<std::size_t>& values) {
  std::string s;
  for (auto v : values) s += (s.empty() ? "" : ",") + std::to_string(v);
  return s;
}

// ---------------------------------------------------------------------------
// Config

QRNNConfig HQLMConfig::qrnn() const {
  QRNNConfig c;
  c.emb_size = emb_size;
  c.hidden_size = hidden_size;
  c.rec_layers = rec_layers;
  c.pred_layers = pred_layers;
  c.seq_len = seq_len;
  c.entangler = entangler;
  return c;
}

QCNNConfig HQLMConfig::qcnn() const {
  QCNNConfig c;
  c.emb_size = emb_size;
  c.num_registers = seq_len;
  c.kernels = kernels;
  c.conv_layers_per_block = conv_layers;
  c.pred_layers = pred_layers;
  c.share_block_params = share_block_params;
  c.overlap = overlap;
  c.entangler = entangler;
  c.pool_keep = qcnn_pool;
  return c;
}

void HQLMConfig::validate() const {
  if (estimation.shots < 0) throw ConfigError("shots must be >= 0 (0 selects exact estimation)");
  if (arch == Arch::QRNN) {
    if (!kernels.empty()) throw ConfigError("kernels apply to QCNN only");
    qrnn().validate();
  } else {
    qcnn().validate();
    if (qcnn_evaluation == QCNNEvaluation::Pooled && overlap > 0) {
      throw ConfigError("pooled QCNN evaluation needs overlap = 0; use qcnn_evaluation=full");
    }
  }
}

static std::string bool_str(bool b) { return b ? "true" : "false"; }

static bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

static std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || v[0] == '-') {
    throw ConfigError(key + ": expected non-negative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(out);
}

std::map<std::string, std::string> HQLMConfig::to_kv() const {
  return {
      {"arch", std::string(arch_name(arch))},
      {"task", std::string(task_name(task))},
      {"emb_size", std::to_string(emb_size)},
      {"seq_len", std::to_string(seq_len)},
      {"kernels", format_size_list(kernels)},
      {"hidden_size", std::to_string(hidden_size)},
      {"rec_layers", std::to_string(rec_layers)},
      {"pred_layers", std::to_string(pred_layers)},
      {"conv_layers", std::to_string(conv_layers)},
      {"share_block_params", bool_str(share_block_params)},
      {"overlap", std::to_string(overlap)},
      {"entangler", entangler_name(entangler)},
      {"shots", std::to_string(estimation.shots)},
      {"qcnn_evaluation", qcnn_evaluation == QCNNEvaluation::Pooled ? "pooled" : "full"},
      {"qcnn_pool", qcnn_pool == PoolKeep::First ? "first" : "last"},
  };
}

HQLMConfig HQLMConfig::from_kv(const std::map<std::string, std::string>& kv) {
  HQLMConfig c;
  for (const auto& [key, v] : kv) {
    if (key == "arch") {
      if (v == "QRNN" || v == "qrnn") c.arch = Arch::QRNN;
      else if (v == "QCNN" || v == "qcnn") c.arch = Arch::QCNN;
      else throw ConfigError("arch: expected QRNN or QCNN, got '" + v + "'");
    } else if (key == "task") {
      if (v == "LM" || v == "lm") c.task = Task::LM;
      else if (v == "CLS" || v == "cls") c.task = Task::CLS;
      else throw ConfigError("task: expected LM or CLS, got '" + v + "'");
    } else if (key == "emb_size") {
      c.emb_size = parse_size(key, v);
    } else if (key == "seq_len") {
      c.seq_len = parse_size(key, v);
    } else if (key == "kernels") {
      c.kernels = parse_size_list(v);
    } else if (key == "hidden_size") {
      c.hidden_size = parse_size(key, v);
    } else if (key == "rec_layers") {
      c.rec_layers = parse_size(key, v);
    } else if (key == "pred_layers") {
      c.pred_layers = parse_size(key, v);
    } else if (key == "conv_layers") {
      c.conv_layers = parse_size(key, v);
    } else if (key == "share_block_params") {
      c.share_block_params = parse_bool(key, v);
    } else if (key == "overlap") {
      c.overlap = parse_size(key, v);
    } else if (key == "entangler") {
      if (v == "chain") c.entangler = Entangler::Chain;
      else if (v == "ring") c.entangler = Entangler::Ring;
      else throw ConfigError("entangler: expected chain or ring, got '" + v + "'");
    } else if (key == "shots") {
      if (v == "exact") {
        c.estimation = Estimation::exact();
      } else {
        c.estimation = Estimation::with_shots(static_cast<std::int64_t>(parse_size(key, v)));
      }
    } else if (key == "qcnn_pool") {
      if (v == "first") c.qcnn_pool = PoolKeep::First;
      else if (v == "last") c.qcnn_pool = PoolKeep::Last;
      else throw ConfigError("qcnn_pool: expected first or last, got '" + v + "'");
    } else if (key == "qcnn_evaluation") {
      if (v == "pooled") c.qcnn_evaluation = QCNNEvaluation::Pooled;
      else if (v == "full") c.qcnn_evaluation = QCNNEvaluation::Full;
      else throw ConfigError("qcnn_evaluation: expected pooled or full, got '" + v + "'");
    } else {
      throw ConfigError("unknown model key '" + key + "'");
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Readout

std::size_t feature_count(std::size_t d) noexcept { return d + d * (d - 1) / 2; }

FeatureVector extract_features(const StateVector& state, std::span<const std::size_t> measured,
                               const Estimation& mode, Rng* rng) {
  const std::size_t d = measured.size();
  if (d == 0) throw ArgumentError("feature extraction needs at least one measured qubit");
  for (auto q : measured) {
    if (q >= state.num_qubits()) throw IndexError("measured qubit " + std::to_string(q) + " out of range");
  }
  if (mode.shots < 0) throw ArgumentError("shots must be positive");
  // Marginal distribution over the measured qubits; outcome bit k is measured[k].
  std::vector<double> marginal(std::size_t{1} << d, 0.0);
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    std::size_t m = 0;
    for (std::size_t k = 0; k < d; ++k) m |= ((i >> measured[k]) & 1) << k;
    marginal[m] += std::norm(amps[i]);
  }
  if (!mode.is_exact()) {
    if (rng == nullptr) throw ArgumentError("shot-based estimation needs a random stream");
    const auto hist = sample_histogram(marginal, static_cast<std::size_t>(mode.shots), *rng);
    const double inv = 1.0 / static_cast<double>(mode.shots);
    for (std::size_t m = 0; m < marginal.size(); ++m) marginal[m] = static_cast<double>(hist[m]) * inv;
  }
  FeatureVector f(feature_count(d), 0.0);
  for (std::size_t m = 0; m < marginal.size(); ++m) {
    const double p = marginal[m];
    if (p == 0.0) continue;
    std::size_t idx = 0;
    for (std::size_t a = 0; a < d; ++a) f[idx++] += ((m >> a) & 1) ? -p : p;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) f[idx++] += (((m >> a) ^ (m >> b)) & 1) ? -p : p;
    }
  }
  for (auto& v : f) v = std::clamp(v, -1.0, 1.0);
  return f;
}

std::vector<double> project(std::span<const double> features, const ProjectionHead& head) {
  if (features.size() != head.features || head.weights.size() != head.features * head.classes ||
      head.bias.size() != head.classes) {
    throw ShapeError("projection: " + std::to_string(features.size()) + " features for a " +
                     std::to_string(head.features) + "x" + std::to_string(head.classes) + " head");
  }
  std::vector<double> logits(head.bias);
  for (std::size_t f = 0; f < head.features; ++f) {
    const double x = features[f];
    const double* row = head.weights.data() + f * head.classes;
    for (std::size_t c = 0; c < head.classes; ++c) logits[c] += x * row[c];
  }
  return logits;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax of empty logits");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
  for (auto& v : p) v /= z;
  return p;
}

SoftmaxResult softmax_xent(std::span<const double> logits, std::size_t target) {
  if (target >= logits.size()) {
    throw IndexError("target " + std::to_string(target) + " outside " + std::to_string(logits.size()) +
                     " classes");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  SoftmaxResult r;
  r.probabilities.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) r.probabilities[i] = std::exp(logits[i] - mx) / z;
  r.loss = std::log(z) - (logits[target] - mx);
  return r;
}

// ---------------------------------------------------------------------------
// Parameter accounting

static std::size_t measured_count(const HQLMConfig& config) {
  return config.arch == Arch::QRNN ? config.qrnn().hidden() : config.emb_size;
}

static std::size_t architecture_pqc_count(const HQLMConfig& config) {
  if (config.arch == Arch::QRNN) return config.qrnn().pqc_param_count();
  return qcnn_pqc_param_count(config.qcnn());
}

ParamCount count_params(const HQLMConfig& config, std::size_t vocab_size, std::size_t outputs) {
  config.validate();
  if (outputs == 0) outputs = config.task == Task::LM ? vocab_size : 2;
  const std::size_t pqc = architecture_pqc_count(config);
  ParamCount c;
  c.quantum = (vocab_size + 1) * config.emb_size + pqc;
  c.quantum_reported = vocab_size * config.emb_size + pqc;
  c.classical = (feature_count(measured_count(config)) + 1) * outputs;
  return c;
}

// ---------------------------------------------------------------------------
// Feature map

namespace {

// Where a circuit slot takes its angle from: an embedding component of the
// token at `position`, or an entry of the quantum vector.
struct SlotSource {
  bool token = false;
  std::size_t position = 0;
  std::size_t index = 0;  // embedding component, or quantum index
};

struct BoundFragment {
  ParamCircuit circuit;
  std::vector<SlotSource> sources;
};

// Purified register: `register_qubits` low bits plus ancilla bits above them.
struct RegisterState {
  std::vector<Complex> amps;
  std::size_t ancillas = 0;
};

}  // namespace

class FeatureMap {
 public:
  FeatureMap(const HQLMConfig& config, std::size_t vocab_size)
      : config_(config), vocab_size_(vocab_size), d_e_(config.emb_size) {
    embedding_count_ = (vocab_size + 1) * d_e_;
    if (config.arch == Arch::QRNN) {
      const auto q = config.qrnn();
      collect_pqc_names(build_qrnn_circuit(q, 1));
      step_ = bind(build_qrnn_step(q, 0));
      pred_ = bind(build_qrnn_prediction(q));
      measured_ = qrnn_hidden_qubits(q);
      total_qubits_ = q.total_qubits();
    } else {
      const auto q = config.qcnn();
      full_ = bind(build_qcnn_circuit(q));
      collect_pqc_names(full_.circuit);
      full_ = bind(build_qcnn_circuit(q));
      measured_ = full_.circuit.measured_qubits();
      total_qubits_ = q.total_qubits();
      levels_ = qcnn_plan(q);
      std::vector<std::size_t> local(d_e_);
      std::vector<std::string> slots(d_e_);
      for (std::size_t j = 0; j < d_e_; ++j) {
        local[j] = j;
        slots[j] = qcnn_token_slot(0, j);
      }
      embed_ = bind(build_embedding_encoder(local, slots));
      for (std::size_t l = 0; l < levels_.size(); ++l) {
        auto& frags = group_fragments_.emplace_back();
        for (std::size_t g = 0; g < levels_[l].groups.size(); ++g) {
          const std::size_t width = levels_[l].groups[g].size();
          if (width < 2 || q.conv_layers_per_block == 0) {
            frags.emplace_back();
            continue;
          }
          std::vector<std::size_t> qs(width * d_e_);
          for (std::size_t i = 0; i < qs.size(); ++i) qs[i] = i;
          frags.push_back(bind(build_pqc_block({qs, q.entangler}, q.conv_layers_per_block,
                                               qcnn_conv_prefix(q, l, g))));
        }
      }
      ParamCircuit pred;
      if (q.pred_layers > 0) pred = build_pqc_block({local, q.entangler}, q.pred_layers, "pred");
      pred_ = bind(pred);
    }
  }

  std::size_t embedding_count() const noexcept { return embedding_count_; }
  std::size_t measured_count() const noexcept { return measured_.size(); }
  const std::vector<std::string>& pqc_names() const noexcept { return pqc_names_; }

  BoundFragment bind(ParamCircuit circuit) const {
    BoundFragment f;
    f.sources.resize(circuit.num_slots());
    for (std::size_t i = 0; i < circuit.num_slots(); ++i) {
      const auto& name = circuit.slot_names()[i];
      if (auto tok = parse_token_slot(name)) {
        f.sources[i] = *tok;
      } else {
        auto it = pqc_lookup_.find(name);
        if (it == pqc_lookup_.end()) {
          // Only reachable while collecting names for the first time.
          f.sources[i] = {};
        } else {
          f.sources[i] = {false, 0, embedding_count_ + it->second};
        }
      }
    }
    f.circuit = std::move(circuit);
    return f;
  }

  void fill(const BoundFragment& f, std::span<const double> quantum, std::span<const std::size_t> tokens,
            std::vector<double>& out) const {
    out.resize(f.sources.size());
    for (std::size_t i = 0; i < f.sources.size(); ++i) {
      const auto& s = f.sources[i];
      out[i] = s.token ? quantum[tokens[s.position] * d_e_ + s.index] : quantum[s.index];
    }
  }

  // QRNN: features after each of the first `stops` prefix lengths in ascending order.
  std::vector<FeatureVector> qrnn_unroll(std::span<const double> quantum, std::span<const std::size_t> tokens,
                                         std::span<const std::size_t> stops, const Estimation& mode,
                                         Rng* rng) const {
    std::vector<FeatureVector> out;
    StateVector state(total_qubits_);
    std::vector<double> b, pb;
    fill(pred_, quantum, tokens, pb);
    std::size_t next = 0;
    for (std::size_t t = 0; t < tokens.size() && next < stops.size(); ++t) {
      fill(step_, quantum, tokens.subspan(t, 1), b);
      apply_circuit(state, step_.circuit, b);
      while (next < stops.size() && stops[next] == t + 1) {
        StateVector readout = state;
        apply_circuit(readout, pred_.circuit, pb);
        out.push_back(extract_features(readout, measured_, mode, rng));
        ++next;
      }
    }
    return out;
  }

  FeatureVector qcnn_full(std::span<const double> quantum, std::span<const std::size_t> window,
                          const Estimation& mode, Rng* rng) const {
    std::vector<double> b;
    fill(full_, quantum, window, b);
    const StateVector state = run_circuit(full_.circuit, b);
    return extract_features(state, measured_, mode, rng);
  }

  FeatureVector qcnn_pooled(std::span<const double> quantum, std::span<const std::size_t> window,
                            const Estimation& mode, Rng* rng) const {
    std::vector<RegisterState> regs(window.size());
    std::vector<double> b;
    for (std::size_t r = 0; r < window.size(); ++r) {
      StateVector s(d_e_);
      fill(embed_, quantum, window.subspan(r, 1), b);
      apply_circuit(s, embed_.circuit, b);
      regs[r].amps.assign(s.amplitudes().begin(), s.amplitudes().end());
    }
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      for (std::size_t g = 0; g < levels_[l].groups.size(); ++g) {
        const auto& group = levels_[l].groups[g];
        if (group.size() < 2) continue;
        StateVector joint = combine(regs, group);
        const auto& frag = group_fragments_[l][g];
        if (frag.circuit.num_slots() || !frag.circuit.gates().empty()) {
          fill(frag, quantum, window, b);
          apply_circuit(joint, frag.circuit, b);
        }
        const auto pos = std::find(group.begin(), group.end(), levels_[l].kept[g]) - group.begin();
        regs[levels_[l].kept[g]] = compress(joint, static_cast<std::size_t>(pos) * d_e_);
      }
    }
    auto& last = regs[levels_.empty() ? 0 : levels_.back().kept.front()];
    StateVector s = StateVector::from_amplitudes(last.amps);
    fill(pred_, quantum, window, b);
    apply_circuit(s, pred_.circuit, b);
    std::vector<std::size_t> local(d_e_);
    for (std::size_t j = 0; j < d_e_; ++j) local[j] = j;
    return extract_features(s, local, mode, rng);
  }

 private:
  static std::optional<SlotSource> parse_token_slot(const std::string& name) {
    // x<pos>.e<j>
    if (name.size() < 4 || name[0] != 'x') return std::nullopt;
    const auto dot = name.find(".e");
    if (dot == std::string::npos || dot == 1) return std::nullopt;
    SlotSource s;
    s.token = true;
    try {
      std::size_t p1 = 0, p2 = 0;
      s.position = std::stoul(name.substr(1, dot - 1), &p1);
      s.index = std::stoul(name.substr(dot + 2), &p2);
      if (p1 != dot - 1 || p2 != name.size() - dot - 2) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
    return s;
  }

  void collect_pqc_names(const ParamCircuit& circuit) {
    for (const auto& name : circuit.slot_names()) {
      if (parse_token_slot(name)) continue;
      pqc_lookup_.emplace(name, pqc_names_.size());
      pqc_names_.push_back(name);
    }
  }

  StateVector combine(const std::vector<RegisterState>& regs, const std::vector<std::size_t>& group) const {
    const std::size_t g = group.size();
    std::size_t ancillas = 0;
    for (auto r : group) ancillas += regs[r].ancillas;
    const std::size_t qubits = g * d_e_ + ancillas;
    if (qubits > kMaxQubits) {
      throw CapacityError("QCNN block needs " + std::to_string(qubits) + " simulated qubits");
    }
    std::vector<std::pair<std::size_t, Complex>> cur{{0, Complex{1.0, 0.0}}}, next;
    const std::size_t reg_mask = (std::size_t{1} << d_e_) - 1;
    std::size_t anc_offset = g * d_e_;
    for (std::size_t k = 0; k < g; ++k) {
      const auto& comp = regs[group[k]];
      next.clear();
      for (const auto& [idx, amp] : cur) {
        for (std::size_t i = 0; i < comp.amps.size(); ++i) {
          if (comp.amps[i] == Complex{}) continue;
          const std::size_t target =
              idx | ((i & reg_mask) << (k * d_e_)) | ((i >> d_e_) << anc_offset);
          next.emplace_back(target, amp * comp.amps[i]);
        }
      }
      anc_offset += comp.ancillas;
      std::swap(cur, next);
    }
    std::vector<Complex> amps(std::size_t{1} << qubits);
    for (const auto& [idx, amp] : cur) amps[idx] = amp;
    return StateVector::from_amplitudes(std::move(amps));
  }

  // Keeps the d_e qubits starting at `shift` and replaces everything else by a
  // d_e-qubit purification with the same reduced state: rows of the (D x R)
  // amplitude matrix are expanded in an orthonormal basis built by Gram-Schmidt.
  RegisterState compress(const StateVector& joint, std::size_t shift) const {
    const std::size_t dim = std::size_t{1} << d_e_;
    const std::size_t rest = joint.dimension() / dim;
    const auto all = joint.amplitudes();
    const std::size_t low = (std::size_t{1} << shift) - 1;
    std::vector<Complex> amps(all.size());
    for (std::size_t r = 0; r < rest; ++r) {
      const std::size_t base = (r & low) | ((r >> shift) << (shift + d_e_));
      for (std::size_t e = 0; e < dim; ++e) amps[e + dim * r] = all[base | (e << shift)];
    }
    std::vector<std::vector<Complex>> basis;
    std::vector<Complex> lower(dim * dim, Complex{});
    std::vector<Complex> v(rest);
    for (std::size_t e = 0; e < dim; ++e) {
      for (std::size_t r = 0; r < rest; ++r) v[r] = amps[e + dim * r];
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < basis.size(); ++k) {
          Complex c{};
          for (std::size_t r = 0; r < rest; ++r) c += std::conj(basis[k][r]) * v[r];
          for (std::size_t r = 0; r < rest; ++r) v[r] -= c * basis[k][r];
          lower[e + dim * k] += c;
        }
      }
      double n2 = 0.0;
      for (const auto& x : v) n2 += std::norm(x);
      const double n = std::sqrt(n2);
      if (n > 1e-13 && basis.size() < dim) {
        for (auto& x : v) x /= n;
        lower[e + dim * basis.size()] = n;
        basis.push_back(v);
      }
    }
    return {std::move(lower), d_e_};
  }

  HQLMConfig config_;
  std::size_t vocab_size_;
  std::size_t d_e_;
  std::size_t embedding_count_ = 0;
  std::size_t total_qubits_ = 0;
  std::vector<std::string> pqc_names_;
  std::unordered_map<std::string, std::size_t> pqc_lookup_;
  std::vector<std::size_t> measured_;
  BoundFragment step_, pred_, full_, embed_;
  std::vector<QCNNLevel> levels_;
  std::vector<std::vector<BoundFragment>> group_fragments_;
};

// ---------------------------------------------------------------------------
// HybridModel

HybridModel::HybridModel(HQLMConfig config, Vocabulary vocab)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.validate();
  if (vocab_.size() == 0) throw VocabError("model needs a non-empty vocabulary");
  map_ = std::make_unique<FeatureMap>(config_, vocab_.size());
  params_.embedding_count = map_->embedding_count();
  params_.quantum.assign(map_->embedding_count() + map_->pqc_names().size(), 0.0);
  const std::size_t outputs = config_.task == Task::LM ? vocab_.size() : 2;
  params_.head = ProjectionHead(feature_count(map_->measured_count()), outputs);
}

HybridModel::HybridModel(const HybridModel& other)
    : config_(other.config_),
      vocab_(other.vocab_),
      params_(other.params_),
      map_(std::make_unique<FeatureMap>(*other.map_)) {}

HybridModel& HybridModel::operator=(const HybridModel& other) {
  if (this != &other) {
    config_ = other.config_;
    vocab_ = other.vocab_;
    params_ = other.params_;
    map_ = std::make_unique<FeatureMap>(*other.map_);
  }
  return *this;
}

HybridModel::HybridModel(HybridModel&&) noexcept = default;
HybridModel& HybridModel::operator=(HybridModel&&) noexcept = default;
HybridModel::~HybridModel() = default;

std::size_t HybridModel::pqc_param_count() const noexcept { return map_->pqc_names().size(); }
const std::vector<std::string>& HybridModel::pqc_slot_names() const noexcept { return map_->pqc_names(); }

void HybridModel::initialize(std::uint64_t seed) {
  Rng rng(seed);
  auto& q = params_.quantum;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double u = uniform01(rng);
    q[i] = i < params_.embedding_count ? u * std::numbers::pi : (u - 0.5) * std::numbers::pi;
  }
  std::fill(params_.head.weights.begin(), params_.head.weights.end(), 0.0);
  std::fill(params_.head.bias.begin(), params_.head.bias.end(), 0.0);
}

void HybridModel::check_tokens(const Sentence& sentence) const {
  for (auto t : sentence) {
    if (t > vocab_.size()) {
      throw VocabError("token index " + std::to_string(t) + " outside vocabulary of " +
                       std::to_string(vocab_.size()));
    }
  }
}

ParamCircuit HybridModel::circuit(std::size_t length) const {
  if (config_.arch == Arch::QRNN) return build_qrnn_circuit(config_.qrnn(), length);
  return build_qcnn_circuit(config_.qcnn());
}

std::vector<double> HybridModel::bindings(std::span<const double> quantum, const Sentence& input) const {
  check_tokens(input);
  const ParamCircuit c = circuit(config_.arch == Arch::QRNN ? input.size() : config_.seq_len);
  if (config_.arch == Arch::QCNN && input.size() != config_.seq_len) {
    throw ShapeError("QCNN bindings need a full window of " + std::to_string(config_.seq_len) + " tokens");
  }
  const auto f = map_->bind(c);
  std::vector<double> out;
  map_->fill(f, quantum, input, out);
  return out;
}

Sentence HybridModel::window(const Sentence& prefix, std::size_t t) const {
  if (t > prefix.size()) throw ArgumentError("prefix length exceeds sentence");
  Sentence w(config_.seq_len, pad_index());
  const std::size_t take = std::min(t, config_.seq_len);
  std::copy(prefix.begin() + static_cast<std::ptrdiff_t>(t - take),
            prefix.begin() + static_cast<std::ptrdiff_t>(t),
            w.begin() + static_cast<std::ptrdiff_t>(config_.seq_len - take));
  return w;
}

FeatureVector HybridModel::prefix_features(std::span<const double> quantum, const Sentence& prefix,
                                           std::size_t t, Rng* rng) const {
  if (t < 1 || t > prefix.size()) {
    throw ArgumentError("prefix position " + std::to_string(t) + " outside [1, " +
                        std::to_string(prefix.size()) + "]");
  }
  check_tokens(prefix);
  if (config_.arch == Arch::QRNN) {
    const std::size_t take = std::min(t, config_.seq_len);
    std::span<const std::size_t> tokens(prefix.data() + (t - take), take);
    const std::size_t stop = take;
    return map_->qrnn_unroll(quantum, tokens, {&stop, 1}, config_.estimation, rng).front();
  }
  const Sentence w = window(prefix, t);
  return config_.qcnn_evaluation == QCNNEvaluation::Pooled
             ? map_->qcnn_pooled(quantum, w, config_.estimation, rng)
             : map_->qcnn_full(quantum, w, config_.estimation, rng);
}

std::vector<FeatureVector> HybridModel::lm_features(std::span<const double> quantum, const Sentence& sentence,
                                                    Rng* rng) const {
  check_tokens(sentence);
  if (sentence.size() < 2) return {};
  if (config_.arch == Arch::QRNN && sentence.size() - 1 <= config_.seq_len) {
    std::vector<std::size_t> stops(sentence.size() - 1);
    for (std::size_t k = 0; k < stops.size(); ++k) stops[k] = k + 1;
    return map_->qrnn_unroll(quantum, sentence, stops, config_.estimation, rng);
  }
  std::vector<FeatureVector> out;
  for (std::size_t t = 1; t < sentence.size(); ++t) out.push_back(prefix_features(quantum, sentence, t, rng));
  return out;
}

FeatureVector HybridModel::cls_features(std::span<const double> quantum, const Sentence& sentence,
                                        Rng* rng) const {
  if (sentence.empty()) throw ArgumentError("classification of an empty sentence");
  return prefix_features(quantum, sentence, sentence.size(), rng);
}

std::vector<double> HybridModel::forward_lm(const Sentence& prefix, std::size_t t, Rng* rng) const {
  const auto f = prefix_features(params_.quantum, prefix, t, rng);
  return softmax(project(f, params_.head));
}

std::vector<double> HybridModel::forward_cls(const Sentence& sentence, Rng* rng) const {
  const auto f = cls_features(params_.quantum, sentence, rng);
  return softmax(project(f, params_.head));
}

// ---------------------------------------------------------------------------
// Checkpoints

static std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void write_checkpoint(std::ostream& out, const HybridModel& model) {
  out << "hqlm-checkpoint 1\n";
  const auto kv = model.config().to_kv();
  out << "config " << kv.size() << '\n';
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  out << "vocab " << model.vocab().size() << '\n';
  for (const auto& t : model.vocab().tokens()) out << t << '\n';
  const auto& p = model.params();
  out << "quantum " << p.quantum.size() << '\n';
  for (double v : p.quantum) out << hexfloat(v) << '\n';
  out << "head " << p.head.features << ' ' << p.head.classes << '\n';
  for (std::size_t f = 0; f < p.head.features; ++f) {
    for (std::size_t c = 0; c < p.head.classes; ++c) out << (c ? " " : "") << hexfloat(p.head.w(f, c));
    out << '\n';
  }
  for (std::size_t c = 0; c < p.head.classes; ++c) out << (c ? " " : "") << hexfloat(p.head.bias[c]);
  out << '\n';
}

HybridModel read_checkpoint(std::istream& in, const std::string& source) {
  std::size_t lineno = 0;
  std::string line;
  auto next = [&]() -> std::string& {
    if (!std::getline(in, line)) throw FormatError(source, lineno, "unexpected end of checkpoint");
    ++lineno;
    return line;
  };
  auto count_after = [&](const std::string& tag) {
    const std::string& l = next();
    if (l.rfind(tag + " ", 0) != 0) throw FormatError(source, lineno, "expected '" + tag + "' section");
    try {
      return static_cast<std::size_t>(std::stoull(l.substr(tag.size() + 1)));
    } catch (const std::exception&) {
      throw FormatError(source, lineno, "bad count in '" + tag + "' section");
    }
  };
  auto parse_double = [&](const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size()) {
      throw FormatError(source, lineno, "bad number '" + tok + "'");
    }
    return v;
  };
  if (next() != "hqlm-checkpoint 1") throw FormatError(source, lineno, "not an hqlm checkpoint (v1)");
  std::map<std::string, std::string> kv;
  for (std::size_t n = count_after("config"); n > 0; --n) {
    const std::string& l = next();
    const auto eq = l.find('=');
    if (eq == std::string::npos) throw FormatError(source, lineno, "expected key=value");
    kv[l.substr(0, eq)] = l.substr(eq + 1);
  }
  std::vector<std::string> tokens;
  for (std::size_t n = count_after("vocab"); n > 0; --n) tokens.push_back(next());
  HybridModel model(HQLMConfig::from_kv(kv), Vocabulary(std::move(tokens)));
  auto& p = model.params();
  const std::size_t qn = count_after("quantum");
  if (qn != p.quantum.size()) {
    throw FormatError(source, lineno, "quantum block has " + std::to_string(qn) + " entries, config needs " +
                                          std::to_string(p.quantum.size()));
  }
  for (auto& v : p.quantum) v = parse_double(next());
  std::size_t f = 0, c = 0;
  {
    std::istringstream hs(next());
    std::string tag;
    if (!(hs >> tag >> f >> c) || tag != "head" || f != p.head.features || c != p.head.classes) {
      throw FormatError(source, lineno, "head shape does not match config");
    }
  }
  auto read_row = [&](std::span<double> row) {
    std::istringstream rs(next());
    std::string tok;
    for (auto& v : row) {
      if (!(rs >> tok)) throw FormatError(source, lineno, "short row");
      v = parse_double(tok);
    }
    if (rs >> tok) throw FormatError(source, lineno, "long row");
  };
  for (std::size_t r = 0; r < f; ++r) read_row({p.head.weights.data() + r * c, c});
  read_row(p.head.bias);
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const HybridModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, model);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

HybridModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_checkpoint(in, path.string());
}

}  // namespace hqlm
