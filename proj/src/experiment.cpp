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

#include "hqlm/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hqlm/errors.hpp"

namespace hqlm {

std::string benchmark_name(Benchmark b) {
  switch (b) {
    case Benchmark::MC:
      return "MC";
    case Benchmark::RP:
      return "RP";
    case Benchmark::MCLM:
      return "MC-LM";
    case Benchmark::TSLM:
      break;
  }
  return "TS-LM";
}

Benchmark parse_benchmark(const std::string& text) {
  std::string t;
  for (char c : text) t += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (t == "MC") return Benchmark::MC;
  if (t == "RP") return Benchmark::RP;
  if (t == "MC-LM" || t == "MCLM") return Benchmark::MCLM;
  if (t == "TS-LM" || t == "TSLM") return Benchmark::TSLM;
  throw ConfigError("unknown task '" + text + "' (expected MC, RP, MC-LM or TS-LM)");
}

Task benchmark_task(Benchmark b) noexcept {
  return b == Benchmark::MC || b == Benchmark::RP ? Task::CLS : Task::LM;
}

namespace {

struct PresetRow {
  Benchmark benchmark;
  Arch arch;
  std::size_t seq_len;
  std::vector<std::size_t> kernels;
  std::size_t batch;
  std::size_t epochs;
};

const std::vector<PresetRow>& preset_rows() {
  static const std::vector<PresetRow> rows = {
      {Benchmark::MC, Arch::QRNN, 4, {}, 10, 20},       {Benchmark::MC, Arch::QCNN, 6, {3, 3}, 10, 20},
      {Benchmark::RP, Arch::QRNN, 4, {}, 10, 40},       {Benchmark::RP, Arch::QCNN, 4, {2, 2}, 10, 40},
      {Benchmark::MCLM, Arch::QRNN, 4, {}, 16, 40},     {Benchmark::MCLM, Arch::QCNN, 6, {3, 3}, 16, 40},
      {Benchmark::TSLM, Arch::QRNN, 6, {}, 32, 30},     {Benchmark::TSLM, Arch::QCNN, 6, {3, 3}, 32, 30},
  };
  return rows;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string preset_name(const PresetRow& r) {
  return lower(benchmark_name(r.benchmark)) + "-" + lower(std::string(arch_name(r.arch)));
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || v[0] == '-') {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& r : preset_rows()) out.push_back(preset_name(r));
  return out;
}

ExperimentConfig preset(Benchmark benchmark, Arch arch) {
  for (const auto& r : preset_rows()) {
    if (r.benchmark != benchmark || r.arch != arch) continue;
    ExperimentConfig c;
    c.benchmark = benchmark;
    c.model.arch = arch;
    c.model.task = benchmark_task(benchmark);
    c.model.seq_len = r.seq_len;
    c.model.kernels = r.kernels;
    c.train.batch_size = r.batch;
    c.train.epochs = r.epochs;
    c.train.learning_rate = 0.1;
    return c;
  }
  throw ConfigError("no preset for " + benchmark_name(benchmark) + "/" + std::string(arch_name(arch)));
}

ExperimentConfig preset(const std::string& name) {
  for (const auto& r : preset_rows()) {
    if (preset_name(r) == lower(name)) return preset(r.benchmark, r.arch);
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      problems.emplace_back(e.what());
    }
  };
  check([&] { model.validate(); });
  check([&] { train.validate(); });
  if (model.task != benchmark_task(benchmark)) {
    problems.push_back("task " + benchmark_name(benchmark) + " needs a " +
                       std::string(task_name(benchmark_task(benchmark))) + " model");
  }
  if (seeds.empty()) problems.emplace_back("seed list is empty");
  if (problems.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw ConfigError(msg);
}

std::map<std::string, std::string> ExperimentConfig::to_kv() const {
  auto kv = model.to_kv();
  kv["task"] = benchmark_name(benchmark);
  kv["batch_size"] = std::to_string(train.batch_size);
  kv["epochs"] = std::to_string(train.epochs);
  kv["learning_rate"] = format_double(train.learning_rate);
  kv["shuffle"] = train.shuffle ? "true" : "false";
  kv["threads"] = std::to_string(train.threads);
  kv["record_wall_time"] = train.record_wall_time ? "true" : "false";
  kv["spsa_population"] = std::to_string(train.spsa.population);
  kv["spsa_epsilon"] = format_double(train.spsa.epsilon);
  kv["spsa_mask_absent_tokens"] = train.spsa.mask_absent_tokens ? "true" : "false";
  std::string s;
  for (auto seed : seeds) s += (s.empty() ? "" : ",") + std::to_string(seed);
  kv["seeds"] = s;
  kv["dataset_dir"] = dataset_dir.string();
  kv["data_seed"] = std::to_string(data_seed);
  kv["out_dir"] = out_dir.string();
  return kv;
}

ExperimentConfig ExperimentConfig::from_kv(const std::map<std::string, std::string>& kv,
                                           const ExperimentConfig& base) {
  ExperimentConfig c = base;
  auto model_kv = c.model.to_kv();
  std::vector<std::string> problems;
  for (const auto& [key, v] : kv) {
    try {
      if (key == "task") {
        c.benchmark = parse_benchmark(v);
      } else if (key == "batch_size") {
        c.train.batch_size = parse_u64(key, v);
      } else if (key == "epochs") {
        c.train.epochs = parse_u64(key, v);
      } else if (key == "learning_rate" || key == "lr") {
        c.train.learning_rate = parse_double(key, v);
      } else if (key == "shuffle") {
        c.train.shuffle = parse_flag(key, v);
      } else if (key == "threads") {
        c.train.threads = parse_u64(key, v);
      } else if (key == "record_wall_time") {
        c.train.record_wall_time = parse_flag(key, v);
      } else if (key == "spsa_population") {
        c.train.spsa.population = parse_u64(key, v);
      } else if (key == "spsa_epsilon") {
        c.train.spsa.epsilon = parse_double(key, v);
      } else if (key == "spsa_mask_absent_tokens") {
        c.train.spsa.mask_absent_tokens = parse_flag(key, v);
      } else if (key == "seeds" || key == "seed") {
        c.seeds.clear();
        std::stringstream ss(v);
        for (std::string item; std::getline(ss, item, ',');) c.seeds.push_back(parse_u64(key, item));
      } else if (key == "dataset_dir") {
        c.dataset_dir = v;
      } else if (key == "data_seed") {
        c.data_seed = parse_u64(key, v);
      } else if (key == "out_dir") {
        c.out_dir = v;
      } else if (model_kv.contains(key)) {
        model_kv[key] = v;
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      problems.emplace_back(e.what());
    }
  }
  model_kv.erase("task");
  try {
    c.model = HQLMConfig::from_kv(model_kv);
  } catch (const ConfigError& e) {
    problems.emplace_back(e.what());
  }
  c.model.task = benchmark_task(c.benchmark);
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_kv(const std::map<std::string, std::string>& kv) {
  return from_kv(kv, ExperimentConfig{});
}

std::map<std::string, std::string> read_kv(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw FormatError(source, lineno, "expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw FormatError(source, lineno, "empty key");
    if (kv.contains(key)) throw FormatError(source, lineno, "duplicate key '" + key + "'");
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> load_kv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return read_kv(in, path.string());
}

void write_kv(std::ostream& out, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

SentenceDataset resolve_dataset(const ExperimentConfig& config, std::string* note) {
  auto say = [&](const std::string& s) {
    if (note) *note = s;
  };
  if (!config.dataset_dir.empty()) {
    switch (config.benchmark) {
      case Benchmark::TSLM:
        return load_dataset_dir(config.dataset_dir, Task::LM);
      case Benchmark::MCLM:
        return derive_lm_from_cls(load_dataset_dir(config.dataset_dir, Task::CLS));
      case Benchmark::MC:
      case Benchmark::RP:
        return load_dataset_dir(config.dataset_dir, Task::CLS);
    }
  }
  switch (config.benchmark) {
    case Benchmark::TSLM:
      say("generated TS-LM corpus, data seed " + std::to_string(config.data_seed));
      return generate_tslm(config.data_seed);
    case Benchmark::MCLM:
      say("no dataset_dir: using the generated two-topic stand-in corpus as LM data");
      return derive_lm_from_cls(generate_topic_cls(config.data_seed));
    case Benchmark::MC:
    case Benchmark::RP:
      break;
  }
  say("no dataset_dir: using the generated two-topic stand-in corpus (70/30)");
  return generate_topic_cls(config.data_seed);
}

void AblationSpec::validate() const {
  if (variable != "shots" && variable != "emb_size") {
    throw ArgumentError("ablation variable must be shots or emb_size, got '" + variable + "'");
  }
  if (values.empty()) throw ArgumentError("ablation sweep has no values");
}

AblationSpec AblationSpec::parse(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ArgumentError("sweep must look like variable=v1,v2,...");
  AblationSpec spec;
  spec.variable = text.substr(0, eq);
  std::stringstream ss(text.substr(eq + 1));
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) spec.values.push_back(item);
  }
  spec.validate();
  return spec;
}

ExperimentConfig AblationSpec::apply(const ExperimentConfig& base, const std::string& value) const {
  ExperimentConfig c = base;
  if (variable == "shots") {
    c.model.estimation = value == "exact" ? Estimation::exact()
                                          : Estimation::with_shots(static_cast<std::int64_t>(parse_u64("shots", value)));
  } else {
    c.model.emb_size = parse_u64("emb_size", value);
  }
  return c;
}

std::pair<double, double> mean_stdev(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

}  // namespace hqlm
