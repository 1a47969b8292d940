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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hqlm/data.hpp"
#include "hqlm/model.hpp"
#include "hqlm/train.hpp"

namespace hqlm {

/// Benchmark tasks. MC and RP are classification corpora supplied by the
/// user; MC-LM reuses the MC sentences for next-token prediction.
enum class Benchmark { MC, RP, MCLM, TSLM };

std::string benchmark_name(Benchmark b);
Benchmark parse_benchmark(const std::string& text);
Task benchmark_task(Benchmark b) noexcept;

struct ExperimentConfig {
  Benchmark benchmark = Benchmark::TSLM;
  HQLMConfig model;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::filesystem::path dataset_dir;  // empty: generate (TS-LM grammar or topic stand-in)
  std::uint64_t data_seed = 0;
  std::filesystem::path out_dir;

  /// Every problem found, reported together as one ConfigError.
  void validate() const;

  std::map<std::string, std::string> to_kv() const;
  /// Keys absent from `kv` keep the values of `base`.
  static ExperimentConfig from_kv(const std::map<std::string, std::string>& kv,
                                  const ExperimentConfig& base);
  static ExperimentConfig from_kv(const std::map<std::string, std::string>& kv);
  bool operator==(const ExperimentConfig&) const = default;
};

/// Names like `ts-lm-qrnn`, one per hyperparameter-table row.
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);
ExperimentConfig preset(Benchmark benchmark, Arch arch);

/// Flat `key=value` files; `#` comments and blank lines are skipped.
std::map<std::string, std::string> read_kv(std::istream& in, const std::string& source = "<config>");
std::map<std::string, std::string> load_kv(const std::filesystem::path& path);
void write_kv(std::ostream& out, const std::map<std::string, std::string>& kv);

/// Loads or generates the dataset an experiment refers to.
SentenceDataset resolve_dataset(const ExperimentConfig& config, std::string* note = nullptr);

struct AblationSpec {
  std::string variable;             // "shots" or "emb_size"
  std::vector<std::string> values;  // shots accept "exact"

  void validate() const;
  /// `variable=v1,v2,...`
  static AblationSpec parse(const std::string& text);
  ExperimentConfig apply(const ExperimentConfig& base, const std::string& value) const;
};

/// Mean and sample standard deviation (n - 1; 0 for a single value).
std::pair<double, double> mean_stdev(const std::vector<double>& values);

}  // namespace hqlm
