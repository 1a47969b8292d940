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
#include <string>
#include <unordered_map>
#include <vector>

namespace hqlm {

using Sentence = std::vector<std::size_t>;

/// Dense token <-> index map. Tokens are kept in the order given.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Sorted (lexicographic, byte-wise) union of all tokens in `sentences`.
  static Vocabulary from_corpus(const std::vector<std::vector<std::string>>& sentences);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& token(std::size_t index) const;
  std::size_t index(const std::string& token) const;  // VocabError when unknown
  bool contains(const std::string& token) const { return lookup_.contains(token); }

  Sentence encode(const std::vector<std::string>& words) const;
  std::vector<std::string> decode(const Sentence& sentence) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

enum class Task { LM, CLS };

struct SentenceDataset {
  Task task = Task::LM;
  Vocabulary vocab;
  std::vector<Sentence> train;
  std::vector<Sentence> test;
  std::vector<int> train_labels;  // CLS only, parallel to train
  std::vector<int> test_labels;
};

/// TS-LM production: subject verb [adjective] object [preposition location].
struct GrammarSpec {
  std::vector<std::string> subjects;
  std::vector<std::string> verbs;
  std::vector<std::string> adjectives;
  std::vector<std::string> objects;
  std::vector<std::string> prepositions;
  std::vector<std::string> locations;
  double adjective_probability = 0.5;
  double prep_phrase_probability = 0.5;

  /// Shipped 24-word grammar.
  static GrammarSpec defaults();
  void validate() const;
  std::size_t word_count() const;
  /// Number of distinct producible sentences.
  std::uint64_t sentence_space() const;
  /// Accepts exactly the sentences the production can emit.
  bool parses(const std::vector<std::string>& words) const;
};

struct TSLMOptions {
  std::size_t train_size = 200;
  std::size_t test_size = 50;
};

/// Distinct sentences sampled from the grammar, split train/test without
/// overlap. Deterministic per seed.
SentenceDataset generate_tslm(std::uint64_t seed, const GrammarSpec& grammar = GrammarSpec::defaults(),
                              const TSLMOptions& options = {});

/// Two-topic corpus of 4-word `subject verb adjective object` sentences whose
/// label is the topic of verb and object (stand-in for user-supplied MC data).
SentenceDataset generate_topic_cls(std::uint64_t seed, std::size_t train_size = 70,
                                   std::size_t test_size = 30);

std::vector<std::vector<std::string>> read_lm_file(const std::filesystem::path& path);
void read_cls_file(const std::filesystem::path& path, std::vector<std::vector<std::string>>& sentences,
                   std::vector<int>& labels);

/// LM corpus from one-sentence-per-line files; vocab is the sorted union.
SentenceDataset load_lm_corpus(const std::filesystem::path& train_path,
                               const std::filesystem::path& test_path);
/// CLS corpus from `label<TAB>sentence` files.
SentenceDataset load_cls_corpus(const std::filesystem::path& train_path,
                                const std::filesystem::path& test_path);
/// Loads `<dir>/train.txt` and `<dir>/test.txt` for `task`.
SentenceDataset load_dataset_dir(const std::filesystem::path& dir, Task task);

SentenceDataset derive_lm_from_cls(const SentenceDataset& cls);

void save_lm_file(const std::filesystem::path& path, const std::vector<Sentence>& sentences,
                  const Vocabulary& vocab);
void save_cls_file(const std::filesystem::path& path, const std::vector<Sentence>& sentences,
                   const std::vector<int>& labels, const Vocabulary& vocab);
/// Writes train.txt / test.txt in the format matching the dataset's task.
void save_dataset_dir(const std::filesystem::path& dir, const SentenceDataset& data);

}  // namespace hqlm
