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

#include "hqlm/data.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <unordered_set>

#include "hqlm/errors.hpp"
#include "hqlm/simcore.hpp"

namespace hqlm {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw VocabError("empty token in vocabulary");
    if (!lookup_.emplace(tokens_[i], i).second) {
      throw VocabError("duplicate token '" + tokens_[i] + "' in vocabulary");
    }
  }
}

Vocabulary Vocabulary::from_corpus(const std::vector<std::vector<std::string>>& sentences) {
  std::set<std::string> unique;
  for (const auto& s : sentences) unique.insert(s.begin(), s.end());
  return Vocabulary(std::vector<std::string>(unique.begin(), unique.end()));
}

const std::string& Vocabulary::token(std::size_t index) const {
  if (index >= tokens_.size()) {
    throw VocabError("token index " + std::to_string(index) + " outside vocabulary of " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[index];
}

std::size_t Vocabulary::index(const std::string& token) const {
  auto it = lookup_.find(token);
  if (it == lookup_.end()) throw VocabError("unknown token '" + token + "'");
  return it->second;
}

Sentence Vocabulary::encode(const std::vector<std::string>& words) const {
  Sentence s;
  s.reserve(words.size());
  for (const auto& w : words) s.push_back(index(w));
  return s;
}

std::vector<std::string> Vocabulary::decode(const Sentence& sentence) const {
  std::vector<std::string> words;
  words.reserve(sentence.size());
  for (auto i : sentence) words.push_back(token(i));
  return words;
}

// ---------------------------------------------------------------------------
// Grammar

GrammarSpec GrammarSpec::defaults() {
  GrammarSpec g;
  // Subjects are never prediction targets, so they carry the bulk of the word
  // budget; the predicted categories stay small.
  g.subjects = {"man", "woman", "boy", "girl", "child", "teacher", "farmer", "doctor", "student", "cat"};
  g.verbs = {"sees", "likes", "finds"};
  g.adjectives = {"small", "big", "red"};
  g.objects = {"dog", "ball", "book"};
  g.prepositions = {"on", "near"};
  g.locations = {"table", "floor", "street"};
  return g;
}

std::size_t GrammarSpec::word_count() const {
  return subjects.size() + verbs.size() + adjectives.size() + objects.size() +
         prepositions.size() + locations.size();
}

void GrammarSpec::validate() const {
  const std::vector<const std::vector<std::string>*> cats = {&subjects, &verbs, &adjectives,
                                                             &objects, &prepositions, &locations};
  std::unordered_set<std::string> seen;
  for (const auto* c : cats) {
    if (c->empty()) throw ConfigError("grammar category is empty");
    for (const auto& w : *c) {
      if (w.empty() || w.find_first_of(" \t\n") != std::string::npos) {
        throw ConfigError("grammar word '" + w + "' is empty or contains whitespace");
      }
      if (!seen.insert(w).second) throw ConfigError("grammar word '" + w + "' in two categories");
    }
  }
  for (double p : {adjective_probability, prep_phrase_probability}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("optional-part probability outside [0, 1]");
  }
}

std::uint64_t GrammarSpec::sentence_space() const {
  auto optional_factor = [](double p, std::uint64_t choices) -> std::uint64_t {
    return (p < 1.0 ? 1 : 0) + (p > 0.0 ? choices : 0);
  };
  return std::uint64_t{subjects.size()} * verbs.size() * objects.size() *
         optional_factor(adjective_probability, adjectives.size()) *
         optional_factor(prep_phrase_probability,
                         std::uint64_t{prepositions.size()} * locations.size());
}

static bool in(const std::vector<std::string>& cat, const std::string& w) {
  return std::find(cat.begin(), cat.end(), w) != cat.end();
}

bool GrammarSpec::parses(const std::vector<std::string>& words) const {
  std::size_t i = 0;
  auto take = [&](const std::vector<std::string>& cat) {
    if (i < words.size() && in(cat, words[i])) {
      ++i;
      return true;
    }
    return false;
  };
  if (!take(subjects) || !take(verbs)) return false;
  if (adjective_probability > 0.0) take(adjectives);
  if (!take(objects)) return false;
  if (i == words.size()) return prep_phrase_probability < 1.0;
  if (prep_phrase_probability <= 0.0) return false;
  return take(prepositions) && take(locations) && i == words.size();
}

template <typename T>
static const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(v.size()))];
}

SentenceDataset generate_tslm(std::uint64_t seed, const GrammarSpec& grammar,
                              const TSLMOptions& options) {
  grammar.validate();
  const std::size_t wanted = options.train_size + options.test_size;
  if (grammar.sentence_space() < wanted) {
    throw CapacityError("grammar produces " + std::to_string(grammar.sentence_space()) +
                        " distinct sentences, " + std::to_string(wanted) + " requested");
  }
  Rng rng(seed);
  std::set<std::vector<std::string>> seen;
  std::vector<std::vector<std::string>> drawn;
  while (drawn.size() < wanted) {
    std::vector<std::string> s{pick(grammar.subjects, rng), pick(grammar.verbs, rng)};
    if (uniform01(rng) < grammar.adjective_probability) s.push_back(pick(grammar.adjectives, rng));
    s.push_back(pick(grammar.objects, rng));
    if (uniform01(rng) < grammar.prep_phrase_probability) {
      s.push_back(pick(grammar.prepositions, rng));
      s.push_back(pick(grammar.locations, rng));
    }
    if (seen.insert(s).second) drawn.push_back(std::move(s));
  }
  std::vector<std::string> words;
  for (const auto* c : {&grammar.subjects, &grammar.verbs, &grammar.adjectives, &grammar.objects,
                        &grammar.prepositions, &grammar.locations}) {
    words.insert(words.end(), c->begin(), c->end());
  }
  std::sort(words.begin(), words.end());
  SentenceDataset out;
  out.task = Task::LM;
  out.vocab = Vocabulary(std::move(words));
  for (std::size_t i = 0; i < drawn.size(); ++i) {
    (i < options.train_size ? out.train : out.test).push_back(out.vocab.encode(drawn[i]));
  }
  return out;
}

SentenceDataset generate_topic_cls(std::uint64_t seed, std::size_t train_size, std::size_t test_size) {
  const std::vector<std::string> subjects = {"man", "woman", "person", "student"};
  const std::vector<std::string> adjectives = {"skillful", "useful", "new", "simple"};
  // Index 0: programming, index 1: cooking.
  const std::vector<std::string> verbs[2] = {{"debugs", "writes", "runs"},
                                             {"cooks", "prepares", "bakes"}};
  const std::vector<std::string> objects[2] = {{"program", "code", "software", "application"},
                                               {"dinner", "sauce", "meal", "soup"}};
  const std::size_t wanted = train_size + test_size;
  const std::size_t per_class_space = subjects.size() * 3 * adjectives.size() * 4;
  if (wanted > 2 * per_class_space) throw CapacityError("topic corpus too small for request");
  Rng rng(seed);
  std::set<std::vector<std::string>> seen;
  std::vector<std::pair<std::vector<std::string>, int>> drawn;
  while (drawn.size() < wanted) {
    const int label = static_cast<int>(drawn.size() % 2);
    std::vector<std::string> s{pick(subjects, rng), pick(verbs[label], rng), pick(adjectives, rng),
                               pick(objects[label], rng)};
    if (seen.insert(s).second) drawn.emplace_back(std::move(s), label);
  }
  for (std::size_t i = drawn.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(drawn[i - 1], drawn[j]);
  }
  std::vector<std::vector<std::string>> all;
  for (const auto& d : drawn) all.push_back(d.first);
  SentenceDataset out;
  out.task = Task::CLS;
  out.vocab = Vocabulary::from_corpus(all);
  for (std::size_t i = 0; i < drawn.size(); ++i) {
    const bool train = i < train_size;
    (train ? out.train : out.test).push_back(out.vocab.encode(drawn[i].first));
    (train ? out.train_labels : out.test_labels).push_back(drawn[i].second);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

static std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

static std::vector<std::string> split_tokens(const std::string& text, const std::string& source,
                                             std::size_t line) {
  if (text.find_first_not_of(" \t") == std::string::npos) {
    throw FormatError(source, line, "empty sentence");
  }
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find(' ', start);
    std::string tok = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (tok.empty() || tok.find('\t') != std::string::npos) {
      throw FormatError(source, line, "tokens must be separated by single spaces");
    }
    out.push_back(std::move(tok));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

static bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::vector<std::vector<std::string>> read_lm_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string source = path.string();
  std::vector<std::vector<std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (next_line(in, line)) out.push_back(split_tokens(line, source, ++lineno));
  if (out.empty()) throw FormatError(source, 0, "empty corpus file");
  return out;
}

void read_cls_file(const std::filesystem::path& path, std::vector<std::vector<std::string>>& sentences,
                   std::vector<int>& labels) {
  auto in = open_input(path);
  const std::string source = path.string();
  std::string line;
  std::size_t lineno = 0;
  sentences.clear();
  labels.clear();
  while (next_line(in, line)) {
    ++lineno;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(source, lineno, "missing tab after label");
    const std::string label = line.substr(0, tab);
    if (label != "0" && label != "1") {
      throw FormatError(source, lineno, "label must be 0 or 1, got '" + label + "'");
    }
    labels.push_back(label[0] - '0');
    sentences.push_back(split_tokens(line.substr(tab + 1), source, lineno));
  }
  if (sentences.empty()) throw FormatError(source, 0, "empty corpus file");
}

SentenceDataset load_lm_corpus(const std::filesystem::path& train_path,
                               const std::filesystem::path& test_path) {
  const auto train = read_lm_file(train_path);
  const auto test = read_lm_file(test_path);
  auto all = train;
  all.insert(all.end(), test.begin(), test.end());
  SentenceDataset out;
  out.task = Task::LM;
  out.vocab = Vocabulary::from_corpus(all);
  for (const auto& s : train) out.train.push_back(out.vocab.encode(s));
  for (const auto& s : test) out.test.push_back(out.vocab.encode(s));
  return out;
}

SentenceDataset load_cls_corpus(const std::filesystem::path& train_path,
                                const std::filesystem::path& test_path) {
  std::vector<std::vector<std::string>> train, test;
  SentenceDataset out;
  out.task = Task::CLS;
  read_cls_file(train_path, train, out.train_labels);
  read_cls_file(test_path, test, out.test_labels);
  auto all = train;
  all.insert(all.end(), test.begin(), test.end());
  out.vocab = Vocabulary::from_corpus(all);
  for (const auto& s : train) out.train.push_back(out.vocab.encode(s));
  for (const auto& s : test) out.test.push_back(out.vocab.encode(s));
  return out;
}

SentenceDataset load_dataset_dir(const std::filesystem::path& dir, Task task) {
  return task == Task::LM ? load_lm_corpus(dir / "train.txt", dir / "test.txt")
                          : load_cls_corpus(dir / "train.txt", dir / "test.txt");
}

SentenceDataset derive_lm_from_cls(const SentenceDataset& cls) {
  SentenceDataset out;
  out.task = Task::LM;
  out.vocab = cls.vocab;
  out.train = cls.train;
  out.test = cls.test;
  return out;
}

static std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

static void write_sentence(std::ostream& out, const Sentence& s, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out << ' ';
    out << vocab.token(s[i]);
  }
  out << '\n';
}

void save_lm_file(const std::filesystem::path& path, const std::vector<Sentence>& sentences,
                  const Vocabulary& vocab) {
  auto out = open_output(path);
  for (const auto& s : sentences) write_sentence(out, s, vocab);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void save_cls_file(const std::filesystem::path& path, const std::vector<Sentence>& sentences,
                   const std::vector<int>& labels, const Vocabulary& vocab) {
  if (labels.size() != sentences.size()) throw ShapeError("label count differs from sentence count");
  auto out = open_output(path);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    out << labels[i] << '\t';
    write_sentence(out, sentences[i], vocab);
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void save_dataset_dir(const std::filesystem::path& dir, const SentenceDataset& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  if (data.task == Task::LM) {
    save_lm_file(dir / "train.txt", data.train, data.vocab);
    save_lm_file(dir / "test.txt", data.test, data.vocab);
  } else {
    save_cls_file(dir / "train.txt", data.train, data.train_labels, data.vocab);
    save_cls_file(dir / "test.txt", data.test, data.test_labels, data.vocab);
  }
}

}  // namespace hqlm
