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

#include "hqlm/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "hqlm/errors.hpp"
#include "hqlm/eval.hpp"
#include "hqlm/experiment.hpp"
#include "hqlm/hexmap.hpp"

namespace hqlm {
namespace {

namespace fs = std::filesystem;

struct RunOptions {
  std::string preset;
  std::string config_file;
  std::string task;
  std::string arch;
  std::string seeds;
  std::string shots;
  std::optional<std::size_t> emb_size;
  std::optional<std::size_t> seq_len;
  std::string kernels;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> data_seed;
  std::string out_dir;
  std::string dataset_dir;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--preset", o.preset, "Hyperparameter preset, e.g. ts-lm-qrnn");
  cmd->add_option("--config", o.config_file, "key=value config file");
  cmd->add_option("--task", o.task, "MC, RP, MC-LM or TS-LM");
  cmd->add_option("--arch", o.arch, "QRNN or QCNN");
  cmd->add_option("--seeds,--seed", o.seeds, "Comma-separated seed list");
  cmd->add_option("--shots", o.shots, "Shot budget, or 'exact'");
  cmd->add_option("--emb-size", o.emb_size, "Qubits per embedding register");
  cmd->add_option("--seq-len", o.seq_len, "Sequence length / QCNN window");
  cmd->add_option("--kernels", o.kernels, "QCNN pooling kernels, e.g. 3,3");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--threads", o.threads, "Worker threads for SPSA evaluations");
  cmd->add_option("--data-seed", o.data_seed, "Seed for generated corpora");
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
  cmd->add_option("--dataset-dir", o.dataset_dir, "Directory with train.txt and test.txt");
}

std::string default_out_root() {
  const char* env = std::getenv("HQLM_OUT_ROOT");
  return env && *env ? env : "runs";
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

Arch parse_arch(const std::string& s) {
  const auto l = lower(s);
  if (l == "qrnn") return Arch::QRNN;
  if (l == "qcnn") return Arch::QCNN;
  throw ConfigError("arch: expected QRNN or QCNN, got '" + s + "'");
}

ExperimentConfig resolve_config(const RunOptions& o) {
  std::map<std::string, std::string> kv;
  if (!o.config_file.empty()) kv = load_kv(o.config_file);
  Benchmark benchmark = Benchmark::TSLM;
  Arch arch = Arch::QRNN;
  if (kv.contains("task")) benchmark = parse_benchmark(kv["task"]);
  if (kv.contains("arch")) arch = parse_arch(kv["arch"]);
  if (!o.task.empty()) benchmark = parse_benchmark(o.task);
  if (!o.arch.empty()) arch = parse_arch(o.arch);
  ExperimentConfig base = o.preset.empty() ? preset(benchmark, arch) : preset(o.preset);
  if (o.preset.empty() && !kv.contains("task") && o.task.empty()) base.benchmark = benchmark;
  // Flags override the file, which overrides the preset.
  if (!o.task.empty()) kv["task"] = o.task;
  if (!o.arch.empty()) kv["arch"] = o.arch;
  if (!o.seeds.empty()) kv["seeds"] = o.seeds;
  if (!o.shots.empty()) kv["shots"] = o.shots;
  if (o.emb_size) kv["emb_size"] = std::to_string(*o.emb_size);
  if (o.seq_len) kv["seq_len"] = std::to_string(*o.seq_len);
  if (!o.kernels.empty()) kv["kernels"] = o.kernels;
  if (o.epochs) kv["epochs"] = std::to_string(*o.epochs);
  if (o.threads) kv["threads"] = std::to_string(*o.threads);
  if (o.data_seed) kv["data_seed"] = std::to_string(*o.data_seed);
  if (!o.dataset_dir.empty()) kv["dataset_dir"] = o.dataset_dir;
  if (!o.out_dir.empty()) kv["out_dir"] = o.out_dir;
  ExperimentConfig c = ExperimentConfig::from_kv(kv, base);
  if (c.out_dir.empty()) {
    c.out_dir = fs::path(default_out_root()) /
                (lower(benchmark_name(c.benchmark)) + "-" + lower(std::string(arch_name(c.model.arch))));
  }
  c.validate();
  return c;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write '" + path.string() + "'");
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const std::string& task, std::uint64_t seed, std::string out_dir, std::ostream& out) {
  const auto t = lower(task);
  SentenceDataset data;
  std::string name;
  if (t == "ts-lm" || t == "tslm") {
    data = generate_tslm(seed);
    name = "ts-lm";
  } else if (t == "topic-cls") {
    data = generate_topic_cls(seed);
    name = "topic-cls";
  } else if (t == "mc" || t == "rp" || t == "mc-lm") {
    throw ArgumentError("the " + task +
                        " corpus is user-supplied; see the README section on data formats "
                        "(train.txt/test.txt with label<TAB>sentence lines)");
  } else {
    throw ArgumentError("gen-data supports TS-LM and topic-cls, got '" + task + "'");
  }
  if (out_dir.empty()) out_dir = (fs::path(default_out_root()) / "data" / (name + "-seed" + std::to_string(seed))).string();
  make_dir(out_dir);
  save_dataset_dir(out_dir, data);
  out << "wrote " << data.train.size() << " train / " << data.test.size() << " test sentences (V="
      << data.vocab.size() << ") to " << out_dir << '\n';
  return kExitOk;
}

struct SeedResult {
  std::uint64_t seed;
  EvalReport train;
  EvalReport test;
};

std::vector<SeedResult> run_training(const ExperimentConfig& c, const SentenceDataset& data, const fs::path& dir,
                                     std::ostream& out, bool verbose, std::vector<RunMetrics>* all = nullptr) {
  make_dir(dir);
  {
    std::ostringstream echo;
    write_kv(echo, c.to_kv());
    write_file(dir / "config.txt", echo.str());
  }
  std::vector<SeedResult> results;
  for (auto seed : c.seeds) {
    HybridModel model(c.model, data.vocab);
    model.initialize(seed);
    TrainConfig tc = c.train;
    tc.seed = seed;
    const auto metrics = fit(model, data, tc, [&](const EpochRecord& r) {
      if (verbose && r.split == "test") {
        out << "seed " << seed << " epoch " << r.epoch << " test loss " << fmt("%.4f", r.loss) << " ppl "
            << fmt("%.3f", r.perplexity) << " acc " << fmt("%.4f", r.accuracy) << '\n';
        out.flush();
      }
    });
    save_metrics_csv(dir / ("metrics_seed" + std::to_string(seed) + ".csv"), metrics);
    save_checkpoint(dir / ("checkpoint_seed" + std::to_string(seed) + ".ckpt"), model);
    const bool exact = c.model.estimation.is_exact();
    Rng r1(derive_seed(seed, 0xf1a1)), r2(derive_seed(seed, 0xf1a2));
    SeedResult res{seed, evaluate(model, data, false, exact ? nullptr : &r1), {}};
    res.test = data.test.empty() ? res.train : evaluate(model, data, true, exact ? nullptr : &r2);
    results.push_back(res);
    if (all) all->push_back(metrics);
  }
  return results;
}

int cmd_train(const RunOptions& o, std::ostream& out, std::ostream& err) {
  const auto c = resolve_config(o);
  std::string note;
  const auto data = resolve_dataset(c, &note);
  if (!note.empty()) err << "note: " << note << '\n';
  const auto results = run_training(c, data, c.out_dir, out, true);

  std::ostringstream csv;
  csv << "seed,train_loss,train_ppl,test_loss,test_ppl,test_acc\n";
  std::vector<double> cols[5];
  for (const auto& r : results) {
    const double v[5] = {r.train.mean_loss, r.train.perplexity, r.test.mean_loss, r.test.perplexity,
                         r.test.headline_accuracy()};
    csv << r.seed;
    for (int k = 0; k < 5; ++k) {
      csv << ',' << fmt("%.12g", v[k]);
      cols[k].push_back(v[k]);
    }
    csv << '\n';
  }
  for (int row = 0; row < 2; ++row) {
    csv << (row == 0 ? "mean" : "stdev");
    for (auto& col : cols) {
      const auto [m, s] = mean_stdev(col);
      csv << ',' << fmt("%.12g", row == 0 ? m : s);
    }
    csv << '\n';
  }
  write_file(c.out_dir / "summary.csv", csv.str());

  std::vector<TableRow> rows;
  for (const auto& r : results) rows.push_back({"seed " + std::to_string(r.seed), r.train, r.test});
  render_table(out, rows);
  const auto [pm, ps] = mean_stdev(cols[3]);
  const auto [am, as] = mean_stdev(cols[4]);
  out << std::string(arch_name(c.model.arch)) << ' ' << benchmark_name(c.benchmark) << " over " << results.size()
      << " seeds: test PPL " << fmt("%.2f", pm) << " +- " << fmt("%.2f", ps) << ", acc " << fmt("%.2f", 100 * am)
      << " +- " << fmt("%.2f", 100 * as) << " %\n";
  out << "outputs in " << c.out_dir.string() << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const RunOptions& o, std::ostream& out, std::ostream& err) {
  const HybridModel model = load_checkpoint(checkpoint);
  ExperimentConfig c;
  c.benchmark = model.config().task == Task::LM ? Benchmark::TSLM : Benchmark::MC;
  if (!o.task.empty()) c.benchmark = parse_benchmark(o.task);
  c.dataset_dir = o.dataset_dir;
  c.data_seed = o.data_seed.value_or(0);
  std::string note;
  const auto data = resolve_dataset(c, &note);
  if (!note.empty()) err << "note: " << note << '\n';
  check_compatible(model, data);
  const bool exact = model.config().estimation.is_exact();
  Rng r1(0xe1), r2(0xe2);
  const auto tr = evaluate(model, data, false, exact ? nullptr : &r1);
  const auto ts = evaluate(model, data, true, exact ? nullptr : &r2);
  render_table(out, {{std::string(arch_name(model.config().arch)), tr, ts}});
  out << eval_csv_header() << '\n' << eval_csv_row(tr) << '\n' << eval_csv_row(ts) << '\n';
  return kExitOk;
}

int cmd_ablate(const std::string& sweep, const RunOptions& o, std::ostream& out, std::ostream& err) {
  const auto spec = AblationSpec::parse(sweep);
  const auto base = resolve_config(o);
  std::ostringstream merged;
  merged << "setting,epoch,train_loss\n";
  for (const auto& value : spec.values) {
    ExperimentConfig c = spec.apply(base, value);
    c.validate();
    std::string note;
    const auto data = resolve_dataset(c, &note);
    if (!note.empty()) err << "note: " << note << '\n';
    const std::string setting = spec.variable + "=" + value;
    std::vector<RunMetrics> metrics;
    run_training(c, data, c.out_dir / (spec.variable + "_" + value), out, false, &metrics);
    // Train loss per epoch, averaged over seeds.
    for (std::size_t e = 1; e <= c.train.epochs; ++e) {
      double total = 0.0;
      for (const auto& m : metrics) {
        for (const auto& r : m.records) {
          if (r.epoch == e && r.split == "train") total += r.loss;
        }
      }
      merged << setting << ',' << e << ',' << fmt("%.12g", total / static_cast<double>(metrics.size())) << '\n';
    }
    out << setting << " done\n";
  }
  make_dir(base.out_dir);
  write_file(base.out_dir / "ablation.csv", merged.str());
  out << "merged curves in " << (base.out_dir / "ablation.csv").string() << '\n';
  return kExitOk;
}

ParamCircuit architecture_circuit(const HQLMConfig& m) {
  return m.arch == Arch::QRNN ? build_qrnn_circuit(m.qrnn(), m.seq_len) : build_qcnn_circuit(m.qcnn());
}

int cmd_stats(const RunOptions& o, std::size_t vocab_size, const std::string& dump, std::ostream& out) {
  const auto c = resolve_config(o);
  const auto circuit = architecture_circuit(c.model);
  const auto s = circuit_stats(circuit);
  const auto p = count_params(c.model, vocab_size);
  out << "arch            " << arch_name(c.model.arch) << " (E=" << c.model.emb_size << ", T=" << c.model.seq_len;
  if (c.model.arch == Arch::QCNN) out << ", kernels " << format_size_list(c.model.kernels);
  out << ")\n";
  out << "qubits          " << s.num_qubits << '\n';
  out << "total gates     " << s.total_gates << '\n';
  out << "2Q gates        " << s.two_qubit_gates << '\n';
  out << "2Q depth        " << s.two_qubit_depth << '\n';
  out << "quantum params  " << p.quantum_reported << " (V=" << vocab_size << ", PAD row excluded; " << p.quantum
      << " trained)\n";
  out << "classical params " << p.classical << '\n';
  if (c.model.arch == Arch::QRNN && c.model.emb_size == 3 && c.model.seq_len == 6) {
    const double rel = (static_cast<double>(s.total_gates) - 106.0) / 106.0;
    out << "note: reference total for this configuration is 106 gates; this count differs by "
        << fmt("%+.1f", 100 * rel) << "% (accepted within +-10%; 2Q count and depth are exact)\n";
  }
  if (c.model.arch == Arch::QCNN && c.model.emb_size == 3) {
    out << "note: reference 2Q depth is 12 (informational, not enforced)\n";
  }
  if (!dump.empty()) {
    std::ofstream f(dump);
    if (!f) throw IoError("cannot write '" + dump + "'");
    write_circuit_dump(f, circuit);
  }
  return kExitOk;
}

int cmd_validate_layout(const RunOptions& o, const std::string& layout_file, const std::string& graph_file,
                        std::ostream& out) {
  const auto c = resolve_config(o);
  const auto circuit = architecture_circuit(c.model);
  const auto graph = load_graph(graph_file);
  const auto layout = load_layout(layout_file);
  const auto report = validate_layout(circuit, layout, graph);
  const auto& gates = circuit.gates();
  auto list = [&](const LayoutReport& r, const char* why) {
    for (const auto& v : r.violations) {
      out << "  gate " << v.gate_index << ' ' << gate_name(gates[v.gate_index].kind) << " logical ("
          << v.logical.first << ',' << v.logical.second << ") physical (" << v.physical.first << ','
          << v.physical.second << ") " << why << '\n';
    }
  };
  out << "adjacency violations: " << report.violations.size() << '\n';
  list(report, "not adjacent");
  bool ok = report.ok;
  if (c.model.arch == Arch::QRNN && layout.has_tag(RegisterTag::Embedding)) {
    const auto indep = embedding_register_independence_check(circuit, layout);
    out << "embedding-register couplings: " << indep.violations.size() << '\n';
    list(indep, "inside embedding register");
    ok = ok && indep.ok;
  }
  out << (ok ? "OK" : "FAIL") << '\n';
  return ok ? kExitOk : kExitInvalid;
}

int cmd_export_heavy_hex(std::size_t rows, std::size_t cols, const std::string& path, std::ostream& out) {
  const auto g = build_heavy_hex(rows, cols);
  std::ostringstream text;
  text << "# heavy-hex " << rows << "x" << cols << " cells; node: x y (doubled lattice coordinates)\n";
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    text << "# " << i << ": " << g.positions()[i].x << ' ' << g.positions()[i].y << '\n';
  }
  write_graph(text, g);
  if (path.empty()) {
    out << text.str();
  } else {
    write_file(path, text.str());
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid quantum language models: training, evaluation and circuit tools", "hqlm"};
  app.require_subcommand(1);

  std::string gen_task = "TS-LM";
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Generate a corpus (TS-LM grammar or topic-cls stand-in)");
  gen->add_option("--task", gen_task, "TS-LM or topic-cls");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out-dir", gen_out, "Output directory");

  RunOptions train_opts, eval_opts, ablate_opts, stats_opts, layout_opts;
  auto* train = app.add_subcommand("train", "Train one model per seed and summarize");
  add_run_options(train, train_opts);

  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--task", eval_opts.task, "Benchmark the dataset belongs to");
  eval->add_option("--dataset-dir", eval_opts.dataset_dir, "Directory with train.txt and test.txt");
  eval->add_option("--data-seed", eval_opts.data_seed, "Seed for a generated corpus");

  std::string sweep;
  auto* ablate = app.add_subcommand("ablate", "Sweep shots or emb_size and write loss curves");
  add_run_options(ablate, ablate_opts);
  ablate->add_option("--sweep", sweep, "variable=v1,v2,... with variable shots or emb_size")->required();

  std::size_t vocab_size = 24;
  std::string dump;
  auto* stats = app.add_subcommand("stats", "Circuit statistics and parameter counts");
  add_run_options(stats, stats_opts);
  stats->add_option("--vocab-size", vocab_size, "Vocabulary size for parameter counts");
  stats->add_option("--dump", dump, "Write the circuit in dump format");

  std::string layout_file, graph_file;
  auto* layout = app.add_subcommand("validate-layout", "Check a physical layout against a coupling graph");
  add_run_options(layout, layout_opts);
  layout->add_option("--layout", layout_file, "Layout file")->required();
  layout->add_option("--graph", graph_file, "Graph (edge list) file")->required();

  std::size_t hh_rows = 1, hh_cols = 1;
  std::string hh_out;
  auto* hex = app.add_subcommand("export-heavy-hex", "Write a heavy-hex coupling graph");
  hex->add_option("--rows", hh_rows, "Cell rows");
  hex->add_option("--cols", hh_cols, "Cell columns");
  hex->add_option("--out", hh_out, "Output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_task, gen_seed, gen_out, out);
    if (train->parsed()) return cmd_train(train_opts, out, err);
    if (eval->parsed()) return cmd_eval(checkpoint, eval_opts, out, err);
    if (ablate->parsed()) return cmd_ablate(sweep, ablate_opts, out, err);
    if (stats->parsed()) return cmd_stats(stats_opts, vocab_size, dump, out);
    if (layout->parsed()) return cmd_validate_layout(layout_opts, layout_file, graph_file, out);
    if (hex->parsed()) return cmd_export_heavy_hex(hh_rows, hh_cols, hh_out, out);
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitUsage;
}

}  // namespace hqlm
