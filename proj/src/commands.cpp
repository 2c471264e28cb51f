#include "muxlink/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"

namespace muxlink {

AttackOutcome run_attack(const Netlist& locked, const AttackConfig& cfg, std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  if (locked.key_size() == 0) throw Error("netlist has no key inputs");

  CircuitGraph graph = build_graph(locked);
  auto groups = group_localities(graph.key_gates());

  std::mt19937_64 seeds(cfg.seed);
  const std::uint64_t sample_seed = seeds();
  const std::uint64_t assemble_seed = seeds();

  auto split = sample_links(graph, cfg.cap, cfg.validation_fraction, sample_seed);
  auto ds = assemble(graph, split, cfg.hops, assemble_seed, cfg.threads);
  if (log) *log << dataset_report(ds);

  Hyperparams hp;
  hp.epochs = cfg.epochs;
  hp.learning_rate = cfg.learning_rate;
  hp.batch_size = cfg.batch_size;
  hp.seed = cfg.seed;
  hp.threads = cfg.threads;
  TrainResult training = train(ds, hp, log);
  if (log)
    *log << "best epoch " << training.best_epoch << " validation accuracy "
         << training.best_validation_accuracy << "\n";

  ScoreMap scores = score_links(training.model, graph, cfg.hops, cfg.threads);
  PredictedKey key = decode_key(groups, graph, scores, cfg.threshold, locked.key_size());
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return AttackOutcome{std::move(graph), std::move(groups), std::move(scores), std::move(key),
                       std::move(training), ds.train.size(), ds.validation.size(), seconds};
}

PredictedKey redecode(const AttackOutcome& outcome, double threshold) {
  return decode_key(outcome.groups, outcome.graph, outcome.scores, threshold, outcome.key.size());
}

namespace {

// Writes through a sibling temp file and renames, so readers never see a partial file.
class AtomicFile {
 public:
  explicit AtomicFile(std::string path) : path_(std::move(path)), tmp_(path_ + ".tmp") {
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot write '" + path_ + "'");
  }
  ~AtomicFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }
  std::ostream& stream() { return out_; }
  void commit() {
    out_.close();
    if (!out_) throw Error("failed writing '" + path_ + "'");
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
  }

 private:
  std::string path_, tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void cmd_gen(std::size_t gates, std::size_t pis, std::size_t pos, GenMode mode, std::uint64_t seed,
             const std::string& out_path) {
  auto n = generate_netlist(gates, pis, pos, mode, seed);
  AtomicFile f(out_path);
  write_bench(n, f.stream());
  f.commit();
}

LockResult cmd_lock(const std::string& bench_path, std::size_t key_size, const std::string& family,
                    std::uint64_t seed, const std::string& out_path) {
  auto n = read_bench_file(bench_path);
  LockResult r = [&] {
    if (family == "dmux") return lock_dmux(n, key_size, seed);
    if (family == "symmetric") return lock_symmetric(n, key_size, seed);
    throw Error("unknown lock family '" + family + "' (expected dmux or symmetric)");
  }();
  AtomicFile bench(out_path), key(out_path + ".key"), manifest(out_path + ".manifest");
  write_bench(r.locked, bench.stream());
  key.stream() << to_string(r.key) << "\n";
  write_manifest(r.localities, manifest.stream());
  bench.commit();
  key.commit();
  manifest.commit();
  return r;
}

AttackOutcome cmd_attack(const std::string& locked_path, const AttackConfig& cfg,
                         const std::string& out_path, std::ostream& report, std::ostream* log) {
  auto locked = read_bench_file(locked_path);
  auto outcome = run_attack(locked, cfg, log);

  AtomicFile key(out_path), scores(out_path + ".scores");
  key.stream() << to_string(outcome.key) << "\n";
  const auto& names = outcome.graph.names();
  for (const auto& [link, l] : outcome.scores)
    scores.stream() << names[link.first] << " " << names[link.second] << " "
                    << std::setprecision(17) << l << "\n";
  scores.commit();
  key.commit();

  for (std::size_t i = 0; i < outcome.key.size(); ++i) {
    const auto& d = outcome.key.decisions[i];
    report << "keyinput" << i << " = " << to_char(d.value) << "  " << to_string(d.kind) << "  l=(";
    for (std::size_t j = 0; j < d.likelihoods.size(); ++j)
      report << (j ? "," : "") << fmt(d.likelihoods[j]);
    report << ") d1=" << fmt(d.delta1);
    if (d.kind != GroupKind::Single) report << " d2=" << fmt(d.delta2);
    if (!d.note.empty()) report << "  [" << d.note << "]";
    report << "\n";
  }
  report << "key " << to_string(outcome.key) << "\n"
         << "runtime " << fmt(outcome.seconds) << " s\n";
  return outcome;
}

MetricsReport cmd_eval(const std::string& predicted_path, const std::string& key_path,
                       const std::optional<std::string>& original_path,
                       const std::optional<std::string>& locked_path, std::size_t patterns,
                       std::uint64_t seed) {
  auto predicted = read_predicted_key_file(predicted_path);
  auto truth = read_key_file(key_path);
  auto m = compute_metrics(predicted, truth);
  if (original_path.has_value() != locked_path.has_value())
    throw Error("HD needs both --original and --locked");
  if (original_path)
    m.hd = hamming_distance(read_bench_file(*original_path), read_bench_file(*locked_path), predicted,
                            patterns, seed);
  return m;
}

void cmd_sim(const std::string& bench_path, const std::optional<std::string>& key_path,
             const std::optional<std::string>& vectors_path, std::size_t patterns, std::uint64_t seed,
             std::ostream& out) {
  auto n = read_bench_file(bench_path);
  std::optional<KeyVector> key;
  if (key_path) {
    key = read_key_file(*key_path);
    if (key->size() != n.key_size())
      throw Error("key has " + std::to_string(key->size()) + " bits, netlist has " +
                  std::to_string(n.key_size()) + " key inputs");
  }
  // Columns the user supplies: every input, or only the data inputs when a key is given.
  std::vector<std::size_t> free_slots;
  for (std::size_t i = 0; i < n.inputs().size(); ++i)
    if (!key || !key_index_of(n.inputs()[i])) free_slots.push_back(i);

  std::vector<std::string> rows;
  if (vectors_path) {
    std::ifstream in(*vectors_path);
    if (!in) throw Error("cannot open '" + *vectors_path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
      std::string bits;
      for (char ch : line)
        if (ch == '0' || ch == '1') bits.push_back(ch);
        else if (!std::isspace(static_cast<unsigned char>(ch)))
          throw ParseError(lineno, std::string("invalid vector character '") + ch + "'");
      if (bits.empty()) continue;
      if (bits.size() != free_slots.size())
        throw ParseError(lineno, "vector has " + std::to_string(bits.size()) + " bits, expected " +
                                     std::to_string(free_slots.size()));
      rows.push_back(bits);
    }
  } else {
    std::mt19937_64 rng(seed);
    for (std::size_t p = 0; p < patterns; ++p) {
      std::string bits;
      for (std::size_t i = 0; i < free_slots.size(); ++i) bits.push_back((rng() & 1) ? '1' : '0');
      rows.push_back(bits);
    }
  }

  Simulator sim(n);
  std::vector<std::uint64_t> in(n.inputs().size()), res(n.outputs().size());
  for (std::size_t start = 0; start < rows.size(); start += 64) {
    const std::size_t count = std::min<std::size_t>(64, rows.size() - start);
    std::fill(in.begin(), in.end(), 0);
    if (key)
      for (std::size_t i = 0; i < n.inputs().size(); ++i)
        if (auto k = key_index_of(n.inputs()[i]); k && key->bits[static_cast<std::size_t>(*k)])
          in[i] = ~0ULL;
    for (std::size_t b = 0; b < count; ++b)
      for (std::size_t c = 0; c < free_slots.size(); ++c)
        if (rows[start + b][c] == '1') in[free_slots[c]] |= 1ULL << b;
    sim.run(in, res);
    for (std::size_t b = 0; b < count; ++b) {
      out << rows[start + b] << " ";
      for (auto w : res) out << (((w >> b) & 1) ? '1' : '0');
      out << "\n";
    }
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"MUX logic locking and link-prediction key recovery"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out_path;

  auto* gen = app.add_subcommand("gen", "generate a random combinational BENCH netlist");
  std::size_t gates = 1000, pis = 32, pos = 32;
  std::string mode = "random";
  gen->add_option("--gates", gates, "gate count")->check(CLI::PositiveNumber);
  gen->add_option("--inputs", pis, "primary input count")->check(CLI::PositiveNumber);
  gen->add_option("--outputs", pos, "primary output count")->check(CLI::PositiveNumber);
  gen->add_option("--mode", mode, "random | and-only")->check(CLI::IsMember({"random", "and-only"}));
  gen->add_option("--seed", seed);
  gen->add_option("--out", out_path, "output BENCH file")->required();

  auto* lock = app.add_subcommand("lock", "lock a netlist; writes OUT, OUT.key and OUT.manifest");
  std::string bench;
  std::size_t key_size = 0;
  std::string family = "dmux";
  lock->add_option("bench", bench)->required()->check(CLI::ExistingFile);
  lock->add_option("--key-size", key_size)->required()->check(CLI::PositiveNumber);
  lock->add_option("--family", family, "dmux | symmetric")->check(CLI::IsMember({"dmux", "symmetric"}));
  lock->add_option("--seed", seed);
  lock->add_option("--out", out_path)->required();

  auto* attack = app.add_subcommand("attack", "recover the key of a locked netlist");
  AttackConfig cfg;
  bool quiet = false;
  attack->add_option("locked", bench)->required()->check(CLI::ExistingFile);
  attack->add_option("--hops", cfg.hops)->check(CLI::Range(1, 16));
  attack->add_option("--threshold", cfg.threshold)->check(CLI::Range(0.0, 1.0));
  attack->add_option("--epochs", cfg.epochs)->check(CLI::NonNegativeNumber);
  attack->add_option("--lr", cfg.learning_rate)->check(CLI::PositiveNumber);
  attack->add_option("--cap", cfg.cap)->check(CLI::PositiveNumber);
  attack->add_option("--seed", seed);
  attack->add_option("--threads", threads)->check(CLI::Range(1u, 256u));
  attack->add_option("--out", out_path, "predicted key file; scores go to OUT.scores")->required();
  attack->add_flag("--quiet", quiet, "no training log on stderr");

  auto* eval = app.add_subcommand("eval", "score a predicted key");
  std::string predicted, truth;
  std::optional<std::string> original, locked;
  std::size_t patterns = 100000;
  eval->add_option("predicted", predicted)->required()->check(CLI::ExistingFile);
  eval->add_option("--key", truth, "correct key file")->required()->check(CLI::ExistingFile);
  eval->add_option("--original", original)->check(CLI::ExistingFile);
  eval->add_option("--locked", locked)->check(CLI::ExistingFile);
  eval->add_option("--patterns", patterns)->check(CLI::PositiveNumber);
  eval->add_option("--seed", seed);

  auto* sim = app.add_subcommand("sim", "simulate a netlist");
  std::optional<std::string> key_path, vectors;
  std::size_t sim_patterns = 16;
  sim->add_option("bench", bench)->required()->check(CLI::ExistingFile);
  sim->add_option("--key", key_path, "key file for the key inputs")->check(CLI::ExistingFile);
  sim->add_option("--vectors", vectors, "one input vector per line")->check(CLI::ExistingFile);
  sim->add_option("--patterns", sim_patterns, "random patterns when no vectors are given");
  sim->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      cmd_gen(gates, pis, pos, parse_gen_mode(mode), seed, out_path);
    } else if (*lock) {
      auto r = cmd_lock(bench, key_size, family, seed, out_path);
      out << "locked " << r.localities.size() << " localities with " << r.key.size() << " key bits\n";
    } else if (*attack) {
      cfg.seed = seed;
      cfg.threads = threads;
      cmd_attack(bench, cfg, out_path, out, quiet ? nullptr : &err);
    } else if (*eval) {
      out << format_metrics(cmd_eval(predicted, truth, original, locked, patterns, seed));
    } else if (*sim) {
      cmd_sim(bench, key_path, vectors, sim_patterns, seed, out);
    }
  } catch (const InfeasibleLockError& e) {
    err << "error: " << e.what() << "\nmax achievable key size: " << e.max_achievable() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace muxlink
