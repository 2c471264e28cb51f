// End-to-end pipeline steps behind the `muxlink` command.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "muxlink/attack.hpp"
#include "muxlink/dataset.hpp"
#include "muxlink/generator.hpp"
#include "muxlink/gnn.hpp"
#include "muxlink/graph.hpp"
#include "muxlink/locker.hpp"

namespace muxlink {

struct AttackConfig {
  int hops = 3;
  double threshold = 0.01;
  int epochs = 100;
  double learning_rate = 1e-4;
  std::size_t cap = kDefaultLinkCap;
  double validation_fraction = kDefaultValidationFraction;
  int batch_size = 50;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct AttackOutcome {
  CircuitGraph graph;
  std::vector<LocalityGroup> groups;
  ScoreMap scores;
  PredictedKey key;
  TrainResult training;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
  double seconds = 0.0;
};

/// Trains on the locked design's own wires and decodes the key. Uses nothing
/// but the locked netlist.
AttackOutcome run_attack(const Netlist& locked, const AttackConfig& cfg, std::ostream* log = nullptr);

/// Re-decodes an attack's scores at another threshold.
PredictedKey redecode(const AttackOutcome& outcome, double threshold);

void cmd_gen(std::size_t gates, std::size_t pis, std::size_t pos, GenMode mode, std::uint64_t seed,
             const std::string& out_path);

/// Writes `out_path`, `out_path.key` and `out_path.manifest`.
LockResult cmd_lock(const std::string& bench_path, std::size_t key_size, const std::string& family,
                    std::uint64_t seed, const std::string& out_path);

/// Writes the predicted key to `out_path` and the link scores to
/// `out_path.scores`; on failure neither file is left behind.
AttackOutcome cmd_attack(const std::string& locked_path, const AttackConfig& cfg,
                         const std::string& out_path, std::ostream& report, std::ostream* log);

MetricsReport cmd_eval(const std::string& predicted_path, const std::string& key_path,
                       const std::optional<std::string>& original_path,
                       const std::optional<std::string>& locked_path, std::size_t patterns,
                       std::uint64_t seed);

/// One line per pattern: input bits, a space, output bits. Key inputs take
/// `key` when given and are otherwise treated as ordinary inputs.
void cmd_sim(const std::string& bench_path, const std::optional<std::string>& key_path,
             const std::optional<std::string>& vectors_path, std::size_t patterns, std::uint64_t seed,
             std::ostream& out);

/// Exit codes: 0 success, 1 usage, 2 data error, 3 infeasible lock.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace muxlink
