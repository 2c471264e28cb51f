// Key recovery from link likelihoods, and attack metrics.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "muxlink/gnn.hpp"
#include "muxlink/graph.hpp"
#include "muxlink/locker.hpp"
#include "muxlink/netlist.hpp"

namespace muxlink {

enum class Trit : std::uint8_t { Zero, One, X };

char to_char(Trit t);
inline Trit trit_of(bool bit) { return bit ? Trit::One : Trit::Zero; }

/// Likelihood per directed target link (driver f, sink g), keyed by node ids.
using ScoreMap = std::map<std::pair<NodeId, NodeId>, double>;

/// Scores every target link of `graph` with dropout off.
ScoreMap score_links(const Model& model, const CircuitGraph& graph, int hops, unsigned threads = 1);

/// Post-processing for two MUXes sharing data inputs {f_i, f_j}:
/// gi1 = (f_i, g_i), gi2 = (f_j, g_i), gj1 = (f_j, g_j), gj2 = (f_i, g_j).
/// Returns (k_i, k_j); k_i = 0 means g_i is driven by f_i.
std::pair<Trit, Trit> decode_pairwise(double l_gi1, double l_gi2, double l_gj1, double l_gj2,
                                      double th);

/// One MUX: l1 through data input A (key 0), l2 through data input B (key 1).
Trit decode_single(double l1, double l2, double th);

/// One key driving two MUXes; only k_i is meaningful.
Trit decode_s4(double l_gi1, double l_gi2, double l_gj1, double l_gj2, double th);

enum class GroupKind : std::uint8_t { PairwiseTwoKeys, Single, PairwiseOneKey };

std::string_view to_string(GroupKind k);

struct LocalityGroup {
  GroupKind kind = GroupKind::Single;
  std::vector<int> key_indices;         // ascending, distinct
  std::vector<KeyGateRecord> muxes;     // the first MUX defines f_i / f_j order
};

/// Groups key MUXes by shared data inputs and shared keys. Ordered by the
/// smallest key index. Throws UnsupportedLockError on ambiguous structure.
std::vector<LocalityGroup> group_localities(const std::vector<KeyGateRecord>& records);

struct BitDecision {
  Trit value = Trit::X;
  GroupKind kind = GroupKind::Single;
  std::vector<double> likelihoods;  // gi1, gi2[, gj1, gj2]
  double delta1 = 0.0;
  double delta2 = 0.0;
  double threshold = 0.0;
  std::string note;
};

struct PredictedKey {
  std::vector<Trit> trits;
  std::vector<BitDecision> decisions;  // same indexing as trits

  std::size_t size() const { return trits.size(); }
};

/// Applies the decoding rule matching each group's shape, mapping decisions
/// through the actual data-input order of every MUX.
PredictedKey decode_key(const std::vector<LocalityGroup>& groups, const CircuitGraph& graph,
                        const ScoreMap& scores, double th, std::size_t key_size);

std::string to_string(const PredictedKey& key);
std::vector<Trit> parse_trits(std::string_view text);
std::vector<Trit> read_predicted_key_file(const std::string& path);

struct MetricsReport {
  double ac = 0.0;
  double pc = 0.0;
  std::optional<double> kpa;  // undefined when every bit is X
  std::size_t correct = 0;
  std::size_t x = 0;
  std::size_t total = 0;
  std::optional<double> hd;
};

MetricsReport compute_metrics(const std::vector<Trit>& predicted, const KeyVector& truth);

/// Human-readable lines followed by machine-readable key=value lines.
std::string format_metrics(const MetricsReport& m);

/// Mean fraction of differing primary outputs (percent) between `original` and
/// `locked` under the predicted key, over `patterns` random input patterns.
/// X bits are enumerated when there are at most 10 of them, otherwise 1,024
/// seeded random completions are averaged. When `patterns` is at least
/// 2^(number of data inputs), every input pattern is enumerated exactly once.
double hamming_distance(const Netlist& original, const Netlist& locked,
                        const std::vector<Trit>& predicted, std::size_t patterns,
                        std::uint64_t seed);

}  // namespace muxlink
