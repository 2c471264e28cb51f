// Fixtures and independent oracles shared by the unit and acceptance suites.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <deque>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "muxlink/generator.hpp"
#include "muxlink/graph.hpp"
#include "muxlink/locker.hpp"
#include "muxlink/netlist.hpp"

namespace testing {

using namespace muxlink;

inline CircuitGraph random_graph(std::size_t n, double p, std::mt19937_64& rng) {
  std::vector<std::string> names;
  std::vector<GateType> types;
  std::uniform_int_distribution<int> type(0, static_cast<int>(kNumFeatureGateTypes) - 1);
  for (std::size_t i = 0; i < n; ++i) {
    names.push_back("n" + std::to_string(i));
    types.push_back(static_cast<GateType>(type(rng)));
  }
  std::bernoulli_distribution edge(p);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b)
      if (edge(rng)) edges.emplace_back(a, b);
  return CircuitGraph(names, types, edges, {});
}

// Distances by repeated relaxation over an adjacency matrix; -1 when unreachable.
inline std::vector<int> relax_distances(const std::vector<std::vector<char>>& m, std::size_t src) {
  const std::size_t n = m.size();
  std::vector<int> d(n, -1);
  d[src] = 0;
  for (int level = 0;; ++level) {
    bool grew = false;
    for (std::size_t u = 0; u < n; ++u) {
      if (d[u] != level) continue;
      for (std::size_t v = 0; v < n; ++v)
        if (m[u][v] && d[v] < 0) {
          d[v] = level + 1;
          grew = true;
        }
    }
    if (!grew) break;
  }
  return d;
}

struct OracleSubgraph {
  std::vector<NodeId> nodes;
  std::set<std::pair<NodeId, NodeId>> links;
  std::vector<int> labels;
};

// Enclosing subgraph and double-radius labels computed from first principles.
inline OracleSubgraph oracle_enclosing(const CircuitGraph& g, NodeId f, NodeId t, int hops,
                                       const std::set<std::pair<NodeId, NodeId>>& exclude) {
  const std::size_t n = g.num_nodes();
  auto excluded = [&](NodeId a, NodeId b) {
    return exclude.count({std::min(a, b), std::max(a, b)}) != 0;
  };
  std::vector<std::vector<char>> full(n, std::vector<char>(n, 0));
  for (auto [a, b] : g.edges())
    if (!excluded(a, b)) full[a][b] = full[b][a] = 1;
  auto df = relax_distances(full, f);
  auto dg = relax_distances(full, t);

  OracleSubgraph out;
  for (NodeId v = 0; v < n; ++v)
    if ((df[v] >= 0 && df[v] <= hops) || (dg[v] >= 0 && dg[v] <= hops) || v == f || v == t)
      out.nodes.push_back(v);
  const std::size_t m = out.nodes.size();
  std::vector<std::vector<char>> sub(m, std::vector<char>(m, 0));
  std::size_t lf = 0, lg = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (out.nodes[i] == f) lf = i;
    if (out.nodes[i] == t) lg = i;
    for (std::size_t j = 0; j < m; ++j)
      if (full[out.nodes[i]][out.nodes[j]]) {
        sub[i][j] = 1;
        if (i < j) out.links.insert({out.nodes[i], out.nodes[j]});
      }
  }
  auto sf = relax_distances(sub, lf);
  auto sg = relax_distances(sub, lg);
  for (std::size_t i = 0; i < m; ++i) {
    if (i == lf || i == lg) {
      out.labels.push_back(1);
    } else if (sf[i] < 0 || sg[i] < 0) {
      out.labels.push_back(0);
    } else {
      const int d = sf[i] + sg[i];
      out.labels.push_back(1 + std::min(sf[i], sg[i]) + (d / 2) * ((d / 2) + (d % 2) - 1));
    }
  }
  return out;
}

// Evaluates every output for every input pattern; inputs beyond `fixed` are free.
inline std::vector<std::uint64_t> exhaustive_outputs(const Netlist& n,
                                                     const std::vector<std::string>& free_inputs,
                                                     const Assignment& fixed) {
  Simulator sim(n);
  const std::size_t count = std::size_t{1} << free_inputs.size();
  std::vector<std::uint64_t> out_bits;
  std::vector<std::uint64_t> in(n.inputs().size()), res(n.outputs().size());
  for (std::size_t start = 0; start < count; start += 64) {
    const std::size_t block = std::min<std::size_t>(64, count - start);
    for (std::size_t i = 0; i < n.inputs().size(); ++i) {
      const auto& name = n.inputs()[i];
      if (auto it = fixed.find(name); it != fixed.end()) {
        in[i] = it->second ? ~0ULL : 0ULL;
        continue;
      }
      auto pos = static_cast<std::size_t>(
          std::find(free_inputs.begin(), free_inputs.end(), name) - free_inputs.begin());
      std::uint64_t w = 0;
      for (std::size_t b = 0; b < block; ++b)
        if (((start + b) >> pos) & 1) w |= 1ULL << b;
      in[i] = w;
    }
    sim.run(in, res);
    const std::uint64_t mask = block == 64 ? ~0ULL : (1ULL << block) - 1;
    for (auto w : res) out_bits.push_back(w & mask);
  }
  return out_bits;
}

inline Assignment key_assignment(const KeyVector& key) {
  Assignment a;
  for (std::size_t i = 0; i < key.size(); ++i) a[key_input_name(static_cast<int>(i))] = key.bits[i] != 0;
  return a;
}

// Number of (pattern, output) pairs where the locked netlist under `key`
// disagrees with the original, over all input patterns.
inline std::size_t exhaustive_mismatches(const Netlist& original, const Netlist& locked,
                                         const KeyVector& key) {
  auto a = exhaustive_outputs(original, original.inputs(), {});
  auto b = exhaustive_outputs(locked, original.inputs(), key_assignment(key));
  std::size_t bad = 0;
  // Output order is shared: locking keeps the output list.
  for (std::size_t i = 0; i < a.size(); ++i) bad += static_cast<std::size_t>(std::popcount(a[i] ^ b[i]));
  return bad;
}

}  // namespace testing
