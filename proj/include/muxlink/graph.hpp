// Undirected gate graph of a locked netlist with MUXes removed, plus h-hop
// enclosing subgraphs around candidate links and their node features.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "muxlink/netlist.hpp"

namespace muxlink {

using NodeId = std::uint32_t;

inline std::uint64_t link_key(NodeId a, NodeId b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t{a} << 32) | b;
}

using LinkSet = std::unordered_set<std::uint64_t>;

/// Candidate wire from MUX data input `f` to MUX sink gate `g`.
struct TargetLink {
  NodeId f = 0;
  NodeId g = 0;
  std::size_t record = 0;  // index into CircuitGraph::key_gates()
};

class CircuitGraph {
 public:
  CircuitGraph() = default;
  /// Raw construction; `edges` are unordered pairs and may contain duplicates.
  CircuitGraph(std::vector<std::string> names, std::vector<GateType> types,
               const std::vector<std::pair<NodeId, NodeId>>& edges,
               std::vector<TargetLink> targets, std::vector<KeyGateRecord> key_gates = {});

  std::size_t num_nodes() const { return types_.size(); }
  const std::vector<GateType>& types() const { return types_; }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<NodeId> node(std::string_view name) const;

  /// Observed links E, each as (u, v) with u < v, sorted.
  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
  /// Sorted neighbour lists over E.
  const std::vector<std::vector<NodeId>>& adjacency() const { return adj_; }
  /// Target links S.
  const std::vector<TargetLink>& targets() const { return targets_; }
  const std::vector<KeyGateRecord>& key_gates() const { return key_gates_; }

  bool has_edge(NodeId a, NodeId b) const { return edge_set_.count(link_key(a, b)) != 0; }
  bool is_target(NodeId a, NodeId b) const { return target_set_.count(link_key(a, b)) != 0; }

 private:
  std::vector<std::string> names_;
  std::vector<GateType> types_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<std::vector<NodeId>> adj_;
  std::vector<TargetLink> targets_;
  std::vector<KeyGateRecord> key_gates_;
  LinkSet edge_set_;
  LinkSet target_set_;
};

/// Removes every key MUX; its data-input/sink pairs become target links and
/// all remaining gate-to-gate wires become observed links.
CircuitGraph build_graph(const Netlist& locked);

struct EnclosingSubgraph {
  std::vector<NodeId> nodes;  // original ids, ascending; local id = position
  std::vector<GateType> types;
  std::vector<std::vector<std::uint32_t>> adj;  // local ids
  std::uint32_t f = 0;  // local id of the first target node
  std::uint32_t g = 0;
  int hops = 0;
  std::vector<int> labels;  // DRNL

  std::size_t size() const { return nodes.size(); }
  std::size_t num_links() const;
};

/// h-hop enclosing subgraph around (f, g). Links in `exclude` are ignored both
/// for the BFS and in the induced link set.
EnclosingSubgraph extract_enclosing(const CircuitGraph& graph, NodeId f, NodeId g, int hops,
                                    const LinkSet& exclude);

/// Label for a node at distances (df, dg) from the two targets, both finite.
int drnl_label(int df, int dg);

/// Double-radius labels for every node of `sub`, computed on its own links.
std::vector<int> drnl(const EnclosingSubgraph& sub);

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rows: [8-wide gate-type one-hot | (max_label + 1)-wide label one-hot].
/// Labels above max_label clamp to max_label.
FeatureMatrix build_features(const EnclosingSubgraph& sub, int max_label);

void dump_subgraph(const EnclosingSubgraph& sub, const CircuitGraph& graph, std::ostream& out);

}  // namespace muxlink
