#include "muxlink/graph.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <ostream>

namespace muxlink {

namespace {

constexpr int kUnreached = std::numeric_limits<int>::max();

std::vector<int> bfs_local(const std::vector<std::vector<std::uint32_t>>& adj, std::uint32_t src) {
  std::vector<int> dist(adj.size(), kUnreached);
  std::deque<std::uint32_t> queue{src};
  dist[src] = 0;
  while (!queue.empty()) {
    auto v = queue.front();
    queue.pop_front();
    for (auto u : adj[v])
      if (dist[u] == kUnreached) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
  }
  return dist;
}

}  // namespace

CircuitGraph::CircuitGraph(std::vector<std::string> names, std::vector<GateType> types,
                           const std::vector<std::pair<NodeId, NodeId>>& edges,
                           std::vector<TargetLink> targets, std::vector<KeyGateRecord> key_gates)
    : names_(std::move(names)),
      types_(std::move(types)),
      targets_(std::move(targets)),
      key_gates_(std::move(key_gates)) {
  if (names_.size() != types_.size()) throw Error("graph: names and types differ in length");
  for (NodeId i = 0; i < names_.size(); ++i) index_.emplace(names_[i], i);
  for (const auto& t : targets_) {
    if (t.f >= types_.size() || t.g >= types_.size()) throw Error("graph: target out of range");
    target_set_.insert(link_key(t.f, t.g));
  }
  for (auto [a, b] : edges) {
    if (a >= types_.size() || b >= types_.size()) throw Error("graph: edge out of range");
    if (a == b) continue;
    auto key = link_key(a, b);
    if (target_set_.count(key) || !edge_set_.insert(key).second) continue;
    edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  adj_.resize(types_.size());
  for (auto [a, b] : edges_) {
    adj_[a].push_back(b);
    adj_[b].push_back(a);
  }
  for (auto& n : adj_) std::sort(n.begin(), n.end());
}

std::optional<NodeId> CircuitGraph::node(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

CircuitGraph build_graph(const Netlist& locked) {
  auto records = trace_key_gates(locked);
  std::unordered_set<std::string> key_muxes;
  for (const auto& r : records) key_muxes.insert(r.mux_output);

  std::vector<std::string> names;
  std::vector<GateType> types;
  std::unordered_map<std::string, NodeId> id;
  for (const auto& g : locked.gates()) {
    if (key_muxes.count(g.output)) continue;
    if (g.type == GateType::Mux)
      throw UnsupportedLockError("MUX '" + g.output + "' is not driven by a key input");
    id.emplace(g.output, static_cast<NodeId>(names.size()));
    names.push_back(g.output);
    types.push_back(g.type);
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& g : locked.gates()) {
    auto sink = id.find(g.output);
    if (sink == id.end()) continue;
    for (const auto& in : g.inputs) {
      auto src = id.find(in);
      if (src != id.end()) edges.emplace_back(src->second, sink->second);
    }
  }

  std::vector<TargetLink> targets;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    auto fa = id.find(rec.data_a);
    auto fb = id.find(rec.data_b);
    if (fa == id.end() || fb == id.end())
      throw UnsupportedLockError("MUX '" + rec.mux_output + "' has a data input that is not a gate");
    for (const auto& s : rec.sinks) {
      auto gs = id.find(s);
      if (gs == id.end())
        throw UnsupportedLockError("MUX '" + rec.mux_output + "' feeds another key MUX");
      targets.push_back(TargetLink{fa->second, gs->second, r});
      targets.push_back(TargetLink{fb->second, gs->second, r});
    }
  }
  return CircuitGraph(std::move(names), std::move(types), edges, std::move(targets),
                      std::move(records));
}

std::size_t EnclosingSubgraph::num_links() const {
  std::size_t deg = 0;
  for (const auto& n : adj) deg += n.size();
  return deg / 2;
}

EnclosingSubgraph extract_enclosing(const CircuitGraph& graph, NodeId f, NodeId g, int hops,
                                    const LinkSet& exclude) {
  const auto n = graph.num_nodes();
  if (f >= n || g >= n) throw Error("enclosing subgraph: endpoint not in graph");
  if (hops < 1) throw Error("enclosing subgraph: hop count must be >= 1");
  const auto& adj = graph.adjacency();

  // Bounded BFS from each endpoint; `visit` records the union.
  std::vector<NodeId> members;
  std::unordered_map<NodeId, int> depth;
  auto bounded_bfs = [&](NodeId src) {
    depth.clear();
    std::deque<NodeId> queue{src};
    depth[src] = 0;
    while (!queue.empty()) {
      auto v = queue.front();
      queue.pop_front();
      members.push_back(v);
      if (depth[v] == hops) continue;
      for (auto u : adj[v]) {
        if (depth.count(u) || exclude.count(link_key(u, v))) continue;
        depth[u] = depth[v] + 1;
        queue.push_back(u);
      }
    }
  };
  bounded_bfs(f);
  bounded_bfs(g);
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());

  EnclosingSubgraph sub;
  sub.nodes = std::move(members);
  sub.hops = hops;
  std::unordered_map<NodeId, std::uint32_t> local;
  local.reserve(sub.nodes.size());
  for (std::uint32_t i = 0; i < sub.nodes.size(); ++i) local.emplace(sub.nodes[i], i);
  sub.types.reserve(sub.nodes.size());
  sub.adj.resize(sub.nodes.size());
  for (std::uint32_t i = 0; i < sub.nodes.size(); ++i) {
    NodeId v = sub.nodes[i];
    sub.types.push_back(graph.types()[v]);
    for (auto u : adj[v]) {
      auto it = local.find(u);
      if (it == local.end() || exclude.count(link_key(u, v))) continue;
      sub.adj[i].push_back(it->second);
    }
  }
  sub.f = local.at(f);
  sub.g = local.at(g);
  sub.labels = drnl(sub);
  return sub;
}

int drnl_label(int df, int dg) {
  const int d = df + dg;
  const int half = d / 2;
  return 1 + std::min(df, dg) + half * (half + d % 2 - 1);
}

std::vector<int> drnl(const EnclosingSubgraph& sub) {
  auto df = bfs_local(sub.adj, sub.f);
  auto dg = bfs_local(sub.adj, sub.g);
  std::vector<int> labels(sub.size(), 0);
  for (std::size_t j = 0; j < sub.size(); ++j) {
    if (j == sub.f || j == sub.g) {
      labels[j] = 1;
    } else if (df[j] != kUnreached && dg[j] != kUnreached) {
      labels[j] = drnl_label(df[j], dg[j]);
    }
  }
  return labels;
}

FeatureMatrix build_features(const EnclosingSubgraph& sub, int max_label) {
  if (max_label < 1) throw Error("feature matrix: max_label must be >= 1");
  if (sub.labels.size() != sub.size()) throw Error("feature matrix: labels not computed");
  FeatureMatrix x = FeatureMatrix::Zero(static_cast<Eigen::Index>(sub.size()),
                                        static_cast<Eigen::Index>(kNumFeatureGateTypes) + max_label + 1);
  for (std::size_t j = 0; j < sub.size(); ++j) {
    auto t = static_cast<std::size_t>(sub.types[j]);
    if (t >= kNumFeatureGateTypes)
      throw Error("feature matrix: gate type " + std::string(to_string(sub.types[j])) +
                  " has no feature encoding");
    auto row = static_cast<Eigen::Index>(j);
    x(row, static_cast<Eigen::Index>(t)) = 1.0;
    x(row, static_cast<Eigen::Index>(kNumFeatureGateTypes) + std::min(sub.labels[j], max_label)) = 1.0;
  }
  return x;
}

void dump_subgraph(const EnclosingSubgraph& sub, const CircuitGraph& graph, std::ostream& out) {
  out << "subgraph target=" << graph.names()[sub.nodes[sub.f]] << ","
      << graph.names()[sub.nodes[sub.g]] << " hops=" << sub.hops << " nodes=" << sub.size()
      << " links=" << sub.num_links() << "\n";
  for (std::size_t j = 0; j < sub.size(); ++j) {
    out << j << " " << graph.names()[sub.nodes[j]] << " " << to_string(sub.types[j])
        << " label=" << sub.labels[j] << " :";
    for (auto u : sub.adj[j]) out << " " << u;
    out << "\n";
  }
}

}  // namespace muxlink
