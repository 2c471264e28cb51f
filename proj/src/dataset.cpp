#include "muxlink/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "muxlink/parallel.hpp"

namespace muxlink {

LinkSplit sample_links(const CircuitGraph& graph, std::size_t cap, double val_fraction,
                       std::uint64_t seed) {
  if (cap < 2) throw Error("link cap must be at least 2");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw Error("validation fraction must be in [0, 1)");
  std::mt19937_64 rng(seed);

  std::vector<std::pair<NodeId, NodeId>> positives = graph.edges();
  std::shuffle(positives.begin(), positives.end(), rng);
  if (2 * positives.size() > cap) positives.resize(cap / 2);
  const std::size_t count = positives.size();

  const std::size_t n = graph.num_nodes();
  const std::size_t pairs = n * (n - (n > 0 ? 1 : 0)) / 2;
  if (pairs < graph.edges().size() + graph.targets().size() + count)
    throw Error("graph too dense to draw " + std::to_string(count) + " negative links");

  std::vector<std::pair<NodeId, NodeId>> negatives;
  negatives.reserve(count);
  LinkSet taken;
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
  std::size_t attempts = 0;
  const std::size_t max_attempts = 1000 * (count + 16);
  while (negatives.size() < count) {
    if (++attempts > max_attempts) throw Error("negative link sampling did not converge");
    NodeId a = pick(rng), b = pick(rng);
    if (a == b || graph.has_edge(a, b) || graph.is_target(a, b)) continue;
    if (!taken.insert(link_key(a, b)).second) continue;
    negatives.emplace_back(std::min(a, b), std::max(a, b));
  }

  const auto nval = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(count) + 1e-9));
  LinkSplit split;
  for (std::size_t i = 0; i < count; ++i) {
    auto& dst = i < nval ? split.validation : split.train;
    dst.push_back(LinkSample{positives[i].first, positives[i].second, true});
    dst.push_back(LinkSample{negatives[i].first, negatives[i].second, false});
  }
  return split;
}

namespace {

std::vector<LabeledSubgraph> extract_all(const CircuitGraph& graph,
                                         const std::vector<LinkSample>& samples, int hops,
                                         unsigned threads) {
  std::vector<LabeledSubgraph> out(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const auto& s = samples[i];
    LinkSet exclude{link_key(s.u, s.v)};
    out[i].graph = extract_enclosing(graph, s.u, s.v, hops, exclude);
    out[i].label = s.positive ? 1 : 0;
  });
  return out;
}

}  // namespace

SubgraphDataset assemble(const CircuitGraph& graph, const LinkSplit& samples, int hops,
                         std::uint64_t seed, unsigned threads) {
  SubgraphDataset ds;
  ds.train = extract_all(graph, samples.train, hops, threads);
  ds.validation = extract_all(graph, samples.validation, hops, threads);
  std::mt19937_64 rng(seed);
  std::shuffle(ds.train.begin(), ds.train.end(), rng);
  std::shuffle(ds.validation.begin(), ds.validation.end(), rng);
  ds.max_label = 1;
  for (const auto& s : ds.train)
    for (int l : s.graph.labels) ds.max_label = std::max(ds.max_label, l);
  return ds;
}

std::string dataset_report(const SubgraphDataset& ds) {
  std::ostringstream out;
  auto count = [](const std::vector<LabeledSubgraph>& v, int label) {
    return std::count_if(v.begin(), v.end(), [&](const auto& s) { return s.label == label; });
  };
  out << "train: " << ds.train.size() << " (" << count(ds.train, 1) << " positive, "
      << count(ds.train, 0) << " negative)\n";
  out << "validation: " << ds.validation.size() << " (" << count(ds.validation, 1)
      << " positive, " << count(ds.validation, 0) << " negative)\n";
  out << "max_label: " << ds.max_label << "\n";
  std::map<std::size_t, std::size_t> hist;
  for (const auto& s : ds.train) {
    std::size_t bucket = 1;
    while (bucket < s.graph.size()) bucket *= 2;
    ++hist[bucket];
  }
  out << "subgraph size histogram (<= bucket):\n";
  for (auto [bucket, n] : hist) out << "  " << bucket << ": " << n << "\n";
  return out.str();
}

}  // namespace muxlink
