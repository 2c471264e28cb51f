// Self-supervised training data: balanced positive/negative link samples drawn
// from the target netlist's own graph, and their labelled enclosing subgraphs.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "muxlink/graph.hpp"

namespace muxlink {

struct LinkSample {
  NodeId u = 0;
  NodeId v = 0;
  bool positive = false;
};

struct LinkSplit {
  std::vector<LinkSample> train;
  std::vector<LinkSample> validation;
};

inline constexpr std::size_t kDefaultLinkCap = 100000;
inline constexpr double kDefaultValidationFraction = 0.10;

/// Positives are all observed links (or a uniform subset of cap/2 of them),
/// negatives an equal number of distinct uniformly drawn non-links outside S.
/// `val_fraction` of each polarity (rounded down) goes to validation.
LinkSplit sample_links(const CircuitGraph& graph, std::size_t cap, double val_fraction,
                       std::uint64_t seed);

struct LabeledSubgraph {
  EnclosingSubgraph graph;
  int label = 0;
};

struct SubgraphDataset {
  std::vector<LabeledSubgraph> train;
  std::vector<LabeledSubgraph> validation;
  int max_label = 1;  // over training subgraphs
  int k = 0;          // sort-pooling size, set by the trainer
};

/// Extracts each sample's enclosing subgraph with the sample's own link removed.
SubgraphDataset assemble(const CircuitGraph& graph, const LinkSplit& samples, int hops,
                         std::uint64_t seed, unsigned threads = 1);

/// Counts and a subgraph-size histogram, as text.
std::string dataset_report(const SubgraphDataset& ds);

}  // namespace muxlink
