#include "muxlink/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "muxlink/parallel.hpp"

namespace muxlink {

char to_char(Trit t) {
  switch (t) {
    case Trit::Zero: return '0';
    case Trit::One: return '1';
    case Trit::X: return 'X';
  }
  return '?';
}

std::string_view to_string(GroupKind k) {
  switch (k) {
    case GroupKind::PairwiseTwoKeys: return "pairwise-two-keys";
    case GroupKind::Single: return "single";
    case GroupKind::PairwiseOneKey: return "pairwise-one-key";
  }
  return "?";
}

ScoreMap score_links(const Model& model, const CircuitGraph& graph, int hops, unsigned threads) {
  const auto& targets = graph.targets();
  std::vector<double> likelihood(targets.size());
  const LinkSet none;
  parallel_for(targets.size(), threads, [&](std::size_t i) {
    auto sub = extract_enclosing(graph, targets[i].f, targets[i].g, hops, none);
    likelihood[i] = predict(model, make_input(sub, model.max_label()));
  });
  ScoreMap scores;
  for (std::size_t i = 0; i < targets.size(); ++i)
    scores[{targets[i].f, targets[i].g}] = likelihood[i];
  return scores;
}

std::pair<Trit, Trit> decode_pairwise(double l_gi1, double l_gi2, double l_gj1, double l_gj2,
                                      double th) {
  const double d1 = std::abs(l_gi1 - l_gi2);
  const double d2 = std::abs(l_gj1 - l_gj2);
  if (d1 >= th || d2 >= th) {
    if (d1 > d2) {
      if (l_gi1 > l_gi2) return {Trit::Zero, Trit::One};
      return {Trit::One, Trit::Zero};
    }
    if (d2 > d1) {
      if (l_gj1 > l_gj2) return {Trit::Zero, Trit::One};
      return {Trit::One, Trit::Zero};
    }
  }
  return {Trit::X, Trit::X};
}

Trit decode_single(double l1, double l2, double th) {
  if (std::abs(l1 - l2) < th) return Trit::X;
  if (l1 > l2) return Trit::Zero;
  if (l2 > l1) return Trit::One;
  return Trit::X;
}

Trit decode_s4(double l_gi1, double l_gi2, double l_gj1, double l_gj2, double th) {
  return decode_pairwise(l_gi1, l_gi2, l_gj1, l_gj2, th).first;
}

std::vector<LocalityGroup> group_localities(const std::vector<KeyGateRecord>& records) {
  std::map<int, std::vector<const KeyGateRecord*>> by_key;
  for (const auto& r : records) by_key[r.key_index].push_back(&r);

  auto unordered_pair = [](const KeyGateRecord& r) {
    return std::minmax(r.data_a, r.data_b);
  };
  auto key_list = [](const std::vector<const KeyGateRecord*>& rs) {
    std::string s;
    for (const auto* r : rs) s += (s.empty() ? "" : ",") + std::to_string(r->key_index);
    return s;
  };

  std::vector<LocalityGroup> groups;
  std::map<std::pair<std::string, std::string>, std::vector<const KeyGateRecord*>> by_pair;
  for (const auto& [key, rs] : by_key) {
    if (rs.size() == 1) {
      by_pair[unordered_pair(*rs[0])].push_back(rs[0]);
      continue;
    }
    if (rs.size() > 2 || unordered_pair(*rs[0]) != unordered_pair(*rs[1]))
      throw UnsupportedLockError("key bit " + std::to_string(key) + " drives " +
                                 std::to_string(rs.size()) + " MUXes with unrelated data inputs");
    groups.push_back(LocalityGroup{GroupKind::PairwiseOneKey, {key}, {*rs[0], *rs[1]}});
  }
  for (const auto& [pair, rs] : by_pair) {
    if (rs.size() > 2)
      throw UnsupportedLockError("ambiguous locality: key bits " + key_list(rs) +
                                 " share data inputs " + pair.first + "," + pair.second);
    if (rs.size() == 2) {
      groups.push_back(LocalityGroup{GroupKind::PairwiseTwoKeys,
                                     {rs[0]->key_index, rs[1]->key_index},
                                     {*rs[0], *rs[1]}});
    } else {
      groups.push_back(LocalityGroup{GroupKind::Single, {rs[0]->key_index}, {*rs[0]}});
    }
  }
  for (const auto& g : groups)
    for (const auto& other : groups)
      if (&g != &other && g.kind == GroupKind::PairwiseOneKey && other.kind != GroupKind::PairwiseOneKey) {
        auto p = unordered_pair(g.muxes[0]);
        for (const auto& m : other.muxes)
          if (unordered_pair(m) == p)
            throw UnsupportedLockError("ambiguous locality: key bits " +
                                       std::to_string(g.key_indices[0]) + " and " +
                                       std::to_string(m.key_index) + " share data inputs");
      }
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    return a.key_indices.front() < b.key_indices.front();
  });
  return groups;
}

namespace {

class Scorer {
 public:
  Scorer(const CircuitGraph& graph, const ScoreMap& scores) : graph_(graph), scores_(scores) {}

  double operator()(const std::string& f, const std::string& g) const {
    auto fi = graph_.node(f), gi = graph_.node(g);
    if (!fi || !gi) throw Error("no graph node for link " + f + " -> " + g);
    auto it = scores_.find({*fi, *gi});
    if (it == scores_.end()) throw Error("link " + f + " -> " + g + " was not scored");
    return it->second;
  }

 private:
  const CircuitGraph& graph_;
  const ScoreMap& scores_;
};

Trit flip(Trit t) {
  if (t == Trit::Zero) return Trit::One;
  if (t == Trit::One) return Trit::Zero;
  return Trit::X;
}

BitDecision decide_single(const KeyGateRecord& mux, const Scorer& score, double th) {
  BitDecision d;
  d.kind = GroupKind::Single;
  d.threshold = th;
  if (mux.sinks.empty()) {
    d.note = "MUX drives no gate";
    return d;
  }
  bool first = true;
  for (const auto& sink : mux.sinks) {
    const double l1 = score(mux.data_a, sink), l2 = score(mux.data_b, sink);
    const double delta = std::abs(l1 - l2);
    if (first || delta > d.delta1) {
      d.likelihoods = {l1, l2};
      d.delta1 = delta;
      d.value = decode_single(l1, l2, th);
      first = false;
    }
  }
  if (mux.sinks.size() > 1) d.note = "multiple sinks; most confident sink used";
  return d;
}

}  // namespace

PredictedKey decode_key(const std::vector<LocalityGroup>& groups, const CircuitGraph& graph,
                        const ScoreMap& scores, double th, std::size_t key_size) {
  PredictedKey key;
  key.trits.assign(key_size, Trit::X);
  key.decisions.resize(key_size);
  Scorer score(graph, scores);

  auto store = [&](int index, BitDecision d) {
    if (index < 0 || static_cast<std::size_t>(index) >= key_size)
      throw Error("key index " + std::to_string(index) + " out of range");
    key.trits[static_cast<std::size_t>(index)] = d.value;
    key.decisions[static_cast<std::size_t>(index)] = std::move(d);
  };

  for (const auto& group : groups) {
    if (group.kind == GroupKind::Single) {
      store(group.muxes[0].key_index, decide_single(group.muxes[0], score, th));
      continue;
    }
    const auto& m1 = group.muxes[0];
    const auto& m2 = group.muxes[1];
    const bool clean_sinks = m1.sinks.size() == 1 && m2.sinks.size() == 1 && m1.sinks[0] != m2.sinks[0];
    const bool s4_crossed = m2.data_a == m1.data_b;

    if (!clean_sinks || (group.kind == GroupKind::PairwiseOneKey && !s4_crossed)) {
      // Structure does not fit the pairwise rule; decide from the first MUX alone.
      for (std::size_t m = 0; m < group.muxes.size(); ++m) {
        if (group.kind == GroupKind::PairwiseOneKey && m > 0) break;
        auto d = decide_single(group.muxes[m], score, th);
        d.kind = group.kind;
        d.note = "pairwise structure inconsistent; decided as independent single MUX";
        store(group.muxes[m].key_index, std::move(d));
      }
      continue;
    }

    const std::string& f_i = m1.data_a;
    const std::string& f_j = m1.data_b;
    const std::string& g_i = m1.sinks[0];
    const std::string& g_j = m2.sinks[0];
    const double gi1 = score(f_i, g_i), gi2 = score(f_j, g_i);
    const double gj1 = score(f_j, g_j), gj2 = score(f_i, g_j);

    BitDecision d;
    d.kind = group.kind;
    d.likelihoods = {gi1, gi2, gj1, gj2};
    d.delta1 = std::abs(gi1 - gi2);
    d.delta2 = std::abs(gj1 - gj2);
    d.threshold = th;

    if (group.kind == GroupKind::PairwiseOneKey) {
      d.value = decode_s4(gi1, gi2, gj1, gj2, th);
      store(m1.key_index, std::move(d));
      continue;
    }
    auto [ki, kj] = decode_pairwise(gi1, gi2, gj1, gj2, th);
    // kj = 1 means g_j is driven by f_j; translate to the second MUX's wiring.
    Trit kj_wired = m2.data_b == f_j ? kj : flip(kj);
    BitDecision dj = d;
    d.value = ki;
    dj.value = kj_wired;
    store(m1.key_index, std::move(d));
    store(m2.key_index, std::move(dj));
  }
  return key;
}

std::string to_string(const PredictedKey& key) {
  std::string s;
  for (auto t : key.trits) s.push_back(to_char(t));
  return s;
}

std::vector<Trit> parse_trits(std::string_view text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' '))
    text.remove_suffix(1);
  std::vector<Trit> out;
  for (char c : text) {
    if (c == '0') out.push_back(Trit::Zero);
    else if (c == '1') out.push_back(Trit::One);
    else if (c == 'X' || c == 'x') out.push_back(Trit::X);
    else throw Error(std::string("invalid key character '") + c + "'");
  }
  return out;
}

std::vector<Trit> read_predicted_key_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  return parse_trits(line);
}

}  // namespace muxlink
