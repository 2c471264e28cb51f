#include <bit>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "muxlink/attack.hpp"

namespace muxlink {

MetricsReport compute_metrics(const std::vector<Trit>& predicted, const KeyVector& truth) {
  if (predicted.size() != truth.size())
    throw Error("predicted key has " + std::to_string(predicted.size()) + " bits, correct key has " +
                std::to_string(truth.size()));
  MetricsReport m;
  m.total = truth.size();
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == Trit::X) ++m.x;
    else if (predicted[i] == trit_of(truth.bits[i] != 0)) ++m.correct;
  }
  if (m.total == 0) return m;
  const double total = static_cast<double>(m.total);
  m.ac = 100.0 * static_cast<double>(m.correct) / total;
  m.pc = 100.0 * static_cast<double>(m.correct + m.x) / total;
  if (m.x < m.total) m.kpa = 100.0 * static_cast<double>(m.correct) / static_cast<double>(m.total - m.x);
  return m;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string format_metrics(const MetricsReport& m) {
  std::ostringstream out;
  out << "accuracy (AC):           " << num(m.ac) << "%\n"
      << "precision (PC):          " << num(m.pc) << "%\n"
      << "key prediction accuracy: " << (m.kpa ? num(*m.kpa) + "%" : std::string("n/a")) << "\n"
      << "bits correct/X/total:    " << m.correct << "/" << m.x << "/" << m.total << "\n";
  if (m.hd) out << "hamming distance (HD):   " << num(*m.hd) << "%\n";
  out << "AC=" << num(m.ac) << "\n"
      << "PC=" << num(m.pc) << "\n"
      << "KPA=" << (m.kpa ? num(*m.kpa) : std::string("n/a")) << "\n"
      << "K_correct=" << m.correct << "\n"
      << "K_X=" << m.x << "\n"
      << "K_total=" << m.total << "\n";
  if (m.hd) out << "HD=" << num(*m.hd) << "\n";
  return out.str();
}

double hamming_distance(const Netlist& original, const Netlist& locked,
                        const std::vector<Trit>& predicted, std::size_t patterns,
                        std::uint64_t seed) {
  if (predicted.size() != locked.key_size())
    throw Error("predicted key has " + std::to_string(predicted.size()) + " bits, locked design has " +
                std::to_string(locked.key_size()));
  if (original.key_size() != 0) throw Error("original design has key inputs");
  const auto data = locked.data_inputs();
  if (std::set<std::string>(data.begin(), data.end()) !=
      std::set<std::string>(original.inputs().begin(), original.inputs().end()))
    throw Error("original and locked designs have different data inputs");
  if (std::set<std::string>(locked.outputs().begin(), locked.outputs().end()) !=
      std::set<std::string>(original.outputs().begin(), original.outputs().end()))
    throw Error("original and locked designs have different outputs");
  if (patterns == 0) throw Error("pattern count must be positive");

  // Locked input slot -> original input slot, or -(key index + 1).
  std::map<std::string, long, std::less<>> orig_in;
  for (std::size_t i = 0; i < original.inputs().size(); ++i) orig_in[original.inputs()[i]] = static_cast<long>(i);
  std::vector<long> in_map;
  for (const auto& w : locked.inputs()) {
    auto k = key_index_of(w);
    in_map.push_back(k ? -(static_cast<long>(*k) + 1) : orig_in.at(w));
  }
  std::map<std::string, std::size_t, std::less<>> orig_out;
  for (std::size_t i = 0; i < original.outputs().size(); ++i) orig_out[original.outputs()[i]] = i;
  std::vector<std::size_t> out_map;
  for (const auto& w : locked.outputs()) out_map.push_back(orig_out.at(w));

  // Key completions.
  std::vector<std::size_t> x_pos;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == Trit::X) x_pos.push_back(i);
  std::vector<std::vector<bool>> keys;
  std::vector<bool> base(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) base[i] = predicted[i] == Trit::One;
  std::mt19937_64 key_rng(seed ^ 0x6b657973ULL);
  const bool enumerate_x = x_pos.size() <= 10;
  const std::size_t completions = enumerate_x ? (std::size_t{1} << x_pos.size()) : 1024;
  for (std::size_t c = 0; c < completions; ++c) {
    auto k = base;
    for (std::size_t j = 0; j < x_pos.size(); ++j)
      k[x_pos[j]] = enumerate_x ? ((c >> j) & 1) != 0 : (key_rng() & 1) != 0;
    keys.push_back(std::move(k));
  }

  const std::size_t n_in = original.inputs().size();
  const bool exhaustive = n_in < 63 && patterns >= (std::size_t{1} << n_in);
  const std::size_t total_patterns = exhaustive ? (std::size_t{1} << n_in) : patterns;

  Simulator sim_orig(original), sim_locked(locked);
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> in_words(n_in), orig_out_words(original.outputs().size());
  std::vector<std::uint64_t> locked_in(locked.inputs().size()), locked_out(locked.outputs().size());
  std::uint64_t differing = 0;

  for (std::size_t start = 0; start < total_patterns; start += 64) {
    const std::size_t count = std::min<std::size_t>(64, total_patterns - start);
    const std::uint64_t valid = count == 64 ? ~0ULL : ((1ULL << count) - 1);
    for (std::size_t i = 0; i < n_in; ++i) {
      if (exhaustive) {
        std::uint64_t w = 0;
        for (std::size_t b = 0; b < count; ++b)
          if (((start + b) >> i) & 1) w |= 1ULL << b;
        in_words[i] = w;
      } else {
        in_words[i] = rng();
      }
    }
    sim_orig.run(in_words, orig_out_words);
    for (const auto& key : keys) {
      for (std::size_t i = 0; i < in_map.size(); ++i)
        locked_in[i] = in_map[i] >= 0 ? in_words[static_cast<std::size_t>(in_map[i])]
                                      : (key[static_cast<std::size_t>(-in_map[i] - 1)] ? ~0ULL : 0ULL);
      sim_locked.run(locked_in, locked_out);
      for (std::size_t o = 0; o < locked_out.size(); ++o)
        differing += static_cast<std::uint64_t>(
            std::popcount((locked_out[o] ^ orig_out_words[out_map[o]]) & valid));
    }
  }
  const double denom = static_cast<double>(total_patterns) * static_cast<double>(out_map.size()) *
                       static_cast<double>(keys.size());
  return out_map.empty() ? 0.0 : 100.0 * static_cast<double>(differing) / denom;
}

}  // namespace muxlink
