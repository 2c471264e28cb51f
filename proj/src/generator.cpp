#include "muxlink/generator.hpp"

#include <algorithm>
#include <random>

namespace muxlink {

GenMode parse_gen_mode(std::string_view s) {
  if (s == "random") return GenMode::Random;
  if (s == "and-only") return GenMode::AndOnly;
  throw Error("unknown generator mode '" + std::string(s) + "' (expected random or and-only)");
}

namespace {

constexpr std::size_t kWindow = 24;

// Unread signals with O(1) insert, erase and uniform pick.
class Pool {
 public:
  void add(std::size_t s) {
    if (pos_.size() <= s) pos_.resize(s + 1, kNone);
    pos_[s] = items_.size();
    items_.push_back(s);
  }
  bool contains(std::size_t s) const { return s < pos_.size() && pos_[s] != kNone; }
  void erase(std::size_t s) {
    if (!contains(s)) return;
    const std::size_t p = pos_[s];
    items_[p] = items_.back();
    pos_[items_[p]] = p;
    items_.pop_back();
    pos_[s] = kNone;
  }
  std::size_t size() const { return items_.size(); }
  std::size_t at(std::size_t i) const { return items_[i]; }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> items_;
  std::vector<std::size_t> pos_;
};

GateType random_type(std::mt19937_64& rng) {
  static constexpr GateType kTypes[] = {GateType::And, GateType::Nand, GateType::Or,
                                        GateType::Nor, GateType::Xor,  GateType::Xnor};
  const auto r = std::uniform_int_distribution<int>(0, 99)(rng);
  if (r < 8) return GateType::Not;
  if (r < 10) return GateType::Buf;
  return kTypes[r % 6];
}

std::size_t random_fanin(std::mt19937_64& rng) {
  const auto r = std::uniform_int_distribution<int>(0, 99)(rng);
  return r < 80 ? 2 : (r < 95 ? 3 : 4);
}

}  // namespace

Netlist generate_netlist(std::size_t num_gates, std::size_t num_pis, std::size_t num_pos,
                         GenMode mode, std::uint64_t seed) {
  if (num_gates == 0 || num_pis == 0 || num_pos == 0)
    throw NetlistError("gate, input and output counts must be positive");
  if (num_pos > num_gates) throw NetlistError("more outputs requested than gates");
  if (mode == GenMode::AndOnly && num_pis < 2)
    throw NetlistError("and-only netlists need at least two inputs");

  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  // Signals 0..num_pis-1 are inputs, then gates in creation order.
  std::vector<std::string> names;
  for (std::size_t i = 0; i < num_pis; ++i) names.push_back("pi" + std::to_string(i));
  Pool unread_pis, unread_gates;
  for (std::size_t i = 0; i < num_pis; ++i) unread_pis.add(i);

  std::vector<Gate> gates;
  for (std::size_t gi = 0; gi < num_gates; ++gi) {
    const std::size_t avail = names.size();
    GateType type = mode == GenMode::AndOnly ? GateType::And : random_type(rng);
    std::size_t fanin = (type == GateType::Not || type == GateType::Buf) ? 1
                        : (type == GateType::Xor || type == GateType::Xnor) ? 2
                                                                           : random_fanin(rng);
    fanin = std::min(fanin, avail);
    if (fanin == 1 && type != GateType::Not && type != GateType::Buf) type = GateType::Not;

    // Too many dangling gates: consume them before anything else.
    const bool pressure = unread_gates.size() >= num_pos;
    const std::size_t lo = avail > kWindow ? avail - kWindow : 0;
    std::vector<std::size_t> picked;
    auto take = [&](std::size_t s) {
      if (std::find(picked.begin(), picked.end(), s) != picked.end()) return false;
      picked.push_back(s);
      return true;
    };
    for (std::size_t attempt = 0; picked.size() < fanin && attempt < 64; ++attempt) {
      if (pressure && unread_gates.size() > picked.size()) {
        take(unread_gates.at(uniform(unread_gates.size())));
        continue;
      }
      const auto r = uniform(100);
      if (r < 25 && unread_pis.size() > 0) {
        take(unread_pis.at(uniform(unread_pis.size())));
      } else if (r < 50 && unread_gates.size() > 0) {
        // Recent unread signal when there is one.
        std::size_t s = unread_gates.at(uniform(unread_gates.size()));
        for (std::size_t t = 0; t < 4 && s < lo; ++t) s = unread_gates.at(uniform(unread_gates.size()));
        take(s);
      } else if (r < 90) {
        take(lo + uniform(avail - lo));
      } else {
        take(uniform(avail));
      }
    }
    for (std::size_t s = avail; picked.size() < fanin && s-- > 0;) take(s);

    Gate g;
    g.output = "g" + std::to_string(gi);
    g.type = type;
    for (auto s : picked) {
      g.inputs.push_back(names[s]);
      unread_pis.erase(s);
      unread_gates.erase(s);
    }
    gates.push_back(std::move(g));
    unread_gates.add(names.size());
    names.push_back(gates.back().output);
  }

  std::vector<bool> is_po(names.size(), false);
  std::size_t po_count = 0;
  for (std::size_t i = 0; i < unread_gates.size(); ++i) {
    is_po[unread_gates.at(i)] = true;
    ++po_count;
  }
  if (po_count > num_pos)
    throw NetlistError("generator left " + std::to_string(po_count) + " unread gates for " +
                       std::to_string(num_pos) + " outputs");
  while (po_count < num_pos) {
    const std::size_t s = num_pis + uniform(num_gates);
    if (!is_po[s]) {
      is_po[s] = true;
      ++po_count;
    }
  }
  std::vector<std::string> inputs(names.begin(), names.begin() + static_cast<long>(num_pis));
  std::vector<std::string> outputs;
  for (std::size_t s = num_pis; s < names.size(); ++s)
    if (is_po[s]) outputs.push_back(names[s]);
  return Netlist("gen", std::move(inputs), std::move(outputs), std::move(gates));
}

}  // namespace muxlink
