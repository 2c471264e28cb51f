#include "muxlink/locker.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace muxlink {

namespace {

template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
  std::shuffle(v.begin(), v.end(), rng);
}

bool coin(std::mt19937_64& rng) { return std::uniform_int_distribution<int>(0, 1)(rng) == 1; }

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(LockStrategy s) {
  switch (s) {
    case LockStrategy::S1: return "S1";
    case LockStrategy::S2: return "S2";
    case LockStrategy::S3: return "S3";
    case LockStrategy::S4: return "S4";
    case LockStrategy::S5: return "S5";
  }
  return "?";
}

std::optional<LockStrategy> parse_lock_strategy(std::string_view s) {
  for (auto v : {LockStrategy::S1, LockStrategy::S2, LockStrategy::S3, LockStrategy::S4,
                 LockStrategy::S5})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

int key_bits_for(LockStrategy s) {
  return (s == LockStrategy::S1 || s == LockStrategy::S5) ? 2 : 1;
}

KeyVector parse_key(std::string_view text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' '))
    text.remove_suffix(1);
  KeyVector key;
  for (char c : text) {
    if (c != '0' && c != '1') throw Error(std::string("invalid key character '") + c + "'");
    key.bits.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return key;
}

std::string to_string(const KeyVector& key) {
  std::string s;
  for (auto b : key.bits) s.push_back(b ? '1' : '0');
  return s;
}

KeyVector read_key_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open key file '" + path + "'");
  std::string line;
  std::getline(in, line);
  return parse_key(line);
}

void write_key_file(const KeyVector& key, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << to_string(key) << "\n";
}

InfeasibleLockError::InfeasibleLockError(std::size_t requested, std::size_t max_achievable)
    : Error("key size " + std::to_string(requested) + " is not achievable; maximum is " +
            std::to_string(max_achievable)),
      requested_(requested),
      max_achievable_(max_achievable) {}

LockSession::LockSession(const Netlist& original) : original_(original), gates_(original.gates()) {
  const auto& gates = original.gates();
  if (original.key_size() != 0) throw NetlistError("netlist is already locked");
  for (const auto& g : gates)
    if (g.type == GateType::Mux)
      throw NetlistError("cannot lock a netlist containing MUX gates ('" + g.output + "')");

  succ_.resize(gates.size());
  for (std::size_t i = 0; i < gates.size(); ++i)
    for (const auto& in : gates[i].inputs)
      if (auto d = original.driver(in)) succ_[*d].push_back(i);
  used_as_f_.assign(gates.size(), false);
  used_as_g_.assign(gates.size(), false);

  observable_.assign(gates.size(), false);
  const auto& topo = original.topological_order();
  for (std::size_t i = 0; i < gates.size(); ++i)
    if (original.is_output(gates[i].output)) observable_[i] = true;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    if (!observable_[*it]) continue;
    for (const auto& in : gates[*it].inputs)
      if (auto d = original.driver(in)) observable_[*d] = true;
  }
}

bool LockSession::reaches(std::size_t from, std::size_t to) const {
  if (from == to) return true;
  std::vector<char> seen(succ_.size(), 0);
  std::vector<std::size_t> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto s : succ_[v]) {
      if (s == to) return true;
      if (!seen[s]) {
        seen[s] = 1;
        stack.push_back(s);
      }
    }
  }
  return false;
}

bool LockSession::usable_driver(std::size_t node) const {
  return !used_as_f_[node] && observable_[node];
}

std::optional<LockSite> LockSession::find_site(LockStrategy strategy, std::mt19937_64& rng) const {
  return find_site_impl(strategy, rng);
}

std::optional<LockSite> LockSession::find_site_impl(LockStrategy strategy,
                                                    std::mt19937_64& rng) const {
  const auto& gates = original_.gates();
  const std::size_t n = gates.size();

  auto reads_once = [&](std::size_t g, const std::string& wire) {
    return std::count(gates_[g].inputs.begin(), gates_[g].inputs.end(), wire) == 1;
  };
  auto reads = [&](std::size_t g, const std::string& wire) {
    return std::find(gates_[g].inputs.begin(), gates_[g].inputs.end(), wire) !=
           gates_[g].inputs.end();
  };
  // Sinks of f that may be rerouted through a MUX.
  auto eligible_sinks = [&](std::size_t f) {
    std::vector<std::size_t> out;
    for (auto r : original_.readers(gates[f].output)) {
      if (used_as_g_[r] || !observable_[r] || !reads_once(r, gates[f].output)) continue;
      if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
    }
    return out;
  };
  // f keeps an observable use after losing its pin on g.
  auto observable_elsewhere = [&](std::size_t f, std::size_t g) {
    const auto& w = gates[f].output;
    if (original_.is_output(w)) return true;
    for (auto r : original_.readers(w))
      if (r != g && observable_[r]) return true;
    return false;
  };
  auto multi = [&](std::size_t f) { return original_.fanout_count(gates[f].output) >= 2; };

  // Candidate lists for the first and second driver roles.
  std::vector<std::size_t> first, second;
  for (std::size_t f = 0; f < n; ++f) {
    if (!usable_driver(f)) continue;
    switch (strategy) {
      case LockStrategy::S1:
      case LockStrategy::S2:
        if (multi(f)) first.push_back(f);
        break;
      case LockStrategy::S3:
        if (multi(f)) first.push_back(f);
        else second.push_back(f);
        break;
      case LockStrategy::S4: first.push_back(f); break;
      case LockStrategy::S5:
        if (!multi(f)) first.push_back(f);
        break;
    }
  }
  if (strategy != LockStrategy::S3) second = first;
  shuffle_in_place(first, rng);

  const bool pairwise = strategy == LockStrategy::S1 || strategy == LockStrategy::S4 ||
                        strategy == LockStrategy::S5;
  const bool must_survive = strategy == LockStrategy::S1 || strategy == LockStrategy::S2 ||
                            strategy == LockStrategy::S3;

  for (std::size_t a : first) {
    auto sinks_a = eligible_sinks(a);
    shuffle_in_place(sinks_a, rng);
    for (std::size_t ga : sinks_a) {
      if (must_survive && !observable_elsewhere(a, ga)) continue;
      // Everything downstream of ga; a driver in here would close a loop.
      std::vector<char> cone(succ_.size(), 0);
      std::vector<std::size_t> stack{ga};
      cone[ga] = 1;
      while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        for (auto s : succ_[v])
          if (!cone[s]) {
            cone[s] = 1;
            stack.push_back(s);
          }
      }

      std::vector<std::size_t> partners = second;
      shuffle_in_place(partners, rng);
      for (std::size_t b : partners) {
        if (b == a || cone[b] || reads(ga, gates[b].output)) continue;
        if (!pairwise) {
          LockSite site;
          site.strategy = strategy;
          site.f_i = gates[a].output;
          site.f_j = gates[b].output;
          site.g_i = gates[ga].output;
          site.truth_i = gates[a].output;
          return site;
        }
        auto sinks_b = eligible_sinks(b);
        shuffle_in_place(sinks_b, rng);
        for (std::size_t gb : sinks_b) {
          if (gb == ga || gb == a) continue;
          if (must_survive && !observable_elsewhere(b, gb)) continue;
          if (reads(gb, gates[a].output) || reaches(gb, a)) continue;
          LockSite site;
          site.strategy = strategy;
          site.f_i = gates[a].output;
          site.f_j = gates[b].output;
          site.g_i = gates[ga].output;
          site.g_j = gates[gb].output;
          site.truth_i = gates[a].output;
          site.truth_j = gates[b].output;
          return site;
        }
      }
    }
  }
  return std::nullopt;
}

const Locality& LockSession::apply(const LockSite& site, std::mt19937_64& rng) {
  auto node_of = [&](const std::string& w) { return *original_.driver(w); };

  auto new_mux_name = [&] {
    std::string name;
    do {
      name = "lockmux" + std::to_string(mux_counter_++);
    } while (original_.has_wire(name));
    return name;
  };

  // Reroutes the pin of `sink` that reads `truth` through a new MUX.
  auto insert_mux = [&](int key, const std::string& a, const std::string& b,
                        const std::string& sink, const std::string& truth) {
    std::string mux = new_mux_name();
    gates_.push_back(Gate{mux, GateType::Mux, {key_input_name(key), a, b}});
    std::size_t sink_node = node_of(sink);
    auto& pins = gates_[sink_node].inputs;
    *std::find(pins.begin(), pins.end(), truth) = mux;

    std::size_t mux_node = succ_.size();
    succ_.emplace_back(std::vector<std::size_t>{sink_node});
    auto& truth_succ = succ_[node_of(truth)];
    truth_succ.erase(std::find(truth_succ.begin(), truth_succ.end(), sink_node));
    succ_[node_of(a)].push_back(mux_node);
    succ_[node_of(b)].push_back(mux_node);
    used_as_g_[sink_node] = true;
    return mux;
  };

  Locality loc;
  loc.strategy = site.strategy;
  const bool swap = coin(rng);
  loc.f_i = swap ? site.f_j : site.f_i;
  loc.f_j = swap ? site.f_i : site.f_j;
  loc.g_i = site.g_i;
  loc.g_j = site.g_j;

  const int k0 = static_cast<int>(key_.size());
  const std::uint8_t bit_i = loc.f_i == site.truth_i ? 0 : 1;
  switch (site.strategy) {
    case LockStrategy::S1:
    case LockStrategy::S5:
      loc.key_bits = {k0, k0 + 1};
      loc.mux_outputs.push_back(insert_mux(k0, loc.f_i, loc.f_j, site.g_i, site.truth_i));
      loc.mux_outputs.push_back(insert_mux(k0 + 1, loc.f_i, loc.f_j, site.g_j, site.truth_j));
      key_.push_back(bit_i);
      key_.push_back(static_cast<std::uint8_t>(1 - bit_i));
      break;
    case LockStrategy::S4:
      // One key, opposite data orders: the key either passes both true wires or swaps them.
      loc.key_bits = {k0};
      loc.mux_outputs.push_back(insert_mux(k0, loc.f_i, loc.f_j, site.g_i, site.truth_i));
      loc.mux_outputs.push_back(insert_mux(k0, loc.f_j, loc.f_i, site.g_j, site.truth_j));
      key_.push_back(bit_i);
      break;
    case LockStrategy::S2:
    case LockStrategy::S3:
      loc.key_bits = {k0};
      loc.mux_outputs.push_back(insert_mux(k0, loc.f_i, loc.f_j, site.g_i, site.truth_i));
      key_.push_back(bit_i);
      break;
  }
  used_as_f_[node_of(site.f_i)] = true;
  used_as_f_[node_of(site.f_j)] = true;
  localities_.push_back(std::move(loc));
  return localities_.back();
}

LockResult LockSession::finish() const {
  std::vector<std::string> inputs = original_.inputs();
  for (std::size_t k = 0; k < key_.size(); ++k) inputs.push_back(key_input_name(static_cast<int>(k)));
  Netlist locked(original_.name() + "_locked", std::move(inputs), original_.outputs(), gates_);
  return LockResult{std::move(locked), KeyVector{key_}, localities_};
}

std::optional<LockSite> find_viable_sites(const Netlist& n, LockStrategy strategy,
                                          std::mt19937_64& rng) {
  return LockSession(n).find_site(strategy, rng);
}

namespace {

std::optional<LockSite> next_dmux_site(const LockSession& session, std::size_t remaining,
                                       std::mt19937_64& rng) {
  std::vector<LockSite> viable;
  for (auto s : {LockStrategy::S1, LockStrategy::S2, LockStrategy::S3}) {
    if (static_cast<std::size_t>(key_bits_for(s)) > remaining) continue;
    if (auto site = session.find_site(s, rng)) viable.push_back(*site);
  }
  if (!viable.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, viable.size() - 1);
    return viable[pick(rng)];
  }
  return session.find_site(LockStrategy::S4, rng);
}

}  // namespace

LockResult lock_dmux(const Netlist& n, std::size_t key_size, std::uint64_t seed) {
  if (key_size == 0) throw Error("key size must be positive");
  LockSession session(n);
  std::mt19937_64 rng(seed);
  while (session.key_bits_used() < key_size) {
    auto site = next_dmux_site(session, key_size - session.key_bits_used(), rng);
    if (!site) {
      // Keep locking without a budget to learn how far this netlist goes.
      while (auto more = next_dmux_site(session, SIZE_MAX, rng)) session.apply(*more, rng);
      throw InfeasibleLockError(key_size, session.key_bits_used());
    }
    session.apply(*site, rng);
  }
  return session.finish();
}

LockResult lock_symmetric(const Netlist& n, std::size_t key_size, std::uint64_t seed) {
  if (key_size == 0 || key_size % 2 != 0)
    throw Error("symmetric locking needs an even, positive key size (got " +
                std::to_string(key_size) + ")");
  LockSession session(n);
  std::mt19937_64 rng(seed);
  while (session.key_bits_used() < key_size) {
    auto site = session.find_site(LockStrategy::S5, rng);
    if (!site) {
      while (auto more = session.find_site(LockStrategy::S5, rng)) session.apply(*more, rng);
      throw InfeasibleLockError(key_size, session.key_bits_used());
    }
    session.apply(*site, rng);
  }
  return session.finish();
}

Netlist resolve_key(const Netlist& locked, const KeyVector& key) {
  if (key.size() != locked.key_size())
    throw Error("key has " + std::to_string(key.size()) + " bits, netlist expects " +
                std::to_string(locked.key_size()));
  std::vector<Gate> gates;
  gates.reserve(locked.gates().size());
  for (const auto& g : locked.gates()) {
    if (g.type == GateType::Mux) {
      if (auto k = key_index_of(g.inputs[0])) {
        gates.push_back(Gate{g.output, GateType::Buf, {key.bits[*k] ? g.inputs[2] : g.inputs[1]}});
        continue;
      }
    }
    for (const auto& in : g.inputs)
      if (key_index_of(in)) throw UnsupportedLockError("key input used outside a MUX select");
    gates.push_back(g);
  }
  return Netlist(locked.name(), locked.data_inputs(), locked.outputs(), std::move(gates));
}

std::vector<std::string> observable_gates(const Netlist& n) {
  std::vector<bool> obs(n.gates().size(), false);
  for (std::size_t i = 0; i < n.gates().size(); ++i)
    if (n.is_output(n.gates()[i].output)) obs[i] = true;
  const auto& topo = n.topological_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    if (!obs[*it]) continue;
    for (const auto& in : n.gates()[*it].inputs)
      if (auto d = n.driver(in)) obs[*d] = true;
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < obs.size(); ++i)
    if (obs[i]) out.push_back(n.gates()[i].output);
  return out;
}

bool preserves_observability(const Netlist& original, const Netlist& locked,
                             const KeyVector& key) {
  auto after = observable_gates(resolve_key(locked, key));
  std::unordered_set<std::string> live(after.begin(), after.end());
  for (const auto& g : observable_gates(original))
    if (!live.count(g)) return false;
  return true;
}

std::vector<KeyVector> wrong_locality_keys(const Locality& loc, const KeyVector& correct) {
  std::vector<KeyVector> out;
  if (loc.strategy == LockStrategy::S5) {
    KeyVector k = correct;
    for (int b : loc.key_bits) k.bits[b] ^= 1u;
    out.push_back(std::move(k));
    return out;
  }
  const std::size_t nbits = loc.key_bits.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << nbits); ++mask) {
    KeyVector k = correct;
    for (std::size_t i = 0; i < nbits; ++i)
      if (mask >> i & 1u) k.bits[loc.key_bits[i]] ^= 1u;
    out.push_back(std::move(k));
  }
  return out;
}

void write_manifest(const std::vector<Locality>& localities, std::ostream& out) {
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  for (const auto& loc : localities) {
    std::vector<std::string> keys, g{loc.g_i};
    for (int k : loc.key_bits) keys.push_back(std::to_string(k));
    if (!loc.g_j.empty()) g.push_back(loc.g_j);
    out << to_string(loc.strategy) << " keys=" << join(keys) << " f=" << loc.f_i << ","
        << loc.f_j << " g=" << join(g) << " mux=" << join(loc.mux_outputs) << "\n";
  }
}

void write_manifest_file(const std::vector<Locality>& localities, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_manifest(localities, out);
}

std::vector<Locality> read_manifest(std::istream& in) {
  std::vector<Locality> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tok;
    fields >> tok;
    auto strategy = parse_lock_strategy(tok);
    if (!strategy) throw Error("bad manifest line: " + line);
    Locality loc;
    loc.strategy = *strategy;
    while (fields >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) throw Error("bad manifest field: " + tok);
      auto key = tok.substr(0, eq);
      auto values = split(std::string_view(tok).substr(eq + 1), ',');
      if (key == "keys") {
        for (const auto& v : values) loc.key_bits.push_back(std::stoi(v));
      } else if (key == "f" && values.size() == 2) {
        loc.f_i = values[0];
        loc.f_j = values[1];
      } else if (key == "g") {
        loc.g_i = values[0];
        if (values.size() > 1) loc.g_j = values[1];
      } else if (key == "mux") {
        loc.mux_outputs = values;
      } else {
        throw Error("bad manifest field: " + tok);
      }
    }
    out.push_back(std::move(loc));
  }
  return out;
}

}  // namespace muxlink
