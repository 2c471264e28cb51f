#include "muxlink/netlist.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <queue>
#include <unordered_set>

namespace muxlink {

ParseError::ParseError(std::size_t line, const std::string& msg)
    : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}

CycleError::CycleError(std::string wire)
    : NetlistError("combinational cycle through wire '" + wire + "'"), wire_(std::move(wire)) {}

namespace {

constexpr std::array<std::string_view, 9> kGateNames = {"AND", "NAND", "OR",  "NOR", "XOR",
                                                        "XNOR", "NOT", "BUF", "MUX"};

const std::vector<std::size_t> kNoReaders;

}  // namespace

void validate_arity(const Gate& g) {
  const std::size_t n = g.inputs.size();
  bool ok = false;
  switch (g.type) {
    case GateType::Not:
    case GateType::Buf: ok = n == 1; break;
    case GateType::Xor:
    case GateType::Xnor: ok = n == 2; break;
    case GateType::Mux: ok = n == 3; break;
    default: ok = n >= 2; break;
  }
  if (!ok) {
    throw NetlistError("gate '" + g.output + "': " + std::string(to_string(g.type)) +
                       " cannot take " + std::to_string(n) + " input(s)");
  }
}

std::string_view to_string(GateType type) { return kGateNames[static_cast<std::size_t>(type)]; }

std::optional<GateType> parse_gate_type(std::string_view name) {
  std::string upper(name);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "INV") return GateType::Not;
  if (upper == "BUFF") return GateType::Buf;
  for (std::size_t i = 0; i < kGateNames.size(); ++i) {
    if (upper == kGateNames[i]) return static_cast<GateType>(i);
  }
  return std::nullopt;
}

std::optional<int> key_index_of(std::string_view wire) {
  constexpr std::string_view prefix = "keyinput";
  if (wire.size() <= prefix.size() || wire.substr(0, prefix.size()) != prefix) return std::nullopt;
  auto digits = wire.substr(prefix.size());
  if (digits.size() > 1 && digits.front() == '0') return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return value;
}

std::string key_input_name(int index) { return "keyinput" + std::to_string(index); }

std::vector<std::size_t> topological_order(const std::vector<Gate>& gates) {
  std::unordered_map<std::string_view, std::size_t> driver;
  driver.reserve(gates.size());
  for (std::size_t i = 0; i < gates.size(); ++i) driver.emplace(gates[i].output, i);

  std::vector<std::size_t> pending(gates.size(), 0);
  std::vector<std::vector<std::size_t>> succ(gates.size());
  for (std::size_t i = 0; i < gates.size(); ++i) {
    for (const auto& in : gates[i].inputs) {
      auto it = driver.find(in);
      if (it == driver.end()) continue;
      ++pending[i];
      succ[it->second].push_back(i);
    }
  }

  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < gates.size(); ++i)
    if (pending[i] == 0) ready.push(i);

  std::vector<std::size_t> order;
  order.reserve(gates.size());
  while (!ready.empty()) {
    std::size_t g = ready.top();
    ready.pop();
    order.push_back(g);
    for (std::size_t s : succ[g])
      if (--pending[s] == 0) ready.push(s);
  }
  if (order.size() == gates.size()) return order;

  // Walk unresolved predecessors until a gate repeats; that gate is on a cycle.
  std::size_t cur = 0;
  while (pending[cur] == 0) ++cur;
  std::vector<bool> seen(gates.size(), false);
  while (!seen[cur]) {
    seen[cur] = true;
    for (const auto& in : gates[cur].inputs) {
      auto it = driver.find(in);
      if (it != driver.end() && pending[it->second] != 0) {
        cur = it->second;
        break;
      }
    }
  }
  throw CycleError(gates[cur].output);
}

Netlist::Netlist(std::string name, std::vector<std::string> inputs,
                 std::vector<std::string> outputs, std::vector<Gate> gates)
    : name_(std::move(name)),
      inputs_(std::move(inputs)),
      outputs_(std::move(outputs)),
      gates_(std::move(gates)) {
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    if (!input_index_.emplace(inputs_[i], i).second)
      throw NetlistError("input '" + inputs_[i] + "' declared twice");
  }
  for (std::size_t i = 0; i < gates_.size(); ++i) {
    const Gate& g = gates_[i];
    if (input_index_.count(g.output) || !driver_.emplace(g.output, i).second)
      throw NetlistError("wire '" + g.output + "' defined twice");
    validate_arity(g);
  }
  for (std::size_t i = 0; i < gates_.size(); ++i) {
    for (const auto& in : gates_[i].inputs) {
      if (!has_wire(in))
        throw NetlistError("gate '" + gates_[i].output + "' reads undefined wire '" + in + "'");
      readers_[in].push_back(i);
    }
  }
  for (const auto& out : outputs_) {
    if (!has_wire(out)) throw NetlistError("output '" + out + "' is undefined");
    ++output_count_[out];
  }

  std::vector<std::pair<int, std::string>> keys;
  for (const auto& in : inputs_)
    if (auto k = key_index_of(in)) keys.emplace_back(*k, in);
  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].first != static_cast<int>(i))
      throw NetlistError("key inputs must be numbered keyinput0..keyinput" +
                         std::to_string(keys.size() - 1));
    key_inputs_.push_back(keys[i].second);
  }

  topo_ = muxlink::topological_order(gates_);
}

std::vector<std::string> Netlist::data_inputs() const {
  std::vector<std::string> out;
  for (const auto& in : inputs_)
    if (!key_index_of(in)) out.push_back(in);
  return out;
}

bool Netlist::is_input(std::string_view wire) const {
  return input_index_.count(std::string(wire)) != 0;
}

bool Netlist::is_output(std::string_view wire) const {
  return output_count_.count(std::string(wire)) != 0;
}

bool Netlist::has_wire(std::string_view wire) const {
  std::string w(wire);
  return input_index_.count(w) != 0 || driver_.count(w) != 0;
}

std::optional<std::size_t> Netlist::driver(std::string_view wire) const {
  auto it = driver_.find(std::string(wire));
  if (it == driver_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::size_t>& Netlist::readers(std::string_view wire) const {
  auto it = readers_.find(std::string(wire));
  return it == readers_.end() ? kNoReaders : it->second;
}

std::size_t Netlist::fanout_count(std::string_view wire) const {
  std::size_t n = readers(wire).size();
  auto it = output_count_.find(std::string(wire));
  if (it != output_count_.end()) n += it->second;
  return n;
}

bool structurally_equal(const Netlist& a, const Netlist& b) {
  if (a.inputs() != b.inputs() || a.outputs() != b.outputs()) return false;
  if (a.gates().size() != b.gates().size()) return false;
  for (const auto& g : a.gates()) {
    auto idx = b.driver(g.output);
    if (!idx) return false;
    const Gate& other = b.gates()[*idx];
    if (other.type != g.type || other.inputs != g.inputs) return false;
  }
  return true;
}

Assignment simulate(const Netlist& n, const Assignment& pi) {
  std::vector<std::uint64_t> in(n.inputs().size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    auto it = pi.find(n.inputs()[i]);
    if (it == pi.end()) throw NetlistError("no value for input '" + n.inputs()[i] + "'");
    in[i] = it->second ? 1u : 0u;
  }
  std::vector<std::uint64_t> out(n.outputs().size());
  Simulator(n).run(in, out);
  Assignment result;
  for (std::size_t i = 0; i < out.size(); ++i) result[n.outputs()[i]] = (out[i] & 1u) != 0;
  return result;
}

std::vector<KeyGateRecord> trace_key_gates(const Netlist& n) {
  std::vector<KeyGateRecord> records;
  for (const auto& key : n.key_inputs()) {
    const auto& readers = n.readers(key);
    if (readers.empty() && !n.is_output(key))
      throw UnsupportedLockError("key input '" + key + "' drives nothing");
    if (n.is_output(key))
      throw UnsupportedLockError("key input '" + key + "' is observed directly at an output");
    for (std::size_t gi : readers) {
      const Gate& g = n.gates()[gi];
      if (g.type != GateType::Mux)
        throw UnsupportedLockError("key input '" + key + "' drives non-MUX gate '" + g.output + "'");
      if (g.inputs[0] != key || g.inputs[1] == key || g.inputs[2] == key)
        throw UnsupportedLockError("key input '" + key + "' drives a data port of MUX '" +
                                   g.output + "'");
      if (key_index_of(g.inputs[1]) || key_index_of(g.inputs[2]))
        throw UnsupportedLockError("MUX '" + g.output + "' has a key input on a data port");
      if (g.inputs[1] == g.inputs[2])
        throw UnsupportedLockError("MUX '" + g.output + "' has identical data inputs");
      KeyGateRecord rec;
      rec.mux_output = g.output;
      rec.key_input = key;
      rec.key_index = *key_index_of(key);
      rec.data_a = g.inputs[1];
      rec.data_b = g.inputs[2];
      for (std::size_t r : n.readers(g.output)) {
        const auto& sink = n.gates()[r].output;
        if (std::find(rec.sinks.begin(), rec.sinks.end(), sink) == rec.sinks.end())
          rec.sinks.push_back(sink);
      }
      rec.drives_output = n.is_output(g.output);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

}  // namespace muxlink
