// Gate-level combinational netlist IR, BENCH I/O, simulation and key-gate tracing.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace muxlink {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed BENCH text. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& msg);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Structural violation: undefined wire, duplicate definition, arity, cycle.
class NetlistError : public Error {
 public:
  using Error::Error;
};

class CycleError : public NetlistError {
 public:
  explicit CycleError(std::string wire);
  const std::string& wire() const { return wire_; }

 private:
  std::string wire_;
};

/// Key inputs used in a way the attack cannot model (not a MUX select, unused, ...).
class UnsupportedLockError : public Error {
 public:
  using Error::Error;
};

enum class GateType : std::uint8_t { And, Nand, Or, Nor, Xor, Xnor, Not, Buf, Mux };

// Non-MUX gate types form the node feature alphabet, in enum order.
inline constexpr std::size_t kNumFeatureGateTypes = 8;

std::string_view to_string(GateType type);
/// Case-insensitive; accepts INV for NOT and BUFF for BUF.
std::optional<GateType> parse_gate_type(std::string_view name);

struct Gate {
  std::string output;
  GateType type;
  std::vector<std::string> inputs;
};

/// Throws NetlistError unless NOT/BUF have 1 input, XOR/XNOR 2, MUX 3, others >= 2.
void validate_arity(const Gate& g);

/// Returns N for a wire named `keyinput<N>`.
std::optional<int> key_index_of(std::string_view wire);
std::string key_input_name(int index);

/// Immutable, validated combinational netlist.
///
/// Construction checks that every wire is defined exactly once, arities are
/// legal, and the gate graph is acyclic. Key inputs are the primary inputs
/// named `keyinput<N>`; their indices must be exactly 0..K-1.
class Netlist {
 public:
  Netlist(std::string name, std::vector<std::string> inputs,
          std::vector<std::string> outputs, std::vector<Gate> gates);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& inputs() const { return inputs_; }
  const std::vector<std::string>& outputs() const { return outputs_; }
  const std::vector<Gate>& gates() const { return gates_; }

  /// Key input names ordered by key index.
  const std::vector<std::string>& key_inputs() const { return key_inputs_; }
  std::size_t key_size() const { return key_inputs_.size(); }
  /// Primary inputs that are not key inputs, in declaration order.
  std::vector<std::string> data_inputs() const;

  bool is_input(std::string_view wire) const;
  bool is_output(std::string_view wire) const;
  bool has_wire(std::string_view wire) const;
  /// Index of the gate driving `wire`, if it is a gate output.
  std::optional<std::size_t> driver(std::string_view wire) const;
  /// Gates reading `wire`, in declaration order (a gate reading it twice appears twice).
  const std::vector<std::size_t>& readers(std::string_view wire) const;
  /// Number of gate pins plus primary outputs observing `wire`.
  std::size_t fanout_count(std::string_view wire) const;

  /// Gate indices in dependency order; ties resolved by declaration order.
  const std::vector<std::size_t>& topological_order() const { return topo_; }

 private:
  std::string name_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::vector<Gate> gates_;
  std::vector<std::string> key_inputs_;
  std::unordered_map<std::string, std::size_t> input_index_;
  std::unordered_map<std::string, std::size_t> output_count_;
  std::unordered_map<std::string, std::size_t> driver_;
  std::unordered_map<std::string, std::vector<std::size_t>> readers_;
  std::vector<std::size_t> topo_;
};

/// Same inputs and outputs (in order) and the same set of gates, each with
/// identical type and input order. Gate declaration order and name are ignored.
bool structurally_equal(const Netlist& a, const Netlist& b);

/// Kahn ordering over `gates` with declaration-order tie-breaking. Throws
/// CycleError naming a wire on a cycle.
std::vector<std::size_t> topological_order(const std::vector<Gate>& gates);
inline const std::vector<std::size_t>& topological_order(const Netlist& n) {
  return n.topological_order();
}

Netlist parse_bench(std::istream& in, std::string name = "netlist");
Netlist parse_bench(std::string_view text, std::string name = "netlist");
Netlist read_bench_file(const std::string& path);
void write_bench(const Netlist& n, std::ostream& out);
std::string write_bench(const Netlist& n);
void write_bench_file(const Netlist& n, const std::string& path);

using Assignment = std::map<std::string, bool, std::less<>>;

/// Bit-parallel evaluator: each 64-bit word carries 64 independent patterns.
class Simulator {
 public:
  explicit Simulator(const Netlist& n);

  std::size_t num_inputs() const { return num_inputs_; }
  std::size_t num_outputs() const { return output_slots_.size(); }

  /// `inputs` is indexed like Netlist::inputs(); `outputs` like Netlist::outputs().
  void run(std::span<const std::uint64_t> inputs, std::span<std::uint64_t> outputs) const;

 private:
  struct Op {
    GateType type;
    std::uint32_t out;
    std::uint32_t first_in;
    std::uint32_t num_in;
  };
  std::size_t num_inputs_ = 0;
  std::size_t num_slots_ = 0;
  std::vector<Op> ops_;
  std::vector<std::uint32_t> operands_;
  std::vector<std::uint32_t> output_slots_;
};

/// Evaluates every primary output. `pi` must assign every primary input
/// (including key inputs); throws NetlistError otherwise.
Assignment simulate(const Netlist& n, const Assignment& pi);

struct KeyGateRecord {
  std::string mux_output;
  std::string key_input;
  int key_index = 0;
  std::string data_a;  // selected when the key bit is 0
  std::string data_b;  // selected when the key bit is 1
  std::vector<std::string> sinks;  // outputs of gates reading mux_output
  bool drives_output = false;      // mux_output is also a primary output
};

/// One record per MUX whose select is a key input, ordered by key index and
/// then declaration order.
std::vector<KeyGateRecord> trace_key_gates(const Netlist& n);

}  // namespace muxlink
