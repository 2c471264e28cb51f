#include <unordered_map>

#include "muxlink/netlist.hpp"

namespace muxlink {

Simulator::Simulator(const Netlist& n) : num_inputs_(n.inputs().size()) {
  std::unordered_map<std::string_view, std::uint32_t> slot;
  slot.reserve(n.inputs().size() + n.gates().size());
  std::uint32_t next = 0;
  for (const auto& in : n.inputs()) slot.emplace(in, next++);
  for (std::size_t gi : n.topological_order()) slot.emplace(n.gates()[gi].output, next++);
  num_slots_ = next;

  ops_.reserve(n.gates().size());
  for (std::size_t gi : n.topological_order()) {
    const Gate& g = n.gates()[gi];
    Op op{g.type, slot.at(g.output), static_cast<std::uint32_t>(operands_.size()),
          static_cast<std::uint32_t>(g.inputs.size())};
    for (const auto& in : g.inputs) operands_.push_back(slot.at(in));
    ops_.push_back(op);
  }
  for (const auto& o : n.outputs()) output_slots_.push_back(slot.at(o));
}

void Simulator::run(std::span<const std::uint64_t> inputs, std::span<std::uint64_t> outputs) const {
  if (inputs.size() != num_inputs_ || outputs.size() != output_slots_.size())
    throw NetlistError("simulator called with wrong number of input or output words");
  std::vector<std::uint64_t> v(num_slots_);
  std::copy(inputs.begin(), inputs.end(), v.begin());
  for (const Op& op : ops_) {
    const std::uint32_t* in = operands_.data() + op.first_in;
    std::uint64_t r = 0;
    switch (op.type) {
      case GateType::And:
      case GateType::Nand:
        r = ~std::uint64_t{0};
        for (std::uint32_t i = 0; i < op.num_in; ++i) r &= v[in[i]];
        if (op.type == GateType::Nand) r = ~r;
        break;
      case GateType::Or:
      case GateType::Nor:
        for (std::uint32_t i = 0; i < op.num_in; ++i) r |= v[in[i]];
        if (op.type == GateType::Nor) r = ~r;
        break;
      case GateType::Xor: r = v[in[0]] ^ v[in[1]]; break;
      case GateType::Xnor: r = ~(v[in[0]] ^ v[in[1]]); break;
      case GateType::Not: r = ~v[in[0]]; break;
      case GateType::Buf: r = v[in[0]]; break;
      case GateType::Mux: r = (~v[in[0]] & v[in[1]]) | (v[in[0]] & v[in[2]]); break;
    }
    v[op.out] = r;
  }
  for (std::size_t i = 0; i < output_slots_.size(); ++i) outputs[i] = v[output_slots_[i]];
}

}  // namespace muxlink
