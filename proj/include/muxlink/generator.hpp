// Random combinational benchmark generator.

#pragma once

#include <cstdint>
#include <string_view>

#include "muxlink/netlist.hpp"

namespace muxlink {

enum class GenMode : std::uint8_t { Random, AndOnly };

GenMode parse_gen_mode(std::string_view s);

/// Acyclic netlist with PIs `pi<i>` and gates `g<i>`. Gate inputs come mostly
/// from a window of recent signals, and unread signals are preferred, so every
/// gate reaches an output. Signals nobody reads become POs; further POs are
/// drawn at random until `num_pos` is reached. Throws NetlistError when there
/// are more dangling gates than `num_pos` allows or the counts are not positive.
Netlist generate_netlist(std::size_t num_gates, std::size_t num_pis, std::size_t num_pos,
                         GenMode mode, std::uint64_t seed);

}  // namespace muxlink
