// D-MUX (eD-MUX policy over S1-S4) and symmetric (S5) MUX-based logic locking.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "muxlink/netlist.hpp"

namespace muxlink {

enum class LockStrategy : std::uint8_t { S1, S2, S3, S4, S5 };

std::string_view to_string(LockStrategy s);
std::optional<LockStrategy> parse_lock_strategy(std::string_view s);

/// Number of key bits one locality of this strategy consumes.
int key_bits_for(LockStrategy s);

/// One locked MUX group.
///
/// `f_i`/`f_j` are the shared MUX data inputs, listed in the data-input order
/// of the first MUX. `g_i` is the sink gate of the first MUX, `g_j` the sink of
/// the second (empty for S2/S3). `key_bits[m]` selects `mux_outputs[m]`; for S4
/// both MUXes share `key_bits[0]`.
struct Locality {
  LockStrategy strategy = LockStrategy::S4;
  std::string f_i, f_j;
  std::string g_i, g_j;
  std::vector<int> key_bits;
  std::vector<std::string> mux_outputs;
};

/// A candidate site before key indices and MUX names are assigned. `truth_i`
/// is the wire that really drives `g_i`; `truth_j` drives `g_j`.
struct LockSite {
  LockStrategy strategy = LockStrategy::S4;
  std::string f_i, f_j;
  std::string g_i, g_j;
  std::string truth_i, truth_j;
};

struct KeyVector {
  std::vector<std::uint8_t> bits;
  std::size_t size() const { return bits.size(); }
  bool operator==(const KeyVector&) const = default;
};

KeyVector parse_key(std::string_view text);
std::string to_string(const KeyVector& key);
KeyVector read_key_file(const std::string& path);
void write_key_file(const KeyVector& key, const std::string& path);

struct LockResult {
  Netlist locked;
  KeyVector key;
  std::vector<Locality> localities;
};

/// Requested key size cannot be realized on this netlist.
class InfeasibleLockError : public Error {
 public:
  InfeasibleLockError(std::size_t requested, std::size_t max_achievable);
  std::size_t requested() const { return requested_; }
  std::size_t max_achievable() const { return max_achievable_; }

 private:
  std::size_t requested_;
  std::size_t max_achievable_;
};

/// Incremental locking state over an unlocked netlist. Tracks wires already
/// consumed by earlier localities and the connectivity added by their MUXes,
/// so later sites never nest or close a loop.
class LockSession {
 public:
  explicit LockSession(const Netlist& original);

  /// A random site satisfying the strategy's fan-out, acyclicity and
  /// no-reduction constraints, or nullopt when none exists.
  std::optional<LockSite> find_site(LockStrategy strategy, std::mt19937_64& rng) const;

  /// Inserts the MUX(es) for `site` using the next key indices, with the data
  /// order randomized by `rng`.
  const Locality& apply(const LockSite& site, std::mt19937_64& rng);

  std::size_t key_bits_used() const { return key_.size(); }
  const std::vector<Locality>& localities() const { return localities_; }
  LockResult finish() const;

 private:
  bool reaches(std::size_t from, std::size_t to) const;
  bool usable_driver(std::size_t node) const;
  std::optional<LockSite> find_site_impl(LockStrategy strategy, std::mt19937_64& rng) const;

  const Netlist& original_;
  // Node ids: gate indices of the original netlist, then inserted MUXes.
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<bool> used_as_f_;
  std::vector<bool> used_as_g_;
  std::vector<bool> observable_;
  std::vector<Gate> gates_;
  std::vector<Locality> localities_;
  std::vector<std::uint8_t> key_;
  std::size_t mux_counter_ = 0;
};

/// Stand-alone site search on an unlocked netlist.
std::optional<LockSite> find_viable_sites(const Netlist& n, LockStrategy strategy,
                                          std::mt19937_64& rng);

/// eD-MUX: each locality draws uniformly among the viable members of
/// {S1, S2, S3} and falls back to S4.
LockResult lock_dmux(const Netlist& n, std::size_t key_size, std::uint64_t seed);

/// Symmetric MUX locking: key_size / 2 localities of strategy S5.
LockResult lock_symmetric(const Netlist& n, std::size_t key_size, std::uint64_t seed);

/// Netlist with every key MUX replaced by a BUF of the data input its key
/// bits select. `key` may contain any assignment.
Netlist resolve_key(const Netlist& locked, const KeyVector& key);

/// Gates of `original` that lie in the transitive fan-in of some primary output.
std::vector<std::string> observable_gates(const Netlist& n);

/// True when every gate of `original` that is observable there is still
/// observable in `locked` under `key`.
bool preserves_observability(const Netlist& original, const Netlist& locked,
                             const KeyVector& key);

/// Key assignments to one locality that must not reduce the circuit, with all
/// other bits at their correct values. For S5 this is the complemented pair;
/// for the other strategies every wrong value of the locality's bits.
std::vector<KeyVector> wrong_locality_keys(const Locality& loc, const KeyVector& correct);

void write_manifest(const std::vector<Locality>& localities, std::ostream& out);
void write_manifest_file(const std::vector<Locality>& localities, const std::string& path);
std::vector<Locality> read_manifest(std::istream& in);

}  // namespace muxlink
