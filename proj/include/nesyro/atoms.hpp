#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace nesyro {

// A fully instantiated predicate over scenario objects, e.g. (unlocked top_drawer).
struct GroundAtom {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const GroundAtom&) const = default;

  std::string str() const;
};

// Parses the textual atom form "(pred arg1 arg2)"; a bare "(pred)" has no args.
// Throws std::invalid_argument on malformed input.
GroundAtom parse_ground_atom(const std::string& text);

enum class TriValue { True, False, Unknown };

inline const char* to_string(TriValue v) {
  switch (v) {
    case TriValue::True: return "true";
    case TriValue::False: return "false";
    default: return "unknown";
  }
}

// Open-world store of observed atoms. Atoms absent from the map are Unknown;
// merges never downgrade a Known value back to Unknown. Conflicting merges
// (True over False or vice versa) let the newest observation win and are
// counted in conflict_count.
class ObservationStore {
 public:
  TriValue lookup(const GroundAtom& atom) const;

  // Records one observation. Returns true if the atom was previously Unknown.
  bool merge(const GroundAtom& atom, bool value);

  std::size_t known_count() const { return entries_.size(); }
  std::size_t conflict_count() const { return conflicts_; }
  std::size_t history_len() const { return history_len_; }
  void bump_history() { ++history_len_; }

  const std::map<GroundAtom, bool>& entries() const { return entries_; }

  // All atoms currently Known-True, in canonical (sorted) order.
  std::vector<GroundAtom> true_atoms() const;

 private:
  std::map<GroundAtom, bool> entries_;
  std::size_t conflicts_ = 0;
  std::size_t history_len_ = 0;
};

}  // namespace nesyro
