#include "nesyro/atoms.hpp"

#include <sstream>
#include <stdexcept>

namespace nesyro {

std::string GroundAtom::str() const {
  std::ostringstream out;
  out << '(' << predicate;
  for (const auto& a : args) out << ' ' << a;
  out << ')';
  return out.str();
}

GroundAtom parse_ground_atom(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t");
  std::size_t end = text.find_last_not_of(" \t");
  if (begin == std::string::npos || text[begin] != '(' || text[end] != ')') {
    throw std::invalid_argument("malformed atom: " + text);
  }
  std::istringstream in(text.substr(begin + 1, end - begin - 1));
  GroundAtom atom;
  if (!(in >> atom.predicate)) {
    throw std::invalid_argument("malformed atom: " + text);
  }
  std::string tok;
  while (in >> tok) atom.args.push_back(tok);
  return atom;
}

TriValue ObservationStore::lookup(const GroundAtom& atom) const {
  auto it = entries_.find(atom);
  if (it == entries_.end()) return TriValue::Unknown;
  return it->second ? TriValue::True : TriValue::False;
}

bool ObservationStore::merge(const GroundAtom& atom, bool value) {
  auto [it, inserted] = entries_.try_emplace(atom, value);
  if (!inserted && it->second != value) {
    it->second = value;
    ++conflicts_;
  }
  return inserted;
}

std::vector<GroundAtom> ObservationStore::true_atoms() const {
  std::vector<GroundAtom> out;
  for (const auto& [atom, value] : entries_) {
    if (value) out.push_back(atom);
  }
  return out;
}

}  // namespace nesyro
