#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nesyro/atoms.hpp"

namespace nesyro {

struct ObjectType {
  std::string name;
  std::optional<std::string> parent;

  auto operator<=>(const ObjectType&) const = default;
};

struct Predicate {
  std::string name;
  std::vector<std::string> param_types;

  std::size_t arity() const { return param_types.size(); }
  auto operator<=>(const Predicate&) const = default;
};

// A predicate applied to schema parameters and/or constants, with a sign.
// Terms starting with '?' are variables.
struct AtomTemplate {
  bool positive = true;
  std::string predicate;
  std::vector<std::string> terms;

  auto operator<=>(const AtomTemplate&) const = default;

  std::string str() const;
};

// Parses "(pred ?x obj)" or "(not (pred ?x))" into a template.
AtomTemplate parse_atom_template(const std::string& text);

// Probe/safety metadata attached to a skill outside the PDDL text.
struct SkillMeta {
  bool safe = false;
  bool sensing = false;
  std::vector<AtomTemplate> reveals;
  bool irreversible_on_violation = false;
  std::vector<AtomTemplate> damage_effects;

  auto operator<=>(const SkillMeta&) const = default;
};

struct SkillSchema {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;  // (?var, type)
  std::vector<AtomTemplate> preconditions;
  std::vector<AtomTemplate> effects;
  SkillMeta meta;

  auto operator<=>(const SkillSchema&) const = default;
};

struct Domain {
  std::string name;
  std::vector<ObjectType> types;
  std::vector<Predicate> predicates;
  std::vector<SkillSchema> skills;

  const Predicate* find_predicate(const std::string& name) const;
  const SkillSchema* find_skill(const std::string& name) const;
  const ObjectType* find_type(const std::string& name) const;

  // True if `t` equals `ancestor` or descends from it in the type forest.
  bool type_is_a(const std::string& t, const std::string& ancestor) const;

  auto operator<=>(const Domain&) const = default;
};

// Scenario object table: object name -> declared type.
using ObjectTable = std::map<std::string, std::string>;

struct GroundAction {
  std::string skill;
  std::vector<std::string> args;
  std::vector<std::pair<bool, GroundAtom>> preconditions;  // (positive?, atom)
  std::vector<std::pair<bool, GroundAtom>> effects;        // (add?, atom)

  auto operator<=>(const GroundAction&) const = default;

  std::string str() const;
};

using Binding = std::map<std::string, std::string>;

// Instantiates a schema under a parameter binding, enforcing that each bound
// object's type is the declared parameter type or a descendant of it.
// Throws std::invalid_argument naming the offending parameter and object.
GroundAction ground(const SkillSchema& schema, const Binding& binding,
                    const ObjectTable& objects, const Domain& domain);

// Instantiates a single template under a binding; unbound variables throw.
GroundAtom instantiate(const AtomTemplate& tmpl, const Binding& binding);

// All type-correct bindings of a schema over the object table, in
// lexicographic argument order.
std::vector<Binding> enumerate_bindings(const SkillSchema& schema,
                                        const ObjectTable& objects,
                                        const Domain& domain);

// All ground actions of the domain over the object table, sorted by
// (skill name, args) so downstream search is deterministic.
std::vector<GroundAction> ground_all(const Domain& domain,
                                     const ObjectTable& objects);

// All well-typed ground atoms over the object table, sorted. This is the
// finite universe the simulator's truth assignment ranges over.
std::vector<GroundAtom> atom_universe(const Domain& domain,
                                      const ObjectTable& objects);

// Loads the JSON metadata sidecar (skill name -> SkillMeta) into the domain's
// skills. Unlisted skills keep default metadata. Validates the
// sensing/reveals invariants. Throws std::runtime_error on violations.
void apply_skill_meta_json(Domain& domain, const std::string& json_text);

}  // namespace nesyro
