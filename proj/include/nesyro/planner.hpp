#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nesyro/atoms.hpp"
#include "nesyro/domain.hpp"
#include "nesyro/policy.hpp"

namespace nesyro {

struct SymbolicState {
  std::set<GroundAtom> true_atoms;

  bool operator==(const SymbolicState&) const = default;
};

struct Plan {
  std::vector<GroundAction> steps;

  std::size_t cost() const { return steps.size(); }
};

struct SearchLimits {
  std::size_t max_expanded_states = 200000;
  std::size_t max_depth = 40;
};

enum class SearchStatus { Found, Unsolvable, LimitExceeded };

struct SearchResult {
  SearchStatus status = SearchStatus::Unsolvable;
  std::optional<Plan> plan;
  std::size_t expanded = 0;
};

// Applicability under the closed-world projection: every positive
// precondition present, no negated precondition present. Returns the unmet
// precondition atoms on failure (positive ones missing, negative ones held).
struct Applicability {
  bool applicable = true;
  std::vector<std::pair<GroundAtom, bool>> missing;  // (atom, was_positive_pre)
};

Applicability applicable(const SymbolicState& state, const GroundAction& action);

SymbolicState apply_effects(const SymbolicState& state, const GroundAction& action);

// Breadth-first search with unit costs over the closed-world projection.
// Successors expand in (skill name, args) order, so the returned plan is the
// lexicographically least among the shortest ones. When `must_include` is
// given, the plan must contain an action matching that call.
SearchResult search_plan(const Domain& domain, const ObjectTable& objects,
                         const SymbolicState& init,
                         const std::set<GroundAtom>& goal,
                         const SearchLimits& limits = {},
                         const std::optional<SkillCall>& must_include = std::nullopt);

// Predicates some sensing skill can reveal. These are the facts a probe can
// later confirm, and therefore the only ones open-world planning may assume.
std::set<std::string> observable_predicates(const Domain& domain);

// Same search under the open-world relaxation used by verification: an atom
// absent from both sets is Unknown and satisfies preconditions of either
// sign provided its predicate is observable; the first use commits the
// assumed value into the state. Unknown unobservable atoms stay closed-world
// (no probe could ever justify assuming them). Goal atoms must end True (an
// Unknown goal atom is unmet).
SearchResult search_plan_optimistic(
    const Domain& domain, const ObjectTable& objects,
    const std::set<GroundAtom>& known_true, const std::set<GroundAtom>& known_false,
    const std::set<GroundAtom>& goal, const SearchLimits& limits = {},
    const std::optional<SkillCall>& must_include = std::nullopt);

struct LogicVerdict {
  int lc = 0;  // binary
  std::vector<std::pair<GroundAtom, TriValue>> missing;  // labels: Unknown/False
  std::optional<std::size_t> failing_index;
};

// Logic Confidence for the call at index n of a policy:
//   (a) project the store to Known-True atoms,
//   (b) replay the already validated prefix, requiring each step applicable,
//   (c) require the call's own preconditions to hold in the projection,
//   (d) require an open-world plan from the pre-prefix projection that
//       reaches the goal and includes the call.
// The strict precondition check in (c) is what routes Unknown atoms to the
// probe machinery; (d) is relaxed because later steps get their own turn.
LogicVerdict logic_confidence(const Domain& domain, const ObjectTable& objects,
                              const ObservationStore& obs,
                              const std::set<GroundAtom>& goal,
                              const std::vector<SkillCall>& policy_prefix,
                              const SkillCall& call,
                              const SearchLimits& limits = {});

// Grounds a policy call against the domain using positional arguments.
// Throws std::invalid_argument on unknown skill or arity mismatch.
GroundAction ground_call(const SkillCall& call, const Domain& domain,
                         const ObjectTable& objects);

}  // namespace nesyro
