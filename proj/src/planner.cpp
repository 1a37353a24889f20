#include "nesyro/planner.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace nesyro {

namespace {

// Tri-valued planning state: atoms in neither set are Unknown. Closed-world
// search keeps the invariant false = universe \ true by seeding every
// universe atom into one of the sets.
struct TriState {
  std::set<GroundAtom> t;
  std::set<GroundAtom> f;
  std::set<GroundAtom> assumed;  // subset of t held only by assumption

  std::string key() const {
    std::ostringstream out;
    for (const auto& a : t) out << a.str() << '|';
    out << '#';
    for (const auto& a : f) out << a.str() << '|';
    out << '#';
    for (const auto& a : assumed) out << a.str() << '|';
    return out.str();
  }
};

// Checks preconditions against a tri-state, committing assumed values for
// Unknown observable atoms (first use fixes the value). Returns false on a
// definite violation. Mirrors the verifier's chain semantics so that plans
// found here survive verification.
bool apply_action_open(TriState& state, const GroundAction& action,
                       const std::set<std::string>* observable) {
  for (const auto& [positive, atom] : action.preconditions) {
    bool in_t = state.t.count(atom) > 0;
    bool in_f = state.f.count(atom) > 0;
    bool assumable =
        observable == nullptr || observable->count(atom.predicate) > 0;
    if (positive) {
      if (in_f) return false;
      if (!in_t) {
        if (!assumable) return false;
        state.t.insert(atom);
        state.assumed.insert(atom);
      }
    } else {
      if (in_t) return false;
      if (!in_f) state.f.insert(atom);
    }
  }
  for (const auto& [add, atom] : action.effects) {
    if (add) {
      state.f.erase(atom);
      state.t.insert(atom);
      state.assumed.erase(atom);
    } else {
      state.t.erase(atom);
      state.assumed.erase(atom);
      state.f.insert(atom);
    }
  }
  return true;
}

SearchResult bfs(const Domain& domain, const ObjectTable& objects,
                 TriState init, const std::set<GroundAtom>& goal,
                 const SearchLimits& limits,
                 const std::optional<SkillCall>& must_include,
                 const std::set<std::string>* observable) {
  const std::vector<GroundAction> actions = ground_all(domain, objects);

  auto goal_met = [&](const TriState& s, bool included) {
    if (must_include && !included) return false;
    for (const auto& g : goal) {
      if (s.t.count(g) == 0 || s.assumed.count(g) > 0) return false;
    }
    return true;
  };
  auto matches = [&](const GroundAction& a) {
    return must_include && a.skill == must_include->name &&
           a.args == must_include->args;
  };

  struct Node {
    TriState state;
    bool included;
    std::size_t depth;
    long parent;
    int action;  // index into `actions`
  };

  std::deque<std::size_t> frontier;
  std::vector<Node> nodes;
  std::unordered_set<std::string> visited;
  SearchResult result;

  nodes.push_back({std::move(init), false, 0, -1, -1});
  visited.insert(nodes[0].state.key() + (nodes[0].included ? "!1" : "!0"));
  frontier.push_back(0);

  auto extract = [&](std::size_t idx) {
    Plan plan;
    std::vector<int> chain;
    for (long cur = static_cast<long>(idx); cur >= 0; cur = nodes[cur].parent) {
      if (nodes[cur].action >= 0) chain.push_back(nodes[cur].action);
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      plan.steps.push_back(actions[*it]);
    }
    return plan;
  };

  if (goal_met(nodes[0].state, nodes[0].included)) {
    result.status = SearchStatus::Found;
    result.plan = Plan{};
    return result;
  }

  while (!frontier.empty()) {
    std::size_t idx = frontier.front();
    frontier.pop_front();
    if (result.expanded >= limits.max_expanded_states) {
      result.status = SearchStatus::LimitExceeded;
      return result;
    }
    ++result.expanded;
    if (nodes[idx].depth >= limits.max_depth) continue;

    for (int ai = 0; ai < static_cast<int>(actions.size()); ++ai) {
      TriState next = nodes[idx].state;
      if (!apply_action_open(next, actions[ai], observable)) continue;
      bool included = nodes[idx].included || matches(actions[ai]);
      std::string key = next.key() + (included ? "!1" : "!0");
      if (!visited.insert(std::move(key)).second) continue;
      nodes.push_back({std::move(next), included, nodes[idx].depth + 1,
                       static_cast<long>(idx), ai});
      if (goal_met(nodes.back().state, included)) {
        result.status = SearchStatus::Found;
        result.plan = extract(nodes.size() - 1);
        return result;
      }
      frontier.push_back(nodes.size() - 1);
    }
  }
  // Depth cutoff means the space was not exhausted; report a limit, not a proof.
  bool hit_depth = false;
  for (const auto& n : nodes) {
    if (n.depth >= limits.max_depth) hit_depth = true;
  }
  result.status = hit_depth ? SearchStatus::LimitExceeded : SearchStatus::Unsolvable;
  return result;
}

}  // namespace

Applicability applicable(const SymbolicState& state, const GroundAction& action) {
  Applicability out;
  for (const auto& [positive, atom] : action.preconditions) {
    bool held = state.true_atoms.count(atom) > 0;
    if (positive != held) {
      out.applicable = false;
      out.missing.emplace_back(atom, positive);
    }
  }
  return out;
}

SymbolicState apply_effects(const SymbolicState& state, const GroundAction& action) {
  SymbolicState next = state;
  for (const auto& [add, atom] : action.effects) {
    if (add) {
      next.true_atoms.insert(atom);
    } else {
      next.true_atoms.erase(atom);
    }
  }
  return next;
}

SearchResult search_plan(const Domain& domain, const ObjectTable& objects,
                         const SymbolicState& init,
                         const std::set<GroundAtom>& goal,
                         const SearchLimits& limits,
                         const std::optional<SkillCall>& must_include) {
  TriState state;
  state.t = init.true_atoms;
  for (const auto& atom : atom_universe(domain, objects)) {
    if (state.t.count(atom) == 0) state.f.insert(atom);
  }
  return bfs(domain, objects, std::move(state), goal, limits, must_include,
             nullptr);
}

std::set<std::string> observable_predicates(const Domain& domain) {
  std::set<std::string> out;
  for (const auto& skill : domain.skills) {
    if (!skill.meta.sensing) continue;
    for (const auto& reveal : skill.meta.reveals) out.insert(reveal.predicate);
  }
  return out;
}

SearchResult search_plan_optimistic(
    const Domain& domain, const ObjectTable& objects,
    const std::set<GroundAtom>& known_true, const std::set<GroundAtom>& known_false,
    const std::set<GroundAtom>& goal, const SearchLimits& limits,
    const std::optional<SkillCall>& must_include) {
  TriState state;
  state.t = known_true;
  state.f = known_false;
  const std::set<std::string> observable = observable_predicates(domain);
  return bfs(domain, objects, std::move(state), goal, limits, must_include,
             &observable);
}

GroundAction ground_call(const SkillCall& call, const Domain& domain,
                         const ObjectTable& objects) {
  const SkillSchema* schema = domain.find_skill(call.name);
  if (schema == nullptr) {
    throw std::invalid_argument("unknown skill " + call.name);
  }
  if (schema->params.size() != call.args.size()) {
    throw std::invalid_argument("skill " + call.name + " expects " +
                                std::to_string(schema->params.size()) +
                                " arguments, got " +
                                std::to_string(call.args.size()));
  }
  Binding binding;
  for (std::size_t i = 0; i < call.args.size(); ++i) {
    binding[schema->params[i].first] = call.args[i];
  }
  return ground(*schema, binding, objects, domain);
}

LogicVerdict logic_confidence(const Domain& domain, const ObjectTable& objects,
                              const ObservationStore& obs,
                              const std::set<GroundAtom>& goal,
                              const std::vector<SkillCall>& policy_prefix,
                              const SkillCall& call,
                              const SearchLimits& limits) {
  LogicVerdict verdict;
  auto label = [&](const GroundAtom& atom) {
    TriValue v = obs.lookup(atom);
    return v == TriValue::False ? TriValue::False : TriValue::Unknown;
  };

  SymbolicState projected;
  for (const auto& atom : obs.true_atoms()) projected.true_atoms.insert(atom);
  const SymbolicState pre_prefix = projected;

  for (std::size_t i = 0; i < policy_prefix.size(); ++i) {
    GroundAction action = ground_call(policy_prefix[i], domain, objects);
    Applicability check = applicable(projected, action);
    if (!check.applicable) {
      verdict.lc = 0;
      verdict.failing_index = i;
      for (const auto& [atom, positive] : check.missing) {
        verdict.missing.emplace_back(atom,
                                     positive ? label(atom) : TriValue::True);
      }
      return verdict;
    }
    projected = apply_effects(projected, action);
  }

  GroundAction action = ground_call(call, domain, objects);
  Applicability check = applicable(projected, action);
  if (!check.applicable) {
    verdict.lc = 0;
    verdict.failing_index = policy_prefix.size();
    for (const auto& [atom, positive] : check.missing) {
      verdict.missing.emplace_back(atom, positive ? label(atom) : TriValue::True);
    }
    return verdict;
  }

  std::set<GroundAtom> known_false;
  for (const auto& [atom, value] : obs.entries()) {
    if (!value) known_false.insert(atom);
  }
  SearchResult reach = search_plan_optimistic(domain, objects,
                                              pre_prefix.true_atoms, known_false,
                                              goal, limits, call);
  if (reach.status != SearchStatus::Found) {
    verdict.lc = 0;
    verdict.failing_index = policy_prefix.size();
    for (const auto& g : goal) {
      if (projected.true_atoms.count(g) == 0) {
        verdict.missing.emplace_back(g, label(g));
      }
    }
    return verdict;
  }
  verdict.lc = 1;
  return verdict;
}

}  // namespace nesyro
