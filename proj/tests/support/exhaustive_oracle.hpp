#pragma once

// Independent planning oracle for cross-checking search_plan. Deliberately
// shares no code with the production search: plain closed-world state sets,
// its own applicability test, its own queue.

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "nesyro/domain.hpp"

namespace nesyro::testing {

struct OracleOutcome {
  bool solvable = false;
  std::size_t optimal_length = 0;
};

inline OracleOutcome exhaustive_bfs(const Domain& domain,
                                    const ObjectTable& objects,
                                    const std::set<GroundAtom>& init,
                                    const std::set<GroundAtom>& goal,
                                    std::size_t max_states = 2000000) {
  std::vector<GroundAction> actions;
  for (const auto& schema : domain.skills) {
    for (const auto& binding : enumerate_bindings(schema, objects, domain)) {
      actions.push_back(ground(schema, binding, objects, domain));
    }
  }

  auto holds = [](const std::set<GroundAtom>& state, const GroundAction& a) {
    for (const auto& [positive, atom] : a.preconditions) {
      bool present = state.count(atom) > 0;
      if (positive != present) return false;
    }
    return true;
  };
  auto satisfied = [&](const std::set<GroundAtom>& state) {
    for (const auto& g : goal) {
      if (state.count(g) == 0) return false;
    }
    return true;
  };

  std::map<std::set<GroundAtom>, std::size_t> dist;
  std::deque<std::set<GroundAtom>> frontier;
  dist[init] = 0;
  frontier.push_back(init);
  if (satisfied(init)) return {true, 0};

  while (!frontier.empty() && dist.size() < max_states) {
    std::set<GroundAtom> state = frontier.front();
    frontier.pop_front();
    std::size_t d = dist[state];
    for (const auto& action : actions) {
      if (!holds(state, action)) continue;
      std::set<GroundAtom> next = state;
      for (const auto& [add, atom] : action.effects) {
        if (add) {
          next.insert(atom);
        } else {
          next.erase(atom);
        }
      }
      if (dist.find(next) != dist.end()) continue;
      dist[next] = d + 1;
      if (satisfied(next)) return {true, d + 1};
      frontier.push_back(next);
    }
  }
  return {false, 0};
}

}  // namespace nesyro::testing
