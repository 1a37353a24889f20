#pragma once

// Straight-line reference checker for the verifier: one flat loop per call,
// no shared chain machinery, recomputing everything from scratch. Returns
// the verdict and the earliest violation index for fuzz comparison.

#include <map>
#include <optional>
#include <set>
#include <string>

#include "nesyro/verifier.hpp"

namespace nesyro::testing {

struct OracleVerdict {
  bool verified = true;
  std::optional<std::size_t> first_violation_index;
};

inline OracleVerdict first_violation_oracle(const TaskSpec& spec,
                                            const PolicyCode& policy,
                                            const Domain& domain,
                                            const ObjectTable& objects,
                                            const ObservationStore& obs) {
  OracleVerdict verdict;
  auto flag = [&](std::size_t index) {
    verdict.verified = false;
    if (!verdict.first_violation_index || index < *verdict.first_violation_index) {
      verdict.first_violation_index = index;
    }
  };

  // Three-valued chain rebuilt naively: 1 = true, 0 = false, -1 = unknown.
  std::map<GroundAtom, int> chain;
  std::map<GroundAtom, int> assumed_only;  // 1 when true only by assumption
  for (const auto& [atom, value] : obs.entries()) chain[atom] = value ? 1 : 0;

  for (std::size_t i = 0; i < policy.calls.size(); ++i) {
    const SkillCall& call = policy.calls[i];
    const SkillSchema* schema = domain.find_skill(call.name);
    if (schema == nullptr) {
      flag(i);
      continue;
    }
    if (spec.allowed_skills &&
        spec.allowed_skills->count(call.name) == 0) {
      flag(i);
      continue;
    }
    if (schema->params.size() != call.args.size()) {
      flag(i);
      continue;
    }
    bool typed = true;
    for (std::size_t p = 0; p < call.args.size(); ++p) {
      auto obj = objects.find(call.args[p]);
      if (obj == objects.end() ||
          !domain.type_is_a(obj->second, schema->params[p].second)) {
        typed = false;
      }
    }
    if (!typed) {
      flag(i);
      continue;
    }

    std::map<std::string, std::string> binding;
    for (std::size_t p = 0; p < call.args.size(); ++p) {
      binding[schema->params[p].first] = call.args[p];
    }
    auto value_of = [&](const GroundAtom& atom) {
      auto it = chain.find(atom);
      return it == chain.end() ? -1 : it->second;
    };
    auto instantiate_here = [&](const AtomTemplate& tmpl) {
      GroundAtom atom;
      atom.predicate = tmpl.predicate;
      for (const auto& term : tmpl.terms) {
        atom.args.push_back(term[0] == '?' ? binding.at(term) : term);
      }
      return atom;
    };

    bool pre_ok = true;
    for (const auto& tmpl : schema->preconditions) {
      GroundAtom atom = instantiate_here(tmpl);
      int v = value_of(atom);
      if (tmpl.positive) {
        if (v == 0) pre_ok = false;
        if (v == -1) {
          chain[atom] = 1;
          assumed_only[atom] = 1;
        }
      } else {
        if (v == 1) pre_ok = false;
        if (v == -1) chain[atom] = 0;
      }
    }
    if (!pre_ok) flag(i);

    for (const auto& rule : spec.safety_rules) {
      if (rule.guarded_skill != call.name) continue;
      for (const auto& tmpl : rule.required_atoms) {
        GroundAtom atom = instantiate_here(tmpl);
        int v = value_of(atom);
        if (v == 0) {
          flag(i);
        } else if (v == -1) {
          chain[atom] = 1;
          assumed_only[atom] = 1;
        }
      }
    }

    for (const auto& tmpl : schema->effects) {
      GroundAtom atom = instantiate_here(tmpl);
      chain[atom] = tmpl.positive ? 1 : 0;
      assumed_only[atom] = 0;
    }
  }

  for (const auto& goal : spec.goal_atoms) {
    auto it = chain.find(goal);
    bool met = it != chain.end() && it->second == 1;
    auto as = assumed_only.find(goal);
    if (as != assumed_only.end() && as->second == 1) met = false;
    if (!met) flag(policy.calls.size());
  }
  return verdict;
}

}  // namespace nesyro::testing
