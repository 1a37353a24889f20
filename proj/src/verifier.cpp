#include "nesyro/verifier.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace nesyro {

TaskSpec build_spec(const std::vector<GroundAtom>& goal_atoms,
                    const Domain& domain,
                    const std::vector<SafetyRule>& safety_rules,
                    const std::string& instruction_text) {
  if (goal_atoms.empty()) {
    throw std::invalid_argument("empty specification: a spec must constrain something");
  }
  TaskSpec spec;
  for (const auto& g : goal_atoms) spec.goal_atoms.insert(g);
  for (const auto& rule : safety_rules) {
    if (domain.find_skill(rule.guarded_skill) == nullptr) {
      throw std::invalid_argument("safety rule guards unknown skill " +
                                  rule.guarded_skill);
    }
    spec.safety_rules.push_back(rule);
  }
  spec.instruction_text = instruction_text;
  return spec;
}

std::string VerificationFeedback::to_json() const {
  nlohmann::ordered_json doc;
  doc["violations"] = nlohmann::ordered_json::array();
  for (const auto& v : violations) {
    nlohmann::ordered_json item;
    item["index"] = v.call_index;
    item["constraint"] = v.constraint;
    item["atoms"] = nlohmann::ordered_json::array();
    for (const auto& a : v.atoms) item["atoms"].push_back(a.str());
    item["message"] = v.message;
    doc["violations"].push_back(std::move(item));
  }
  return doc.dump();
}

namespace {

struct ChainState {
  std::set<GroundAtom> t;
  std::set<GroundAtom> f;
  std::set<GroundAtom> assumed;  // in t only by optimistic assumption
  std::vector<std::pair<GroundAtom, bool>> assumptions;

  // Tri-valued lookup with assumption commitment.
  bool satisfies(const GroundAtom& atom, bool positive) {
    bool in_t = t.count(atom) > 0;
    bool in_f = f.count(atom) > 0;
    if (positive) {
      if (in_f) return false;
      if (!in_t) {
        t.insert(atom);
        assumed.insert(atom);
        assumptions.emplace_back(atom, true);
      }
      return true;
    }
    if (in_t) return false;
    if (!in_f) {
      f.insert(atom);
      assumptions.emplace_back(atom, false);
    }
    return true;
  }

  void apply(const GroundAction& action) {
    for (const auto& [add, atom] : action.effects) {
      if (add) {
        f.erase(atom);
        t.insert(atom);
        assumed.erase(atom);  // now genuinely established
      } else {
        t.erase(atom);
        assumed.erase(atom);
        f.insert(atom);
      }
    }
  }

  // A goal counts as met only when known or established, never when merely
  // assumed by an earlier precondition.
  bool goal_met(const GroundAtom& atom) const {
    return t.count(atom) > 0 && assumed.count(atom) == 0;
  }
};

}  // namespace

VerifyResult verify(const TaskSpec& spec, const PolicyCode& policy,
                    const Domain& domain, const ObjectTable& objects,
                    const ObservationStore& obs) {
  std::vector<Violation> violations;
  ChainState chain;
  for (const auto& [atom, value] : obs.entries()) {
    (value ? chain.t : chain.f).insert(atom);
  }

  for (std::size_t i = 0; i < policy.calls.size(); ++i) {
    const SkillCall& call = policy.calls[i];
    const SkillSchema* schema = domain.find_skill(call.name);
    if (schema == nullptr) {
      violations.push_back({i, "C1", "unknown skill " + call.name, {}});
      continue;
    }
    if (schema->params.size() != call.args.size()) {
      violations.push_back(
          {i, "C2",
           "skill " + call.name + " expects " +
               std::to_string(schema->params.size()) + " arguments, got " +
               std::to_string(call.args.size()),
           {}});
      continue;
    }
    bool bound_ok = true;
    Binding binding;
    for (std::size_t p = 0; p < call.args.size(); ++p) {
      auto obj = objects.find(call.args[p]);
      if (obj == objects.end()) {
        violations.push_back(
            {i, "C3", "argument " + call.args[p] + " is not a scenario object", {}});
        bound_ok = false;
        break;
      }
      if (!domain.type_is_a(obj->second, schema->params[p].second)) {
        violations.push_back(
            {i, "C3",
             "argument " + call.args[p] + " has type " + obj->second +
                 ", expected " + schema->params[p].second,
             {}});
        bound_ok = false;
        break;
      }
      binding[schema->params[p].first] = call.args[p];
    }
    if (!bound_ok) continue;

    GroundAction action = ground(*schema, binding, objects, domain);
    std::vector<GroundAtom> failed;
    for (const auto& [positive, atom] : action.preconditions) {
      if (!chain.satisfies(atom, positive)) failed.push_back(atom);
    }
    if (!failed.empty()) {
      violations.push_back(
          {i, "C4", "preconditions of " + call.str() + " cannot hold", failed});
    }

    for (const auto& rule : spec.safety_rules) {
      if (rule.guarded_skill != call.name) continue;
      std::vector<GroundAtom> unmet;
      for (const auto& tmpl : rule.required_atoms) {
        GroundAtom atom = instantiate(tmpl, binding);
        if (!chain.satisfies(atom, true)) unmet.push_back(atom);
      }
      if (!unmet.empty()) {
        violations.push_back(
            {i, "C6", "safety rule for " + call.name + " is not established",
             unmet});
      }
    }

    if (spec.allowed_skills &&
        spec.allowed_skills->find(call.name) == spec.allowed_skills->end()) {
      violations.push_back(
          {i, "C1", "skill " + call.name + " is not permitted by the spec", {}});
      continue;
    }

    chain.apply(action);
  }

  std::vector<GroundAtom> unmet_goals;
  for (const auto& g : spec.goal_atoms) {
    if (!chain.goal_met(g)) unmet_goals.push_back(g);
  }
  if (!unmet_goals.empty()) {
    violations.push_back({policy.calls.size(), "C5",
                          "goal atoms are not established by the policy",
                          unmet_goals});
  }

  if (violations.empty()) {
    return Verified{std::move(chain.assumptions)};
  }
  std::stable_sort(violations.begin(), violations.end(),
                   [](const Violation& a, const Violation& b) {
                     if (a.call_index != b.call_index) {
                       return a.call_index < b.call_index;
                     }
                     return a.constraint < b.constraint;
                   });
  return VerificationFeedback{std::move(violations)};
}

}  // namespace nesyro
