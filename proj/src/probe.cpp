#include "nesyro/probe.hpp"

#include <sstream>

#include "json.hpp"

namespace nesyro {

std::string ProbeGoal::to_json() const {
  nlohmann::ordered_json doc;
  doc["targets"] = nlohmann::ordered_json::array();
  for (const auto& a : target_atoms) doc["targets"].push_back(a.str());
  doc["origin_skill_index"] = origin_skill_index;
  doc["instruction"] = instruction_text;
  return doc.dump();
}

ProbeGoalResult make_probe_goal(const SkillCall& call, std::size_t skill_index,
                                const LogicVerdict& lc_feedback,
                                const std::optional<CscFeedback>& csc_feedback,
                                const ObservationStore& obs,
                                const Domain& domain) {
  (void)call;
  (void)domain;
  ProbeGoal goal;
  NoProbePossible blocked;
  auto consider = [&](const GroundAtom& atom) {
    switch (obs.lookup(atom)) {
      case TriValue::Unknown:
        goal.target_atoms.insert(atom);
        break;
      case TriValue::False:
        blocked.known_false.push_back(atom);
        break;
      case TriValue::True:
        break;  // already Known
    }
  };
  for (const auto& [atom, label] : lc_feedback.missing) {
    (void)label;
    consider(atom);
  }
  if (csc_feedback) {
    for (const auto& atom : csc_feedback->suspect_atoms) consider(atom);
  }
  if (goal.target_atoms.empty()) {
    return blocked;
  }
  goal.origin_skill_index = skill_index;
  goal.origin_csc_feedback = csc_feedback;
  goal.origin_lc_feedback = lc_feedback;
  std::ostringstream text;
  text << "observe:";
  for (const auto& a : goal.target_atoms) text << ' ' << a.str();
  goal.instruction_text = text.str();
  return goal;
}

SafetyVerdict check_probe_safety(const PolicyCode& policy, const Domain& domain,
                                 const std::set<GroundAtom>& goal_atoms) {
  SafetyVerdict verdict;
  std::set<std::string> goal_predicates;
  for (const auto& g : goal_atoms) goal_predicates.insert(g.predicate);

  for (std::size_t i = 0; i < policy.calls.size(); ++i) {
    const SkillCall& call = policy.calls[i];
    const SkillSchema* schema = domain.find_skill(call.name);
    if (schema == nullptr) {
      verdict.safe = false;
      verdict.offending_calls.push_back({i, call.name, "unknown skill"});
      continue;
    }
    if (!schema->meta.safe) {
      verdict.safe = false;
      verdict.offending_calls.push_back({i, call.name, "skill is not flagged safe"});
      continue;
    }
    for (const auto& eff : schema->effects) {
      if (!eff.positive && goal_predicates.count(eff.predicate) > 0) {
        verdict.safe = false;
        verdict.offending_calls.push_back(
            {i, call.name, "may delete task goal atom (" + eff.predicate + ")"});
        break;
      }
    }
  }
  return verdict;
}

std::string observed_predicate_name(const std::string& predicate) {
  return "observed_" + predicate;
}

Domain compile_probe_domain(const Domain& domain) {
  Domain compiled;
  compiled.name = domain.name + "_probe";
  compiled.types = domain.types;
  compiled.predicates = domain.predicates;

  std::set<std::string> marker_added;
  for (const auto& skill : domain.skills) {
    if (!skill.meta.safe) continue;
    SkillSchema copy = skill;
    for (const auto& reveal : skill.meta.reveals) {
      const Predicate* pred = domain.find_predicate(reveal.predicate);
      if (pred == nullptr) continue;
      if (marker_added.insert(pred->name).second) {
        Predicate marker;
        marker.name = observed_predicate_name(pred->name);
        marker.param_types = pred->param_types;
        compiled.predicates.push_back(std::move(marker));
      }
      AtomTemplate effect;
      effect.positive = true;
      effect.predicate = observed_predicate_name(reveal.predicate);
      effect.terms = reveal.terms;
      copy.effects.push_back(std::move(effect));
    }
    compiled.skills.push_back(std::move(copy));
  }
  return compiled;
}

PlannerProbeGoal probe_goal_to_planner_goal(const ProbeGoal& goal,
                                            const Domain& domain) {
  PlannerProbeGoal out;
  for (const auto& target : goal.target_atoms) {
    bool covered = false;
    for (const auto& skill : domain.skills) {
      if (!skill.meta.sensing) continue;
      for (const auto& reveal : skill.meta.reveals) {
        if (reveal.predicate == target.predicate &&
            reveal.terms.size() == target.args.size()) {
          covered = true;
          break;
        }
      }
      if (covered) break;
    }
    if (covered) {
      GroundAtom marker;
      marker.predicate = observed_predicate_name(target.predicate);
      marker.args = target.args;
      out.goal_atoms.insert(std::move(marker));
    } else {
      out.unobservable.push_back(target);
    }
  }
  return out;
}

}  // namespace nesyro
