#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "nesyro/atoms.hpp"
#include "nesyro/confidence.hpp"
#include "nesyro/domain.hpp"
#include "nesyro/planner.hpp"
#include "nesyro/policy.hpp"

namespace nesyro {

struct ProbeGoal {
  std::set<GroundAtom> target_atoms;  // nonempty, all currently Unknown
  std::size_t origin_skill_index = 0;
  std::optional<CscFeedback> origin_csc_feedback;
  LogicVerdict origin_lc_feedback;
  std::string instruction_text;  // "observe: <atoms>"

  std::string to_json() const;
};

// No probe can help: every missing atom is already Known (typically
// Known-False), so the caller should refine or replan instead.
struct NoProbePossible {
  std::vector<GroundAtom> known_false;
};

using ProbeGoalResult = std::variant<ProbeGoal, NoProbePossible>;

// Collects the probe targets from both feedback channels: the Unknown atoms
// of the logic verdict and the Unknown suspects named by the CSC feedback.
// Atoms already Known in the store are excluded.
ProbeGoalResult make_probe_goal(const SkillCall& call, std::size_t skill_index,
                                const LogicVerdict& lc_feedback,
                                const std::optional<CscFeedback>& csc_feedback,
                                const ObservationStore& obs,
                                const Domain& domain);

struct SafetyVerdict {
  bool safe = true;
  struct Offender {
    std::size_t index;
    std::string skill;
    std::string reason;
  };
  std::vector<Offender> offending_calls;
};

// A probe policy is deployable only when every call is flagged safe and no
// call's effects can delete an atom the task goal needs.
SafetyVerdict check_probe_safety(const PolicyCode& policy, const Domain& domain,
                                 const std::set<GroundAtom>& goal_atoms = {});

struct UnobservableAtoms {
  std::vector<GroundAtom> atoms;  // targets no sensing skill can reveal
};

struct PlannerProbeGoal {
  std::set<GroundAtom> goal_atoms;  // observed_* marker atoms
  std::vector<GroundAtom> unobservable;
};

// Knowledge compilation: rewrites each probe target into an observed_*
// marker established by sensing effects in compile_probe_domain's output.
// Targets with no covering sensing skill are reported, not fatal.
PlannerProbeGoal probe_goal_to_planner_goal(const ProbeGoal& goal,
                                            const Domain& domain);

// The sensing-augmented, safe-skills-only domain probe policies are
// generated and validated against: every sensing skill additionally asserts
// an observed_* marker for each atom it reveals.
Domain compile_probe_domain(const Domain& domain);

// Marker predicate name for a revealed predicate.
std::string observed_predicate_name(const std::string& predicate);

}  // namespace nesyro
