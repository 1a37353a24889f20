#pragma once

// Seeded random structures for property tests: micro-domains for the planner
// equivalence suite and policy mutations for the verifier fuzz.

#include <set>
#include <string>
#include <vector>

#include "nesyro/domain.hpp"
#include "nesyro/policy.hpp"
#include "nesyro/rng.hpp"

namespace nesyro::testing {

struct MicroProblem {
  Domain domain;
  ObjectTable objects;
  std::set<GroundAtom> init;
  std::set<GroundAtom> goal;
};

// Random typed-STRIPS micro-domain: <= 8 predicates of arity <= 2, <= 4
// schemas with <= 2 parameters, <= 6 objects over <= 2 types.
inline MicroProblem random_micro_problem(Rng& rng) {
  MicroProblem p;
  p.domain.name = "micro";

  std::size_t n_types = 1 + rng.below(2);
  for (std::size_t t = 0; t < n_types; ++t) {
    p.domain.types.push_back({"t" + std::to_string(t), std::nullopt});
  }
  std::size_t n_objects = 2 + rng.below(5);  // 2..6
  for (std::size_t o = 0; o < n_objects; ++o) {
    p.objects["o" + std::to_string(o)] =
        "t" + std::to_string(rng.below(n_types));
  }
  std::size_t n_preds = 2 + rng.below(7);  // 2..8
  for (std::size_t i = 0; i < n_preds; ++i) {
    Predicate pred;
    pred.name = "p" + std::to_string(i);
    std::size_t arity = rng.below(3);
    for (std::size_t a = 0; a < arity; ++a) {
      pred.param_types.push_back("t" + std::to_string(rng.below(n_types)));
    }
    p.domain.predicates.push_back(std::move(pred));
  }

  auto random_template = [&](const SkillSchema& schema, bool allow_negative) {
    const Predicate& pred = p.domain.predicates[rng.below(n_preds)];
    AtomTemplate tmpl;
    tmpl.positive = allow_negative ? !(rng.below(4) == 0) : true;
    tmpl.predicate = pred.name;
    for (const auto& type : pred.param_types) {
      // Prefer parameters of a matching type, fall back to any object of it.
      std::vector<std::string> slots;
      for (const auto& [var, ptype] : schema.params) {
        if (p.domain.type_is_a(ptype, type)) slots.push_back(var);
      }
      for (const auto& [obj, otype] : p.objects) {
        if (p.domain.type_is_a(otype, type)) slots.push_back(obj);
      }
      if (slots.empty()) return std::optional<AtomTemplate>{};
      tmpl.terms.push_back(slots[rng.below(slots.size())]);
    }
    return std::optional<AtomTemplate>{tmpl};
  };

  std::size_t n_skills = 1 + rng.below(4);  // 1..4
  for (std::size_t s = 0; s < n_skills; ++s) {
    SkillSchema schema;
    schema.name = "a" + std::to_string(s);
    std::size_t n_params = rng.below(3);
    for (std::size_t v = 0; v < n_params; ++v) {
      schema.params.emplace_back("?v" + std::to_string(v),
                                 "t" + std::to_string(rng.below(n_types)));
    }
    std::size_t n_pre = rng.below(3);
    for (std::size_t i = 0; i < n_pre; ++i) {
      if (auto tmpl = random_template(schema, true)) {
        schema.preconditions.push_back(*tmpl);
      }
    }
    std::size_t n_eff = 1 + rng.below(2);
    for (std::size_t i = 0; i < n_eff; ++i) {
      if (auto tmpl = random_template(schema, true)) {
        bool contradicts = false;
        for (const auto& existing : schema.effects) {
          if (existing.predicate == tmpl->predicate &&
              existing.terms == tmpl->terms && existing.positive != tmpl->positive) {
            contradicts = true;
          }
        }
        if (!contradicts) schema.effects.push_back(*tmpl);
      }
    }
    if (schema.effects.empty()) continue;
    p.domain.skills.push_back(std::move(schema));
  }
  if (p.domain.skills.empty()) {
    SkillSchema schema;
    schema.name = "a0";
    AtomTemplate eff;
    eff.predicate = p.domain.predicates[0].name;
    for (const auto& type : p.domain.predicates[0].param_types) {
      for (const auto& [obj, otype] : p.objects) {
        if (p.domain.type_is_a(otype, type)) {
          eff.terms.push_back(obj);
          break;
        }
      }
    }
    if (eff.terms.size() == p.domain.predicates[0].param_types.size()) {
      schema.effects.push_back(eff);
      p.domain.skills.push_back(std::move(schema));
    }
  }

  std::vector<GroundAtom> universe = atom_universe(p.domain, p.objects);
  if (!universe.empty()) {
    for (const auto& atom : universe) {
      if (rng.below(3) == 0) p.init.insert(atom);
    }
    std::size_t n_goal = 1 + rng.below(2);
    for (std::size_t g = 0; g < n_goal; ++g) {
      p.goal.insert(universe[rng.below(universe.size())]);
    }
  }
  return p;
}

// Mutates a policy in one of several shapes: typo in the name, dropped
// argument, object swap, call deletion, call duplication, shuffled order.
inline PolicyCode mutate_policy(const PolicyCode& policy,
                                const std::vector<std::string>& objects,
                                Rng& rng) {
  PolicyCode mutated = policy;
  if (mutated.calls.empty()) return mutated;
  std::size_t pick = rng.below(mutated.calls.size());
  switch (rng.below(6)) {
    case 0: {  // typo
      std::string& name = mutated.calls[pick].name;
      if (!name.empty()) name[rng.below(name.size())] = 'z';
      break;
    }
    case 1: {  // drop an argument
      auto& args = mutated.calls[pick].args;
      if (!args.empty()) args.erase(args.begin() + static_cast<long>(rng.below(args.size())));
      break;
    }
    case 2: {  // swap in a random object
      auto& args = mutated.calls[pick].args;
      if (!args.empty() && !objects.empty()) {
        args[rng.below(args.size())] = objects[rng.below(objects.size())];
      }
      break;
    }
    case 3: {  // delete a call
      mutated.calls.erase(mutated.calls.begin() + static_cast<long>(pick));
      break;
    }
    case 4: {  // duplicate a call
      mutated.calls.insert(mutated.calls.begin() + static_cast<long>(pick),
                           mutated.calls[pick]);
      break;
    }
    default: {  // swap two calls
      std::size_t other = rng.below(mutated.calls.size());
      std::swap(mutated.calls[pick], mutated.calls[other]);
      break;
    }
  }
  return mutated;
}

}  // namespace nesyro::testing
