#include "nesyro/generator.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "nesyro/domain_parser.hpp"
#include "nesyro/planner.hpp"

namespace nesyro {

namespace {

struct ProjectedState {
  std::set<GroundAtom> t;
  std::set<GroundAtom> f;
};

// Replays the frozen prefix over the observation projection with the same
// assumption-committing semantics the verifier uses.
ProjectedState project_after_prefix(const GenerationRequest& req,
                                    const std::vector<SkillCall>& prefix) {
  ProjectedState state;
  for (const auto& [atom, value] : req.obs->entries()) {
    (value ? state.t : state.f).insert(atom);
  }
  for (const auto& call : prefix) {
    GroundAction action = ground_call(call, *req.domain, *req.objects);
    for (const auto& [positive, atom] : action.preconditions) {
      if (positive) {
        if (state.f.count(atom) == 0) state.t.insert(atom);
      } else {
        if (state.t.count(atom) == 0) state.f.insert(atom);
      }
    }
    for (const auto& [add, atom] : action.effects) {
      if (add) {
        state.f.erase(atom);
        state.t.insert(atom);
      } else {
        state.t.erase(atom);
        state.f.insert(atom);
      }
    }
  }
  return state;
}

std::vector<SkillCall> plan_to_calls(const Plan& plan) {
  std::vector<SkillCall> calls;
  for (const auto& step : plan.steps) {
    SkillCall call;
    call.name = step.skill;
    call.args = step.args;
    calls.push_back(std::move(call));
  }
  return calls;
}

// Largest goal subset reachable under the open-world relaxation, preferring
// larger subsets and lexicographically earlier atoms on ties.
std::optional<Plan> best_effort_plan(const GenerationRequest& req,
                                     const ProjectedState& state,
                                     const SearchLimits& limits) {
  std::vector<GroundAtom> goals(req.goal_atoms.begin(), req.goal_atoms.end());
  std::size_t n = goals.size();
  if (n == 0 || n > 16) return std::nullopt;
  std::vector<std::vector<std::size_t>> subsets;
  for (std::size_t mask = 1; mask < (1ULL << n); ++mask) {
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1ULL << i)) subset.push_back(i);
    }
    subsets.push_back(std::move(subset));
  }
  std::stable_sort(subsets.begin(), subsets.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  for (const auto& subset : subsets) {
    if (subset.size() == n) continue;  // the full goal already failed
    std::set<GroundAtom> goal;
    for (std::size_t i : subset) goal.insert(goals[i]);
    SearchResult res = search_plan_optimistic(*req.domain, *req.objects, state.t,
                                              state.f, goal, limits);
    if (res.status == SearchStatus::Found) return res.plan;
  }
  return std::nullopt;
}

}  // namespace

GenerationResult OracleBackend::generate(const GenerationRequest& req) {
  std::vector<SkillCall> prefix;
  if (req.prior_policy) {
    if (req.frozen_index > req.prior_policy->calls.size()) {
      throw std::invalid_argument("frozen_index exceeds prior policy length");
    }
    prefix.assign(req.prior_policy->calls.begin(),
                  req.prior_policy->calls.begin() +
                      static_cast<long>(req.frozen_index));
  } else if (req.frozen_index != 0) {
    throw std::invalid_argument("frozen_index without a prior policy");
  }

  ProjectedState state = project_after_prefix(req, prefix);

  GenerationResult result;
  std::optional<Plan> plan;

  // Unit-cost discipline: take the cheaper of the sound plan over known
  // facts and the open-world plan that rides on Unknown atoms (ties favour
  // the sound one). A cheaper optimistic plan is exactly the case where the
  // validator should probe the assumptions it leans on.
  SymbolicState strict_init{state.t};
  SearchResult strict =
      search_plan(*req.domain, *req.objects, strict_init, req.goal_atoms, limits_);
  SearchResult open = search_plan_optimistic(*req.domain, *req.objects, state.t,
                                             state.f, req.goal_atoms, limits_);
  bool strict_found = strict.status == SearchStatus::Found;
  bool open_found = open.status == SearchStatus::Found;
  if (strict_found && (!open_found || strict.plan->cost() <= open.plan->cost())) {
    plan = strict.plan;
  } else if (open_found) {
    plan = open.plan;
  } else {
    plan = best_effort_plan(req, state, limits_);
    result.best_effort = true;
  }

  result.policy.calls = prefix;
  if (plan) {
    for (auto& call : plan_to_calls(*plan)) result.policy.calls.push_back(call);
  }
  if (req.exploration_knowledge) {
    result.policy.origin = PolicyOrigin::Probe;
  } else if (req.frozen_index > 0) {
    result.policy.origin = PolicyOrigin::Refined;
    result.policy.refined_from = static_cast<int>(req.frozen_index);
  }

  std::vector<GroundAtom> goal_vec(req.goal_atoms.begin(), req.goal_atoms.end());
  result.spec = build_spec(goal_vec, *req.domain, req.safety_rules, req.instruction);
  return result;
}

GenerationResult OracleBackend::regenerate_on_feedback(const GenerationRequest& req) {
  if (!req.prior_feedback || req.prior_feedback->violations.empty()) {
    throw std::invalid_argument("regenerate_on_feedback requires nonempty feedback");
  }
  if (!req.prior_policy) {
    throw std::invalid_argument("regenerate_on_feedback requires a prior policy");
  }
  const Violation& first = req.prior_feedback->violations.front();

  // Unknown-skill typo: rename to the unique nearest skill of matching arity.
  if (first.constraint == "C1" && first.call_index < req.prior_policy->calls.size()) {
    const SkillCall& bad = req.prior_policy->calls[first.call_index];
    const SkillSchema* best = nullptr;
    std::size_t best_dist = 2;  // accept distance <= 1 only
    bool unique = true;
    for (const auto& schema : req.domain->skills) {
      if (schema.params.size() != bad.args.size()) continue;
      std::size_t d = edit_distance(schema.name, bad.name);
      if (d < best_dist) {
        best = &schema;
        best_dist = d;
        unique = true;
      } else if (d == best_dist && best != nullptr) {
        unique = false;
      }
    }
    if (best != nullptr && unique) {
      GenerationResult result;
      result.policy = *req.prior_policy;
      result.policy.calls[first.call_index].name = best->name;
      result.policy.origin = PolicyOrigin::Refined;
      result.policy.refined_from = static_cast<int>(first.call_index);
      std::vector<GroundAtom> goal_vec(req.goal_atoms.begin(), req.goal_atoms.end());
      result.spec =
          build_spec(goal_vec, *req.domain, req.safety_rules, req.instruction);
      return result;
    }
  }

  // Otherwise replan the suffix from the earliest violation, keeping the
  // already-sound prefix frozen.
  GenerationRequest repair = req;
  std::size_t cut = std::min(first.call_index, req.prior_policy->calls.size());
  repair.frozen_index = std::max(req.frozen_index, cut);
  repair.prior_feedback.reset();
  return generate(repair);
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

LlmGeneratorBackend::LlmGeneratorBackend(LlmConfig config,
                                         std::shared_ptr<LlmTransport> transport,
                                         std::string prompt_template,
                                         int max_parse_retries)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      prompt_template_(std::move(prompt_template)),
      max_parse_retries_(max_parse_retries) {}

namespace {

void replace_slot(std::string& text, const std::string& slot,
                  const std::string& value) {
  const std::string needle = "{" + slot + "}";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
}

// Splits a string into top-level parenthesized groups: "(a b) (c)" -> 2.
std::vector<std::string> scan_paren_groups(const std::string& text) {
  std::vector<std::string> groups;
  int depth = 0;
  std::string cur;
  for (char c : text) {
    if (c == '(') {
      ++depth;
    }
    if (depth > 0) cur.push_back(c);
    if (c == ')') {
      --depth;
      if (depth == 0 && !cur.empty()) {
        groups.push_back(cur);
        cur.clear();
      }
    }
  }
  return groups;
}

}  // namespace

std::string LlmGeneratorBackend::render_prompt(const GenerationRequest& req) const {
  std::string prompt = prompt_template_;
  replace_slot(prompt, "goal", req.instruction);

  std::ostringstream obs_text;
  if (req.obs != nullptr) {
    for (const auto& [atom, value] : req.obs->entries()) {
      obs_text << atom.str() << '=' << (value ? "true" : "false") << ' ';
    }
  }
  replace_slot(prompt, "observation", obs_text.str());

  std::ostringstream spec_text;
  for (const auto& g : req.goal_atoms) spec_text << g.str() << ' ';
  replace_slot(prompt, "spec", spec_text.str());

  std::ostringstream skills;
  std::ostringstream skill_code;
  if (req.domain != nullptr) {
    for (const auto& s : req.domain->skills) {
      skills << s.name << ' ';
      skill_code << s.name << '(';
      for (std::size_t i = 0; i < s.params.size(); ++i) {
        if (i > 0) skill_code << ", ";
        skill_code << s.params[i].first;
      }
      skill_code << ")\n";
    }
  }
  replace_slot(prompt, "available_skills", skills.str());
  replace_slot(prompt, "skill_code", skill_code.str());
  replace_slot(prompt, "skeleton_code", "# emit one skill call per line\n");

  std::ostringstream objects;
  if (req.objects != nullptr) {
    for (const auto& [name, type] : *req.objects) {
      objects << name << " - " << type << ' ';
    }
  }
  replace_slot(prompt, "object_list_position", objects.str());

  std::ostringstream domain_text;
  if (req.domain != nullptr) domain_text << pretty_print(*req.domain);
  replace_slot(prompt, "domain_pddl", domain_text.str());

  replace_slot(prompt, "feedback",
               req.prior_feedback ? req.prior_feedback->to_json() : "");
  replace_slot(prompt, "prev_code",
               req.prior_policy ? print_policy(*req.prior_policy) : "");
  replace_slot(prompt, "exploration_knowledge",
               req.exploration_knowledge ? req.exploration_knowledge->to_json()
                                         : "");
  std::string frozen;
  if (req.prior_policy && req.frozen_index > 0) {
    PolicyCode head;
    head.calls.assign(req.prior_policy->calls.begin(),
                      req.prior_policy->calls.begin() +
                          static_cast<long>(req.frozen_index));
    frozen = print_policy(head);
  }
  replace_slot(prompt, "frozen_code_part", frozen);
  return prompt;
}

GenerationResult LlmGeneratorBackend::parse_response(
    const std::string& text, const GenerationRequest& req) const {
  std::istringstream in(text);
  std::string line;
  std::ostringstream dsl;
  std::vector<GroundAtom> goals;
  std::vector<SafetyRule> rules;
  bool in_fence = false;
  bool saw_fence = false;
  while (std::getline(in, line)) {
    if (line.rfind("```", 0) == 0) {
      in_fence = !in_fence;
      saw_fence = true;
      continue;
    }
    if (line.rfind("GOAL:", 0) == 0) {
      for (const auto& g : scan_paren_groups(line.substr(5))) {
        goals.push_back(parse_ground_atom(g));
      }
      continue;
    }
    if (line.rfind("SAFETY:", 0) == 0) {
      std::istringstream rule_in(line.substr(7));
      SafetyRule rule;
      rule_in >> rule.guarded_skill;
      std::string rest;
      std::getline(rule_in, rest);
      std::string word;
      // Accept "skill requires (atom) (atom)".
      std::size_t req_pos = rest.find("requires");
      if (req_pos != std::string::npos) rest = rest.substr(req_pos + 8);
      for (const auto& g : scan_paren_groups(rest)) {
        rule.required_atoms.push_back(parse_atom_template(g));
      }
      (void)word;
      rules.push_back(std::move(rule));
      continue;
    }
    if (!in_fence && saw_fence) continue;  // prose outside the code block
    dsl << line << '\n';
  }

  GenerationResult result;
  result.policy = parse_policy(dsl.str());
  result.rationale = text;
  if (goals.empty()) {
    goals.assign(req.goal_atoms.begin(), req.goal_atoms.end());
  }
  if (rules.empty()) rules = req.safety_rules;
  result.spec = build_spec(goals, *req.domain, rules, req.instruction);

  if (req.prior_policy && req.frozen_index > 0) {
    if (result.policy.calls.size() < req.frozen_index) {
      throw std::runtime_error("response dropped frozen calls");
    }
    for (std::size_t i = 0; i < req.frozen_index; ++i) {
      if (!(result.policy.calls[i] == req.prior_policy->calls[i])) {
        throw std::runtime_error("response modified frozen call " +
                                 std::to_string(i));
      }
    }
    result.policy.origin = PolicyOrigin::Refined;
    result.policy.refined_from = static_cast<int>(req.frozen_index);
  }
  if (req.exploration_knowledge) result.policy.origin = PolicyOrigin::Probe;
  return result;
}

GenerationResult LlmGeneratorBackend::generate(const GenerationRequest& req) {
  std::string parse_feedback;
  for (int attempt = 0; attempt <= max_parse_retries_; ++attempt) {
    nlohmann::ordered_json body;
    body["model"] = config_.model;
    body["prompt"] = render_prompt(req) + parse_feedback;
    body["temperature"] = config_.temperature;
    body["logprobs"] = false;
    std::string raw = transport_->post(body.dump());
    std::string text;
    try {
      nlohmann::json doc = nlohmann::json::parse(raw);
      text = doc.at("choices").at(0).at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed llm response: ") + e.what());
    }
    try {
      return parse_response(text, req);
    } catch (const std::exception& e) {
      parse_feedback = std::string("\nYour previous output could not be parsed (") +
                       e.what() + "). Emit only DSL lines and GOAL:/SAFETY: labels.";
    }
  }
  throw std::runtime_error("llm backend produced unparseable output after retries");
}

GenerationResult LlmGeneratorBackend::regenerate_on_feedback(
    const GenerationRequest& req) {
  if (!req.prior_feedback || req.prior_feedback->violations.empty()) {
    throw std::invalid_argument("regenerate_on_feedback requires nonempty feedback");
  }
  return generate(req);
}

}  // namespace nesyro
