#include "nesyro/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace nesyro {

Mode parse_mode(const std::string& name) {
  if (name == "nesyro") return Mode::Nesyro;
  if (name == "naive") return Mode::Naive;
  if (name == "verify_only") return Mode::VerifyOnly;
  if (name == "no_lc") return Mode::NoLc;
  if (name == "no_csc") return Mode::NoCsc;
  if (name == "no_probe") return Mode::NoProbe;
  throw std::runtime_error("unknown mode: " + name);
}

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Nesyro: return "nesyro";
    case Mode::Naive: return "naive";
    case Mode::VerifyOnly: return "verify_only";
    case Mode::NoLc: return "no_lc";
    case Mode::NoCsc: return "no_csc";
    default: return "no_probe";
  }
}

void EngineConfig::validate() const {
  if (epsilon <= 0.0 || epsilon >= 1.0) {
    throw std::invalid_argument("epsilon must lie strictly inside (0, 1)");
  }
  if (max_verify_retries < 1 || max_probe_depth < 1 ||
      max_refinements_per_skill < 1 || demo_k < 1) {
    throw std::invalid_argument("engine bounds must be >= 1");
  }
}

std::size_t Trajectory::probe_action_count(
    const std::vector<PolicyTreeNode>& tree) const {
  std::size_t count = 0;
  for (const auto& entry : entries) {
    if (entry.owner_node_id < tree.size() &&
        tree[entry.owner_node_id].kind == NodeKind::Probe) {
      ++count;
    }
  }
  return count;
}

std::string RunResult::tree_to_json() const {
  nlohmann::ordered_json doc;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto& node : tree) {
    nlohmann::ordered_json n;
    n["id"] = node.node_id;
    n["kind"] = node.kind == NodeKind::Main ? "main" : "probe";
    n["status"] = [&] {
      switch (node.status) {
        case NodeStatus::Grounded: return "grounded";
        case NodeStatus::Executing: return "executing";
        case NodeStatus::Executed: return "executed";
        default: return "aborted";
      }
    }();
    n["depth"] = node.depth;
    if (node.parent) {
      n["parent"] = node.parent->first;
      n["parent_skill_index"] = node.parent->second;
    }
    n["children"] = node.children;
    n["policy"] = nlohmann::ordered_json::array();
    for (const auto& call : node.policy.calls) n["policy"].push_back(call.str());
    n["confidence_log"] = nlohmann::ordered_json::array();
    for (const auto& rec : node.confidence_log) {
      nlohmann::ordered_json r;
      r["index"] = rec.skill_index;
      r["csc"] = rec.csc;
      r["lc"] = rec.lc;
      r["conf"] = rec.conf;
      n["confidence_log"].push_back(std::move(r));
    }
    doc["nodes"].push_back(std::move(n));
  }
  doc["aborted"] = aborted;
  doc["abort_reason"] = abort_reason;
  return doc.dump(2);
}

Engine::Engine(Env& env, GeneratorBackend& backend, CscBackend& csc,
               const DemoLibrary& demos, EngineConfig config)
    : env_(env),
      backend_(backend),
      csc_(csc),
      demos_(demos),
      config_(config),
      probe_domain_(compile_probe_domain(env.scenario().domain)) {}

GenerationRequest Engine::base_request(const TaskContext& ctx) const {
  GenerationRequest req;
  req.domain = ctx.domain;
  req.objects = &env_.scenario().objects;
  req.obs = &obs_;
  req.instruction = ctx.instruction;
  req.goal_atoms = ctx.goal;
  req.safety_rules = ctx.safety_rules;
  req.exploration_knowledge = ctx.exploration;
  return req;
}

Engine::PhaseOutcome Engine::verification_phase(
    const TaskContext& ctx, std::size_t frozen_index,
    const std::optional<PolicyCode>& prior) {
  PhaseOutcome out;
  GenerationRequest req = base_request(ctx);
  req.frozen_index = frozen_index;
  req.prior_policy = prior;

  GenerationResult gen = backend_.generate(req);
  ++counters_.generator_invocations;
  for (std::size_t attempt = 0;; ++attempt) {
    VerifyResult vr = verify(gen.spec, gen.policy, *ctx.domain,
                             env_.scenario().objects, obs_);
    if (is_verified(vr)) {
      out.ok = true;
      out.spec = gen.spec;
      out.policy = gen.policy;
      counters_.max_policy_length =
          std::max(counters_.max_policy_length, gen.policy.calls.size());
      return out;
    }
    if (attempt >= config_.max_verify_retries) {
      out.failure = "verification retries exhausted: " +
                    std::get<VerificationFeedback>(vr).to_json();
      return out;
    }
    req.prior_policy = gen.policy;
    req.prior_feedback = std::get<VerificationFeedback>(vr);
    gen = backend_.regenerate_on_feedback(req);
    ++counters_.generator_invocations;
  }
}

ConfidenceRecord Engine::assess(const TaskContext& ctx, const PolicyCode& policy,
                                std::size_t index) {
  ConfidenceRecord rec;
  rec.skill_index = index;
  const SkillCall& call = policy.calls[index];

  // LC first: it is cheap and annihilates the product when zero. The CSC is
  // still computed because its feedback steers the probe goal.
  if (config_.mode == Mode::NoLc) {
    rec.lc = 1;
  } else {
    std::vector<SkillCall> prefix(policy.calls.begin(),
                                  policy.calls.begin() + static_cast<long>(index));
    rec.lc_feedback =
        logic_confidence(*ctx.domain, env_.scenario().objects, obs_, ctx.goal,
                         prefix, call, config_.planner_limits);
    rec.lc = rec.lc_feedback.lc;
  }

  if (config_.mode == Mode::NoCsc) {
    rec.csc = 1.0;
  } else {
    ScoringContext sctx;
    sctx.domain = ctx.domain;
    sctx.objects = &env_.scenario().objects;
    sctx.obs = &obs_;
    sctx.instruction = ctx.instruction;
    sctx.call = call;
    sctx.demos = retrieve_demos(demos_, call, obs_, config_.demo_k);
    sctx.skill_snippet = call.str();
    rec.csc = csc_.score(sctx).csc;
    if (rec.csc < config_.epsilon) {
      rec.csc_feedback = make_csc_feedback(sctx, rec.csc, config_.epsilon);
    }
  }
  rec.conf = nesyconf(rec.csc, rec.lc);
  return rec;
}

bool Engine::execute_node(std::size_t node_id) {
  // Confidence gate: validated nodes may only execute calls whose final
  // recorded score cleared the threshold.
  if (!tree_[node_id].confidence_log.empty()) {
    std::map<std::size_t, double> last_conf;
    for (const auto& rec : tree_[node_id].confidence_log) {
      last_conf[rec.skill_index] = rec.conf;
    }
    for (std::size_t i = 0; i < tree_[node_id].policy.calls.size(); ++i) {
      auto it = last_conf.find(i);
      if (it == last_conf.end() || it->second < config_.epsilon) {
        counters_.gate_respected = false;
      }
    }
  }
  tree_[node_id].status = NodeStatus::Executing;
  const Scenario& scenario = env_.scenario();
  for (const auto& call : tree_[node_id].policy.calls) {
    std::vector<GroundAction> actions = expand_skill(call, scenario);
    for (const auto& action : actions) {
      StepResult step = env_.step(action);
      for (const auto& [atom, value] : step.observation_delta) {
        obs_.merge(atom, value);
      }
      obs_.bump_history();
      trajectory_.entries.push_back({action, step.observation_delta,
                                     step.succeeded, step.irreversible_triggered,
                                     node_id});
      if (!step.succeeded) {
        tree_[node_id].status = NodeStatus::Aborted;
        if (step.irreversible_triggered && env_.goal_unreachable()) {
          episode_failed_ = true;
          abort_reason_ = "irreversible action made the goal unreachable";
        }
        return false;
      }
    }
  }
  tree_[node_id].status = NodeStatus::Executed;
  return true;
}

bool Engine::validation_phase(std::size_t node_id, const TaskContext& ctx,
                              std::size_t start_index, std::size_t depth) {
  std::map<std::size_t, std::size_t> refinements;  // per skill index
  std::map<std::size_t, std::size_t> fanout;       // probes launched per index
  std::size_t n = start_index;
  while (n < tree_[node_id].policy.calls.size()) {
    if (episode_failed_) return false;
    ConfidenceRecord rec = assess(ctx, tree_[node_id].policy, n);
    tree_[node_id].confidence_log.push_back(rec);
    if (rec.conf >= config_.epsilon) {
      ++n;
      continue;
    }

    if (refinements[n] >= config_.max_refinements_per_skill) {
      tree_[node_id].status = NodeStatus::Aborted;
      abort_reason_ = "refinement budget exhausted at index " + std::to_string(n);
      return false;
    }

    bool obs_grew = false;
    if (config_.mode != Mode::NoProbe) {
      ProbeGoalResult pg = make_probe_goal(tree_[node_id].policy.calls[n], n,
                                           rec.lc_feedback, rec.csc_feedback,
                                           obs_, *ctx.domain);
      if (std::holds_alternative<ProbeGoal>(pg)) {
        ProbeGoal goal = std::get<ProbeGoal>(pg);
        PlannerProbeGoal compiled =
            probe_goal_to_planner_goal(goal, env_.scenario().domain);
        if (!compiled.goal_atoms.empty() && depth + 1 <= config_.max_probe_depth) {
          TaskContext probe_ctx;
          probe_ctx.domain = &probe_domain_;
          probe_ctx.goal = compiled.goal_atoms;
          probe_ctx.instruction = goal.instruction_text;
          probe_ctx.exploration = goal;
          probe_ctx.kind = NodeKind::Probe;
          ++fanout[n];
          counters_.max_probe_fanout =
              std::max(counters_.max_probe_fanout, fanout[n]);
          std::size_t before_known = obs_.known_count();
          auto child = run_nesyro(probe_ctx, 0, depth + 1,
                                  std::make_pair(node_id, n));
          if (child) {
            SafetyVerdict safety = check_probe_safety(
                tree_[*child].policy, probe_domain_,
                std::set<GroundAtom>(env_.scenario().goal_atoms.begin(),
                                     env_.scenario().goal_atoms.end()));
            if (safety.safe) {
              execute_node(*child);
              ++counters_.probe_policies_executed;
            } else {
              tree_[*child].status = NodeStatus::Aborted;
            }
          }
          if (episode_failed_) return false;
          obs_grew = obs_.known_count() > before_known;
        }
      }
    }

    // One refinement cycle per dip below the threshold: regenerate the
    // suffix from this index against the (possibly grown) observations and
    // re-validate the same index. A non-informative probe still consumes the
    // cycle, which is what bounds repeated fruitless probing.
    (void)obs_grew;
    ++refinements[n];
    ++counters_.refinements;
    PhaseOutcome refined = verification_phase(ctx, n, tree_[node_id].policy);
    if (!refined.ok) {
      tree_[node_id].status = NodeStatus::Aborted;
      abort_reason_ = refined.failure;
      return false;
    }
    // Frozen-prefix law: bytes before n never change.
    for (std::size_t i = 0; i < n; ++i) {
      if (!(refined.policy.calls[i] == tree_[node_id].policy.calls[i])) {
        throw std::logic_error("frozen prefix was modified during refinement");
      }
    }
    tree_[node_id].policy = refined.policy;
    tree_[node_id].spec = refined.spec;
  }
  tree_[node_id].status = NodeStatus::Grounded;
  return true;
}

std::optional<std::size_t> Engine::run_nesyro(
    const TaskContext& ctx, std::size_t frozen_index, std::size_t depth,
    std::optional<std::pair<std::size_t, std::size_t>> parent) {
  PhaseOutcome verified = verification_phase(ctx, frozen_index, std::nullopt);
  if (!verified.ok) {
    abort_reason_ = verified.failure;
    if (!parent) episode_failed_ = true;
    return std::nullopt;
  }

  PolicyTreeNode node;
  node.node_id = tree_.size();
  node.policy = verified.policy;
  node.spec = verified.spec;
  node.kind = ctx.kind;
  node.parent = parent;
  node.depth = depth;
  tree_.push_back(std::move(node));
  std::size_t node_id = tree_.size() - 1;
  if (parent) tree_[parent->first].children.push_back(node_id);

  if (!validation_phase(node_id, ctx, frozen_index, depth)) {
    tree_[node_id].status = NodeStatus::Aborted;
    if (!parent && abort_reason_.empty()) {
      abort_reason_ = "validation aborted";
    }
    if (!parent) episode_failed_ = true;
    return std::nullopt;
  }
  return node_id;
}

RunResult Engine::run_task() {
  RunResult result;
  auto o0 = env_.reset();
  for (const auto& [atom, value] : o0) obs_.merge(atom, value);

  TaskContext main_ctx;
  main_ctx.domain = &env_.scenario().domain;
  main_ctx.goal.insert(env_.scenario().goal_atoms.begin(),
                       env_.scenario().goal_atoms.end());
  main_ctx.safety_rules = env_.scenario().safety_rules;
  main_ctx.instruction = env_.scenario().instruction;
  main_ctx.kind = NodeKind::Main;

  if (config_.mode == Mode::Naive || config_.mode == Mode::VerifyOnly) {
    // Generation without validation; verify_only additionally runs the
    // verification loop but executes whatever it ends up with.
    GenerationRequest req = base_request(main_ctx);
    GenerationResult gen = backend_.generate(req);
    ++counters_.generator_invocations;
    if (config_.mode == Mode::VerifyOnly) {
      for (std::size_t attempt = 0; attempt < config_.max_verify_retries;
           ++attempt) {
        VerifyResult vr = verify(gen.spec, gen.policy, env_.scenario().domain,
                                 env_.scenario().objects, obs_);
        if (is_verified(vr)) break;
        req.prior_policy = gen.policy;
        req.prior_feedback = std::get<VerificationFeedback>(vr);
        gen = backend_.regenerate_on_feedback(req);
        ++counters_.generator_invocations;
      }
    }
    PolicyTreeNode node;
    node.node_id = 0;
    node.policy = gen.policy;
    node.spec = gen.spec;
    node.kind = NodeKind::Main;
    tree_.push_back(std::move(node));
    execute_node(0);
    result.main_policy = gen.policy;
  } else {
    auto root = run_nesyro(main_ctx, 0, 0, std::nullopt);
    if (root) {
      execute_node(*root);
      result.main_policy = tree_[*root].policy;
    } else {
      result.aborted = true;
      result.abort_reason = abort_reason_;
    }
  }

  if (episode_failed_ && !result.aborted) {
    result.aborted = true;
    result.abort_reason = abort_reason_;
  }

  counters_.max_policy_length = std::max<std::size_t>(
      counters_.max_policy_length,
      result.main_policy.calls.empty() ? 1 : result.main_policy.calls.size());

  // Invocation bound: retries x probe-tree size x refinement slots x policy
  // length, with B the widest observed fanout.
  std::size_t b = std::max<std::size_t>(1, counters_.max_probe_fanout);
  std::size_t tree_weight = 1;
  std::size_t b_pow = 1;
  for (std::size_t d = 1; d <= config_.max_probe_depth; ++d) {
    b_pow *= b;
    tree_weight += b_pow;
  }
  counters_.invocation_bound = config_.max_verify_retries * tree_weight *
                               (1 + config_.max_refinements_per_skill) *
                               std::max<std::size_t>(1, counters_.max_policy_length);
  counters_.bound_respected =
      counters_.generator_invocations <= counters_.invocation_bound;

  result.metrics = env_.score();
  result.trajectory = trajectory_;
  result.tree = tree_;
  result.final_obs = obs_;
  result.counters = counters_;
  return result;
}

RunResult run_episode(const Scenario& scenario, ObservabilityLevel level,
                      std::uint64_t seed, const EngineConfig& config,
                      GeneratorBackend& backend, CscBackend& csc,
                      const DemoLibrary& demos) {
  Env env(scenario, level, seed);
  Engine engine(env, backend, csc, demos, config);
  return engine.run_task();
}

}  // namespace nesyro
