#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nesyro/confidence.hpp"
#include "nesyro/generator.hpp"
#include "nesyro/probe.hpp"
#include "nesyro/simulator.hpp"

namespace nesyro {

enum class Mode { Nesyro, Naive, VerifyOnly, NoLc, NoCsc, NoProbe };

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

struct EngineConfig {
  double epsilon = 0.45;
  std::size_t max_verify_retries = 3;
  std::size_t max_probe_depth = 3;
  std::size_t max_refinements_per_skill = 3;
  SearchLimits planner_limits;
  std::size_t demo_k = 5;
  Mode mode = Mode::Nesyro;

  void validate() const;
};

enum class NodeKind { Main, Probe };
enum class NodeStatus { Grounded, Executing, Executed, Aborted };

struct PolicyTreeNode {
  std::size_t node_id = 0;
  PolicyCode policy;
  TaskSpec spec;
  std::optional<std::pair<std::size_t, std::size_t>> parent;  // (node, skill idx)
  std::vector<std::size_t> children;
  NodeKind kind = NodeKind::Main;
  std::vector<ConfidenceRecord> confidence_log;
  NodeStatus status = NodeStatus::Grounded;
  std::size_t depth = 0;
};

struct TrajectoryEntry {
  GroundAction action;
  std::vector<std::pair<GroundAtom, bool>> observation_delta;
  bool succeeded = false;
  bool irreversible_triggered = false;
  std::size_t owner_node_id = 0;
};

struct Trajectory {
  std::vector<TrajectoryEntry> entries;

  std::size_t probe_action_count(const std::vector<PolicyTreeNode>& tree) const;
};

struct EpisodeCounters {
  std::size_t generator_invocations = 0;
  std::size_t probe_policies_executed = 0;
  std::size_t refinements = 0;
  std::size_t max_probe_fanout = 0;   // max probes launched at one skill index
  std::size_t max_policy_length = 0;
  std::size_t invocation_bound = 0;   // evaluated bound formula
  bool bound_respected = true;
  bool gate_respected = true;  // executed calls had final conf >= epsilon
};

struct RunResult {
  Trajectory trajectory;
  Metrics metrics;
  PolicyCode main_policy;
  std::vector<PolicyTreeNode> tree;
  ObservationStore final_obs;
  bool aborted = false;
  std::string abort_reason;
  EpisodeCounters counters;

  std::string tree_to_json() const;
};

// One engine instance drives one episode: the verification loop, the
// sequential validation sweep with probe recursion and frozen-prefix
// refinement, and the execution of grounded policies.
class Engine {
 public:
  Engine(Env& env, GeneratorBackend& backend, CscBackend& csc,
         const DemoLibrary& demos, EngineConfig config);

  RunResult run_task();

 private:
  struct TaskContext {
    const Domain* domain;
    std::set<GroundAtom> goal;
    std::vector<SafetyRule> safety_rules;
    std::string instruction;
    std::optional<ProbeGoal> exploration;
    NodeKind kind;
  };

  struct PhaseOutcome {
    bool ok = false;
    TaskSpec spec;
    PolicyCode policy;
    std::string failure;
  };

  PhaseOutcome verification_phase(const TaskContext& ctx, std::size_t frozen_index,
                                  const std::optional<PolicyCode>& prior);
  // Returns the node id of a grounded policy node or nullopt on abort.
  std::optional<std::size_t> run_nesyro(const TaskContext& ctx,
                                        std::size_t frozen_index,
                                        std::size_t depth,
                                        std::optional<std::pair<std::size_t, std::size_t>> parent);
  bool validation_phase(std::size_t node_id, const TaskContext& ctx,
                        std::size_t start_index, std::size_t depth);
  // Executes a grounded node; false when execution stopped early.
  bool execute_node(std::size_t node_id);

  GenerationRequest base_request(const TaskContext& ctx) const;
  ConfidenceRecord assess(const TaskContext& ctx, const PolicyCode& policy,
                          std::size_t index);

  Env& env_;
  GeneratorBackend& backend_;
  CscBackend& csc_;
  const DemoLibrary& demos_;
  EngineConfig config_;

  ObservationStore obs_;
  Trajectory trajectory_;
  std::vector<PolicyTreeNode> tree_;
  EpisodeCounters counters_;
  Domain probe_domain_;  // sensing-compiled, safe-skills-only
  bool episode_failed_ = false;
  std::string abort_reason_;
};

// Convenience wrapper: fresh env reset + engine run.
RunResult run_episode(const Scenario& scenario, ObservabilityLevel level,
                      std::uint64_t seed, const EngineConfig& config,
                      GeneratorBackend& backend, CscBackend& csc,
                      const DemoLibrary& demos);

}  // namespace nesyro
