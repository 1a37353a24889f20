#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nesyro/atoms.hpp"
#include "nesyro/confidence.hpp"
#include "nesyro/domain.hpp"
#include "nesyro/policy.hpp"
#include "nesyro/probe.hpp"
#include "nesyro/verifier.hpp"

namespace nesyro {

struct GenerationRequest {
  const Domain* domain = nullptr;
  const ObjectTable* objects = nullptr;
  const ObservationStore* obs = nullptr;
  std::string instruction;
  std::string prompt_template;  // template id / text, llm backend only

  // Target the generated spec must capture. For probe requests these are the
  // observed_* marker atoms.
  std::set<GroundAtom> goal_atoms;
  std::vector<SafetyRule> safety_rules;

  std::optional<PolicyCode> prior_policy;
  std::optional<VerificationFeedback> prior_feedback;
  std::size_t frozen_index = 0;  // calls before this index are immutable
  std::optional<ProbeGoal> exploration_knowledge;
};

struct GenerationResult {
  TaskSpec spec;
  PolicyCode policy;
  std::optional<std::string> rationale;
  bool best_effort = false;  // no full plan existed; policy covers what it can
};

class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;
  virtual GenerationResult generate(const GenerationRequest& req) = 0;
  virtual GenerationResult regenerate_on_feedback(const GenerationRequest& req) = 0;
  virtual std::string name() const = 0;
};

// Planner-backed deterministic generator. Plans over the Known-True
// projection first, falls back to the open-world relaxation (Unknown atoms
// pass and get probed during validation), and degrades to a best-effort
// policy covering the largest achievable goal subset.
class OracleBackend : public GeneratorBackend {
 public:
  explicit OracleBackend(SearchLimits limits = {}) : limits_(limits) {}

  GenerationResult generate(const GenerationRequest& req) override;
  GenerationResult regenerate_on_feedback(const GenerationRequest& req) override;
  std::string name() const override { return "oracle"; }

 private:
  SearchLimits limits_;
};

// Prompt-driven generator speaking the completion-with-logprobs wire format.
// Responses carry the policy as DSL lines (bare or fenced) plus labelled
// GOAL:/SAFETY: lines the spec is rebuilt from.
class LlmGeneratorBackend : public GeneratorBackend {
 public:
  LlmGeneratorBackend(LlmConfig config, std::shared_ptr<LlmTransport> transport,
                      std::string prompt_template, int max_parse_retries = 3);

  GenerationResult generate(const GenerationRequest& req) override;
  GenerationResult regenerate_on_feedback(const GenerationRequest& req) override;
  std::string name() const override { return "llm"; }

  // Rendered prompt for a request; exposed for tests.
  std::string render_prompt(const GenerationRequest& req) const;

  // Parses a raw model response body into a result. Throws
  // std::runtime_error when no policy can be extracted.
  GenerationResult parse_response(const std::string& text,
                                  const GenerationRequest& req) const;

 private:
  LlmConfig config_;
  std::shared_ptr<LlmTransport> transport_;
  std::string prompt_template_;
  int max_parse_retries_;
};

// Levenshtein distance; the C1 repair rule renames a call to the unique
// nearest skill when the distance is at most 1.
std::size_t edit_distance(const std::string& a, const std::string& b);

}  // namespace nesyro
