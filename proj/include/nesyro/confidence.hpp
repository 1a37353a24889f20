#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nesyro/atoms.hpp"
#include "nesyro/domain.hpp"
#include "nesyro/planner.hpp"
#include "nesyro/policy.hpp"

namespace nesyro {

// A single-skill demonstration: symbolic context, the call, the outcome.
struct Demonstration {
  std::string skill_name;
  std::vector<std::pair<GroundAtom, bool>> initial_observation;
  SkillCall action;
  std::vector<std::pair<GroundAtom, bool>> post_observation;
  bool success = false;
};

class DemoLibrary {
 public:
  static DemoLibrary from_json(const std::string& json_text);
  static DemoLibrary from_file(const std::string& path);

  void add(Demonstration demo);

  const std::vector<Demonstration>& demos() const { return demos_; }
  std::vector<const Demonstration*> for_skill(const std::string& name) const;

 private:
  std::vector<Demonstration> demos_;
  std::map<std::string, std::vector<std::size_t>> index_;
};

// Context similarity: Jaccard over abstract signatures ("pred/arity") of the
// True atoms on each side. Two empty contexts count as identical.
double context_similarity(const std::vector<std::pair<GroundAtom, bool>>& demo_obs,
                          const ObservationStore& obs);

struct RankedDemo {
  const Demonstration* demo;
  double similarity;
};

// Top-k demonstrations of the call's skill, ranked by context similarity,
// ties in library order. Fewer than k when scarce; empty is valid.
std::vector<RankedDemo> retrieve_demos(const DemoLibrary& library,
                                       const SkillCall& call,
                                       const ObservationStore& obs,
                                       std::size_t k = 5);

struct ScoringContext {
  const Domain* domain = nullptr;
  const ObjectTable* objects = nullptr;
  const ObservationStore* obs = nullptr;
  std::string instruction;
  SkillCall call;
  std::vector<RankedDemo> demos;
  std::string skill_snippet;     // rendered call text that gets scored
  std::string prompt_template;   // template id for the llm backend
};

struct CscScore {
  double csc = 0.0;  // in [0, 1]
  double raw = 0.0;  // nonnegative; csc == exp(-raw)
};

class CscBackend {
 public:
  virtual ~CscBackend() = default;
  virtual CscScore score(const ScoringContext& ctx) = 0;
  virtual std::string name() const = 0;
};

// Deterministic demo-frequency estimate: a Laplace-smoothed success rate
// weighted by context similarity, with a neutral 0.5 prior (beta = 1).
class StubCscBackend : public CscBackend {
 public:
  CscScore score(const ScoringContext& ctx) override;
  std::string name() const override { return "stub"; }
};

class TransportError : public std::runtime_error {
 public:
  explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

// Request/response transport for the scoring model; swapped for an
// in-process canned transport in tests.
class LlmTransport {
 public:
  virtual ~LlmTransport() = default;
  // Posts a JSON body, returns the JSON response body. Throws TransportError
  // on failure; failures are retryable, never a silent zero score.
  virtual std::string post(const std::string& json_body) = 0;
};

struct LlmConfig {
  std::string endpoint;   // e.g. http://host:port
  std::string path = "/v1/completions";
  std::string model;
  std::string api_key;    // sent as a bearer token when nonempty
  double temperature = 0.0;
};

LlmConfig llm_config_from_env();

std::unique_ptr<LlmTransport> make_http_transport(const LlmConfig& config);

// Scores the rendered skill snippet with per-token log-probabilities from
// the model; raw is the mean negative log-likelihood and csc = exp(-raw).
class LlmCscBackend : public CscBackend {
 public:
  LlmCscBackend(LlmConfig config, std::shared_ptr<LlmTransport> transport);
  CscScore score(const ScoringContext& ctx) override;
  std::string name() const override { return "llm"; }

  // Request body for a context; exposed so prompt rendering is testable.
  std::string build_request(const ScoringContext& ctx) const;

 private:
  LlmConfig config_;
  std::shared_ptr<LlmTransport> transport_;
};

// Exact product of Eq.-style combination; inputs are range-checked.
double nesyconf(double csc, int lc);

struct CscFeedback {
  std::string problem_identification;
  std::string justification;
  std::string proposed_solutions;
  std::string additional_notes;
  std::vector<GroundAtom> suspect_atoms;   // Unknown and decision-relevant
  std::vector<std::string> unknown_objects;

  std::string render() const;
};

// Builds the four-section low-confidence report. Requires csc < epsilon.
// Suspect atoms are the Unknown atoms whose predicate appears in the
// retrieved demonstrations' initial observations.
CscFeedback make_csc_feedback(const ScoringContext& ctx, double csc,
                              double epsilon);

struct ConfidenceRecord {
  std::size_t skill_index = 0;
  double csc = 0.0;
  int lc = 0;
  double conf = 0.0;  // csc * lc, exactly
  std::optional<CscFeedback> csc_feedback;
  LogicVerdict lc_feedback;
};

struct CalibrationSample {
  double confidence = 0.0;
  bool probe_success = false;
  bool informative = true;
};

// Threshold calibration: drops non-informative samples, keeps confidences of
// successfully grounded probes, and returns the lower quartile by linear
// interpolation at rank 0.25 * (N - 1). Requires at least 4 kept samples.
double calibrate_epsilon(const std::vector<CalibrationSample>& samples);

}  // namespace nesyro
