#include "nesyro/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "httplib.h"
#include "json.hpp"

namespace nesyro {

namespace {

std::vector<std::pair<GroundAtom, bool>> parse_obs_list(const nlohmann::json& arr) {
  std::vector<std::pair<GroundAtom, bool>> out;
  for (const auto& entry : arr) {
    out.emplace_back(parse_ground_atom(entry.at("atom").get<std::string>()),
                     entry.at("value").get<bool>());
  }
  return out;
}

std::set<std::string> signatures(
    const std::vector<std::pair<GroundAtom, bool>>& obs) {
  std::set<std::string> sigs;
  for (const auto& [atom, value] : obs) {
    if (value) sigs.insert(atom.predicate + "/" + std::to_string(atom.args.size()));
  }
  return sigs;
}

}  // namespace

DemoLibrary DemoLibrary::from_json(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  DemoLibrary lib;
  for (const auto& entry : doc) {
    Demonstration demo;
    demo.skill_name = entry.at("skill").get<std::string>();
    demo.initial_observation = parse_obs_list(entry.at("initial_observation"));
    demo.post_observation = parse_obs_list(entry.value("post_observation", nlohmann::json::array()));
    demo.success = entry.at("success").get<bool>();
    const auto& action = entry.at("action");
    demo.action.name = action.at("name").get<std::string>();
    for (const auto& a : action.value("args", nlohmann::json::array())) {
      demo.action.args.push_back(a.get<std::string>());
    }
    if (demo.action.name != demo.skill_name) {
      throw std::runtime_error("demonstration action does not match its skill: " +
                               demo.skill_name);
    }
    lib.add(std::move(demo));
  }
  return lib;
}

DemoLibrary DemoLibrary::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open demo library " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void DemoLibrary::add(Demonstration demo) {
  index_[demo.skill_name].push_back(demos_.size());
  demos_.push_back(std::move(demo));
}

std::vector<const Demonstration*> DemoLibrary::for_skill(
    const std::string& name) const {
  std::vector<const Demonstration*> out;
  auto it = index_.find(name);
  if (it == index_.end()) return out;
  for (std::size_t idx : it->second) out.push_back(&demos_[idx]);
  return out;
}

double context_similarity(const std::vector<std::pair<GroundAtom, bool>>& demo_obs,
                          const ObservationStore& obs) {
  std::set<std::string> a = signatures(demo_obs);
  std::set<std::string> b;
  for (const auto& atom : obs.true_atoms()) {
    b.insert(atom.predicate + "/" + std::to_string(atom.args.size()));
  }
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& sig : a) {
    if (b.count(sig)) ++inter;
  }
  std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<RankedDemo> retrieve_demos(const DemoLibrary& library,
                                       const SkillCall& call,
                                       const ObservationStore& obs,
                                       std::size_t k) {
  if (k < 1) throw std::invalid_argument("retrieve_demos requires k >= 1");
  std::vector<RankedDemo> ranked;
  for (const Demonstration* demo : library.for_skill(call.name)) {
    ranked.push_back({demo, context_similarity(demo->initial_observation, obs)});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedDemo& a, const RankedDemo& b) {
                     return a.similarity > b.similarity;
                   });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

CscScore StubCscBackend::score(const ScoringContext& ctx) {
  constexpr double beta = 1.0;
  double weight_sum = 0.0;
  double success_sum = 0.0;
  for (const auto& rd : ctx.demos) {
    weight_sum += rd.similarity;
    if (rd.demo->success) success_sum += rd.similarity;
  }
  double csc = (success_sum + 0.5 * beta) / (weight_sum + beta);
  return {csc, -std::log(csc)};
}

LlmConfig llm_config_from_env() {
  LlmConfig config;
  if (const char* v = std::getenv("NESYRO_LLM_ENDPOINT")) config.endpoint = v;
  if (const char* v = std::getenv("NESYRO_LLM_MODEL")) config.model = v;
  if (const char* v = std::getenv("NESYRO_LLM_API_KEY")) config.api_key = v;
  return config;
}

namespace {

class HttpTransport : public LlmTransport {
 public:
  explicit HttpTransport(LlmConfig config) : config_(std::move(config)) {}

  std::string post(const std::string& json_body) override {
    httplib::Client client(config_.endpoint);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    auto res = client.Post(config_.path, headers, json_body, "application/json");
    if (!res) {
      throw TransportError("llm endpoint unreachable: " + config_.endpoint);
    }
    if (res->status != 200) {
      throw TransportError("llm endpoint returned status " +
                           std::to_string(res->status));
    }
    return res->body;
  }

 private:
  LlmConfig config_;
};

}  // namespace

std::unique_ptr<LlmTransport> make_http_transport(const LlmConfig& config) {
  return std::make_unique<HttpTransport>(config);
}

LlmCscBackend::LlmCscBackend(LlmConfig config,
                             std::shared_ptr<LlmTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {}

std::string LlmCscBackend::build_request(const ScoringContext& ctx) const {
  std::ostringstream prompt;
  prompt << "Role: You estimate the likelihood that a robotic skill will "
            "succeed in the current environment.\n";
  prompt << "Instruction: " << ctx.instruction << '\n';
  int i = 1;
  for (const auto& rd : ctx.demos) {
    prompt << "Demo " << i++ << ": " << rd.demo->action.str()
           << (rd.demo->success ? " -> success" : " -> failure") << '\n';
  }
  prompt << "Observation:";
  if (ctx.obs != nullptr) {
    for (const auto& [atom, value] : ctx.obs->entries()) {
      prompt << ' ' << atom.str() << '=' << (value ? "true" : "false");
    }
  }
  prompt << '\n';
  prompt << "Object list:";
  if (ctx.objects != nullptr) {
    for (const auto& [name, type] : *ctx.objects) prompt << ' ' << name;
  }
  prompt << '\n';
  prompt << "Skill code: " << ctx.skill_snippet << '\n';

  nlohmann::ordered_json req;
  req["model"] = config_.model;
  req["prompt"] = prompt.str();
  req["logprobs"] = true;
  req["echo"] = true;
  req["temperature"] = config_.temperature;
  req["max_tokens"] = 0;
  return req.dump();
}

CscScore LlmCscBackend::score(const ScoringContext& ctx) {
  std::string body = transport_->post(build_request(ctx));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed llm response: ") + e.what());
  }
  if (!doc.contains("choices") || doc["choices"].empty()) {
    throw TransportError("llm response carries no choices");
  }
  const auto& lp = doc["choices"][0]["logprobs"]["token_logprobs"];
  if (!lp.is_array() || lp.empty()) {
    throw TransportError("llm response carries no token log-probabilities");
  }
  double nll_sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : lp) {
    if (v.is_null()) continue;  // first echoed token has no logprob
    nll_sum += -v.get<double>();
    ++n;
  }
  if (n == 0) throw TransportError("llm response has only null log-probabilities");
  double raw = nll_sum / static_cast<double>(n);
  if (raw < 0.0) raw = 0.0;
  return {std::exp(-raw), raw};
}

double nesyconf(double csc, int lc) {
  if (csc < 0.0 || csc > 1.0) {
    throw std::invalid_argument("csc must lie in [0, 1]");
  }
  if (lc != 0 && lc != 1) {
    throw std::invalid_argument("lc must be 0 or 1");
  }
  return csc * static_cast<double>(lc);
}

std::string CscFeedback::render() const {
  std::ostringstream out;
  out << "1. Problem Identification: " << problem_identification << '\n'
      << "2. Justification: " << justification << '\n'
      << "3. Proposed Solutions: " << proposed_solutions << '\n'
      << "4. Additional Notes: " << additional_notes << '\n';
  return out.str();
}

CscFeedback make_csc_feedback(const ScoringContext& ctx, double csc,
                              double epsilon) {
  if (csc >= epsilon) {
    throw std::invalid_argument("csc feedback requested although csc >= epsilon");
  }
  CscFeedback fb;

  std::set<std::string> relevant;
  for (const auto& rd : ctx.demos) {
    for (const auto& [atom, value] : rd.demo->initial_observation) {
      (void)value;
      relevant.insert(atom.predicate);
    }
  }
  if (ctx.domain != nullptr && ctx.objects != nullptr) {
    for (const auto& atom : atom_universe(*ctx.domain, *ctx.objects)) {
      if (relevant.count(atom.predicate) == 0) continue;
      if (ctx.obs != nullptr && ctx.obs->lookup(atom) == TriValue::Unknown) {
        fb.suspect_atoms.push_back(atom);
      }
    }
  }
  if (ctx.objects != nullptr) {
    for (const auto& arg : ctx.call.args) {
      if (ctx.objects->find(arg) == ctx.objects->end()) {
        fb.unknown_objects.push_back(arg);
      }
    }
  }

  std::ostringstream sec1;
  sec1 << "confidence " << csc << " for " << ctx.call.str()
       << " is below threshold " << epsilon << '.';
  if (!fb.suspect_atoms.empty()) {
    sec1 << " Unverified observations:";
    for (const auto& a : fb.suspect_atoms) sec1 << ' ' << a.str();
    sec1 << '.';
  }
  for (const auto& obj : fb.unknown_objects) {
    sec1 << " An object declared in the code is not in the actual object list: "
         << obj << '.';
  }
  fb.problem_identification = sec1.str();
  fb.justification =
      "similar demonstrations mostly failed when these observations were "
      "missing from the initial context.";
  fb.proposed_solutions =
      "gather the listed observations with safe sensing skills before "
      "committing to this step.";
  fb.additional_notes = fb.suspect_atoms.empty() && fb.unknown_objects.empty()
                            ? "no concrete missing observation identified."
                            : "";
  return fb;
}

double calibrate_epsilon(const std::vector<CalibrationSample>& samples) {
  std::vector<double> kept;
  for (const auto& s : samples) {
    if (!s.informative) continue;
    if (!s.probe_success) continue;
    kept.push_back(s.confidence);
  }
  if (kept.size() < 4) {
    throw std::runtime_error("insufficient calibration data: " +
                             std::to_string(kept.size()) + " samples kept");
  }
  std::sort(kept.begin(), kept.end());
  double rank = 0.25 * static_cast<double>(kept.size() - 1);
  std::size_t lo = static_cast<std::size_t>(rank);
  double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= kept.size()) return kept[lo];
  return kept[lo] + frac * (kept[lo + 1] - kept[lo]);
}

}  // namespace nesyro
