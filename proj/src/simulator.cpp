#include "nesyro/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "nesyro/domain_parser.hpp"
#include "nesyro/rng.hpp"

namespace nesyro {

ObservabilityLevel parse_level(const std::string& name) {
  if (name == "high") return ObservabilityLevel::High;
  if (name == "low") return ObservabilityLevel::Low;
  if (name == "stochastic") return ObservabilityLevel::Stochastic;
  if (name == "complete") return ObservabilityLevel::Complete;
  throw std::runtime_error("unknown observability level: " + name);
}

std::string to_string(ObservabilityLevel level) {
  switch (level) {
    case ObservabilityLevel::High: return "high";
    case ObservabilityLevel::Low: return "low";
    case ObservabilityLevel::Stochastic: return "stochastic";
    default: return "complete";
  }
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void check_atom(const GroundAtom& atom, const Domain& domain,
                const ObjectTable& objects, const std::string& where) {
  const Predicate* pred = domain.find_predicate(atom.predicate);
  if (pred == nullptr) {
    throw std::runtime_error(where + ": unknown predicate in " + atom.str());
  }
  if (pred->arity() != atom.args.size()) {
    throw std::runtime_error(where + ": arity mismatch in " + atom.str());
  }
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    auto it = objects.find(atom.args[i]);
    if (it == objects.end()) {
      throw std::runtime_error(where + ": unknown object " + atom.args[i] +
                               " in " + atom.str());
    }
    if (!domain.type_is_a(it->second, pred->param_types[i])) {
      throw std::runtime_error(where + ": ill-typed argument " + atom.args[i] +
                               " in " + atom.str());
    }
  }
}

}  // namespace

Scenario load_scenario_json(const std::string& json_text,
                            const std::string& base_dir) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  Scenario sc;
  sc.name = doc.value("name", "scenario");
  namespace fs = std::filesystem;
  auto resolve = [&](const std::string& rel) {
    fs::path p(rel);
    if (p.is_absolute()) return p.string();
    return (fs::path(base_dir) / p).string();
  };

  sc.domain = parse_domain(read_file(resolve(doc.at("domain_file").get<std::string>())));
  if (doc.contains("skill_meta_file")) {
    apply_skill_meta_json(
        sc.domain, read_file(resolve(doc.at("skill_meta_file").get<std::string>())));
  }
  if (doc.contains("demo_file")) {
    sc.demo_file = resolve(doc.at("demo_file").get<std::string>());
  }

  for (auto& [obj, type] : doc.at("objects").items()) {
    if (sc.domain.find_type(type.get<std::string>()) == nullptr) {
      throw std::runtime_error("scenario object " + obj + " has unknown type " +
                               type.get<std::string>());
    }
    sc.objects[obj] = type.get<std::string>();
  }

  for (const auto& a : doc.at("hidden_init")) {
    GroundAtom atom = parse_ground_atom(a.get<std::string>());
    check_atom(atom, sc.domain, sc.objects, "hidden_init");
    sc.hidden_init.insert(std::move(atom));
  }
  for (const auto& a : doc.at("essential")) {
    GroundAtom atom = parse_ground_atom(a.get<std::string>());
    check_atom(atom, sc.domain, sc.objects, "essential");
    sc.essential_atoms.push_back(std::move(atom));
  }
  for (const auto& r : doc.value("visibility_rules", nlohmann::json::array())) {
    VisibilityRule rule;
    rule.guard = parse_ground_atom(r.at("guard").get<std::string>());
    check_atom(rule.guard, sc.domain, sc.objects, "visibility_rules");
    for (const auto& m : r.at("masks")) {
      if (sc.domain.find_predicate(m.get<std::string>()) == nullptr) {
        throw std::runtime_error("visibility rule masks unknown predicate " +
                                 m.get<std::string>());
      }
      rule.masked_predicates.insert(m.get<std::string>());
    }
    sc.visibility_rules.push_back(std::move(rule));
  }

  sc.instruction = doc.value("instruction", "");
  for (const auto& g : doc.at("goal")) {
    GroundAtom atom = parse_ground_atom(g.get<std::string>());
    check_atom(atom, sc.domain, sc.objects, "goal");
    sc.goal_atoms.push_back(std::move(atom));
  }

  for (const auto& r : doc.value("safety_rules", nlohmann::json::array())) {
    SafetyRule rule;
    rule.guarded_skill = r.at("skill").get<std::string>();
    if (sc.domain.find_skill(rule.guarded_skill) == nullptr) {
      throw std::runtime_error("safety rule guards unknown skill " +
                               rule.guarded_skill);
    }
    for (const auto& req : r.at("requires")) {
      rule.required_atoms.push_back(parse_atom_template(req.get<std::string>()));
    }
    sc.safety_rules.push_back(std::move(rule));
  }

  const nlohmann::json expansions_doc =
      doc.value("expansions", nlohmann::json::object());
  for (const auto& [skill, templates] : expansions_doc.items()) {
    const SkillSchema* schema = sc.domain.find_skill(skill);
    if (schema == nullptr) {
      throw std::runtime_error("expansion for unknown skill " + skill);
    }
    std::vector<SkillCall> seq;
    for (const auto& t : templates) {
      // Template form: name(?var, object, ...) — the policy grammar with
      // ?-prefixed slots for the parent skill's parameters.
      std::string text = t.get<std::string>();
      std::size_t open = text.find('(');
      std::size_t close = text.rfind(')');
      if (open == std::string::npos || close == std::string::npos || close < open) {
        throw std::runtime_error("malformed expansion template: " + text);
      }
      SkillCall call;
      call.name = text.substr(0, open);
      std::string args = text.substr(open + 1, close - open - 1);
      std::istringstream arg_in(args);
      std::string piece;
      while (std::getline(arg_in, piece, ',')) {
        std::size_t b = piece.find_first_not_of(" \t");
        std::size_t e = piece.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        call.args.push_back(piece.substr(b, e - b + 1));
      }
      if (sc.domain.find_skill(call.name) == nullptr) {
        throw std::runtime_error("expansion template names unknown skill " +
                                 call.name);
      }
      seq.push_back(std::move(call));
    }
    sc.expansions[skill] = std::move(seq);
  }

  // The canonical goal must be reachable from the full truth, otherwise the
  // scenario can never be solved and every run would be vacuous.
  SymbolicState full_truth{sc.hidden_init};
  std::set<GroundAtom> goal_set(sc.goal_atoms.begin(), sc.goal_atoms.end());
  SearchResult check = search_plan(sc.domain, sc.objects, full_truth, goal_set);
  if (check.status != SearchStatus::Found) {
    throw std::runtime_error("scenario " + sc.name +
                             ": unreachable goal from hidden_init");
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  namespace fs = std::filesystem;
  return load_scenario_json(read_file(path), fs::path(path).parent_path().string());
}

Env::Env(const Scenario& scenario, ObservabilityLevel level, std::uint64_t seed)
    : scenario_(&scenario), level_(level), seed_(seed), truth_(scenario.hidden_init) {}

bool Env::masked(const GroundAtom& atom) const {
  for (const auto& rule : scenario_->visibility_rules) {
    if (truth_.count(rule.guard) > 0) continue;  // guard holds, rule inactive
    if (rule.masked_predicates.count(atom.predicate) > 0) return true;
  }
  return false;
}

std::vector<std::pair<GroundAtom, bool>> Env::reset() {
  truth_ = scenario_->hidden_init;
  revealed_.clear();
  damaged_ = false;
  ia_count_ = 0;
  step_count_ = 0;

  const auto& essential = scenario_->essential_atoms;
  std::vector<std::size_t> order(essential.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed_, 0x0b5));
  rng.shuffle(order);

  std::set<std::size_t> dropped;
  switch (level_) {
    case ObservabilityLevel::Complete:
      break;
    case ObservabilityLevel::Low:
      // Drops the first entry of the seed permutation; High drops a prefix
      // of the same permutation, so Known(High) is nested in Known(Low).
      if (!essential.empty()) dropped.insert(order[0]);
      break;
    case ObservabilityLevel::High: {
      std::size_t n = essential.size() / 2 + (essential.size() % 2) + 1;
      n = std::min(n, essential.size());
      for (std::size_t i = 0; i < n; ++i) dropped.insert(order[i]);
      break;
    }
    case ObservabilityLevel::Stochastic: {
      Rng coin(mix_seed(seed_, 0x570));
      for (std::size_t i = 0; i < essential.size(); ++i) {
        if (coin.coin()) dropped.insert(i);
      }
      break;
    }
  }

  std::vector<std::pair<GroundAtom, bool>> observations;
  for (std::size_t i = 0; i < essential.size(); ++i) {
    if (dropped.count(i) > 0) continue;
    const GroundAtom& atom = essential[i];
    if (masked(atom)) continue;  // visibility rules dominate the level
    revealed_.insert(atom);
    observations.emplace_back(atom, truth_.count(atom) > 0);
  }
  std::sort(observations.begin(), observations.end());
  return observations;
}

StepResult Env::step(const GroundAction& action) {
  StepResult result;
  ++step_count_;

  bool ok = true;
  for (const auto& [positive, atom] : action.preconditions) {
    bool held = truth_.count(atom) > 0;
    if (positive != held) ok = false;
  }

  std::vector<GroundAtom> changed;
  if (ok) {
    result.succeeded = true;
    for (const auto& [add, atom] : action.effects) {
      bool held = truth_.count(atom) > 0;
      if (add && !held) {
        truth_.insert(atom);
        changed.push_back(atom);
      } else if (!add && held) {
        truth_.erase(atom);
        changed.push_back(atom);
      }
    }
  } else {
    const SkillSchema* schema = scenario_->domain.find_skill(action.skill);
    if (schema != nullptr && schema->meta.irreversible_on_violation) {
      Binding binding;
      for (std::size_t i = 0; i < schema->params.size(); ++i) {
        binding[schema->params[i].first] = action.args[i];
      }
      for (const auto& tmpl : schema->meta.damage_effects) {
        GroundAtom atom = instantiate(tmpl, binding);
        bool held = truth_.count(atom) > 0;
        if (tmpl.positive && !held) {
          truth_.insert(atom);
          changed.push_back(atom);
        } else if (!tmpl.positive && held) {
          truth_.erase(atom);
          changed.push_back(atom);
        }
      }
      damaged_ = true;
      ++ia_count_;
      result.irreversible_triggered = true;
    }
  }

  // Observation delta: sensing reveals plus whatever the action actually
  // changed, filtered by the currently active visibility rules.
  const SkillSchema* schema = scenario_->domain.find_skill(action.skill);
  std::set<GroundAtom> delta_atoms(changed.begin(), changed.end());
  if (schema != nullptr && schema->meta.sensing) {
    Binding binding;
    for (std::size_t i = 0; i < schema->params.size() && i < action.args.size(); ++i) {
      binding[schema->params[i].first] = action.args[i];
    }
    for (const auto& tmpl : schema->meta.reveals) {
      delta_atoms.insert(instantiate(tmpl, binding));
    }
  }
  for (const auto& atom : delta_atoms) {
    if (masked(atom)) continue;
    bool value = truth_.count(atom) > 0;
    revealed_.insert(atom);
    result.observation_delta.emplace_back(atom, value);
  }
  std::sort(result.observation_delta.begin(), result.observation_delta.end());
  return result;
}

bool Env::goal_unreachable() const {
  SymbolicState state{truth_};
  std::set<GroundAtom> goal(scenario_->goal_atoms.begin(),
                            scenario_->goal_atoms.end());
  SearchResult check = search_plan(scenario_->domain, scenario_->objects, state, goal);
  return check.status == SearchStatus::Unsolvable;
}

Metrics Env::score() const {
  Metrics m;
  std::size_t met = 0;
  for (const auto& g : scenario_->goal_atoms) {
    if (truth_.count(g) > 0) ++met;
  }
  m.gc = scenario_->goal_atoms.empty()
             ? 0.0
             : 100.0 * static_cast<double>(met) /
                   static_cast<double>(scenario_->goal_atoms.size());
  m.sr = (met == scenario_->goal_atoms.size() && !scenario_->goal_atoms.empty())
             ? 100.0
             : 0.0;
  m.ia = ia_count_;
  return m;
}

std::vector<GroundAction> expand_skill(const SkillCall& call,
                                       const Scenario& scenario) {
  const SkillSchema* schema = scenario.domain.find_skill(call.name);
  if (schema == nullptr) {
    throw std::invalid_argument("unknown skill " + call.name);
  }
  auto it = scenario.expansions.find(call.name);
  if (it == scenario.expansions.end()) {
    return {ground_call(call, scenario.domain, scenario.objects)};
  }
  if (schema->params.size() != call.args.size()) {
    throw std::invalid_argument("skill " + call.name + " arity mismatch");
  }
  Binding binding;
  for (std::size_t i = 0; i < call.args.size(); ++i) {
    binding[schema->params[i].first] = call.args[i];
  }
  std::vector<GroundAction> out;
  for (const SkillCall& tmpl : it->second) {
    SkillCall grounded;
    grounded.name = tmpl.name;
    for (const auto& arg : tmpl.args) {
      if (!arg.empty() && arg[0] == '?') {
        auto b = binding.find(arg);
        if (b == binding.end()) {
          throw std::invalid_argument("expansion of " + call.name +
                                      " uses unbound variable " + arg);
        }
        grounded.args.push_back(b->second);
      } else {
        grounded.args.push_back(arg);
      }
    }
    out.push_back(ground_call(grounded, scenario.domain, scenario.objects));
  }
  return out;
}

}  // namespace nesyro
