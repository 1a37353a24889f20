#include "nesyro/domain.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace nesyro {

std::string AtomTemplate::str() const {
  std::ostringstream out;
  if (!positive) out << "(not ";
  out << '(' << predicate;
  for (const auto& t : terms) out << ' ' << t;
  out << ')';
  if (!positive) out << ')';
  return out.str();
}

AtomTemplate parse_atom_template(const std::string& text) {
  std::string s = text;
  auto strip = [](std::string& v) {
    std::size_t b = v.find_first_not_of(" \t");
    std::size_t e = v.find_last_not_of(" \t");
    v = (b == std::string::npos) ? "" : v.substr(b, e - b + 1);
  };
  strip(s);
  AtomTemplate tmpl;
  if (s.rfind("(not", 0) == 0) {
    tmpl.positive = false;
    std::size_t open = s.find('(', 4);
    std::size_t close = s.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close <= open) {
      throw std::invalid_argument("malformed template: " + text);
    }
    s = s.substr(open, s.find(')', open) - open + 1);
  }
  GroundAtom raw = parse_ground_atom(s);
  tmpl.predicate = raw.predicate;
  tmpl.terms = raw.args;
  return tmpl;
}

const Predicate* Domain::find_predicate(const std::string& name) const {
  for (const auto& p : predicates) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const SkillSchema* Domain::find_skill(const std::string& name) const {
  for (const auto& s : skills) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const ObjectType* Domain::find_type(const std::string& name) const {
  for (const auto& t : types) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

bool Domain::type_is_a(const std::string& t, const std::string& ancestor) const {
  std::string cur = t;
  for (std::size_t guard = 0; guard <= types.size(); ++guard) {
    if (cur == ancestor) return true;
    const ObjectType* ot = find_type(cur);
    if (ot == nullptr || !ot->parent) return false;
    cur = *ot->parent;
  }
  return false;
}

GroundAtom instantiate(const AtomTemplate& tmpl, const Binding& binding) {
  GroundAtom atom;
  atom.predicate = tmpl.predicate;
  atom.args.reserve(tmpl.terms.size());
  for (const auto& term : tmpl.terms) {
    if (!term.empty() && term[0] == '?') {
      auto it = binding.find(term);
      if (it == binding.end()) {
        throw std::invalid_argument("unbound variable " + term + " in " +
                                    tmpl.str());
      }
      atom.args.push_back(it->second);
    } else {
      atom.args.push_back(term);
    }
  }
  return atom;
}

GroundAction ground(const SkillSchema& schema, const Binding& binding,
                    const ObjectTable& objects, const Domain& domain) {
  for (const auto& [var, type] : schema.params) {
    auto bound = binding.find(var);
    if (bound == binding.end()) {
      throw std::invalid_argument("parameter " + var + " of " + schema.name +
                                  " is unbound");
    }
    auto obj = objects.find(bound->second);
    if (obj == objects.end()) {
      throw std::invalid_argument("object " + bound->second +
                                  " is not declared in the scenario");
    }
    if (!domain.type_is_a(obj->second, type)) {
      throw std::invalid_argument("type mismatch: parameter " + var + " of " +
                                  schema.name + " expects " + type + ", got " +
                                  bound->second + " of type " + obj->second);
    }
  }
  GroundAction action;
  action.skill = schema.name;
  for (const auto& [var, type] : schema.params) {
    (void)type;
    action.args.push_back(binding.at(var));
  }
  for (const auto& pre : schema.preconditions) {
    action.preconditions.emplace_back(pre.positive, instantiate(pre, binding));
  }
  for (const auto& eff : schema.effects) {
    action.effects.emplace_back(eff.positive, instantiate(eff, binding));
  }
  return action;
}

std::string GroundAction::str() const {
  std::ostringstream out;
  out << skill << '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i > 0) out << ", ";
    out << args[i];
  }
  out << ')';
  return out.str();
}

std::vector<Binding> enumerate_bindings(const SkillSchema& schema,
                                        const ObjectTable& objects,
                                        const Domain& domain) {
  std::vector<std::vector<std::string>> candidates;
  for (const auto& [var, type] : schema.params) {
    (void)var;
    std::vector<std::string> fits;
    for (const auto& [obj, obj_type] : objects) {
      if (domain.type_is_a(obj_type, type)) fits.push_back(obj);
    }
    candidates.push_back(std::move(fits));
  }
  std::vector<Binding> result;
  std::vector<std::size_t> cursor(candidates.size(), 0);
  if (candidates.empty()) {
    result.push_back({});
    return result;
  }
  for (const auto& c : candidates) {
    if (c.empty()) return result;
  }
  while (true) {
    Binding b;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      b[schema.params[i].first] = candidates[i][cursor[i]];
    }
    result.push_back(std::move(b));
    std::size_t i = candidates.size();
    while (i > 0) {
      --i;
      if (++cursor[i] < candidates[i].size()) break;
      cursor[i] = 0;
      if (i == 0) return result;
    }
  }
}

std::vector<GroundAction> ground_all(const Domain& domain,
                                     const ObjectTable& objects) {
  std::vector<GroundAction> actions;
  for (const auto& schema : domain.skills) {
    for (const auto& binding : enumerate_bindings(schema, objects, domain)) {
      actions.push_back(ground(schema, binding, objects, domain));
    }
  }
  std::sort(actions.begin(), actions.end(),
            [](const GroundAction& a, const GroundAction& b) {
              if (a.skill != b.skill) return a.skill < b.skill;
              return a.args < b.args;
            });
  return actions;
}

std::vector<GroundAtom> atom_universe(const Domain& domain,
                                      const ObjectTable& objects) {
  std::vector<GroundAtom> atoms;
  for (const auto& pred : domain.predicates) {
    std::vector<std::vector<std::string>> candidates;
    for (const auto& type : pred.param_types) {
      std::vector<std::string> fits;
      for (const auto& [obj, obj_type] : objects) {
        if (domain.type_is_a(obj_type, type)) fits.push_back(obj);
      }
      candidates.push_back(std::move(fits));
    }
    std::vector<std::size_t> cursor(candidates.size(), 0);
    bool empty = false;
    for (const auto& c : candidates) {
      if (c.empty()) empty = true;
    }
    if (empty) continue;
    while (true) {
      GroundAtom atom;
      atom.predicate = pred.name;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        atom.args.push_back(candidates[i][cursor[i]]);
      }
      atoms.push_back(std::move(atom));
      if (candidates.empty()) break;
      std::size_t i = candidates.size();
      bool done = false;
      while (i > 0) {
        --i;
        if (++cursor[i] < candidates[i].size()) break;
        cursor[i] = 0;
        if (i == 0) done = true;
      }
      if (done) break;
    }
  }
  std::sort(atoms.begin(), atoms.end());
  return atoms;
}

void apply_skill_meta_json(Domain& domain, const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  for (auto& [skill_name, body] : doc.items()) {
    SkillSchema* schema = nullptr;
    for (auto& s : domain.skills) {
      if (s.name == skill_name) schema = &s;
    }
    if (schema == nullptr) {
      throw std::runtime_error("skill metadata for unknown skill: " + skill_name);
    }
    SkillMeta meta;
    meta.safe = body.value("safe", false);
    meta.sensing = body.value("sensing", false);
    meta.irreversible_on_violation = body.value("irreversible_on_violation", false);
    for (const auto& r : body.value("reveals", nlohmann::json::array())) {
      meta.reveals.push_back(parse_atom_template(r.get<std::string>()));
    }
    for (const auto& d : body.value("damage_effects", nlohmann::json::array())) {
      meta.damage_effects.push_back(parse_atom_template(d.get<std::string>()));
    }
    if (meta.sensing && !meta.safe) {
      throw std::runtime_error("skill " + skill_name +
                               ": sensing skills must be safe");
    }
    if (meta.sensing != !meta.reveals.empty()) {
      throw std::runtime_error("skill " + skill_name +
                               ": reveals must be nonempty exactly for sensing skills");
    }
    schema->meta = std::move(meta);
  }
}

}  // namespace nesyro
