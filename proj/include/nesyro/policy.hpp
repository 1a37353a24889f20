#pragma once

#include <compare>
#include <string>
#include <vector>

namespace nesyro {

struct SkillCall {
  std::string name;
  std::vector<std::string> args;
  int source_line = 0;

  bool operator==(const SkillCall& other) const {
    return name == other.name && args == other.args;
  }

  std::string str() const;
};

enum class PolicyOrigin { Generated, Refined, Probe };

struct PolicyCode {
  std::vector<SkillCall> calls;
  PolicyOrigin origin = PolicyOrigin::Generated;
  int refined_from = -1;  // first regenerated index when origin == Refined

  bool operator==(const PolicyCode& other) const { return calls == other.calls; }

  std::size_t size() const { return calls.size(); }
  bool empty() const { return calls.empty(); }
};

// Parses the policy DSL: one `name(arg, ...)` call per line, `#` comments,
// identifiers [a-z_][a-z0-9_]*. An empty file is a valid empty policy.
// Throws ParseError with line/column on malformed input.
PolicyCode parse_policy(const std::string& text);

// Canonical text form; parse_policy(print_policy(p)) == p.
std::string print_policy(const PolicyCode& policy);

}  // namespace nesyro
