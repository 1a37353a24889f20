#include "nesyro/policy.hpp"

#include <cctype>
#include <sstream>

#include "nesyro/domain_parser.hpp"

namespace nesyro {

namespace {

bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || c == '_';
}

bool ident_char(char c) {
  return ident_start(c) || (c >= '0' && c <= '9');
}

}  // namespace

std::string SkillCall::str() const {
  std::ostringstream out;
  out << name << '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i > 0) out << ", ";
    out << args[i];
  }
  out << ')';
  return out.str();
}

PolicyCode parse_policy(const std::string& text) {
  PolicyCode policy;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t pos = 0;
    auto skip_ws = [&] {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    };
    auto error = [&](const std::string& msg) -> ParseError {
      return ParseError(msg, line_no, static_cast<int>(pos) + 1);
    };
    skip_ws();
    if (pos >= line.size() || line[pos] == '#') continue;

    if (!ident_start(line[pos])) throw error("expected skill name");
    SkillCall call;
    call.source_line = line_no;
    while (pos < line.size() && ident_char(line[pos])) call.name.push_back(line[pos++]);
    skip_ws();
    if (pos >= line.size() || line[pos] != '(') throw error("expected '('");
    ++pos;
    skip_ws();
    if (pos < line.size() && line[pos] == ')') {
      ++pos;
    } else {
      while (true) {
        skip_ws();
        if (pos >= line.size() || !ident_start(line[pos])) {
          throw error("expected argument");
        }
        std::string arg;
        while (pos < line.size() && ident_char(line[pos])) arg.push_back(line[pos++]);
        call.args.push_back(std::move(arg));
        skip_ws();
        if (pos < line.size() && line[pos] == ',') {
          ++pos;
          continue;
        }
        if (pos < line.size() && line[pos] == ')') {
          ++pos;
          break;
        }
        throw error("expected ',' or ')'");
      }
    }
    skip_ws();
    if (pos < line.size() && line[pos] != '#') {
      throw error("unexpected trailing content");
    }
    policy.calls.push_back(std::move(call));
  }
  return policy;
}

std::string print_policy(const PolicyCode& policy) {
  std::ostringstream out;
  for (const auto& call : policy.calls) out << call.str() << '\n';
  return out.str();
}

}  // namespace nesyro
