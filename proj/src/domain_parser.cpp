#include "nesyro/domain_parser.hpp"

#include <cctype>
#include <memory>
#include <set>
#include <sstream>
#include <variant>

namespace nesyro {

namespace {

struct SExpr {
  // Either an atom token or a list of children.
  std::string token;
  std::vector<SExpr> children;
  bool is_list = false;
  int line = 0;
  int column = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  struct Token {
    enum Kind { LParen, RParen, Symbol, End } kind;
    std::string value;
    int line;
    int column;
  };

  Token next() {
    skip_space();
    if (pos_ >= text_.size()) return {Token::End, "", line_, column_};
    char c = text_[pos_];
    if (c == '(') {
      Token t{Token::LParen, "(", line_, column_};
      advance();
      return t;
    }
    if (c == ')') {
      Token t{Token::RParen, ")", line_, column_};
      advance();
      return t;
    }
    int line = line_;
    int column = column_;
    std::string sym;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';') {
      sym.push_back(text_[pos_]);
      advance();
    }
    if (sym.empty()) {
      throw ParseError("lexical error: unexpected character '" +
                           std::string(1, c) + "'",
                       line, column);
    }
    return {Token::Symbol, sym, line, column};
  }

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Reader {
 public:
  explicit Reader(const std::string& text) : lexer_(text) { bump(); }

  SExpr read() {
    if (tok_.kind == Lexer::Token::End) {
      throw ParseError("lexical error: unexpected end of input", tok_.line,
                       tok_.column);
    }
    if (tok_.kind == Lexer::Token::RParen) {
      throw ParseError("lexical error: unexpected ')'", tok_.line, tok_.column);
    }
    if (tok_.kind == Lexer::Token::Symbol) {
      SExpr e;
      e.token = tok_.value;
      e.line = tok_.line;
      e.column = tok_.column;
      bump();
      return e;
    }
    SExpr list;
    list.is_list = true;
    list.line = tok_.line;
    list.column = tok_.column;
    bump();
    while (tok_.kind != Lexer::Token::RParen) {
      if (tok_.kind == Lexer::Token::End) {
        throw ParseError("lexical error: missing ')'", tok_.line, tok_.column);
      }
      list.children.push_back(read());
    }
    bump();
    return list;
  }

  bool at_end() const { return tok_.kind == Lexer::Token::End; }
  int line() const { return tok_.line; }
  int column() const { return tok_.column; }

 private:
  void bump() { tok_ = lexer_.next(); }

  Lexer lexer_;
  Lexer::Token tok_;
};

[[noreturn]] void fail(const std::string& msg, const SExpr& at) {
  throw ParseError(msg, at.line, at.column);
}

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!std::islower(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s) {
    if (!std::islower(static_cast<unsigned char>(c)) &&
        !std::isdigit(static_cast<unsigned char>(c)) && c != '_') {
      return false;
    }
  }
  return true;
}

// Parses a typed list "a b - t c d - u e" into (name, type) pairs; entries
// with no type marker get `default_type`.
std::vector<std::pair<std::string, std::string>> parse_typed_list(
    const std::vector<SExpr>& items, std::size_t begin,
    const std::string& default_type, const SExpr& ctx) {
  std::vector<std::pair<std::string, std::string>> out;
  std::vector<std::string> pending;
  for (std::size_t i = begin; i < items.size(); ++i) {
    const SExpr& it = items[i];
    if (it.is_list) fail("expected symbol in typed list", it);
    if (it.token == "-") {
      if (i + 1 >= items.size() || items[i + 1].is_list) {
        fail("expected type name after '-'", it);
      }
      const std::string& type = items[i + 1].token;
      for (auto& name : pending) out.emplace_back(std::move(name), type);
      pending.clear();
      ++i;
    } else {
      pending.push_back(it.token);
    }
  }
  for (auto& name : pending) out.emplace_back(std::move(name), default_type);
  (void)ctx;
  return out;
}

AtomTemplate parse_literal(const SExpr& e, const Domain& domain,
                           const std::set<std::string>& param_vars) {
  if (!e.is_list || e.children.empty()) fail("expected literal", e);
  AtomTemplate tmpl;
  const SExpr* body = &e;
  if (e.children[0].token == "not") {
    if (e.children.size() != 2 || !e.children[1].is_list) {
      fail("malformed (not ...)", e);
    }
    tmpl.positive = false;
    body = &e.children[1];
    if (body->children.empty()) fail("expected literal", *body);
  }
  const SExpr& head = body->children[0];
  if (head.is_list) fail("expected predicate name", head);
  const Predicate* pred = domain.find_predicate(head.token);
  if (pred == nullptr) {
    fail("unknown predicate " + head.token, head);
  }
  tmpl.predicate = head.token;
  for (std::size_t i = 1; i < body->children.size(); ++i) {
    const SExpr& term = body->children[i];
    if (term.is_list) fail("expected term", term);
    if (!term.token.empty() && term.token[0] == '?' &&
        param_vars.find(term.token) == param_vars.end()) {
      fail("variable " + term.token + " is not declared in :parameters", term);
    }
    tmpl.terms.push_back(term.token);
  }
  if (tmpl.terms.size() != pred->arity()) {
    fail("predicate " + pred->name + " expects " +
             std::to_string(pred->arity()) + " arguments, got " +
             std::to_string(tmpl.terms.size()),
         *body);
  }
  return tmpl;
}

std::vector<AtomTemplate> parse_condition(const SExpr& e, const Domain& domain,
                                          const std::set<std::string>& vars) {
  std::vector<AtomTemplate> out;
  if (!e.is_list) fail("expected condition", e);
  if (!e.children.empty() && e.children[0].token == "and") {
    for (std::size_t i = 1; i < e.children.size(); ++i) {
      out.push_back(parse_literal(e.children[i], domain, vars));
    }
  } else if (!e.children.empty()) {
    out.push_back(parse_literal(e, domain, vars));
  }
  return out;
}

}  // namespace

Domain parse_domain(const std::string& text) {
  Reader reader(text);
  SExpr root = reader.read();
  if (!reader.at_end()) {
    throw ParseError("lexical error: trailing content after domain",
                     reader.line(), reader.column());
  }
  if (!root.is_list || root.children.empty() ||
      root.children[0].token != "define") {
    fail("expected (define (domain ...) ...)", root);
  }
  if (root.children.size() < 2 || !root.children[1].is_list ||
      root.children[1].children.size() != 2 ||
      root.children[1].children[0].token != "domain") {
    fail("expected (domain <name>)", root);
  }
  Domain domain;
  domain.name = root.children[1].children[1].token;
  if (!is_identifier(domain.name)) {
    fail("domain name must be a lowercase identifier",
         root.children[1].children[1]);
  }

  std::set<std::string> seen_types;
  std::set<std::string> seen_predicates;
  std::set<std::string> seen_skills;

  for (std::size_t i = 2; i < root.children.size(); ++i) {
    const SExpr& section = root.children[i];
    if (!section.is_list || section.children.empty()) {
      fail("expected (:types ...), (:predicates ...) or (:action ...)", section);
    }
    const std::string& tag = section.children[0].token;
    if (tag == ":types") {
      auto typed = parse_typed_list(section.children, 1, "", section);
      for (auto& [name, parent] : typed) {
        if (!is_identifier(name)) fail("type names must be lowercase identifiers", section);
        if (!seen_types.insert(name).second) {
          fail("duplicate type " + name, section);
        }
        ObjectType t;
        t.name = name;
        if (!parent.empty()) t.parent = parent;
        domain.types.push_back(std::move(t));
      }
      // Parent references must resolve and must not form a cycle.
      for (const auto& t : domain.types) {
        if (t.parent && seen_types.find(*t.parent) == seen_types.end()) {
          fail("undeclared type " + *t.parent, section);
        }
      }
      for (const auto& t : domain.types) {
        std::set<std::string> path{t.name};
        const ObjectType* cur = &t;
        while (cur->parent) {
          if (!path.insert(*cur->parent).second) {
            fail("type hierarchy contains a cycle through " + t.name, section);
          }
          cur = domain.find_type(*cur->parent);
        }
      }
    } else if (tag == ":predicates") {
      for (std::size_t j = 1; j < section.children.size(); ++j) {
        const SExpr& p = section.children[j];
        if (!p.is_list || p.children.empty() || p.children[0].is_list) {
          fail("expected (name ?v - type ...)", p);
        }
        Predicate pred;
        pred.name = p.children[0].token;
        if (!is_identifier(pred.name)) fail("predicate names must be lowercase identifiers", p);
        if (!seen_predicates.insert(pred.name).second) {
          fail("duplicate predicate " + pred.name, p);
        }
        auto typed = parse_typed_list(p.children, 1, "object", p);
        for (auto& [var, type] : typed) {
          if (var.empty() || var[0] != '?') {
            fail("predicate parameters must be variables", p);
          }
          if (type != "object" && seen_types.find(type) == seen_types.end()) {
            fail("undeclared type " + type, p);
          }
          pred.param_types.push_back(type);
        }
        domain.predicates.push_back(std::move(pred));
      }
    } else if (tag == ":action") {
      if (section.children.size() < 2 || section.children[1].is_list) {
        fail("expected action name", section);
      }
      SkillSchema skill;
      skill.name = section.children[1].token;
      if (!is_identifier(skill.name)) fail("action names must be lowercase identifiers", section);
      if (!seen_skills.insert(skill.name).second) {
        fail("duplicate action " + skill.name, section);
      }
      std::set<std::string> vars;
      std::size_t j = 2;
      while (j < section.children.size()) {
        const std::string& key = section.children[j].token;
        if (j + 1 >= section.children.size()) {
          fail("missing value for " + key, section.children[j]);
        }
        const SExpr& value = section.children[j + 1];
        if (key == ":parameters") {
          if (!value.is_list) fail("expected parameter list", value);
          auto typed = parse_typed_list(value.children, 0, "object", value);
          for (auto& [var, type] : typed) {
            if (var.empty() || var[0] != '?') {
              fail("action parameters must be variables", value);
            }
            if (!vars.insert(var).second) {
              fail("duplicate parameter " + var, value);
            }
            if (type != "object" && seen_types.find(type) == seen_types.end()) {
              fail("undeclared type " + type, value);
            }
            skill.params.emplace_back(var, type);
          }
        } else if (key == ":precondition") {
          skill.preconditions = parse_condition(value, domain, vars);
        } else if (key == ":effect") {
          skill.effects = parse_condition(value, domain, vars);
        } else {
          fail("unsupported action section " + key, section.children[j]);
        }
        j += 2;
      }
      // Reject contradictory effects on the same atom.
      for (const auto& a : skill.effects) {
        for (const auto& b : skill.effects) {
          if (a.predicate == b.predicate && a.terms == b.terms &&
              a.positive != b.positive) {
            fail("action " + skill.name + " both adds and deletes " +
                     a.predicate,
                 section);
          }
        }
      }
      domain.skills.push_back(std::move(skill));
    } else {
      fail("unsupported section " + tag, section);
    }
  }
  return domain;
}

std::string pretty_print(const Domain& domain) {
  std::ostringstream out;
  out << "(define (domain " << domain.name << ")\n";
  if (!domain.types.empty()) {
    out << "  (:types";
    for (const auto& t : domain.types) {
      out << ' ' << t.name;
      if (t.parent) out << " - " << *t.parent;
    }
    out << ")\n";
  }
  if (!domain.predicates.empty()) {
    out << "  (:predicates";
    for (const auto& p : domain.predicates) {
      out << " (" << p.name;
      for (std::size_t i = 0; i < p.param_types.size(); ++i) {
        out << " ?a" << i << " - " << p.param_types[i];
      }
      out << ')';
    }
    out << ")\n";
  }
  for (const auto& s : domain.skills) {
    out << "  (:action " << s.name << "\n    :parameters (";
    for (std::size_t i = 0; i < s.params.size(); ++i) {
      if (i > 0) out << ' ';
      out << s.params[i].first << " - " << s.params[i].second;
    }
    out << ")\n    :precondition (and";
    for (const auto& pre : s.preconditions) out << ' ' << pre.str();
    out << ")\n    :effect (and";
    for (const auto& eff : s.effects) out << ' ' << eff.str();
    out << "))\n";
  }
  out << ")\n";
  return out.str();
}

}  // namespace nesyro
