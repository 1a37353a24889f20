#pragma once

#include <stdexcept>
#include <string>

#include "nesyro/domain.hpp"

namespace nesyro {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string msg, int line, int column)
      : std::runtime_error(msg + " at line " + std::to_string(line) +
                           ", column " + std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Parses the typed-STRIPS subset:
//   (define (domain N) (:types ...) (:predicates ...) (:action ...)*)
// Preconditions and effects are a single literal or an (and ...) of literals;
// (not ...) is allowed in both. No disjunction, quantifiers or fluents.
Domain parse_domain(const std::string& text);

// Canonical textual form; parse_domain(pretty_print(d)) is structurally
// equal to d.
std::string pretty_print(const Domain& domain);

}  // namespace nesyro
