#pragma once

#include <string>
#include <variant>
#include <vector>

#include "apfsm/model.hpp"

namespace apfsm {

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  int line = 0;
  int col = 0;
  std::string code;  // stable identifier: E-SYNTAX, E-UNDECLARED, E-PROBSUM, ...
  std::string message;

  std::string str() const;
};

/// Parse result: raw text plus an AST with source locations. Name references
/// are unresolved until validate().
struct ModelSource {
  std::string text;
  Model ast;
};

using ParseResult = std::variant<ModelSource, std::vector<Diagnostic>>;
using ValidateResult = std::variant<Model, std::vector<Diagnostic>>;

/// Parses the .apfsm textual language:
///
///   const NAME = INT;
///   const interval NAME = [INT..INT];
///   var NAME : [INT..INT] init INT;
///   label NAME = EXPR;
///   [ACTION] GUARD weight EXPR -> P:(upd,...) + P:(upd,...);
///
/// Updates are `v:=EXPR`, `v+=EXPR`, `v-=EXPR`; `//` comments run to end of
/// line; probabilities are decimal or fraction literals, stored exactly.
ParseResult parse_model(const std::string& text);

/// Resolves names, checks domains, interval bounds and literal probability
/// sums. Collects every violation instead of stopping at the first.
ValidateResult validate(const ModelSource& src);

/// Convenience: parse + validate, throwing ModelError with the first
/// diagnostic message on failure.
Model load_model(const std::string& text);

/// Canonical printer: declaration order preserved, one command per line,
/// normalized fraction literals. parse(print(m)) is structurally equal to m.
std::string print_model(const Model& m);

}  // namespace apfsm
