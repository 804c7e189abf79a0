#include "apfsm/parser.hpp"

#include <cctype>
#include <sstream>

namespace apfsm {

std::string Diagnostic::str() const {
  std::ostringstream os;
  os << (severity == Severity::Error ? "error" : "warning") << " " << code << " at " << line << ":"
     << col << ": " << message;
  return os.str();
}

namespace {

enum class Tok {
  End, Ident, Number,
  KwConst, KwInterval, KwVar, KwInit, KwLabel, KwWeight, KwTrue, KwFalse,
  Semi, Colon, Comma, LParen, RParen, LBracket, RBracket,
  Assign,   // :=
  AddAssign, SubAssign,
  Arrow,    // ->
  DotDot,
  Eq, Ne, Lt, Le, Gt, Ge,
  And, Or, Not,
  Plus, Minus, Star, Slash,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
};

struct ParseError {
  Diagnostic diag;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= text_.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        advance();
      t.text = text_.substr(start, pos_ - start);
      if (t.text == "const") t.kind = Tok::KwConst;
      else if (t.text == "interval") t.kind = Tok::KwInterval;
      else if (t.text == "var") t.kind = Tok::KwVar;
      else if (t.text == "init") t.kind = Tok::KwInit;
      else if (t.text == "label") t.kind = Tok::KwLabel;
      else if (t.text == "weight") t.kind = Tok::KwWeight;
      else if (t.text == "true") t.kind = Tok::KwTrue;
      else if (t.text == "false") t.kind = Tok::KwFalse;
      else t.kind = Tok::Ident;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
      if (pos_ + 1 < text_.size() && text_[pos_] == '.' && text_[pos_ + 1] != '.') {
        advance();
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
      }
      t.kind = Tok::Number;
      t.text = text_.substr(start, pos_ - start);
      return t;
    }
    auto two = [&](char a, char b) {
      return c == a && pos_ + 1 < text_.size() && text_[pos_ + 1] == b;
    };
    if (two(':', '=')) { t.kind = Tok::Assign; advance(); advance(); return t; }
    if (two('+', '=')) { t.kind = Tok::AddAssign; advance(); advance(); return t; }
    if (two('-', '=')) { t.kind = Tok::SubAssign; advance(); advance(); return t; }
    if (two('-', '>')) { t.kind = Tok::Arrow; advance(); advance(); return t; }
    if (two('.', '.')) { t.kind = Tok::DotDot; advance(); advance(); return t; }
    if (two('!', '=')) { t.kind = Tok::Ne; advance(); advance(); return t; }
    if (two('<', '=')) { t.kind = Tok::Le; advance(); advance(); return t; }
    if (two('>', '=')) { t.kind = Tok::Ge; advance(); advance(); return t; }
    switch (c) {
      case ';': t.kind = Tok::Semi; break;
      case ':': t.kind = Tok::Colon; break;
      case ',': t.kind = Tok::Comma; break;
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      case '[': t.kind = Tok::LBracket; break;
      case ']': t.kind = Tok::RBracket; break;
      case '=': t.kind = Tok::Eq; break;
      case '<': t.kind = Tok::Lt; break;
      case '>': t.kind = Tok::Gt; break;
      case '&': t.kind = Tok::And; break;
      case '|': t.kind = Tok::Or; break;
      case '!': t.kind = Tok::Not; break;
      case '+': t.kind = Tok::Plus; break;
      case '-': t.kind = Tok::Minus; break;
      case '*': t.kind = Tok::Star; break;
      case '/': t.kind = Tok::Slash; break;
      default: {
        Diagnostic d{Severity::Error, line_, col_, "E-SYNTAX",
                     std::string("unexpected character '") + c + "'"};
        throw ParseError{d};
      }
    }
    advance();
    return t;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lexer_(text) { bump(); }

  Model parse() {
    Model m;
    while (cur_.kind != Tok::End) {
      switch (cur_.kind) {
        case Tok::KwConst: parse_const(m); break;
        case Tok::KwVar: parse_var(m); break;
        case Tok::KwLabel: parse_label(m); break;
        case Tok::LBracket: parse_command(m); break;
        default:
          fail("expected declaration or command");
      }
    }
    return m;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    Diagnostic d{Severity::Error, cur_.line, cur_.col, "E-SYNTAX", msg};
    throw ParseError{d};
  }

  void bump() { cur_ = lexer_.next(); }

  Token expect(Tok kind, const std::string& what) {
    if (cur_.kind != kind) fail("expected " + what);
    Token t = cur_;
    bump();
    return t;
  }

  SourceLoc loc() const { return {cur_.line, cur_.col}; }

  std::int64_t parse_signed_int() {
    bool neg = false;
    if (cur_.kind == Tok::Minus) {
      neg = true;
      bump();
    }
    Token t = expect(Tok::Number, "integer");
    if (t.text.find('.') != std::string::npos) fail("expected integer, found decimal");
    std::int64_t v = 0;
    try {
      v = std::stoll(t.text);
    } catch (const std::exception&) {
      Diagnostic d{Severity::Error, t.line, t.col, "E-SYNTAX", "integer literal out of range"};
      throw ParseError{d};
    }
    return neg ? -v : v;
  }

  void parse_const(Model& m) {
    SourceLoc at = loc();
    bump();  // const
    if (cur_.kind == Tok::KwInterval) {
      bump();
      Token name = expect(Tok::Ident, "interval constant name");
      expect(Tok::Eq, "'='");
      expect(Tok::LBracket, "'['");
      std::int64_t lo = parse_signed_int();
      expect(Tok::DotDot, "'..'");
      std::int64_t hi = parse_signed_int();
      expect(Tok::RBracket, "']'");
      expect(Tok::Semi, "';'");
      IntervalDecl d;
      d.name = name.text;
      d.lo = static_cast<std::int32_t>(lo);
      d.hi = static_cast<std::int32_t>(hi);
      d.loc = {name.line, name.col};
      m.intervals.push_back(std::move(d));
      return;
    }
    Token name = expect(Tok::Ident, "constant name");
    expect(Tok::Eq, "'='");
    std::int64_t v = parse_signed_int();
    expect(Tok::Semi, "';'");
    ConstDecl d;
    d.name = name.text;
    d.value = v;
    d.loc = {name.line, name.col};
    (void)at;
    m.constants.push_back(std::move(d));
  }

  void parse_var(Model& m) {
    bump();  // var
    Token name = expect(Tok::Ident, "variable name");
    expect(Tok::Colon, "':'");
    expect(Tok::LBracket, "'['");
    std::int64_t lo = parse_signed_int();
    expect(Tok::DotDot, "'..'");
    std::int64_t hi = parse_signed_int();
    expect(Tok::RBracket, "']'");
    expect(Tok::KwInit, "'init'");
    std::int64_t init = parse_signed_int();
    expect(Tok::Semi, "';'");
    VariableDecl d;
    d.name = name.text;
    d.lo = static_cast<std::int32_t>(lo);
    d.hi = static_cast<std::int32_t>(hi);
    d.init = static_cast<std::int32_t>(init);
    d.loc = {name.line, name.col};
    m.variables.push_back(std::move(d));
  }

  void parse_label(Model& m) {
    bump();  // label
    Token name = expect(Tok::Ident, "label name");
    expect(Tok::Eq, "'='");
    LabelDecl d;
    d.name = name.text;
    d.pred = parse_expr();
    d.loc = {name.line, name.col};
    expect(Tok::Semi, "';'");
    m.labels.push_back(std::move(d));
  }

  void parse_command(Model& m) {
    Token open = cur_;
    bump();  // [
    Token action = expect(Tok::Ident, "action name");
    expect(Tok::RBracket, "']'");
    Command c;
    c.action = action.text;
    c.loc = {open.line, open.col};
    c.guard = parse_expr();
    expect(Tok::KwWeight, "'weight'");
    c.weight = parse_expr();
    expect(Tok::Arrow, "'->'");
    c.outcomes.push_back(parse_outcome());
    while (cur_.kind == Tok::Plus) {
      bump();
      c.outcomes.push_back(parse_outcome());
    }
    expect(Tok::Semi, "';'");
    m.commands.push_back(std::move(c));
  }

  Outcome parse_outcome() {
    Outcome o;
    o.loc = loc();
    Token num = expect(Tok::Number, "probability");
    std::string text = num.text;
    if (cur_.kind == Tok::Slash) {
      bump();
      Token den = expect(Tok::Number, "denominator");
      text += "/" + den.text;
    }
    try {
      o.prob = parse_rational(text);
    } catch (const std::exception& e) {
      Diagnostic d{Severity::Error, num.line, num.col, "E-SYNTAX", e.what()};
      throw ParseError{d};
    }
    expect(Tok::Colon, "':'");
    expect(Tok::LParen, "'('");
    if (cur_.kind != Tok::RParen) {
      o.updates.push_back(parse_update());
      while (cur_.kind == Tok::Comma) {
        bump();
        o.updates.push_back(parse_update());
      }
    }
    expect(Tok::RParen, "')'");
    return o;
  }

  UpdateOp parse_update() {
    Token name = expect(Tok::Ident, "variable name");
    UpdateOp u;
    u.var = name.text;
    u.loc = {name.line, name.col};
    switch (cur_.kind) {
      case Tok::Assign: u.kind = UpdateKind::Assign; break;
      case Tok::AddAssign: u.kind = UpdateKind::Add; break;
      case Tok::SubAssign: u.kind = UpdateKind::Sub; break;
      default: fail("expected ':=', '+=' or '-='");
    }
    bump();
    u.amount = parse_expr();
    return u;
  }

  // expr := or; standard precedence climbing, all binary ops left-associative,
  // comparisons non-associative.
  Expr parse_expr() { return parse_or(); }

  Expr parse_or() {
    Expr e = parse_and();
    while (cur_.kind == Tok::Or) {
      SourceLoc at = loc();
      bump();
      Expr r = parse_and();
      e = Expr::binary(ExprOp::Or, std::move(e), std::move(r));
      e.loc = at;
    }
    return e;
  }

  Expr parse_and() {
    Expr e = parse_cmp();
    while (cur_.kind == Tok::And) {
      SourceLoc at = loc();
      bump();
      Expr r = parse_cmp();
      e = Expr::binary(ExprOp::And, std::move(e), std::move(r));
      e.loc = at;
    }
    return e;
  }

  Expr parse_cmp() {
    Expr e = parse_add();
    ExprOp op;
    switch (cur_.kind) {
      case Tok::Eq: op = ExprOp::Eq; break;
      case Tok::Ne: op = ExprOp::Ne; break;
      case Tok::Lt: op = ExprOp::Lt; break;
      case Tok::Le: op = ExprOp::Le; break;
      case Tok::Gt: op = ExprOp::Gt; break;
      case Tok::Ge: op = ExprOp::Ge; break;
      default: return e;
    }
    SourceLoc at = loc();
    bump();
    Expr r = parse_add();
    Expr out = Expr::binary(op, std::move(e), std::move(r));
    out.loc = at;
    return out;
  }

  Expr parse_add() {
    Expr e = parse_mul();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      ExprOp op = cur_.kind == Tok::Plus ? ExprOp::Add : ExprOp::Sub;
      SourceLoc at = loc();
      bump();
      Expr r = parse_mul();
      e = Expr::binary(op, std::move(e), std::move(r));
      e.loc = at;
    }
    return e;
  }

  Expr parse_mul() {
    Expr e = parse_unary();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      ExprOp op = cur_.kind == Tok::Star ? ExprOp::Mul : ExprOp::Div;
      SourceLoc at = loc();
      bump();
      Expr r = parse_unary();
      // Fold literal fractions so that `19/20` is a rational literal and the
      // canonical printer round-trips structurally.
      if (op == ExprOp::Div && e.op == ExprOp::Lit && r.op == ExprOp::Lit) {
        if (r.lit.is_zero()) {
          Diagnostic d{Severity::Error, at.line, at.col, "E-SYNTAX", "division by zero literal"};
          throw ParseError{d};
        }
        e = Expr::literal(e.lit / r.lit);
        e.loc = at;
        continue;
      }
      e = Expr::binary(op, std::move(e), std::move(r));
      e.loc = at;
    }
    return e;
  }

  Expr parse_unary() {
    if (cur_.kind == Tok::Minus) {
      SourceLoc at = loc();
      bump();
      Expr inner = parse_unary();
      if (inner.op == ExprOp::Lit) {
        Expr e = Expr::literal(-inner.lit);
        e.loc = at;
        return e;
      }
      // -x desugars to 0 - x.
      Expr e = Expr::binary(ExprOp::Sub, Expr::literal(Rat(0)), std::move(inner));
      e.loc = at;
      return e;
    }
    if (cur_.kind == Tok::Not) {
      SourceLoc at = loc();
      bump();
      Expr e = Expr::unary_not(parse_unary());
      e.loc = at;
      return e;
    }
    return parse_atom();
  }

  Expr parse_atom() {
    switch (cur_.kind) {
      case Tok::Number: {
        Token t = cur_;
        bump();
        Expr e;
        try {
          e = Expr::literal(parse_rational(t.text));
        } catch (const std::exception& ex) {
          Diagnostic d{Severity::Error, t.line, t.col, "E-SYNTAX", ex.what()};
          throw ParseError{d};
        }
        e.loc = {t.line, t.col};
        return e;
      }
      case Tok::KwTrue: {
        Expr e = Expr::literal(Rat(1));
        e.loc = loc();
        bump();
        return e;
      }
      case Tok::KwFalse: {
        Expr e = Expr::literal(Rat(0));
        e.loc = loc();
        bump();
        return e;
      }
      case Tok::Ident: {
        Expr e = Expr::var(cur_.text);
        e.loc = loc();
        bump();
        return e;
      }
      case Tok::LParen: {
        bump();
        Expr e = parse_expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      default:
        fail("expected expression");
    }
  }

  Lexer lexer_;
  Token cur_;
};

class Validator {
 public:
  explicit Validator(const Model& ast) : m_(ast) {}

  ValidateResult run() {
    if (m_.variables.size() == 0)
      error(SourceLoc{1, 1}, "E-EMPTY", "no variables declared");
    check_unique_names();
    for (auto& v : m_.variables) {
      if (v.lo > v.hi)
        error(v.loc, "E-DOMAIN", "variable '" + v.name + "' has empty domain [" +
                                     std::to_string(v.lo) + ".." + std::to_string(v.hi) + "]");
      else if (v.init < v.lo || v.init > v.hi)
        error(v.loc, "E-INIT", "initial value " + std::to_string(v.init) + " of '" + v.name +
                                   "' outside its domain");
    }
    for (auto& iv : m_.intervals)
      if (iv.lo > iv.hi)
        error(iv.loc, "E-INTERVAL", "interval constant '" + iv.name + "' has lo > hi");
    for (auto& l : m_.labels) {
      if (l.name == "deadlock" || l.name == "sink")
        error(l.loc, "E-RESERVED", "label name '" + l.name + "' is reserved");
      resolve(l.pred, false);
    }
    for (auto& c : m_.commands) {
      resolve(c.guard, false);
      resolve(c.weight, false);
      Rat sum(0);
      bool sum_ok = true;
      for (auto& o : c.outcomes) {
        if (o.prob <= Rat(0) || o.prob > Rat(1)) {
          error(o.loc, "E-PROBRANGE", "outcome probability " + o.prob.str() + " outside (0,1]");
          sum_ok = false;
        }
        try {
          sum = sum + o.prob;
        } catch (const std::exception&) {
          sum_ok = false;
        }
        for (auto& u : o.updates) {
          int idx = m_.var_index(u.var);
          if (idx < 0)
            error(u.loc, "E-UNDECLARED", "update of undeclared variable '" + u.var + "'");
          u.var_idx = idx;
          resolve(u.amount, true);
        }
      }
      if (sum_ok) {
        Rat diff = sum - Rat(1);
        // Literal sums must hit 1 up to 1e-9 (decimal roundings like
        // 0.333333333 * 3 pass, anything coarser is a modeling error).
        if (diff.abs() > Rat(1, 1000000000))
          error(c.loc, "E-PROBSUM", "outcome probabilities of action '" + c.action + "' sum to " +
                                        sum.str() + ", expected 1");
      }
    }
    if (!diags_.empty()) return diags_;
    return std::move(m_);
  }

 private:
  void error(SourceLoc at, std::string code, std::string msg) {
    diags_.push_back({Severity::Error, at.line, at.col, std::move(code), std::move(msg)});
  }

  void check_unique_names() {
    std::vector<std::pair<std::string, SourceLoc>> seen;
    auto add = [&](const std::string& name, SourceLoc at) {
      for (auto& [n, l] : seen)
        if (n == name) {
          error(at, "E-DUPLICATE", "name '" + name + "' already declared");
          return;
        }
      seen.emplace_back(name, at);
    };
    for (auto& v : m_.variables) add(v.name, v.loc);
    for (auto& c : m_.constants) add(c.name, c.loc);
    for (auto& iv : m_.intervals) add(iv.name, iv.loc);
    for (auto& l : m_.labels) add(l.name, l.loc);
  }

  void resolve(Expr& e, bool interval_ok);

  Model m_;
  std::vector<Diagnostic> diags_;
};

void Validator::resolve(Expr& e, bool interval_ok) {
  if (e.op == ExprOp::Var) {
    int idx = m_.var_index(e.name);
    if (idx >= 0) {
      e.ref = idx;
      return;
    }
    idx = m_.const_index(e.name);
    if (idx >= 0) {
      e.op = ExprOp::ConstRef;
      e.ref = idx;
      return;
    }
    idx = m_.interval_index(e.name);
    if (idx >= 0) {
      if (!interval_ok) {
        error(e.loc, "E-INTERVALREF",
              "interval constant '" + e.name + "' may only appear in update amounts");
        return;
      }
      e.op = ExprOp::IntervalRef;
      e.ref = idx;
      return;
    }
    error(e.loc, "E-UNDECLARED", "undeclared name '" + e.name + "'");
    return;
  }
  if (e.lhs) resolve(*e.lhs, interval_ok);
  if (e.rhs) resolve(*e.rhs, interval_ok);
}

}  // namespace

ParseResult parse_model(const std::string& text) {
  try {
    Parser p(text);
    Model ast;
    try {
      ast = p.parse();
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      // anything else escaping the grammar (overflowing literals etc.) is
      // still a syntax-level failure
      return std::vector<Diagnostic>{{Severity::Error, 1, 1, "E-SYNTAX", e.what()}};
    }
    if (ast.variables.empty() && ast.commands.empty() && ast.constants.empty() &&
        ast.intervals.empty() && ast.labels.empty()) {
      std::vector<Diagnostic> diags;
      diags.push_back({Severity::Error, 1, 1, "E-EMPTY", "no variables declared"});
      return diags;
    }
    ModelSource src;
    src.text = text;
    src.ast = std::move(ast);
    return src;
  } catch (const ParseError& e) {
    return std::vector<Diagnostic>{e.diag};
  }
}

ValidateResult validate(const ModelSource& src) {
  Validator v(src.ast);
  return v.run();
}

Model load_model(const std::string& text) {
  ParseResult pr = parse_model(text);
  if (auto* diags = std::get_if<std::vector<Diagnostic>>(&pr))
    throw ModelError("parse-error", diags->front().str());
  ValidateResult vr = validate(std::get<ModelSource>(pr));
  if (auto* diags = std::get_if<std::vector<Diagnostic>>(&vr))
    throw ModelError("validate-error", diags->front().str());
  return std::move(std::get<Model>(vr));
}

std::string print_model(const Model& m) {
  std::ostringstream os;
  for (const auto& c : m.constants) os << "const " << c.name << " = " << c.value << ";\n";
  for (const auto& iv : m.intervals)
    os << "const interval " << iv.name << " = [" << iv.lo << ".." << iv.hi << "];\n";
  if (!m.constants.empty() || !m.intervals.empty()) os << "\n";
  for (const auto& v : m.variables)
    os << "var " << v.name << " : [" << v.lo << ".." << v.hi << "] init " << v.init << ";\n";
  if (!m.labels.empty()) os << "\n";
  for (const auto& l : m.labels) os << "label " << l.name << " = " << print_expr(l.pred) << ";\n";
  if (!m.commands.empty()) os << "\n";
  for (const auto& c : m.commands) {
    os << "[" << c.action << "] " << print_expr(c.guard) << " weight " << print_expr(c.weight)
       << " ->";
    for (std::size_t i = 0; i < c.outcomes.size(); ++i) {
      const Outcome& o = c.outcomes[i];
      os << (i == 0 ? " " : " + ") << o.prob.str() << ":(";
      for (std::size_t j = 0; j < o.updates.size(); ++j) {
        const UpdateOp& u = o.updates[j];
        if (j) os << ", ";
        os << u.var;
        switch (u.kind) {
          case UpdateKind::Assign: os << ":="; break;
          case UpdateKind::Add: os << "+="; break;
          case UpdateKind::Sub: os << "-="; break;
        }
        os << print_expr(u.amount);
      }
      os << ")";
    }
    os << ";\n";
  }
  return os.str();
}

}  // namespace apfsm
