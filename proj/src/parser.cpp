#include "mpm/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mpm/errors.hpp"

namespace mpm {
namespace {

enum class Tok {
  End,
  Ident,
  Number,
  KwConst,
  KwVar,
  KwSemantics,
  KwCtmc,
  KwDtmc,
  KwTrue,
  KwFalse,
  KwAnd,
  KwOr,
  KwNot,
  Semi,
  Colon,
  Assign,    // :=
  Turnstile, // |-
  Arrow,     // ->
  Comma,
  Plus,
  Minus,
  Star,
  Slash,
  Caret,
  LParen,
  RParen,
  Lt,
  Le,
  Gt,
  Ge,
  Eq,   // = or ==
  Ne,   // !=
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  bool integral = false;  // literal had no '.', 'e' or 'E'
  int line = 1;
  int col = 1;
};

const char* tok_name(Tok t) {
  switch (t) {
    case Tok::End: return "end of input";
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::KwConst: return "'const'";
    case Tok::KwVar: return "'var'";
    case Tok::KwSemantics: return "'semantics'";
    case Tok::KwCtmc: return "'ctmc'";
    case Tok::KwDtmc: return "'dtmc'";
    case Tok::KwTrue: return "'true'";
    case Tok::KwFalse: return "'false'";
    case Tok::KwAnd: return "'and'";
    case Tok::KwOr: return "'or'";
    case Tok::KwNot: return "'not'";
    case Tok::Semi: return "';'";
    case Tok::Colon: return "':'";
    case Tok::Assign: return "':='";
    case Tok::Turnstile: return "'|-'";
    case Tok::Arrow: return "'->'";
    case Tok::Comma: return "','";
    case Tok::Plus: return "'+'";
    case Tok::Minus: return "'-'";
    case Tok::Star: return "'*'";
    case Tok::Slash: return "'/'";
    case Tok::Caret: return "'^'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Lt: return "'<'";
    case Tok::Le: return "'<='";
    case Tok::Gt: return "'>'";
    case Tok::Ge: return "'>='";
    case Tok::Eq: return "'='";
    case Tok::Ne: return "'!='";
  }
  return "?";
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space();
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
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        advance();
      }
      t.text.assign(text_.substr(start, pos_ - start));
      t.kind = keyword(t.text);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < text_.size() &&
         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      return lex_number(t);
    }
    switch (c) {
      case ';': advance(); t.kind = Tok::Semi; return t;
      case ',': advance(); t.kind = Tok::Comma; return t;
      case '+': advance(); t.kind = Tok::Plus; return t;
      case '*': advance(); t.kind = Tok::Star; return t;
      case '/': advance(); t.kind = Tok::Slash; return t;
      case '^': advance(); t.kind = Tok::Caret; return t;
      case '(': advance(); t.kind = Tok::LParen; return t;
      case ')': advance(); t.kind = Tok::RParen; return t;
      case ':':
        advance();
        if (peek() == '=') { advance(); t.kind = Tok::Assign; }
        else t.kind = Tok::Colon;
        return t;
      case '|':
        advance();
        if (peek() == '-') { advance(); t.kind = Tok::Turnstile; return t; }
        throw ParseError("expected '|-'", t.line, t.col);
      case '-':
        advance();
        if (peek() == '>') { advance(); t.kind = Tok::Arrow; }
        else t.kind = Tok::Minus;
        return t;
      case '<':
        advance();
        if (peek() == '=') { advance(); t.kind = Tok::Le; }
        else t.kind = Tok::Lt;
        return t;
      case '>':
        advance();
        if (peek() == '=') { advance(); t.kind = Tok::Ge; }
        else t.kind = Tok::Gt;
        return t;
      case '=':
        advance();
        if (peek() == '=') advance();
        t.kind = Tok::Eq;
        return t;
      case '!':
        advance();
        if (peek() == '=') { advance(); t.kind = Tok::Ne; return t; }
        throw ParseError("expected '!='", t.line, t.col);
      default:
        throw ParseError("unexpected character '" + std::string(1, c) + "'",
                         t.line, t.col);
    }
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Token lex_number(Token t) {
    std::size_t start = pos_;
    bool integral = true;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      advance();
    }
    if (peek() == '.') {
      integral = false;
      advance();
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        advance();
      }
    }
    if (peek() == 'e' || peek() == 'E') {
      integral = false;
      advance();
      if (peek() == '+' || peek() == '-') advance();
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        throw ParseError("malformed exponent", line_, col_);
      }
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        advance();
      }
    }
    t.text.assign(text_.substr(start, pos_ - start));
    t.kind = Tok::Number;
    t.integral = integral;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    auto [p, ec] = std::from_chars(b, e, t.number);
    if (ec != std::errc() || p != e) {
      throw ParseError("malformed number '" + t.text + "'", t.line, t.col);
    }
    return t;
  }

  static Tok keyword(const std::string& s) {
    if (s == "const") return Tok::KwConst;
    if (s == "var") return Tok::KwVar;
    if (s == "semantics") return Tok::KwSemantics;
    if (s == "ctmc") return Tok::KwCtmc;
    if (s == "dtmc") return Tok::KwDtmc;
    if (s == "true") return Tok::KwTrue;
    if (s == "false") return Tok::KwFalse;
    if (s == "and") return Tok::KwAnd;
    if (s == "or") return Tok::KwOr;
    if (s == "not") return Tok::KwNot;
    return Tok::Ident;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

enum class Type { Num, Bool };

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) {
    cur_ = lexer_.next();
    ahead_ = lexer_.next();
  }

  Model parse() {
    bool saw_semantics = false;
    while (cur_.kind != Tok::End) {
      switch (cur_.kind) {
        case Tok::KwConst: parse_const(); break;
        case Tok::KwVar: parse_var(); break;
        case Tok::KwSemantics:
          if (saw_semantics) fail("duplicate semantics declaration");
          parse_semantics();
          saw_semantics = true;
          break;
        default: parse_command(); break;
      }
    }
    if (!saw_semantics) {
      throw ParseError("missing semantics declaration", cur_.line, cur_.col);
    }
    if (model_.variables.empty()) {
      throw ParseError("model declares no variables", cur_.line, cur_.col);
    }
    if (model_.commands.empty()) {
      throw ParseError("model declares no commands", cur_.line, cur_.col);
    }
    return std::move(model_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, cur_.line, cur_.col);
  }

  void bump() {
    cur_ = ahead_;
    ahead_ = lexer_.next();
  }

  Token expect(Tok kind, const char* what) {
    if (cur_.kind != kind) {
      fail(std::string("expected ") + what + ", got " + tok_name(cur_.kind));
    }
    Token t = cur_;
    bump();
    return t;
  }

  void check_fresh_name(const std::string& name) {
    if (constants_.count(name) || variables_.count(name)) {
      fail("'" + name + "' is already declared");
    }
  }

  void parse_const() {
    bump();
    Token name = expect(Tok::Ident, "constant name");
    check_fresh_name(name.text);
    expect(Tok::Eq, "'='");
    double sign = 1.0;
    if (cur_.kind == Tok::Minus) {
      sign = -1.0;
      bump();
    }
    Token num = expect(Tok::Number, "number");
    expect(Tok::Semi, "';'");
    double value = sign * num.number;
    constants_[name.text] = value;
    model_.constants.push_back({name.text, value});
  }

  void parse_var() {
    bump();
    Token name = expect(Tok::Ident, "variable name");
    check_fresh_name(name.text);
    expect(Tok::Eq, "'='");
    if (cur_.kind == Tok::Minus) {
      fail("initial value must be a non-negative integer");
    }
    Token num = expect(Tok::Number, "non-negative integer");
    if (!num.integral || num.number > 9.007199254740992e15) {
      throw ParseError("initial value must be a non-negative integer",
                       num.line, num.col);
    }
    expect(Tok::Semi, "';'");
    variables_[name.text] = static_cast<int>(model_.variables.size());
    model_.variables.push_back(name.text);
    model_.initial_state.push_back(static_cast<std::int64_t>(num.number));
  }

  void parse_semantics() {
    bump();
    if (cur_.kind == Tok::KwCtmc) {
      model_.semantics = Semantics::Ctmc;
    } else if (cur_.kind == Tok::KwDtmc) {
      model_.semantics = Semantics::Dtmc;
    } else {
      fail("expected 'ctmc' or 'dtmc'");
    }
    bump();
    expect(Tok::Semi, "';'");
  }

  void parse_command() {
    GuardedCommand cmd;
    if (cur_.kind == Tok::Ident && ahead_.kind == Tok::Colon) {
      cmd.label = cur_.text;
      bump();
      bump();
    }
    Token at = cur_;
    cmd.guard = parse_expr();
    require(cmd.guard, Type::Bool, at, "guard");
    expect(Tok::Turnstile, "'|-'");
    at = cur_;
    cmd.rate = parse_expr();
    require(cmd.rate, Type::Num, at, "rate");
    expect(Tok::Arrow, "'->'");
    cmd.updates.push_back(parse_update());
    while (cur_.kind == Tok::Comma) {
      bump();
      cmd.updates.push_back(parse_update());
    }
    for (std::size_t i = 0; i < cmd.updates.size(); ++i) {
      for (std::size_t j = i + 1; j < cmd.updates.size(); ++j) {
        if (cmd.updates[i].var_index == cmd.updates[j].var_index) {
          fail("variable '" + model_.variables[cmd.updates[i].var_index] +
               "' updated twice in one command");
        }
      }
    }
    expect(Tok::Semi, "';'");
    model_.commands.push_back(std::move(cmd));
  }

  Update parse_update() {
    Token lhs = expect(Tok::Ident, "variable name");
    auto it = variables_.find(lhs.text);
    if (it == variables_.end()) {
      throw ParseError("undeclared variable '" + lhs.text + "'", lhs.line,
                       lhs.col);
    }
    expect(Tok::Assign, "':='");
    Token rhs = expect(Tok::Ident, "variable name");
    if (rhs.text != lhs.text) {
      throw ParseError("update must have the form '" + lhs.text + " := " +
                       lhs.text + " + c' or '... - c'", rhs.line, rhs.col);
    }
    bool plus;
    if (cur_.kind == Tok::Plus) plus = true;
    else if (cur_.kind == Tok::Minus) plus = false;
    else fail("expected '+' or '-'");
    bump();
    Token num = expect(Tok::Number, "positive integer");
    if (!num.integral || num.number < 1.0 || num.number > 9.007199254740992e15) {
      throw ParseError("update increment must be a positive integer literal",
                       num.line, num.col);
    }
    auto delta = static_cast<std::int64_t>(num.number);
    return Update{it->second, plus ? delta : -delta};
  }

  // Precedence (loosest to tightest): or, and, comparison, additive,
  // multiplicative, unary minus / not, '^' (right associative).
  ExprPtr parse_expr() { return parse_or(); }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (cur_.kind == Tok::KwOr) {
      Token op = cur_;
      bump();
      require(lhs, Type::Bool, op, "left operand of 'or'");
      Token at = cur_;
      ExprPtr rhs = parse_and();
      require(rhs, Type::Bool, at, "right operand of 'or'");
      lhs = Expr::make_logic(LogicOp::Or, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_cmp();
    while (cur_.kind == Tok::KwAnd) {
      Token op = cur_;
      bump();
      require(lhs, Type::Bool, op, "left operand of 'and'");
      Token at = cur_;
      ExprPtr rhs = parse_cmp();
      require(rhs, Type::Bool, at, "right operand of 'and'");
      lhs = Expr::make_logic(LogicOp::And, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr parse_cmp() {
    ExprPtr lhs = parse_add();
    CompareOp op;
    switch (cur_.kind) {
      case Tok::Lt: op = CompareOp::Lt; break;
      case Tok::Le: op = CompareOp::Le; break;
      case Tok::Gt: op = CompareOp::Gt; break;
      case Tok::Ge: op = CompareOp::Ge; break;
      case Tok::Eq: op = CompareOp::Eq; break;
      case Tok::Ne: op = CompareOp::Ne; break;
      default: return lhs;
    }
    Token opt = cur_;
    bump();
    require(lhs, Type::Num, opt, "left operand of comparison");
    Token at = cur_;
    ExprPtr rhs = parse_add();
    require(rhs, Type::Num, at, "right operand of comparison");
    return Expr::make_compare(op, std::move(lhs), std::move(rhs));
  }

  ExprPtr parse_add() {
    ExprPtr lhs = parse_mul();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      BinaryOp op = cur_.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      Token opt = cur_;
      bump();
      require(lhs, Type::Num, opt, "left operand");
      Token at = cur_;
      ExprPtr rhs = parse_mul();
      require(rhs, Type::Num, at, "right operand");
      lhs = Expr::make_binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr parse_mul() {
    ExprPtr lhs = parse_unary();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      BinaryOp op = cur_.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      Token opt = cur_;
      bump();
      require(lhs, Type::Num, opt, "left operand");
      Token at = cur_;
      ExprPtr rhs = parse_unary();
      require(rhs, Type::Num, at, "right operand");
      lhs = Expr::make_binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (cur_.kind == Tok::Minus) {
      Token opt = cur_;
      bump();
      Token at = cur_;
      ExprPtr e = parse_unary();
      require(e, Type::Num, at, "operand of unary '-'");
      return Expr::make_neg(std::move(e));
    }
    if (cur_.kind == Tok::KwNot) {
      bump();
      Token at = cur_;
      ExprPtr e = parse_unary();
      require(e, Type::Bool, at, "operand of 'not'");
      return Expr::make_not(std::move(e));
    }
    return parse_pow();
  }

  ExprPtr parse_pow() {
    ExprPtr lhs = parse_primary();
    if (cur_.kind == Tok::Caret) {
      Token opt = cur_;
      bump();
      require(lhs, Type::Num, opt, "base of '^'");
      Token at = cur_;
      ExprPtr rhs = parse_unary();  // right associative, allows -x in exponent
      require(rhs, Type::Num, at, "exponent");
      return Expr::make_binary(BinaryOp::Pow, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr parse_primary() {
    switch (cur_.kind) {
      case Tok::Number: {
        ExprPtr e = Expr::make_number(cur_.number);
        bump();
        return e;
      }
      case Tok::KwTrue: bump(); return Expr::make_bool(true);
      case Tok::KwFalse: bump(); return Expr::make_bool(false);
      case Tok::Ident: {
        ExprPtr e = resolve(cur_);
        bump();
        return e;
      }
      case Tok::LParen: {
        bump();
        ExprPtr e = parse_expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      default:
        fail(std::string("expected expression, got ") + tok_name(cur_.kind));
    }
  }

  ExprPtr resolve(const Token& name) {
    if (auto it = variables_.find(name.text); it != variables_.end()) {
      return Expr::make_variable(name.text, it->second);
    }
    if (auto it = constants_.find(name.text); it != constants_.end()) {
      return Expr::make_constant(name.text, it->second);
    }
    throw ParseError("undeclared identifier '" + name.text + "'", name.line,
                     name.col);
  }

  static Type type_of(const ExprPtr& e) {
    switch (e->kind) {
      case Expr::Kind::Compare:
      case Expr::Kind::Logic:
      case Expr::Kind::Not:
      case Expr::Kind::BoolLit:
        return Type::Bool;
      default:
        return Type::Num;
    }
  }

  static void require(const ExprPtr& e, Type want, const Token& at,
                      const char* what) {
    if (type_of(e) != want) {
      throw ParseError(std::string(what) + " must be " +
                           (want == Type::Num ? "numeric" : "boolean"),
                       at.line, at.col);
    }
  }

  Lexer lexer_;
  Token cur_;
  Token ahead_;
  Model model_;
  std::map<std::string, double> constants_;
  std::map<std::string, int> variables_;
};

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Logic:
      return e.logic_op == LogicOp::Or ? 1 : 2;
    case Expr::Kind::Compare:
      return 3;
    case Expr::Kind::Binary:
      switch (e.binary_op) {
        case BinaryOp::Add:
        case BinaryOp::Sub:
          return 4;
        case BinaryOp::Mul:
        case BinaryOp::Div:
          return 5;
        case BinaryOp::Pow:
          return 7;
      }
      return 4;
    case Expr::Kind::Neg:
    case Expr::Kind::Not:
      return 6;
    default:
      return 8;
  }
}

void format_number(double v, std::string& out) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void print_expr(const Expr& e, std::string& out) {
  auto child = [&](const ExprPtr& c, bool parens) {
    if (parens) out.push_back('(');
    print_expr(*c, out);
    if (parens) out.push_back(')');
  };
  int prec = precedence(e);
  switch (e.kind) {
    case Expr::Kind::Number:
      format_number(e.number, out);
      break;
    case Expr::Kind::Constant:
    case Expr::Kind::Variable:
      out += e.name;
      break;
    case Expr::Kind::BoolLit:
      out += e.bool_value ? "true" : "false";
      break;
    case Expr::Kind::Neg:
      out.push_back('-');
      child(e.lhs, precedence(*e.lhs) < prec);
      break;
    case Expr::Kind::Not:
      out += "not ";
      child(e.lhs, precedence(*e.lhs) < prec);
      break;
    case Expr::Kind::Binary: {
      const char* op = nullptr;
      bool right_assoc = e.binary_op == BinaryOp::Pow;
      switch (e.binary_op) {
        case BinaryOp::Add: op = " + "; break;
        case BinaryOp::Sub: op = " - "; break;
        case BinaryOp::Mul: op = " * "; break;
        case BinaryOp::Div: op = " / "; break;
        case BinaryOp::Pow: op = "^"; break;
      }
      child(e.lhs, precedence(*e.lhs) < prec + (right_assoc ? 1 : 0));
      out += op;
      child(e.rhs, precedence(*e.rhs) < prec + (right_assoc ? 0 : 1));
      break;
    }
    case Expr::Kind::Compare: {
      const char* op = nullptr;
      switch (e.compare_op) {
        case CompareOp::Lt: op = " < "; break;
        case CompareOp::Le: op = " <= "; break;
        case CompareOp::Gt: op = " > "; break;
        case CompareOp::Ge: op = " >= "; break;
        case CompareOp::Eq: op = " = "; break;
        case CompareOp::Ne: op = " != "; break;
      }
      child(e.lhs, precedence(*e.lhs) < prec);
      out += op;
      child(e.rhs, precedence(*e.rhs) < prec);
      break;
    }
    case Expr::Kind::Logic: {
      child(e.lhs, precedence(*e.lhs) < prec);
      out += e.logic_op == LogicOp::And ? " and " : " or ";
      child(e.rhs, precedence(*e.rhs) < prec + 1);
      break;
    }
  }
}

}  // namespace

Model parse_model(std::string_view text) {
  Parser p(text);
  return p.parse();
}

std::string to_text(const Model& model) {
  std::string out;
  for (const auto& c : model.constants) {
    out += "const ";
    out += c.name;
    out += " = ";
    format_number(c.value, out);
    out += ";\n";
  }
  for (std::size_t i = 0; i < model.variables.size(); ++i) {
    out += "var ";
    out += model.variables[i];
    out += " = ";
    out += std::to_string(model.initial_state[i]);
    out += ";\n";
  }
  out += model.semantics == Semantics::Ctmc ? "semantics ctmc;\n"
                                            : "semantics dtmc;\n";
  for (const auto& cmd : model.commands) {
    if (!cmd.label.empty()) {
      out += cmd.label;
      out += ": ";
    }
    print_expr(*cmd.guard, out);
    out += " |- ";
    print_expr(*cmd.rate, out);
    out += " -> ";
    bool first = true;
    for (const auto& u : cmd.updates) {
      if (!first) out += ", ";
      first = false;
      out += model.variables[u.var_index];
      out += " := ";
      out += model.variables[u.var_index];
      out += u.delta >= 0 ? " + " : " - ";
      out += std::to_string(u.delta >= 0 ? u.delta : -u.delta);
    }
    out += ";\n";
  }
  return out;
}

}  // namespace mpm
