#include "jointfit/formula.hpp"

#include <cctype>
#include <string>

#include "jointfit/errors.hpp"

namespace jointfit {

namespace {

struct Lexer {
  const std::string& text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("formula syntax error at offset " + std::to_string(pos) + ": " + what);
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  std::string name() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_' ||
            text[pos] == '.')) {
      ++pos;
    }
    if (pos == start) fail("expected a name");
    return text.substr(start, pos - start);
  }

  int integer() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) fail("expected an integer");
    return std::stoi(text.substr(start, pos - start));
  }
};

bool is_identifier_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

// Parses one `term`, appending one or more terms (for `*` sugar).
void parse_term(Lexer& lex, ModelFormula& f, bool& saw_zero) {
  lex.skip_ws();
  const char c = lex.peek();
  if (c == '1') {
    ++lex.pos;
    f.intercept = true;
    return;
  }
  if (c == '0') {
    ++lex.pos;
    saw_zero = true;
    return;
  }
  if (!is_identifier_start(c)) lex.fail("expected a term");
  std::string nm = lex.name();

  if (nm == "ns" && lex.peek() == '(') {
    lex.eat('(');
    Term t;
    t.kind = Term::Kind::Spline;
    t.name = lex.name();
    if (!lex.eat(',')) lex.fail("ns() expects ns(name, df)");
    t.df = lex.integer();
    if (t.df < 1) throw ParseError("ns() degrees of freedom must be >= 1");
    if (!lex.eat(')')) lex.fail("expected ')'");
    f.terms.push_back(std::move(t));
    return;
  }
  if (lex.peek() == '(') lex.fail("unknown function '" + nm + "'");

  if (lex.eat('^')) {
    Term t;
    t.kind = Term::Kind::Power;
    t.name = std::move(nm);
    t.exponent = lex.integer();
    if (t.exponent < 1) throw ParseError("power exponent must be >= 1");
    f.terms.push_back(std::move(t));
    return;
  }
  if (lex.eat(':')) {
    Term t;
    t.kind = Term::Kind::Interaction;
    t.name = std::move(nm);
    t.other = lex.name();
    f.terms.push_back(std::move(t));
    return;
  }
  if (lex.eat('*')) {
    const std::string rhs = lex.name();
    f.terms.push_back({Term::Kind::Main, nm, "", 1, 0});
    f.terms.push_back({Term::Kind::Main, rhs, "", 1, 0});
    f.terms.push_back({Term::Kind::Interaction, nm, rhs, 1, 0});
    return;
  }
  f.terms.push_back({Term::Kind::Main, std::move(nm), "", 1, 0});
}

}  // namespace

std::string Term::label() const {
  switch (kind) {
    case Kind::Main:
      return name;
    case Kind::Power:
      return name + "^" + std::to_string(exponent);
    case Kind::Interaction:
      return name + ":" + other;
    case Kind::Spline:
      return "ns(" + name + "," + std::to_string(df) + ")";
  }
  return name;
}

int ModelFormula::n_columns() const {
  int n = intercept ? 1 : 0;
  for (const auto& t : terms) n += (t.kind == Term::Kind::Spline) ? t.df : 1;
  return n;
}

ModelFormula parse_formula(const std::string& text) {
  Lexer lex{text};
  ModelFormula f;

  lex.skip_ws();
  if (is_identifier_start(lex.peek())) {
    const std::size_t mark = lex.pos;
    std::string maybe_response = lex.name();
    if (lex.peek() == '~') {
      f.response = std::move(maybe_response);
    } else {
      lex.pos = mark;  // one-sided formula whose first term is a name
    }
  }
  if (!lex.eat('~')) lex.fail("expected '~'");
  if (lex.peek() == '~') lex.fail("unexpected '~'");

  bool saw_zero = false;
  parse_term(lex, f, saw_zero);
  while (lex.eat('+')) parse_term(lex, f, saw_zero);
  if (saw_zero) f.intercept = false;

  if (lex.eat('|')) f.group = lex.name();
  lex.skip_ws();
  if (lex.pos != lex.text.size()) lex.fail("trailing input");

  return f;
}

}  // namespace jointfit
