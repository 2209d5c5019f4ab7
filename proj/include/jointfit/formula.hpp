#ifndef JOINTFIT_FORMULA_HPP
#define JOINTFIT_FORMULA_HPP

#include <string>
#include <vector>

namespace jointfit {

// One term of a Wilkinson-style formula. The supported grammar is
//   [response] ~ term (+ term)* [ | group ]
//   term := 1 | 0 | name | name^int | name:name | name*name | ns(name, int)
// `a*b` expands to `a + b + a:b`.
struct Term {
  enum class Kind { Main, Power, Interaction, Spline };
  Kind kind = Kind::Main;
  std::string name;    // variable (Main/Power/Spline) or left factor (Interaction)
  std::string other;   // right factor for interactions
  int exponent = 1;    // Power
  int df = 0;          // Spline

  std::string label() const;
  bool operator==(const Term&) const = default;
};

struct ModelFormula {
  std::string response;       // empty for one-sided formulas
  bool intercept = true;      // suppressed by a literal 0 term
  std::vector<Term> terms;    // in formula order, intercept not included
  std::string group;          // grouping id for random-effects formulas

  // Number of design columns including the intercept.
  int n_columns() const;
  bool operator==(const ModelFormula&) const = default;
};

ModelFormula parse_formula(const std::string& text);

}  // namespace jointfit

#endif
