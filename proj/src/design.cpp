#include "jointfit/design.hpp"

#include <cmath>

#include "jointfit/errors.hpp"

namespace jointfit {

DesignBuilder::DesignBuilder(ModelFormula formula) : formula_(std::move(formula)) {
  compute_labels();
}

void DesignBuilder::compute_labels() {
  labels_.clear();
  if (formula_.intercept) labels_.push_back("(Intercept)");
  for (std::size_t ti = 0; ti < formula_.terms.size(); ++ti) {
    const Term& t = formula_.terms[ti];
    if (t.kind == Term::Kind::Spline) {
      for (int j = 1; j <= t.df; ++j) {
        labels_.push_back(t.label() + "#" + std::to_string(j));
      }
    } else {
      labels_.push_back(t.label());
    }
  }
}

void DesignBuilder::fit(const Table& table) {
  for (std::size_t ti = 0; ti < formula_.terms.size(); ++ti) {
    const Term& t = formula_.terms[ti];
    if (t.kind != Term::Kind::Spline) continue;
    if (bases_.count(static_cast<int>(ti))) continue;
    bases_.emplace(static_cast<int>(ti),
                   NaturalSplineBasis::from_data(table.col(t.name), t.df));
  }
  fitted_ = true;
}

const NaturalSplineBasis& DesignBuilder::spline_basis(int term_index) const {
  auto it = bases_.find(term_index);
  if (it == bases_.end()) throw ValidationError("no spline basis for this term");
  return it->second;
}

DesignMatrix DesignBuilder::build(const Table& table) {
  if (!fitted_) fit(table);
  return static_cast<const DesignBuilder*>(this)->build(table);
}

DesignMatrix DesignBuilder::build(const Table& table) const {
  const Eigen::Index n = table.nrows();
  DesignMatrix out;
  out.labels = labels_;
  out.values.resize(n, formula_.n_columns());
  Eigen::Index col = 0;
  if (formula_.intercept) out.values.col(col++).setOnes();
  for (std::size_t ti = 0; ti < formula_.terms.size(); ++ti) {
    const Term& t = formula_.terms[ti];
    switch (t.kind) {
      case Term::Kind::Main:
        out.values.col(col++) = table.col(t.name);
        break;
      case Term::Kind::Power:
        out.values.col(col++) =
            table.col(t.name).array().pow(static_cast<double>(t.exponent));
        break;
      case Term::Kind::Interaction:
        out.values.col(col++) =
            table.col(t.name).cwiseProduct(table.col(t.other));
        break;
      case Term::Kind::Spline: {
        auto it = bases_.find(static_cast<int>(ti));
        if (it == bases_.end()) throw ValidationError("spline basis not fitted");
        out.values.middleCols(col, t.df) = it->second.evaluate(table.col(t.name));
        col += t.df;
        break;
      }
    }
  }
  if (!out.values.allFinite()) {
    throw NumericError("design matrix contains non-finite entries");
  }
  return out;
}

DerivativeForm DesignBuilder::derivative(const std::string& wrt) const {
  DerivativeForm form;
  form.wrt = wrt;
  int coef = formula_.intercept ? 1 : 0;  // intercept differentiates to zero
  for (std::size_t ti = 0; ti < formula_.terms.size(); ++ti) {
    const Term& t = formula_.terms[ti];
    switch (t.kind) {
      case Term::Kind::Main:
        if (t.name == wrt) {
          form.columns.push_back({DerivativeForm::Column::Kind::One, "", 1, -1, 0, "1"});
          form.coef_indices.push_back(coef);
        }
        ++coef;
        break;
      case Term::Kind::Power:
        if (t.name == wrt) {
          form.columns.push_back({DerivativeForm::Column::Kind::PowerDeriv, t.name,
                                  t.exponent, -1, 0,
                                  std::to_string(t.exponent) + "*" + t.name + "^" +
                                      std::to_string(t.exponent - 1)});
          form.coef_indices.push_back(coef);
        }
        ++coef;
        break;
      case Term::Kind::Interaction:
        if (t.name == wrt && t.other == wrt) {
          throw ValidationError("cannot differentiate '" + t.label() + "'");
        }
        if (t.name == wrt || t.other == wrt) {
          const std::string other = (t.name == wrt) ? t.other : t.name;
          form.columns.push_back(
              {DerivativeForm::Column::Kind::OtherVar, other, 1, -1, 0, other});
          form.coef_indices.push_back(coef);
        }
        ++coef;
        break;
      case Term::Kind::Spline:
        if (t.name == wrt) {
          for (int j = 0; j < t.df; ++j) {
            form.columns.push_back({DerivativeForm::Column::Kind::SplineDeriv, t.name, 1,
                                    static_cast<int>(ti), j,
                                    "d/d" + wrt + "[" + t.label() + "#" +
                                        std::to_string(j + 1) + "]"});
            form.coef_indices.push_back(coef + j);
          }
        }
        coef += t.df;
        break;
    }
  }
  if (form.empty()) {
    throw ValidationError("derivative with respect to '" + wrt +
                          "' is identically zero: variable absent from every term");
  }
  return form;
}

DesignMatrix DesignBuilder::build_derivative(const DerivativeForm& form,
                                             const Table& table) const {
  const Eigen::Index n = table.nrows();
  DesignMatrix out;
  out.values.resize(n, static_cast<Eigen::Index>(form.columns.size()));
  Eigen::Index col = 0;
  for (const auto& c : form.columns) {
    out.labels.push_back(c.label);
    switch (c.kind) {
      case DerivativeForm::Column::Kind::One:
        out.values.col(col).setOnes();
        break;
      case DerivativeForm::Column::Kind::PowerDeriv:
        out.values.col(col) =
            static_cast<double>(c.exponent) *
            table.col(c.name).array().pow(static_cast<double>(c.exponent - 1));
        break;
      case DerivativeForm::Column::Kind::OtherVar:
        out.values.col(col) = table.col(c.name);
        break;
      case DerivativeForm::Column::Kind::SplineDeriv: {
        auto it = bases_.find(c.term_index);
        if (it == bases_.end()) throw ValidationError("spline basis not fitted");
        out.values.col(col) =
            it->second.evaluate(table.col(form.wrt), 1).col(c.spline_col);
        break;
      }
    }
    ++col;
  }
  if (!out.values.allFinite()) {
    throw NumericError("derivative design contains non-finite entries");
  }
  return out;
}

DesignMatrix build_design(DesignBuilder& builder, const Table& table) {
  return builder.build(table);
}

}  // namespace jointfit
