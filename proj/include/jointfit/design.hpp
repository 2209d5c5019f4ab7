#ifndef JOINTFIT_DESIGN_HPP
#define JOINTFIT_DESIGN_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "jointfit/data.hpp"
#include "jointfit/formula.hpp"
#include "jointfit/spline.hpp"

namespace jointfit {

struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> labels;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// Symbolic time-derivative of a formula: which columns survive and which
// coefficient of the parent design each surviving column multiplies.
struct DerivativeForm {
  struct Column {
    enum class Kind { One, PowerDeriv, OtherVar, SplineDeriv };
    Kind kind;
    std::string name;   // variable for PowerDeriv, other factor for OtherVar
    int exponent = 1;   // original exponent for PowerDeriv
    int term_index = -1;  // formula term for SplineDeriv
    int spline_col = 0;   // basis column for SplineDeriv
    std::string label;
  };
  std::string wrt;
  std::vector<Column> columns;
  std::vector<int> coef_indices;  // positions into the parent coefficient vector

  bool empty() const { return columns.empty(); }
};

// Expands a formula into numeric design matrices. Spline knots are frozen on
// the first build (or by an explicit fit) so later evaluations at new points
// reuse the same basis.
class DesignBuilder {
 public:
  explicit DesignBuilder(ModelFormula formula);

  const ModelFormula& formula() const { return formula_; }
  const std::vector<std::string>& labels() const { return labels_; }
  int n_columns() const { return formula_.n_columns(); }

  void fit(const Table& table);
  bool fitted() const { return fitted_; }

  DesignMatrix build(const Table& table);
  DesignMatrix build(const Table& table) const;

  // Fails with ValidationError when the derivative is identically zero.
  DerivativeForm derivative(const std::string& wrt) const;
  DesignMatrix build_derivative(const DerivativeForm& form, const Table& table) const;

  const NaturalSplineBasis& spline_basis(int term_index) const;

 private:
  ModelFormula formula_;
  std::vector<std::string> labels_;
  std::map<int, NaturalSplineBasis> bases_;  // keyed by term index
  bool fitted_ = false;

  void compute_labels();
};

// Convenience wrappers matching the fixed/random split of a mixed model.
DesignMatrix build_design(DesignBuilder& builder, const Table& table);

}  // namespace jointfit

#endif
