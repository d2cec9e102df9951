#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sublab/types.hpp"

namespace sublab {

// Scalar arithmetic expression over named coordinates, e.g. "x^2 - y^2 + t/2".
// Supports + - * / ^, unary minus, numbers, and the functions
// sqrt abs exp log sin cos tanh pow min max norm koranyi.
class Expression {
 public:
  Expression();
  static Expression parse(std::string_view text, std::vector<std::string> variables);
  // Default names for an n-dimensional domain: x y (n=2), x y t (n=3), else x0..x{n-1}.
  // The names x0.. and z (alias of the third axis) are always accepted as well.
  static Expression parse_for_dimension(std::string_view text, int n);

  double operator()(const double* x) const;
  double operator()(const Point& x) const { return (*this)(x.data()); }
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace sublab
