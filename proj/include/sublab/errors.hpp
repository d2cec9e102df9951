#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sublab/types.hpp"

namespace sublab {

// Base class for every library error. Bad indices use std::out_of_range.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FlowExitError : public Error {
 public:
  FlowExitError(double exit_time, Point last_inside)
      : Error("flow left the domain at time " + std::to_string(exit_time)),
        exit_time(exit_time),
        last_inside(std::move(last_inside)) {}
  double exit_time;
  Point last_inside;
};

class SingularJacobianError : public Error {
 public:
  using Error::Error;
};

class UnreachableTargetError : public Error {
 public:
  using Error::Error;
};

class BoundaryStencilError : public Error {
 public:
  explicit BoundaryStencilError(std::size_t node)
      : Error("node " + std::to_string(node) + " has no full stencil"), node(node) {}
  std::size_t node;
};

class NondifferentiableError : public Error {
 public:
  using Error::Error;
};

class NonconvergenceError : public Error {
 public:
  NonconvergenceError(double residual, int iterations)
      : Error("no convergence after " + std::to_string(iterations) +
              " iterations, residual " + std::to_string(residual)),
        residual(residual),
        iterations(iterations) {}
  double residual;
  int iterations;
};

class CertificationError : public Error {
 public:
  CertificationError(const std::string& what, std::vector<std::size_t> nodes)
      : Error(what), nodes(std::move(nodes)) {}
  std::vector<std::size_t> nodes;
};

class GridMismatchError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage(std::move(stage)) {}
  std::string stage;
};

}  // namespace sublab
