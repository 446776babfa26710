#pragma once

#include <functional>

#include "dmp/numerics.hpp"

namespace dmp {

struct NelderMeadOptions {
  int max_iterations = 2000;
  double f_tolerance = 1e-8;   // absolute spread of simplex values
  double x_tolerance = 1e-8;   // simplex diameter
  double initial_step = 0.5;
};

struct NelderMeadResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free minimization. Non-finite objective values are treated as
/// +infinity so infeasible points are simply never accepted.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& objective,
                             const Vector& start, const NelderMeadOptions& options = {});

}  // namespace dmp
