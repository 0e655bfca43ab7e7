#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace sdlevy {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct ScalarOptimum {
  double x = 0.0;
  double value = 0.0;
};

/// Golden-section search for the maximum of a unimodal function on [lo, hi].
ScalarOptimum golden_section_maximize(const std::function<double(double)>& f, double lo,
                                      double hi, double tol = 1e-8, int max_iter = 200);

struct NelderMeadOptions {
  int max_iterations = 2000;
  double f_tol = 1e-14;  // spread of simplex values
  double x_tol = 1e-10;  // simplex diameter
  double initial_step = 0.25;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Unconstrained downhill simplex minimisation. Box constraints are handled by
/// the caller through parameter transforms.
NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options = {});

/// n points of a Latin hypercube in [0, 1]^dim, reproducible from seed.
std::vector<Eigen::VectorXd> latin_hypercube(int n, int dim, std::uint64_t seed);

/// Maps R onto (lo, hi) and back.
double to_box(double z, double lo, double hi);
double from_box(double x, double lo, double hi);

}  // namespace sdlevy
