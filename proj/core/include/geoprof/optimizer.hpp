#pragma once

// Box-constrained quasi-Newton maximizer (projected BFGS with an Armijo
// backtracking search). Gradients come from central differences evaluated
// through one batched objective call per iteration.

#include "geoprof/repsampler.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace geoprof {

struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
  }
};

struct OptimizerOptions {
  int maxIter = 200;
  double gradTol = 1e-5;      // on |g_i| * max(1, |x_i|) over free coordinates
  double relFTol = 1e-12;     // relative objective change treated as stalled
  double fdStep = 1e-5;       // relative central-difference step
  double maxStep = 1.0;       // infinity-norm cap on a single move
};

struct OptimizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int objectiveCalls = 0;      // points passed to the objective
  bool converged = false;
  std::string message;
  std::vector<double> trace;   // best value after each iteration
};

OptimizerResult maximizeBox(const BatchObjective& objective, const Eigen::VectorXd& x0,
                            const BoxBounds& bounds, const OptimizerOptions& opts = {});

}  // namespace geoprof
