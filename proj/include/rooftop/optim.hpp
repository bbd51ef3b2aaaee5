#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace rooftop {

/// Returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Limited-memory BFGS with a backtracking Armijo line search. Exposed one
/// iteration at a time so callers can interleave their own stopping rules.
class Lbfgs {
 public:
  Lbfgs(Objective f, std::vector<double> x0, std::size_t memory = 10);

  /// Performs one iteration; false when the line search cannot make progress.
  bool step();

  const std::vector<double>& x() const { return x_; }
  double value() const { return fx_; }
  const std::vector<double>& gradient() const { return g_; }
  double grad_inf_norm() const;

 private:
  Objective f_;
  std::vector<double> x_, g_;
  double fx_ = 0.0;
  std::size_t memory_;
  std::deque<std::vector<double>> s_, y_;
  std::deque<double> rho_;
  std::size_t iter_ = 0;
};

struct MinimizeResult {
  std::size_t iterations = 0;
  bool converged = false;
  double value = 0.0;
};

/// Runs L-BFGS until the gradient infinity-norm drops below `grad_tol` or
/// `max_iter` iterations; `x` holds the result.
MinimizeResult minimize_lbfgs(const Objective& f, std::vector<double>& x, std::size_t max_iter, double grad_tol,
                              std::size_t memory = 10);

}  // namespace rooftop
