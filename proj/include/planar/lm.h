#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace planar {

enum class LossKind { kNone, kHuber };

struct LmConfig {
  int max_iterations = 200;
  double initial_lambda = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  // Relative decrease of the cost below which an accepted step terminates.
  double cost_tolerance = 1e-10;
  // Step norm relative to the parameter norm below which the solve stops.
  double parameter_tolerance = 1e-10;
  LossKind loss = LossKind::kNone;
  double huber_delta = 2.0;
  // Relative weights of squared residuals (used by the mosaic solver).
  double edge_weight = 1.0;
  double control_weight = 10.0;
  // Systems smaller than this are factorized densely.
  int dense_threshold = 80;

  void validate() const;
};

// Gauss-Newton normal equations at the current state: J^T J, J^T r and the
// total cost (sum of squared, possibly robustified, residuals). The Hessian
// approximation is given as triplets; duplicate entries are summed.
struct NormalEquations {
  int dim = 0;
  std::vector<Eigen::Triplet<double>> hessian;
  Eigen::VectorXd gradient;
  double cost = 0.0;
};

// A least-squares problem whose state lives inside the implementation.
// apply_step moves the state by a local update, undo_step restores the state
// from before the last apply_step.
class LeastSquaresProblem {
 public:
  virtual ~LeastSquaresProblem() = default;

  virtual int num_parameters() const = 0;
  virtual double cost() const = 0;
  virtual NormalEquations linearize() const = 0;
  virtual void apply_step(const Eigen::VectorXd& delta) = 0;
  virtual void undo_step() = 0;
  // Scale of the current parameters for the step-size test.
  virtual double parameter_norm() const { return 1.0; }
};

struct LmSummary {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  // Cost after every accepted step, starting with the initial cost.
  std::vector<double> cost_trace;
  std::string termination;
};

// Damped Gauss-Newton with Marquardt diagonal scaling. Throws
// NumericalFailure when the initial cost is not finite.
LmSummary solve_levenberg_marquardt(LeastSquaresProblem& problem,
                                    const LmConfig& config);

// Huber robustification of a squared residual norm: returns rho(s2) and the
// IRLS weight rho'(s2).
struct RobustTerm {
  double cost;
  double weight;
};
RobustTerm robustify(double squared_norm, LossKind loss, double delta);

}  // namespace planar
