#include "planar/lm.h"

#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "planar/error.h"

namespace planar {

void LmConfig::validate() const {
  if (max_iterations <= 0 || !(initial_lambda > 0.0) || !(lambda_up > 1.0) ||
      !(lambda_down > 0.0) || !(lambda_down < 1.0) || !(cost_tolerance > 0.0) ||
      !(parameter_tolerance > 0.0) || !(huber_delta > 0.0) ||
      !(edge_weight > 0.0) || !(control_weight > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "LM configuration values must be positive");
  }
}

RobustTerm robustify(double squared_norm, LossKind loss, double delta) {
  if (loss == LossKind::kNone || squared_norm <= delta * delta) {
    return {squared_norm, 1.0};
  }
  const double norm = std::sqrt(squared_norm);
  return {2.0 * delta * norm - delta * delta, delta / norm};
}

namespace {

class DampedSolver {
 public:
  DampedSolver(const NormalEquations& eq, bool dense) : dense_(dense), dim_(eq.dim) {
    Eigen::SparseMatrix<double> h(dim_, dim_);
    h.setFromTriplets(eq.hessian.begin(), eq.hessian.end());
    if (dense_) {
      dense_h_ = Eigen::MatrixXd(h);
      diag_ = dense_h_.diagonal();
    } else {
      sparse_h_ = h;
      diag_ = sparse_h_.diagonal();
    }
    const double max_diag = diag_.size() > 0 ? diag_.maxCoeff() : 0.0;
    const double floor = std::max(1e-12 * max_diag, 1e-300);
    for (int i = 0; i < dim_; ++i) diag_[i] = std::max(diag_[i], floor);
  }

  // Solves (H + lambda D) delta = -g. Returns false if the factorization fails.
  bool solve(double lambda, const Eigen::VectorXd& g, Eigen::VectorXd* delta) const {
    if (dense_) {
      Eigen::MatrixXd a = dense_h_;
      a.diagonal() += lambda * diag_;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
      *delta = ldlt.solve(-g);
    } else {
      Eigen::SparseMatrix<double> a = sparse_h_;
      for (int i = 0; i < dim_; ++i) a.coeffRef(i, i) += lambda * diag_[i];
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
      if (ldlt.info() != Eigen::Success) return false;
      *delta = ldlt.solve(-g);
      if (ldlt.info() != Eigen::Success) return false;
    }
    return delta->allFinite();
  }

 private:
  bool dense_;
  int dim_;
  Eigen::MatrixXd dense_h_;
  Eigen::SparseMatrix<double> sparse_h_;
  Eigen::VectorXd diag_;
};

}  // namespace

LmSummary solve_levenberg_marquardt(LeastSquaresProblem& problem,
                                    const LmConfig& config) {
  config.validate();
  LmSummary summary;
  double cost = problem.cost();
  if (!std::isfinite(cost)) {
    throw Error(ErrorCode::kNumericalFailure, "initial cost is not finite");
  }
  summary.initial_cost = cost;
  summary.final_cost = cost;
  summary.cost_trace.push_back(cost);

  const int dim = problem.num_parameters();
  if (dim == 0 || cost == 0.0) {
    summary.converged = true;
    summary.termination = dim == 0 ? "no free parameters" : "zero cost";
    return summary;
  }

  double lambda = config.initial_lambda;
  constexpr double kMaxLambda = 1e32;
  bool relinearize = true;
  NormalEquations eq;
  std::unique_ptr<DampedSolver> solver;

  while (summary.iterations < config.max_iterations) {
    if (relinearize) {
      eq = problem.linearize();
      solver = std::make_unique<DampedSolver>(eq, dim < config.dense_threshold);
      relinearize = false;
    }
    ++summary.iterations;

    Eigen::VectorXd delta;
    if (!solver->solve(lambda, eq.gradient, &delta)) {
      lambda *= config.lambda_up;
      if (lambda > kMaxLambda) {
        summary.termination = "damping exhausted";
        break;
      }
      continue;
    }

    const double tol = config.parameter_tolerance;
    if (delta.norm() <= tol * (problem.parameter_norm() + tol)) {
      summary.converged = true;
      summary.termination = "parameter tolerance";
      break;
    }

    problem.apply_step(delta);
    const double new_cost = problem.cost();
    if (std::isfinite(new_cost) && new_cost < cost) {
      const double decrease = cost - new_cost;
      cost = new_cost;
      summary.cost_trace.push_back(cost);
      lambda = std::max(lambda * config.lambda_down, 1e-300);
      relinearize = true;
      if (decrease <= config.cost_tolerance * (cost + decrease) || cost == 0.0) {
        summary.converged = true;
        summary.termination = "cost tolerance";
        break;
      }
    } else {
      problem.undo_step();
      lambda *= config.lambda_up;
      if (lambda > kMaxLambda) {
        // No descent direction left at machine precision.
        summary.converged = true;
        summary.termination = "damping exhausted";
        break;
      }
    }
  }
  if (summary.termination.empty()) summary.termination = "max iterations";
  summary.final_cost = cost;
  return summary;
}

}  // namespace planar
