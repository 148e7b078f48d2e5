#pragma once

#include <functional>

#include <Eigen/Core>

namespace hazardnet {

// Objective callback: returns f(x); fills gradient and Hessian when the
// pointers are non-null.
using SmoothObjective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad, Eigen::MatrixXd* hess)>;

struct NewtonOptions {
    int max_steps = 100;
    double gradient_tolerance = 1e-6;  // on the max-norm of the gradient
};

struct NewtonResult {
    Eigen::VectorXd x;
    double value = 0;
    double gradient_norm = 0;  // max-norm at x
    int steps = 0;
    bool converged = false;
};

// Damped Newton descent with an Armijo backtracking line search. When the
// Hessian is not positive definite it is shifted by a growing multiple of the
// identity; as a last resort the step falls back to steepest descent. Every
// accepted step strictly decreases f. Throws std::runtime_error when f(x0)
// is not finite.
NewtonResult minimize_newton(const SmoothObjective& f, Eigen::VectorXd x0,
                             const NewtonOptions& options = {});

// Central finite-difference gradient, used by tests and diagnostics.
Eigen::VectorXd finite_difference_gradient(const SmoothObjective& f, const Eigen::VectorXd& x,
                                           double step = 1e-6);

}  // namespace hazardnet
