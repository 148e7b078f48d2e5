#include "hazardnet/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace hazardnet {

namespace {

Eigen::VectorXd descent_direction(const Eigen::MatrixXd& hess, const Eigen::VectorXd& grad) {
    const auto n = grad.size();
    const double scale = std::max(1e-12, hess.diagonal().cwiseAbs().maxCoeff());
    double shift = 0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(hess + shift * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) {
            Eigen::VectorXd p = -llt.solve(grad);
            if (p.allFinite() && p.dot(grad) < 0) return p;
        }
        shift = shift == 0 ? 1e-10 * scale : shift * 10;
    }
    return -grad;
}

}  // namespace

NewtonResult minimize_newton(const SmoothObjective& f, Eigen::VectorXd x0,
                             const NewtonOptions& options) {
    NewtonResult r;
    r.x = std::move(x0);
    Eigen::VectorXd grad(r.x.size());
    Eigen::MatrixXd hess(r.x.size(), r.x.size());
    r.value = f(r.x, &grad, &hess);
    if (!std::isfinite(r.value) || !grad.allFinite())
        throw std::runtime_error("objective is not finite at the starting point");

    constexpr double kArmijo = 1e-4;
    for (r.steps = 0; r.steps < options.max_steps; ++r.steps) {
        r.gradient_norm = grad.cwiseAbs().maxCoeff();
        if (r.gradient_norm <= options.gradient_tolerance) {
            r.converged = true;
            return r;
        }
        const Eigen::VectorXd p = descent_direction(hess, grad);
        const double slope = grad.dot(p);
        // The predicted decrease is below what f can resolve.
        if (-slope <= 1e-13 * std::max(1.0, std::abs(r.value))) {
            r.converged = true;
            return r;
        }

        double t = 1.0;
        double trial = 0;
        Eigen::VectorXd x_new;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            x_new = r.x + t * p;
            trial = f(x_new, nullptr, nullptr);
            if (std::isfinite(trial) && trial <= r.value + kArmijo * t * slope) {
                accepted = trial < r.value;
                break;
            }
        }
        // No representable decrease left: x is optimal to machine precision.
        if (!accepted) {
            r.converged = true;
            return r;
        }
        r.x = std::move(x_new);
        r.value = f(r.x, &grad, &hess);
    }
    r.gradient_norm = grad.cwiseAbs().maxCoeff();
    r.converged = r.gradient_norm <= options.gradient_tolerance;
    return r;
}

Eigen::VectorXd finite_difference_gradient(const SmoothObjective& f, const Eigen::VectorXd& x,
                                           double step) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x(i)));
        Eigen::VectorXd hi = x, lo = x;
        hi(i) += h;
        lo(i) -= h;
        g(i) = (f(hi, nullptr, nullptr) - f(lo, nullptr, nullptr)) / (2 * h);
    }
    return g;
}

}  // namespace hazardnet
