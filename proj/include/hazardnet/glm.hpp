#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "hazardnet/dataset.hpp"

namespace hazardnet {

enum class GlmFamily { Exponential, Weibull };

std::string to_string(GlmFamily family);
GlmFamily parse_glm_family(std::string_view name);

// Proportional-hazards GLM with cumulative intensity exp(w . x) * t^shape.
// The exponential family fixes shape = 1.
struct ParametricGlmModel {
    GlmFamily family = GlmFamily::Exponential;
    Eigen::VectorXd w;  // d coefficients then the bias
    double shape = 1.0;
    std::optional<Standardization> standardization;
    std::string unit;

    std::size_t dimension() const { return static_cast<std::size_t>(w.size()) - 1; }
    double linear_predictor(std::span<const double> raw_x) const;
    Eigen::VectorXd raw_weights() const;

    double survival(std::span<const double> raw_x, double t) const;
    // Solves S(t | x) = 1/2.
    double predict_median(std::span<const double> raw_x) const;
    // P(t_a <= T <= t_b | x).
    double ranged_probability(std::span<const double> raw_x, double t_a, double t_b) const;
    double quantile(std::span<const double> raw_x, double alpha) const;

    std::string to_json() const;
    static ParametricGlmModel from_json(std::string_view text);
};

// Censored log-likelihood over theta = (w, log shape):
//   sum_i y_i [w.x_i + log a + (a - 1) log t_i] - exp(w.x_i) t_i^a.
// For the exponential family theta holds w only. x rows carry the bias column.
double glm_log_likelihood(GlmFamily family, const Eigen::VectorXd& theta, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y, const Eigen::VectorXd& t,
                          Eigen::VectorXd* grad = nullptr, Eigen::MatrixXd* hess = nullptr);

struct GlmFitConfig {
    int max_steps = 200;
    double gradient_tolerance = 1e-8;
    bool standardize = true;
};

struct GlmFit {
    ParametricGlmModel model;
    double log_likelihood = 0;
    int steps = 0;
    bool converged = false;
};

// Maximum-likelihood fit by damped Newton from w = 0, bias at the
// covariate-free optimum and shape 1. Deterministic.
GlmFit fit_parametric(const Dataset& data, GlmFamily family, const GlmFitConfig& config = {});

}  // namespace hazardnet
