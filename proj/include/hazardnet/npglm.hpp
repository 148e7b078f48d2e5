#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "hazardnet/dataset.hpp"

namespace hazardnet {

// exp(z) with z clamped to [-50, 50].
double link_g(double z);

// Training data in the layout the learner works on: x with a trailing bias
// column, rows sorted by t, and observed ties spread apart so that every
// observed time is strictly later than its predecessor.
struct SurvivalData {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x;  // N x (d + 1)
    Eigen::VectorXd y;
    Eigen::VectorXd t;

    static SurvivalData from(const Dataset& data);
    Eigen::Index size() const { return y.size(); }
    std::size_t observed() const;
};

// Cumulative baseline hazard at every training time for coefficients w:
// H(t_i) = sum_{j <= i} y_j / sum_{k >= j} g(w . x_k). One backward pass for
// the risk-set sums and one forward prefix sum. Throws std::invalid_argument
// when no sample is observed.
Eigen::VectorXd compute_H(const Eigen::VectorXd& w, const SurvivalData& data);

// Negative log-likelihood of (w, H), with the baseline hazard taken as
// piecewise constant between consecutive training times. Throws
// std::domain_error when an observed sample has no hazard increment.
double npglm_loss(const Eigen::VectorXd& w, const Eigen::VectorXd& H, const SurvivalData& data);

// The part of the loss that depends on w for fixed H:
// sum_i g(w . x_i) H_i - y_i w . x_i. Convex in w.
double w_objective(const Eigen::VectorXd& w, const Eigen::VectorXd& H, const SurvivalData& data,
                   Eigen::VectorXd* grad = nullptr, Eigen::MatrixXd* hess = nullptr);

struct FitConfig {
    double threshold = 1e-4;  // on |L(tau) - L(tau - 1)|
    int max_iterations = 500;
    int inner_max_steps = 100;
    double gradient_tolerance = 1e-6;
    std::uint64_t seed = 0;
    // Standardize features when the dataset is not already standardized.
    bool standardize = true;

    void validate() const;
};

// Minimizes w_objective from w_init with damped Newton steps. Throws
// std::runtime_error when the objective becomes non-finite.
Eigen::VectorXd optimize_w(const SurvivalData& data, const Eigen::VectorXd& H,
                           const Eigen::VectorXd& w_init, const FitConfig& config);

struct HazardValue {
    double value;
    bool beyond_horizon;  // t past the last training time; value is clamped
};

struct TimeEstimate {
    double time;
    // The answer lies beyond the last training time; `time` is then that
    // last time, a lower bound.
    bool horizon_exceeded;
};

class NpGlmModel {
public:
    Eigen::VectorXd w;                // d coefficients then the bias
    std::vector<double> event_times;  // strictly increasing
    std::vector<double> H;            // non-decreasing, same length
    std::optional<Standardization> standardization;
    std::string unit;
    std::vector<double> loss_trace;

    std::size_t dimension() const { return static_cast<std::size_t>(w.size()) - 1; }

    // w . [standardize(x), 1] for a raw feature vector.
    double linear_predictor(std::span<const double> raw_x) const;
    // Coefficients expressed on raw (unstandardized) features, bias last.
    Eigen::VectorXd raw_weights() const;

    // Piecewise-linear H, through the origin before the first training time.
    HazardValue interpolate_H(double t) const;
    double survival(std::span<const double> raw_x, double t) const;

    // P(t_a <= T <= t_b | x).
    double ranged_probability(std::span<const double> raw_x, double t_a, double t_b) const;
    // Time by which the event has happened with probability alpha.
    TimeEstimate quantile(std::span<const double> raw_x, double alpha) const;
    TimeEstimate median(std::span<const double> raw_x) const { return quantile(raw_x, 0.5); }
    // Inverse-transform draw on the training time grid.
    TimeEstimate sample_time(std::span<const double> raw_x, std::mt19937_64& rng) const;
    // The same draw for a given uniform variate u.
    TimeEstimate sample_time_at(std::span<const double> raw_x, double u) const;

    std::string to_json() const;
    static NpGlmModel from_json(std::string_view text);
};

struct NpGlmFit {
    NpGlmModel model;
    int iterations = 0;
    bool converged = false;
    // Loss never rose between iterations (up to 1e-9 relative rounding).
    bool monotone = true;

    // -loss / N per iteration.
    std::vector<double> average_log_likelihood() const;
    std::size_t samples = 0;
};

// Alternates the closed-form H update with minimization over w until the
// loss changes by less than config.threshold. Non-convergence is reported
// through `converged`, not thrown.
NpGlmFit fit_npglm(const Dataset& data, const FitConfig& config = {});

}  // namespace hazardnet
