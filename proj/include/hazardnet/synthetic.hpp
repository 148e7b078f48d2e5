#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "hazardnet/dataset.hpp"

namespace hazardnet {

// Event-time families with rate alpha = exp(w . x + b):
//   Rayleigh    S(t) = exp(-alpha t^2 / 2)
//   Gompertz    S(t) = exp(-alpha (e^t - 1))
//   Exponential S(t) = exp(-alpha t)
//   Weibull     S(t) = exp(-alpha t^shape)
enum class SynthDistribution { Rayleigh, Gompertz, Exponential, Weibull };

std::string to_string(SynthDistribution dist);
SynthDistribution parse_synth_distribution(std::string_view name);

enum class CensoringPolicy {
    LargestTimes,   // the n_censored largest draws are censored
    UniformRandom,  // n_censored draws picked uniformly at random
};

CensoringPolicy parse_censoring_policy(std::string_view name);

struct SynthConfig {
    std::size_t n_observed = 0;
    std::size_t n_censored = 0;
    std::size_t dim = 10;
    SynthDistribution dist = SynthDistribution::Rayleigh;
    std::uint64_t seed = 0;
    CensoringPolicy censoring = CensoringPolicy::LargestTimes;
    double weibull_shape = 1.5;
    // Fixed ground truth instead of drawing it from the seed, e.g. to draw a
    // test set from the same model as a training set.
    std::optional<Eigen::VectorXd> w;
    std::optional<double> b;

    void validate() const;
};

struct SynthOutput {
    Dataset dataset;
    Eigen::VectorXd true_w;
    double true_b = 0;
};

// Inverse-transform draw for variate u in (0, 1).
double draw_event_time(SynthDistribution dist, double alpha, double u, double shape = 1.0);
double synth_survival(SynthDistribution dist, double alpha, double t, double shape = 1.0);

// Draws w ~ N(0, I), b ~ N(0, 1), then per sample x ~ N(0, I) and t from the
// chosen family; the censored samples keep their drawn times.
SynthOutput generate(const SynthConfig& config);

// {"w": [...], "b": ..., "dist": "...", "seed": ...}
std::string truth_to_json(const SynthOutput& out, const SynthConfig& config);

}  // namespace hazardnet
