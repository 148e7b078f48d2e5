#include "hazardnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace hazardnet {

std::string to_string(SynthDistribution dist) {
    switch (dist) {
        case SynthDistribution::Rayleigh: return "rayleigh";
        case SynthDistribution::Gompertz: return "gompertz";
        case SynthDistribution::Exponential: return "exponential";
        case SynthDistribution::Weibull: return "weibull";
    }
    return "unknown";
}

SynthDistribution parse_synth_distribution(std::string_view name) {
    if (name == "rayleigh") return SynthDistribution::Rayleigh;
    if (name == "gompertz") return SynthDistribution::Gompertz;
    if (name == "exponential") return SynthDistribution::Exponential;
    if (name == "weibull") return SynthDistribution::Weibull;
    throw std::invalid_argument("unknown distribution '" + std::string(name) + "'");
}

CensoringPolicy parse_censoring_policy(std::string_view name) {
    if (name == "largest") return CensoringPolicy::LargestTimes;
    if (name == "random") return CensoringPolicy::UniformRandom;
    throw std::invalid_argument("unknown censoring policy '" + std::string(name) + "'");
}

void SynthConfig::validate() const {
    if (n_observed < 1) throw std::invalid_argument("synthetic: need at least one observed sample");
    if (dim < 1) throw std::invalid_argument("synthetic: dimension must be at least 1");
    if (dist == SynthDistribution::Weibull && !(weibull_shape > 0))
        throw std::invalid_argument("synthetic: Weibull shape must be positive");
    if (w && static_cast<std::size_t>(w->size()) != dim)
        throw std::invalid_argument("synthetic: fixed w has the wrong dimension");
}

double draw_event_time(SynthDistribution dist, double alpha, double u, double shape) {
    const double e = -std::log(u) / alpha;  // unit-rate cumulative hazard level
    switch (dist) {
        case SynthDistribution::Rayleigh: return std::sqrt(2 * e);
        case SynthDistribution::Gompertz: return std::log1p(e);
        case SynthDistribution::Exponential: return e;
        case SynthDistribution::Weibull: return std::pow(e, 1.0 / shape);
    }
    throw std::logic_error("draw_event_time: bad distribution");
}

double synth_survival(SynthDistribution dist, double alpha, double t, double shape) {
    switch (dist) {
        case SynthDistribution::Rayleigh: return std::exp(-0.5 * alpha * t * t);
        case SynthDistribution::Gompertz: return std::exp(-alpha * std::expm1(t));
        case SynthDistribution::Exponential: return std::exp(-alpha * t);
        case SynthDistribution::Weibull: return std::exp(-alpha * std::pow(t, shape));
    }
    throw std::logic_error("synth_survival: bad distribution");
}

SynthOutput generate(const SynthConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const auto d = static_cast<Eigen::Index>(config.dim);

    SynthOutput out;
    out.true_w.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) out.true_w(j) = normal(rng);
    out.true_b = normal(rng);
    if (config.w) out.true_w = *config.w;
    if (config.b) out.true_b = *config.b;

    const std::size_t n = config.n_observed + config.n_censored;
    std::vector<LabeledSample> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = samples[i];
        s.key = {std::to_string(i), "0"};
        s.x.resize(config.dim);
        double eta = out.true_b;
        for (std::size_t j = 0; j < config.dim; ++j) {
            s.x[j] = normal(rng);
            eta += out.true_w(static_cast<Eigen::Index>(j)) * s.x[j];
        }
        double u = 0;
        do u = uniform(rng);
        while (u <= 0.0);
        double t = draw_event_time(config.dist, std::exp(eta), u, config.weibull_shape);
        s.t = std::max(t, std::numeric_limits<double>::min());
        s.y = 1;
    }

    if (config.censoring == CensoringPolicy::LargestTimes) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return samples[a].t < samples[b].t; });
        for (std::size_t r = config.n_observed; r < n; ++r) samples[order[r]].y = 0;
    } else {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < config.n_censored; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(idx[i], idx[pick(rng)]);
            samples[idx[i]].y = 0;
        }
    }
    out.dataset = Dataset(std::move(samples));
    return out;
}

std::string truth_to_json(const SynthOutput& out, const SynthConfig& config) {
    nlohmann::json j;
    j["w"] = std::vector<double>(out.true_w.data(), out.true_w.data() + out.true_w.size());
    j["b"] = out.true_b;
    j["dist"] = to_string(config.dist);
    j["seed"] = config.seed;
    if (config.dist == SynthDistribution::Weibull) j["shape"] = config.weibull_shape;
    return j.dump(2);
}

}  // namespace hazardnet
