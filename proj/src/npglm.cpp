#include "hazardnet/npglm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "hazardnet/optimize.hpp"

namespace hazardnet {

namespace {

constexpr double kClamp = 50.0;

// d/dz of link_g: zero where the clamp is active.
double link_g_slope(double z) { return std::abs(z) < kClamp ? std::exp(z) : 0.0; }

}  // namespace

double link_g(double z) { return std::exp(std::clamp(z, -kClamp, kClamp)); }

// ---------------------------------------------------------------------------
// Learning

SurvivalData SurvivalData::from(const Dataset& data) {
    SurvivalData s;
    s.x = design_matrix(data);
    const auto n = static_cast<Eigen::Index>(data.size());
    s.y.resize(n);
    s.t.resize(n);
    double t_max = 0;
    for (const auto& sample : data.samples()) t_max = std::max(t_max, sample.t);
    const double eps = 1e-9 * t_max;

    double prev = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& sample = data[static_cast<std::size_t>(i)];
        s.y(i) = sample.y;
        double t = sample.t;
        if (sample.y == 1 && t <= prev)
            t = prev + eps;
        else
            t = std::max(t, prev);
        s.t(i) = t;
        prev = t;
    }
    return s;
}

std::size_t SurvivalData::observed() const {
    return static_cast<std::size_t>((y.array() > 0.5).count());
}

Eigen::VectorXd compute_H(const Eigen::VectorXd& w, const SurvivalData& data) {
    if (data.observed() == 0)
        throw std::invalid_argument("compute_H: all samples are censored, H is identically zero");
    const auto n = data.size();
    const Eigen::VectorXd eta = data.x * w;

    Eigen::VectorXd risk(n);
    double acc = 0;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        acc += link_g(eta(i));
        risk(i) = acc;
    }
    Eigen::VectorXd H(n);
    double cum = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (data.y(i) > 0.5) cum += 1.0 / risk(i);
        H(i) = cum;
    }
    return H;
}

double npglm_loss(const Eigen::VectorXd& w, const Eigen::VectorXd& H, const SurvivalData& data) {
    const auto n = data.size();
    if (H.size() != n) throw std::invalid_argument("npglm_loss: H length mismatch");
    const Eigen::VectorXd eta = data.x * w;
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        total += link_g(eta(i)) * H(i);
        if (data.y(i) > 0.5) {
            const double h_prev = i == 0 ? 0.0 : H(i - 1);
            const double t_prev = i == 0 ? 0.0 : data.t(i - 1);
            const double dH = H(i) - h_prev;
            const double dt = data.t(i) - t_prev;
            if (!(dH > 0) || !(dt > 0))
                throw std::domain_error("npglm_loss: zero hazard increment at an observed event");
            total -= std::clamp(eta(i), -kClamp, kClamp) + std::log(dH / dt);
        }
    }
    return total;
}

double w_objective(const Eigen::VectorXd& w, const Eigen::VectorXd& H, const SurvivalData& data,
                   Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const auto n = data.size();
    const auto p = w.size();
    if (H.size() != n || data.x.cols() != p)
        throw std::invalid_argument("w_objective: dimension mismatch");
    // One pass over the rows of x; the Hessian's lower triangle is packed.
    std::vector<double> g(grad ? static_cast<std::size_t>(p) : 0, 0.0);
    std::vector<double> h(hess ? static_cast<std::size_t>(p * (p + 1) / 2) : 0, 0.0);
    double value = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double* xi = data.x.data() + i * p;
        double eta = 0;
        for (Eigen::Index a = 0; a < p; ++a) eta += xi[a] * w(a);
        value += link_g(eta) * H(i) - data.y(i) * eta;
        if (!grad && !hess) continue;
        const double slope = link_g_slope(eta) * H(i);
        if (grad) {
            const double r = slope - data.y(i);
            for (Eigen::Index a = 0; a < p; ++a) g[a] += r * xi[a];
        }
        if (hess && slope != 0) {
            double* row = h.data();
            for (Eigen::Index a = 0; a < p; ++a) {
                const double sa = slope * xi[a];
                for (Eigen::Index b = 0; b <= a; ++b) row[b] += sa * xi[b];
                row += a + 1;
            }
        }
    }
    if (grad) *grad = Eigen::Map<const Eigen::VectorXd>(g.data(), p);
    if (hess) {
        hess->resize(p, p);
        const double* row = h.data();
        for (Eigen::Index a = 0; a < p; ++a) {
            for (Eigen::Index b = 0; b <= a; ++b) (*hess)(a, b) = (*hess)(b, a) = row[b];
            row += a + 1;
        }
    }
    return value;
}

void FitConfig::validate() const {
    if (!(threshold > 0)) throw std::invalid_argument("fit: convergence threshold must be positive");
    if (max_iterations < 1 || inner_max_steps < 1)
        throw std::invalid_argument("fit: iteration limits must be at least 1");
    if (!(gradient_tolerance > 0))
        throw std::invalid_argument("fit: gradient tolerance must be positive");
}

Eigen::VectorXd optimize_w(const SurvivalData& data, const Eigen::VectorXd& H,
                           const Eigen::VectorXd& w_init, const FitConfig& config) {
    auto objective = [&](const Eigen::VectorXd& w, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
        return w_objective(w, H, data, g, h);
    };
    NewtonResult r;
    try {
        r = minimize_newton(objective, w_init,
                            {config.inner_max_steps, config.gradient_tolerance});
    } catch (const std::runtime_error&) {
        throw std::runtime_error(
            "optimize_w: objective is not finite; features are probably unstandardized");
    }
    if (!std::isfinite(r.value) || !r.x.allFinite())
        throw std::runtime_error("optimize_w: diverging coefficients");
    return r.x;
}

std::vector<double> NpGlmFit::average_log_likelihood() const {
    std::vector<double> out;
    out.reserve(model.loss_trace.size());
    for (double l : model.loss_trace) out.push_back(-l / static_cast<double>(samples));
    return out;
}

NpGlmFit fit_npglm(const Dataset& dataset, const FitConfig& config) {
    config.validate();
    if (dataset.observed_count() == 0)
        throw std::invalid_argument("fit: dataset has no observed samples");
    auto data = SurvivalData::from(dataset);
    auto standardization = dataset.standardization();
    if (config.standardize && !standardization) {
        standardization = Standardization::fit(std::span<const LabeledSample>(dataset.samples()));
        standardize_columns(data.x, *standardization);
    }

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd w(data.x.cols());
    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = normal(rng);

    NpGlmFit fit;
    fit.samples = dataset.size();
    Eigen::VectorXd H;
    double previous = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= config.max_iterations; ++it) {
        H = compute_H(w, data);
        w = optimize_w(data, H, w, config);
        const double current = npglm_loss(w, H, data);
        fit.model.loss_trace.push_back(current);
        fit.iterations = it;
        if (std::isfinite(previous) && current > previous + 1e-9 * std::abs(previous))
            fit.monotone = false;
        if (std::abs(current - previous) < config.threshold) {
            fit.converged = true;
            break;
        }
        previous = current;
    }

    auto& model = fit.model;
    model.w = w;
    model.standardization = standardization;
    // Collapse equal times (censored samples share theirs) keeping the last,
    // i.e. largest, H of each group.
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        if (!model.event_times.empty() && model.event_times.back() == data.t(i)) {
            model.H.back() = H(i);
        } else {
            model.event_times.push_back(data.t(i));
            model.H.push_back(H(i));
        }
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Inference

double NpGlmModel::linear_predictor(std::span<const double> raw_x) const {
    if (raw_x.size() != dimension())
        throw std::invalid_argument("model expects " + std::to_string(dimension()) +
                                    " features, got " + std::to_string(raw_x.size()));
    const auto x = standardization ? standardization->apply(raw_x)
                                   : std::vector<double>(raw_x.begin(), raw_x.end());
    double eta = w(w.size() - 1);
    for (std::size_t j = 0; j < x.size(); ++j) eta += w(static_cast<Eigen::Index>(j)) * x[j];
    return eta;
}

Eigen::VectorXd NpGlmModel::raw_weights() const {
    if (!standardization) return w;
    Eigen::VectorXd raw = w;
    const auto d = static_cast<Eigen::Index>(dimension());
    for (Eigen::Index j = 0; j < d; ++j) {
        raw(j) = w(j) / standardization->std[static_cast<std::size_t>(j)];
        raw(d) -= raw(j) * standardization->mean[static_cast<std::size_t>(j)];
    }
    return raw;
}

HazardValue NpGlmModel::interpolate_H(double t) const {
    if (!(t >= 0)) throw std::invalid_argument("interpolate_H: t must be non-negative");
    if (event_times.empty()) throw std::logic_error("interpolate_H: empty model");
    if (t > event_times.back()) return {H.back(), true};
    // First training time strictly after t; t lies in [t_k, t_{k+1}).
    const auto upper = std::upper_bound(event_times.begin(), event_times.end(), t);
    const auto k1 = static_cast<std::size_t>(upper - event_times.begin());
    if (k1 == event_times.size()) return {H.back(), false};  // t == t_N
    const double t_lo = k1 == 0 ? 0.0 : event_times[k1 - 1];
    const double h_lo = k1 == 0 ? 0.0 : H[k1 - 1];
    const double t_hi = event_times[k1];
    const double h_hi = H[k1];
    return {h_lo + (t - t_lo) * (h_hi - h_lo) / (t_hi - t_lo), false};
}

double NpGlmModel::survival(std::span<const double> raw_x, double t) const {
    return std::exp(-link_g(linear_predictor(raw_x)) * interpolate_H(t).value);
}

double NpGlmModel::ranged_probability(std::span<const double> raw_x, double t_a,
                                      double t_b) const {
    if (!(t_a >= 0) || !(t_b >= 0))
        throw std::invalid_argument("ranged_probability: times must be non-negative");
    if (t_a > t_b) throw std::invalid_argument("ranged_probability: requires t_a <= t_b");
    const double g = link_g(linear_predictor(raw_x));
    const double p = std::exp(-g * interpolate_H(t_a).value) - std::exp(-g * interpolate_H(t_b).value);
    return std::clamp(p, 0.0, 1.0);
}

TimeEstimate NpGlmModel::quantile(std::span<const double> raw_x, double alpha) const {
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("quantile: alpha must lie in (0, 1)");
    const double target = -std::log1p(-alpha) / link_g(linear_predictor(raw_x));
    if (target > H.back()) return {event_times.back(), true};
    // First k with H(t_k) > target; the answer lies in [t_{k-1}, t_k).
    const auto upper = std::upper_bound(H.begin(), H.end(), target);
    if (upper == H.end()) {
        // target == H(t_N): earliest time the curve reaches it.
        const auto first = std::lower_bound(H.begin(), H.end(), target);
        return {event_times[static_cast<std::size_t>(first - H.begin())], false};
    }
    const auto k = static_cast<std::size_t>(upper - H.begin());
    const double t_lo = k == 0 ? 0.0 : event_times[k - 1];
    const double h_lo = k == 0 ? 0.0 : H[k - 1];
    return {t_lo + (event_times[k] - t_lo) * (target - h_lo) / (H[k] - h_lo), false};
}

TimeEstimate NpGlmModel::sample_time_at(std::span<const double> raw_x, double u) const {
    const double g = link_g(linear_predictor(raw_x));
    // Smallest k with S(t_k) <= u; S is non-increasing along the grid.
    std::size_t lo = 0, hi = H.size();
    while (lo < hi) {
        const auto mid = lo + (hi - lo) / 2;
        if (std::exp(-g * H[mid]) <= u)
            hi = mid;
        else
            lo = mid + 1;
    }
    if (lo == H.size()) return {event_times.back(), true};
    return {event_times[lo], false};
}

TimeEstimate NpGlmModel::sample_time(std::span<const double> raw_x, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    return sample_time_at(raw_x, uniform(rng));
}

std::string NpGlmModel::to_json() const {
    nlohmann::json j;
    j["w"] = std::vector<double>(w.data(), w.data() + w.size());
    j["event_times"] = event_times;
    j["H"] = H;
    j["standardization"] = standardization
                               ? nlohmann::json{{"mean", standardization->mean},
                                                {"std", standardization->std}}
                               : nlohmann::json(nullptr);
    j["unit"] = unit;
    j["loss_trace"] = loss_trace;
    return j.dump(2);
}

NpGlmModel NpGlmModel::from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        NpGlmModel m;
        const auto w = j.at("w").get<std::vector<double>>();
        if (w.empty()) throw std::invalid_argument("model: empty coefficient vector");
        m.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        m.event_times = j.at("event_times").get<std::vector<double>>();
        m.H = j.at("H").get<std::vector<double>>();
        if (m.event_times.empty() || m.event_times.size() != m.H.size())
            throw std::invalid_argument("model: event_times and H must be non-empty and aligned");
        for (std::size_t i = 1; i < m.H.size(); ++i)
            if (!(m.event_times[i] > m.event_times[i - 1]) || m.H[i] < m.H[i - 1])
                throw std::invalid_argument("model: times must increase and H must not decrease");
        if (j.contains("standardization") && !j.at("standardization").is_null())
            m.standardization = Standardization::from_json(j.at("standardization").dump());
        if (m.standardization && m.standardization->dimension() != m.dimension())
            throw std::invalid_argument("model: standardization dimension mismatch");
        m.unit = j.value("unit", std::string{});
        m.loss_trace = j.value("loss_trace", std::vector<double>{});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("model: ") + e.what());
    }
}

}  // namespace hazardnet
