#include "hazardnet/glm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "hazardnet/npglm.hpp"
#include "hazardnet/optimize.hpp"

namespace hazardnet {

std::string to_string(GlmFamily family) {
    return family == GlmFamily::Exponential ? "exponential" : "weibull";
}

GlmFamily parse_glm_family(std::string_view name) {
    if (name == "exponential" || name == "expglm") return GlmFamily::Exponential;
    if (name == "weibull" || name == "wblglm") return GlmFamily::Weibull;
    throw std::invalid_argument("unknown GLM family '" + std::string(name) + "'");
}

double glm_log_likelihood(GlmFamily family, const Eigen::VectorXd& theta, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y, const Eigen::VectorXd& t,
                          Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const auto p = x.cols();
    const bool weibull = family == GlmFamily::Weibull;
    if (theta.size() != p + (weibull ? 1 : 0))
        throw std::invalid_argument("glm_log_likelihood: parameter length mismatch");
    const double s = weibull ? theta(p) : 0.0;
    const double a = std::exp(s);
    const Eigen::VectorXd eta = x * theta.head(p);

    const auto n = x.rows();
    double ll = 0;
    Eigen::VectorXd resid(n), curv(n), cross(n);
    double ds = 0, dss = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double log_t = std::log(t(i));
        const double ta = std::exp(a * log_t);
        const double c = link_g(eta(i)) * ta;
        const double c_slope = std::abs(eta(i)) < 50 ? c : 0.0;
        ll += y(i) * (std::clamp(eta(i), -50.0, 50.0) + s + (a - 1) * log_t) - c;
        resid(i) = y(i) - c_slope;
        curv(i) = c_slope;
        const double aL = a * log_t;
        cross(i) = c_slope * aL;
        ds += y(i) * (1 + aL) - c * aL;
        dss += y(i) * aL - c * aL * (1 + aL);
    }
    if (grad) {
        grad->resize(theta.size());
        grad->head(p) = x.transpose() * resid;
        if (weibull) (*grad)(p) = ds;
    }
    if (hess) {
        hess->resize(theta.size(), theta.size());
        hess->topLeftCorner(p, p) = -(x.transpose() * curv.asDiagonal() * x);
        if (weibull) {
            const Eigen::VectorXd ws = -(x.transpose() * cross);
            hess->block(0, p, p, 1) = ws;
            hess->block(p, 0, 1, p) = ws.transpose();
            (*hess)(p, p) = dss;
        }
    }
    return ll;
}

GlmFit fit_parametric(const Dataset& dataset, GlmFamily family, const GlmFitConfig& config) {
    if (dataset.observed_count() == 0)
        throw std::invalid_argument("fit_parametric: dataset has no observed samples");
    Eigen::MatrixXd x = design_matrix(dataset);
    auto standardization = dataset.standardization();
    if (config.standardize && !standardization) {
        standardization = Standardization::fit(std::span<const LabeledSample>(dataset.samples()));
        standardize_columns(x, *standardization);
    }
    Eigen::VectorXd y(x.rows()), t(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const auto& s = dataset[static_cast<std::size_t>(i)];
        if (!(s.t > 0)) throw std::invalid_argument("fit_parametric: times must be positive");
        y(i) = s.y;
        t(i) = s.t;
    }

    const bool weibull = family == GlmFamily::Weibull;
    const auto p = x.cols();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + (weibull ? 1 : 0));
    theta(p - 1) = std::log(y.sum() / t.sum());

    auto objective = [&](const Eigen::VectorXd& th, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
        const double ll = glm_log_likelihood(family, th, x, y, t, g, h);
        if (g) *g = -*g;
        if (h) *h = -*h;
        return -ll;
    };
    const auto r = minimize_newton(objective, theta, {config.max_steps, config.gradient_tolerance});

    GlmFit fit;
    fit.model.family = family;
    fit.model.w = r.x.head(p);
    fit.model.shape = weibull ? std::exp(r.x(p)) : 1.0;
    fit.model.standardization = standardization;
    fit.log_likelihood = -r.value;
    fit.steps = r.steps;
    fit.converged = r.converged;
    return fit;
}

double ParametricGlmModel::linear_predictor(std::span<const double> raw_x) const {
    if (raw_x.size() != dimension())
        throw std::invalid_argument("model expects " + std::to_string(dimension()) +
                                    " features, got " + std::to_string(raw_x.size()));
    const auto x = standardization ? standardization->apply(raw_x)
                                   : std::vector<double>(raw_x.begin(), raw_x.end());
    double eta = w(w.size() - 1);
    for (std::size_t j = 0; j < x.size(); ++j) eta += w(static_cast<Eigen::Index>(j)) * x[j];
    return eta;
}

Eigen::VectorXd ParametricGlmModel::raw_weights() const {
    if (!standardization) return w;
    Eigen::VectorXd raw = w;
    const auto d = static_cast<Eigen::Index>(dimension());
    for (Eigen::Index j = 0; j < d; ++j) {
        raw(j) = w(j) / standardization->std[static_cast<std::size_t>(j)];
        raw(d) -= raw(j) * standardization->mean[static_cast<std::size_t>(j)];
    }
    return raw;
}

double ParametricGlmModel::survival(std::span<const double> raw_x, double t) const {
    if (!(t >= 0)) throw std::invalid_argument("survival: t must be non-negative");
    return std::exp(-link_g(linear_predictor(raw_x)) * std::pow(t, shape));
}

double ParametricGlmModel::predict_median(std::span<const double> raw_x) const {
    return std::pow(std::numbers::ln2 / link_g(linear_predictor(raw_x)), 1.0 / shape);
}

double ParametricGlmModel::ranged_probability(std::span<const double> raw_x, double t_a,
                                              double t_b) const {
    if (!(t_a >= 0) || !(t_b >= 0))
        throw std::invalid_argument("ranged_probability: times must be non-negative");
    if (t_a > t_b) throw std::invalid_argument("ranged_probability: requires t_a <= t_b");
    return std::clamp(survival(raw_x, t_a) - survival(raw_x, t_b), 0.0, 1.0);
}

double ParametricGlmModel::quantile(std::span<const double> raw_x, double alpha) const {
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("quantile: alpha must lie in (0, 1)");
    return std::pow(-std::log1p(-alpha) / link_g(linear_predictor(raw_x)), 1.0 / shape);
}

std::string ParametricGlmModel::to_json() const {
    nlohmann::json j;
    j["family"] = to_string(family);
    j["w"] = std::vector<double>(w.data(), w.data() + w.size());
    j["shape"] = shape;
    j["standardization"] = standardization
                               ? nlohmann::json{{"mean", standardization->mean},
                                                {"std", standardization->std}}
                               : nlohmann::json(nullptr);
    j["unit"] = unit;
    return j.dump(2);
}

ParametricGlmModel ParametricGlmModel::from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ParametricGlmModel m;
        m.family = parse_glm_family(j.at("family").get<std::string>());
        const auto w = j.at("w").get<std::vector<double>>();
        if (w.empty()) throw std::invalid_argument("model: empty coefficient vector");
        m.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        m.shape = j.at("shape").get<double>();
        if (!(m.shape > 0)) throw std::invalid_argument("model: shape must be positive");
        if (j.contains("standardization") && !j.at("standardization").is_null())
            m.standardization = Standardization::from_json(j.at("standardization").dump());
        if (m.standardization && m.standardization->dimension() != m.dimension())
            throw std::invalid_argument("model: standardization dimension mismatch");
        m.unit = j.value("unit", std::string{});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("model: ") + e.what());
    }
}

}  // namespace hazardnet
