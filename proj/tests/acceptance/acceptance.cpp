// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "cli_runner.hpp"
#include "hazardnet/dataset.hpp"
#include "hazardnet/glm.hpp"
#include "hazardnet/metapath.hpp"
#include "hazardnet/metrics.hpp"
#include "hazardnet/npglm.hpp"
#include "hazardnet/optimize.hpp"
#include "hazardnet/sweep.hpp"
#include "hazardnet/synthetic.hpp"
#include "oracles.hpp"

using namespace hazardnet;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SynthConfig synth(SynthDistribution dist, std::size_t n_obs, std::size_t n_cens, std::uint64_t seed) {
    SynthConfig c;
    c.dist = dist;
    c.n_observed = n_obs;
    c.n_censored = n_cens;
    c.dim = 10;
    c.seed = seed;
    return c;
}

double max_increase(const std::vector<double>& trace) {
    double worst = 0;
    for (std::size_t i = 1; i < trace.size(); ++i) worst = std::max(worst, trace[i] - trace[i - 1]);
    return worst;
}

// ---------------------------------------------------------------------------

Outcome convergence() {
    std::string detail;
    bool pass = true;
    for (auto [dist, limit] : {std::pair{SynthDistribution::Rayleigh, 200},
                               std::pair{SynthDistribution::Gompertz, 60}}) {
        const auto data = generate(synth(dist, 1500, 1500, 1)).dataset;
        const auto start = std::chrono::steady_clock::now();
        const auto fit = fit_npglm(data);
        const double secs = seconds_since(start);
        const auto& trace = fit.model.loss_trace;
        const double rise = max_increase(trace);
        const bool ok = fit.converged && fit.iterations <= limit && fit.monotone &&
                        rise <= 1e-9 * std::abs(trace.front()) && secs < 120;
        pass = pass && ok;
        detail += to_string(dist) + " " + std::to_string(fit.iterations) + " iterations (limit " +
                  std::to_string(limit) + "), max loss rise " + fmt(rise) + ", " + fmt(secs, 3) +
                  " s; ";
    }
    return {pass, detail};
}

// Cells shared by the recovery, censoring and informativeness criteria.
const SweepRow& row(const SweepResult& r, std::size_t n_obs, std::size_t n_cens) {
    for (const auto& x : r.rows)
        if (x.cell.n_observed == n_obs && x.cell.n_censored == n_cens) {
            if (!x.error.empty()) throw std::runtime_error("cell failed: " + x.error);
            return x;
        }
    throw std::logic_error("missing sweep cell");
}

SweepResult recovery_sweep() {
    SweepConfig c;
    c.dist = SynthDistribution::Rayleigh;
    c.cells = {{100, 0}, {300, 0}, {900, 0}, {450, 450}, {200, 0}, {200, 200}};
    c.repetitions = 20;
    c.seed = 1000;
    c.dim = 10;
    return run_sweep(c, worker_threads());
}

Outcome weight_recovery(const SweepResult& r) {
    const int n = 20;
    std::vector<std::pair<double, double>> stats;  // mean, standard error
    for (std::size_t size : {100, 300, 900}) {
        const auto& x = row(r, size, 0);
        stats.push_back({x.weight_mae.mean, x.weight_mae.std / std::sqrt(double(n))});
    }
    bool monotone = true;
    for (std::size_t i = 1; i < stats.size(); ++i) {
        const double pooled = std::hypot(stats[i].second, stats[i - 1].second);
        monotone = monotone && stats[i].first <= stats[i - 1].first + pooled;
    }
    const bool pass = stats[2].first <= 0.15 && monotone;
    return {pass, "MAE at N=100/300/900: " + fmt(stats[0].first) + " / " + fmt(stats[1].first) +
                      " / " + fmt(stats[2].first) + " (bound 0.15), monotone " +
                      (monotone ? "yes" : "no")};
}

Outcome censoring_ordering(const SweepResult& r) {
    const auto& full = row(r, 900, 0).weight_mae_values;
    const auto& half = row(r, 450, 450).weight_mae_values;
    int wins = 0;
    for (std::size_t i = 0; i < full.size(); ++i) wins += half[i] >= full[i];
    return {full.size() == 20 && wins >= 16,
            std::to_string(wins) + " of " + std::to_string(full.size()) +
                " seeds have MAE(50%) >= MAE(0%) (need 16)"};
}

Outcome censored_informative(const SweepResult& r) {
    const auto& none = row(r, 200, 0);
    const auto& some = row(r, 200, 200);
    std::vector<double> diff;
    for (std::size_t i = 0; i < none.weight_mae_values.size(); ++i)
        diff.push_back(none.weight_mae_values[i] - some.weight_mae_values[i]);
    double mean = 0, var = 0;
    for (double v : diff) mean += v / diff.size();
    for (double v : diff) var += (v - mean) * (v - mean) / (diff.size() - 1);
    return {some.weight_mae.mean < none.weight_mae.mean,
            "mean MAE with 200 censored " + fmt(some.weight_mae.mean) + " vs none " +
                fmt(none.weight_mae.mean) + "; paired gain " + fmt(mean) + " +- " +
                fmt(std::sqrt(var / diff.size())) + " (standard error)"};
}

Outcome runtime_scaling() {
    auto best_time = [](std::size_t n, int runs) {
        const auto data = generate(synth(SynthDistribution::Rayleigh, n / 2, n / 2, 7)).dataset;
        double best = INFINITY;
        for (int i = 0; i < runs; ++i) {
            const auto start = std::chrono::steady_clock::now();
            fit_npglm(data);
            best = std::min(best, seconds_since(start));
        }
        return best;
    };
    const double small = best_time(10000, 5);
    const double large = best_time(100000, 3);
    const double ratio = large / small;
    return {ratio <= 15, "fit time N=1e4 " + fmt(small, 3) + " s, N=1e5 " + fmt(large, 3) +
                             " s, ratio " + fmt(ratio, 3) + " (bound 15)"};
}

Outcome oracle_suite() {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> normal(0.0, 0.5);
    int failures = 0;

    int h_cases = 0;
    for (; h_cases < 200; ++h_cases) {
        const auto n = 1 + static_cast<Eigen::Index>(rng() % 200);
        const auto s = oracle::survival_sample(rng, n, 3, 0.4);
        Eigen::VectorXd w(4);
        for (auto& v : w) v = normal(rng);
        const Eigen::VectorXd eta = s.x * w;
        failures += to_vec(compute_H(w, s)) != oracle::literal_H(to_vec(eta), to_vec(s.y));
    }

    int na_cases = 0;
    for (; na_cases < 100; ++na_cases) {
        const auto s = oracle::survival_sample(rng, 1 + static_cast<Eigen::Index>(rng() % 200), 2, 0.0);
        failures += to_vec(compute_H(Eigen::VectorXd::Zero(3), s)) !=
                    oracle::nelson_aalen(to_vec(s.t), to_vec(s.y));
    }

    std::uniform_real_distribution<double> tau(0.0, 22.0);
    int path_cases = 0;
    for (; path_cases < 200; ++path_cases) {
        const auto g = oracle::random_graph(rng, 4 + rng() % 27, 10 + rng() % 60);
        const auto path = oracle::random_path(rng, g.schema(), 1 + rng() % 4);
        const double t = tau(rng);
        failures += oracle::dense(metapath_matrix(g, path, t)) != oracle::path_instances(g, path, t);
    }

    int ci_cases = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto n = 2 + rng() % 80;
        std::vector<TruthRecord> truth;
        std::vector<double> t, pred;
        std::vector<int> y;
        for (std::size_t i = 0; i < n; ++i) {
            truth.push_back({static_cast<double>(1 + rng() % 15), static_cast<int>(rng() % 3 != 0)});
            t.push_back(truth.back().t);
            y.push_back(truth.back().y);
            pred.push_back(static_cast<double>(rng() % 11));
        }
        bool comparable = false;
        for (std::size_t i = 0; i < n && !comparable; ++i)
            for (std::size_t j = 0; j < n; ++j) comparable = comparable || (t[i] < t[j] && y[i]);
        if (!comparable) continue;
        ++ci_cases;
        failures += concordance_index(truth, pred) != oracle::pairwise_ci(t, y, pred);
    }

    return {failures == 0, "H " + std::to_string(h_cases) + ", Nelson-Aalen " +
                               std::to_string(na_cases) + ", meta-path " +
                               std::to_string(path_cases) + ", CI " + std::to_string(ci_cases) +
                               " cases; " + std::to_string(failures) + " mismatches"};
}

double gradient_error(const SmoothObjective& f, const Eigen::VectorXd& at) {
    Eigen::VectorXd grad;
    f(at, &grad, nullptr);
    const auto fd = finite_difference_gradient(f, at);
    return (grad - fd).norm() / std::max(1.0, grad.norm());
}

Outcome calculus() {
    std::mt19937_64 rng(78);
    std::normal_distribution<double> normal(0.0, 0.4);
    std::uniform_real_distribution<double> time(0.05, 4.0);
    auto random_vec = [&](Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (auto& x : v) x = normal(rng);
        return v;
    };
    double worst_np = 0, worst_exp = 0, worst_wbl = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = oracle::survival_sample(rng, 30 + static_cast<Eigen::Index>(rng() % 50), 4, 0.4);
        const auto H = compute_H(random_vec(5), s);
        worst_np = std::max(worst_np, gradient_error(
                                          [&](const Eigen::VectorXd& w, Eigen::VectorXd* g,
                                              Eigen::MatrixXd* h) { return w_objective(w, H, s, g, h); },
                                          random_vec(5)));
    }
    for (auto family : {GlmFamily::Exponential, GlmFamily::Weibull}) {
        for (int trial = 0; trial < 50; ++trial) {
            const auto n = 20 + static_cast<Eigen::Index>(rng() % 40);
            Eigen::MatrixXd x = Eigen::MatrixXd::Ones(n, 4);
            Eigen::VectorXd y(n), t(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = normal(rng) * 2.5;
                y(i) = i % 3 == 0 ? 0 : 1;
                t(i) = time(rng);
            }
            const auto theta = random_vec(family == GlmFamily::Weibull ? 5 : 4);
            const double err = gradient_error(
                [&](const Eigen::VectorXd& th, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
                    return glm_log_likelihood(family, th, x, y, t, g, h);
                },
                theta);
            (family == GlmFamily::Exponential ? worst_exp : worst_wbl) =
                std::max(family == GlmFamily::Exponential ? worst_exp : worst_wbl, err);
        }
    }
    const double worst = std::max({worst_np, worst_exp, worst_wbl});
    return {worst <= 1e-5, "worst relative gradient error: NP-GLM " + fmt(worst_np) +
                               ", exponential " + fmt(worst_exp) + ", Weibull " + fmt(worst_wbl) +
                               " over 50 instances each (bound 1e-5)"};
}

Outcome inference() {
    const auto out = generate(synth(SynthDistribution::Rayleigh, 800, 200, 11));
    const auto np = fit_npglm(out.dataset).model;
    const auto glm = fit_parametric(out.dataset, GlmFamily::Weibull).model;
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> xs;
    for (int i = 0; i < 20; ++i) {
        std::vector<double> x(10);
        for (auto& v : x) v = normal(rng);
        xs.push_back(x);
    }

    double worst_round_trip = 0;
    for (const auto& x : xs) {
        for (double a = 0.02; a < 0.99; a += 0.02) {
            const auto q = np.quantile(x, a);
            if (!q.horizon_exceeded)
                worst_round_trip =
                    std::max(worst_round_trip, std::abs(np.ranged_probability(x, 0, q.time) - a));
            worst_round_trip = std::max(
                worst_round_trip, std::abs(glm.ranged_probability(x, 0, glm.quantile(x, a)) - a));
        }
        // Inverting a probability recovers the time wherever H is strictly
        // increasing; censored times end flat segments. Probabilities near 0
        // or 1 are ill-conditioned in double precision and skipped.
        for (std::size_t k = 0; k < np.event_times.size(); k += 5) {
            const double h_lo = k ? np.H[k - 1] : 0.0;
            if (!(np.H[k] > h_lo)) continue;
            const double t = 0.5 * ((k ? np.event_times[k - 1] : 0.0) + np.event_times[k]);
            const double a = np.ranged_probability(x, 0, t);
            if (a < 0.01 || a > 0.99) continue;
            worst_round_trip = std::max(worst_round_trip,
                                        std::abs(np.quantile(x, a).time - t) / std::max(1.0, t));
        }
    }

    // Samples land on training times, so the sampled law is discrete and the
    // distance is taken at its atoms. Draws past the last training time carry
    // the tail mass S(t_N | x).
    double worst_ks = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        std::mt19937_64 draw_rng(100 + i);
        std::vector<double> draws;
        std::size_t beyond = 0;
        for (int k = 0; k < 100000; ++k) {
            const auto est = np.sample_time(xs[i], draw_rng);
            if (est.horizon_exceeded)
                ++beyond;
            else
                draws.push_back(est.time);
        }
        std::sort(draws.begin(), draws.end());
        const double n = 100000.0;
        for (std::size_t k = 0; k < draws.size(); ++k) {
            if (!std::binary_search(np.event_times.begin(), np.event_times.end(), draws[k]))
                worst_ks = 1;
            if (k + 1 < draws.size() && draws[k + 1] == draws[k]) continue;
            worst_ks = std::max(worst_ks, std::abs((k + 1) / n - (1 - np.survival(xs[i], draws[k]))));
        }
        worst_ks = std::max(worst_ks, std::abs(beyond / n - np.survival(xs[i], np.event_times.back())));

        std::mt19937_64 glm_rng(200 + i);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        std::vector<double> glm_draws;
        for (int k = 0; k < 100000; ++k) {
            double u = uniform(glm_rng);
            while (u <= 0) u = uniform(glm_rng);
            glm_draws.push_back(glm.quantile(xs[i], 1 - u));
        }
        worst_ks = std::max(worst_ks, oracle::kolmogorov(glm_draws, [&](double t) {
            return 1 - glm.survival(xs[i], t);
        }));
    }
    return {worst_round_trip <= 1e-9 && worst_ks <= 0.01,
            "worst round-trip error " + fmt(worst_round_trip) + " (bound 1e-9), Kolmogorov distance " +
                fmt(worst_ks) + " over 1e5 draws (bound 0.01)"};
}

Outcome baseline_sanity() {
    SweepConfig c;
    c.dist = SynthDistribution::Exponential;
    c.models = {ModelKind::ExpGlm, ModelKind::NpGlm};
    c.cells = {{2000, 0}};
    c.repetitions = 20;
    c.seed = 2000;
    c.dim = 10;
    c.n_test = 2000;
    const auto r = run_sweep(c, worker_threads());
    const SweepRow *exp = nullptr, *np = nullptr;
    for (const auto& x : r.rows) {
        if (!x.error.empty()) throw std::runtime_error(to_string(x.model) + " failed: " + x.error);
        (x.model == ModelKind::ExpGlm ? exp : np) = &x;
    }
    const double gap = std::abs(np->ci->mean - exp->ci->mean);
    return {exp->weight_mae.mean <= 0.1 && gap <= 0.05,
            "Exp-GLM weight MAE " + fmt(exp->weight_mae.mean) + " (bound 0.1), CI Exp-GLM " +
                fmt(exp->ci->mean) + " vs NP-GLM " + fmt(np->ci->mean) + " (gap bound 0.05)"};
}

Outcome pipeline_fixture() {
    cli::Scratch s("acceptance");
    if (cli::run(cli::feature_args() + " --out " + s / "x.csv") != 0)
        return {false, "features command failed"};
    if (cli::slurp(s.path("x.csv")) != cli::slurp(cli::fixture("expected_stack.csv")))
        return {false, "features differ from the hand-computed table"};
    if (cli::run("fit --threshold 1e-12 --input " + s / "x.csv" + " --out " + s / "m.json") != 0)
        return {false, "fit command failed"};
    if (cli::run("predict --model-file " + s / "m.json" + " --input " + s / "x.csv" + " --out " +
                 s / "p.csv") != 0)
        return {false, "predict command failed"};

    // Two events: a1-a3 at t = 1 with all five pairs at risk, then a4-a3 at
    // t = 3 with the four pairs labeled 3. Only x_1 varies: 2 for a1-a3, a2-a1,
    // a2-a3 and 0 for a4-a3, a3-a4. With u = exp(2 w_1) the partial likelihood
    // is u / (3u + 2) * 1 / (2u + 2), maximal at u = sqrt(2/3). The cumulative
    // hazard g(x) H(t) at x_1 = 0 is then 1 / (3u + 2) at t = 1 and
    // 1 / (3u + 2) + 1 / (2u + 2) = 1/2 at t = 3, and u times that at x_1 = 2.
    const auto model = NpGlmModel::from_json(cli::slurp(s.path("m.json")));
    const double u = std::sqrt(2.0 / 3.0);
    const double at1 = 1 / (3 * u + 2), at3 = at1 + 1 / (2 * u + 2);
    const bool times_ok = model.event_times == std::vector<double>{1, 3};
    double err = times_ok ? 0 : INFINITY;
    for (auto [x1, scale] : {std::pair{0.0, 1.0}, std::pair{2.0, u}}) {
        const std::vector<double> x{1.0, x1};
        err = std::max(err, std::abs(-std::log(model.survival(x, 1)) - scale * at1) / (scale * at1));
        err = std::max(err, std::abs(-std::log(model.survival(x, 3)) - scale * at3) / (scale * at3));
    }
    const double rise = max_increase(model.loss_trace);
    const bool pass = err <= 1e-6 && rise <= 0;
    return {pass, "features match; cumulative hazard at x_1 = 0: " +
                      fmt(-std::log(model.survival(std::vector<double>{1, 0}, 1)), 7) + ", " +
                      fmt(-std::log(model.survival(std::vector<double>{1, 0}, 3)), 7) +
                      " (hand " + fmt(at1, 7) + ", " + fmt(at3, 7) + "), relative error " +
                      fmt(err) + ", " + std::to_string(model.loss_trace.size()) + " iterations"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    SweepResult sweep;
    bool sweep_ready = false;
    auto with_sweep = [&](Outcome (*f)(const SweepResult&)) {
        return [&, f] {
            if (!sweep_ready) {
                sweep = recovery_sweep();
                sweep_ready = true;
            }
            return f(sweep);
        };
    };
    const std::vector<Criterion> criteria{
        {1, "convergence", convergence},
        {2, "weight recovery", with_sweep(weight_recovery)},
        {3, "censoring ordering", with_sweep(censoring_ordering)},
        {4, "censored samples are informative", with_sweep(censored_informative)},
        {5, "runtime scaling", runtime_scaling},
        {6, "oracle equivalence", oracle_suite},
        {7, "gradient checks", calculus},
        {8, "inference consistency", inference},
        {9, "baseline sanity", baseline_sanity},
        {10, "pipeline fixture", pipeline_fixture},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), seconds_since(start));
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
