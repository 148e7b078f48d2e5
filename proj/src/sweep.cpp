#include "hazardnet/sweep.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "hazardnet/glm.hpp"
#include "hazardnet/metrics.hpp"
#include "hazardnet/text.hpp"

namespace hazardnet {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::NpGlm: return "npglm";
        case ModelKind::ExpGlm: return "expglm";
        case ModelKind::WblGlm: return "wblglm";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "npglm") return ModelKind::NpGlm;
    if (name == "expglm") return ModelKind::ExpGlm;
    if (name == "wblglm") return ModelKind::WblGlm;
    throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

void SweepConfig::validate() const {
    if (repetitions < 1) throw std::invalid_argument("sweep: repetitions must be at least 1");
    if (cells.empty()) throw std::invalid_argument("sweep: the grid is empty");
    if (models.empty()) throw std::invalid_argument("sweep: no models listed");
    if (dim < 1) throw std::invalid_argument("sweep: dim must be at least 1");
    for (const auto& c : cells)
        if (c.n_observed < 1) throw std::invalid_argument("sweep: every cell needs n_observed >= 1");
    fit.validate();
}

namespace {

template <typename T>
std::vector<T> nonempty_array(const nlohmann::json& j, const char* key) {
    auto v = j.at(key).get<std::vector<T>>();
    if (v.empty()) throw std::invalid_argument(std::string("sweep: '") + key + "' is empty");
    return v;
}

}  // namespace

SweepConfig SweepConfig::from_json(std::string_view text) {
    SweepConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        c.dist = parse_synth_distribution(j.value("dist", std::string("rayleigh")));
        c.censoring = parse_censoring_policy(j.value("censoring_policy", std::string("largest")));
        c.weibull_shape = j.value("weibull_shape", c.weibull_shape);
        if (j.contains("models")) {
            c.models.clear();
            for (const auto& m : nonempty_array<std::string>(j, "models"))
                c.models.push_back(parse_model_kind(m));
        }
        if (j.contains("n_grid")) {
            const auto ns = nonempty_array<long long>(j, "n_grid");
            const auto ratios = j.contains("censoring_grid")
                                    ? nonempty_array<double>(j, "censoring_grid")
                                    : std::vector<double>{0.0};
            for (long long n : ns)
                for (double r : ratios) {
                    if (n < 1) throw std::invalid_argument("sweep: n_grid entries must be >= 1");
                    if (!(r >= 0 && r < 1))
                        throw std::invalid_argument("sweep: censoring ratios must lie in [0, 1)");
                    const auto censored = static_cast<std::size_t>(std::llround(r * n));
                    c.cells.push_back({static_cast<std::size_t>(n) - censored, censored});
                }
        } else if (j.contains("n_observed_grid")) {
            const auto obs = nonempty_array<long long>(j, "n_observed_grid");
            const auto cen = j.contains("n_censored_grid")
                                 ? nonempty_array<long long>(j, "n_censored_grid")
                                 : std::vector<long long>{0};
            for (long long o : obs)
                for (long long n : cen) {
                    if (o < 1 || n < 0) throw std::invalid_argument("sweep: bad sample counts");
                    c.cells.push_back({static_cast<std::size_t>(o), static_cast<std::size_t>(n)});
                }
        } else {
            throw std::invalid_argument("sweep: needs n_grid or n_observed_grid");
        }
        c.repetitions = j.value("repetitions", c.repetitions);
        c.seed = j.value("seed", c.seed);
        c.dim = j.value("dim", c.dim);
        c.n_test = j.value("n_test", c.n_test);
        c.thresholds = j.value("thresholds", c.thresholds);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.fit.threshold = j.value("threshold", c.fit.threshold);
        c.fit.max_iterations = j.value("max_iterations", c.fit.max_iterations);
        c.fit.inner_max_steps = j.value("inner_max_steps", c.fit.inner_max_steps);
        c.fit.gradient_tolerance = j.value("gradient_tolerance", c.fit.gradient_tolerance);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("sweep config: ") + e.what());
    }
    c.validate();
    return c;
}

unsigned worker_threads() {
    if (const char* env = std::getenv("HAZARDNET_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct RepOutcome {
    std::string error;
    double weight_mae = 0;
    double iterations = 0;
    bool converged = false;
    bool monotone = true;
    double seconds = 0;
    std::optional<EvalReport> eval;
    std::vector<double> trace;
};

constexpr std::uint64_t kTestSeedOffset = 0x9E3779B97F4A7C15ull;

RepOutcome run_repetition(const SweepConfig& config, ModelKind model, const SweepCell& cell,
                          int rep) {
    RepOutcome out;
    SynthConfig synth;
    synth.n_observed = cell.n_observed;
    synth.n_censored = cell.n_censored;
    synth.dim = config.dim;
    synth.dist = config.dist;
    synth.seed = config.seed + static_cast<std::uint64_t>(rep);
    synth.censoring = config.censoring;
    synth.weibull_shape = config.weibull_shape;
    const auto train = generate(synth);
    const auto d = static_cast<Eigen::Index>(config.dim);

    std::vector<double> medians;
    std::optional<SynthOutput> test;
    if (config.n_test > 0) {
        SynthConfig tc = synth;
        tc.n_observed = config.n_test;
        tc.n_censored = 0;
        tc.seed = synth.seed ^ kTestSeedOffset;
        tc.w = train.true_w;
        tc.b = train.true_b;
        test = generate(tc);
    }

    const auto start = std::chrono::steady_clock::now();
    Eigen::VectorXd raw_w;
    if (model == ModelKind::NpGlm) {
        FitConfig fc = config.fit;
        fc.seed = synth.seed;
        const auto fit = fit_npglm(train.dataset, fc);
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.iterations = fit.iterations;
        out.converged = fit.converged;
        out.monotone = fit.monotone;
        out.trace = fit.average_log_likelihood();
        raw_w = fit.model.raw_weights();
        if (test)
            for (const auto& s : test->dataset.samples())
                medians.push_back(fit.model.median(s.x).time);
    } else {
        const auto family = model == ModelKind::ExpGlm ? GlmFamily::Exponential : GlmFamily::Weibull;
        const auto fit = fit_parametric(train.dataset, family);
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.iterations = fit.steps;
        out.converged = fit.converged;
        raw_w = fit.model.raw_weights();
        if (test)
            for (const auto& s : test->dataset.samples())
                medians.push_back(fit.model.predict_median(s.x));
    }
    out.weight_mae = (raw_w.head(d) - train.true_w).cwiseAbs().mean();
    if (test) {
        std::vector<TruthRecord> truth;
        for (const auto& s : test->dataset.samples()) truth.push_back({s.t, s.y});
        out.eval = evaluate(truth, medians, config.thresholds);
    }
    return out;
}

Summary summarize(const std::vector<double>& v) {
    Summary s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config, unsigned threads) {
    config.validate();
    const auto reps = static_cast<std::size_t>(config.repetitions);
    struct Task {
        std::size_t model, cell;
        int rep;
    };
    std::vector<Task> tasks;
    for (std::size_t m = 0; m < config.models.size(); ++m)
        for (std::size_t c = 0; c < config.cells.size(); ++c)
            for (std::size_t r = 0; r < reps; ++r) tasks.push_back({m, c, static_cast<int>(r)});

    std::vector<RepOutcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next++; i < tasks.size(); i = next++) {
            const auto& task = tasks[i];
            try {
                outcomes[i] = run_repetition(config, config.models[task.model],
                                             config.cells[task.cell], task.rep);
            } catch (const std::exception& e) {
                outcomes[i].error = e.what();
            }
        }
    };
    const auto n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(tasks.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    SweepResult result;
    for (std::size_t m = 0; m < config.models.size(); ++m) {
        for (std::size_t c = 0; c < config.cells.size(); ++c) {
            SweepRow row;
            row.model = config.models[m];
            row.cell = config.cells[c];
            row.repetitions = config.repetitions;
            std::vector<double> iters, secs, mae, mdae, rmse, ci;
            std::vector<const std::vector<double>*> traces;
            double converged = 0, monotone = 0;
            for (std::size_t r = 0; r < reps; ++r) {
                const auto& o = outcomes[(m * config.cells.size() + c) * reps + r];
                if (!o.error.empty()) {
                    if (row.error.empty())
                        row.error = "repetition " + std::to_string(r) + ": " + o.error;
                    continue;
                }
                row.weight_mae_values.push_back(o.weight_mae);
                iters.push_back(o.iterations);
                secs.push_back(o.seconds);
                converged += o.converged;
                monotone += o.monotone;
                if (o.eval) {
                    mae.push_back(o.eval->mae);
                    mdae.push_back(o.eval->mdae);
                    rmse.push_back(o.eval->rmse);
                    ci.push_back(*o.eval->ci);
                }
                if (!o.trace.empty()) traces.push_back(&o.trace);
            }
            if (row.error.empty()) {
                const auto n = static_cast<double>(reps);
                row.weight_mae = summarize(row.weight_mae_values);
                row.iterations = summarize(iters);
                row.fit_seconds = summarize(secs);
                row.converged_fraction = converged / n;
                row.monotone_fraction = monotone / n;
                if (!mae.empty()) {
                    row.mae = summarize(mae);
                    row.mdae = summarize(mdae);
                    row.rmse = summarize(rmse);
                    row.ci = summarize(ci);
                }
                if (!traces.empty()) {
                    std::size_t longest = 0;
                    for (const auto* t : traces) longest = std::max(longest, t->size());
                    SweepTrace trace{config.cells[c], std::vector<double>(longest, 0.0)};
                    for (const auto* t : traces)
                        for (std::size_t i = 0; i < longest; ++i)
                            trace.mean_log_likelihood[i] += (*t)[std::min(i, t->size() - 1)];
                    for (auto& v : trace.mean_log_likelihood) v /= static_cast<double>(traces.size());
                    result.traces.push_back(std::move(trace));
                }
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

std::string SweepResult::rows_csv() const {
    std::ostringstream os;
    os << "model,n_observed,n_censored,status,repetitions,weight_mae_mean,weight_mae_std,"
          "iterations_mean,iterations_std,converged_fraction,monotone_fraction,"
          "fit_seconds_mean,fit_seconds_std,mae_mean,mae_std,mdae_mean,mdae_std,"
          "rmse_mean,rmse_std,ci_mean,ci_std\n";
    auto pair = [](const std::optional<Summary>& s) {
        return s ? format_double(s->mean) + ',' + format_double(s->std) : std::string(",");
    };
    for (const auto& r : rows) {
        os << to_string(r.model) << ',' << r.cell.n_observed << ',' << r.cell.n_censored << ',';
        if (!r.error.empty()) {
            std::string msg = r.error;
            for (char& ch : msg)
                if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
            os << "failed: " << msg << ',' << r.repetitions << std::string(16, ',') << '\n';
            continue;
        }
        os << "ok," << r.repetitions << ',' << format_double(r.weight_mae.mean) << ','
           << format_double(r.weight_mae.std) << ',' << format_double(r.iterations.mean) << ','
           << format_double(r.iterations.std) << ',' << format_double(r.converged_fraction) << ','
           << format_double(r.monotone_fraction) << ',' << format_double(r.fit_seconds.mean) << ','
           << format_double(r.fit_seconds.std) << ',' << pair(r.mae) << ',' << pair(r.mdae) << ','
           << pair(r.rmse) << ',' << pair(r.ci) << '\n';
    }
    return os.str();
}

std::string SweepResult::traces_csv() const {
    std::ostringstream os;
    os << "n_observed,n_censored,iteration,mean_log_likelihood\n";
    for (const auto& t : traces)
        for (std::size_t i = 0; i < t.mean_log_likelihood.size(); ++i)
            os << t.cell.n_observed << ',' << t.cell.n_censored << ',' << i + 1 << ','
               << format_double(t.mean_log_likelihood[i]) << '\n';
    return os.str();
}

}  // namespace hazardnet
