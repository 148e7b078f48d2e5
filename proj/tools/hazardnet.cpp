#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hazardnet/dataset.hpp"
#include "hazardnet/glm.hpp"
#include "hazardnet/graph.hpp"
#include "hazardnet/metapath.hpp"
#include "hazardnet/metrics.hpp"
#include "hazardnet/npglm.hpp"
#include "hazardnet/sweep.hpp"
#include "hazardnet/synthetic.hpp"
#include "hazardnet/text.hpp"

namespace fs = std::filesystem;
using namespace hazardnet;

namespace {

void log(const std::string& msg) { std::cerr << "hazardnet: " << msg << '\n'; }

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-")
        std::cout << content;
    else
        write_file(out_path, content);
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    std::string dist = "rayleigh";
    long long n_observed = 0;
    long long n_censored = 0;
    long long dim = 10;
    std::uint64_t seed = 0;
    std::string censoring = "largest";
    double shape = 1.5;
    std::string out;
    std::string truth_out;
};

void run_synth(const SynthArgs& a) {
    if (a.n_observed < 1) throw std::invalid_argument("--n-observed must be at least 1");
    if (a.n_censored < 0) throw std::invalid_argument("--n-censored must be non-negative");
    if (a.dim < 1) throw std::invalid_argument("--dim must be at least 1");
    SynthConfig c;
    c.dist = parse_synth_distribution(a.dist);
    c.n_observed = static_cast<std::size_t>(a.n_observed);
    c.n_censored = static_cast<std::size_t>(a.n_censored);
    c.dim = static_cast<std::size_t>(a.dim);
    c.seed = a.seed;
    c.censoring = parse_censoring_policy(a.censoring);
    c.weibull_shape = a.shape;
    c.validate();
    const auto out = generate(c);
    save_dataset(out.dataset, a.out);
    const auto truth_path = a.truth_out.empty() ? a.out + ".truth.json" : a.truth_out;
    write_file(truth_path, truth_to_json(out, c) + "\n");
    log("wrote " + std::to_string(out.dataset.size()) + " samples to " + a.out);
}

// ---------------------------------------------------------------------------
// features

struct FeatureArgs {
    std::string graph, schema, metapaths, target;
    double t0 = 0, delta = 0, omega = 0;
    int snapshots = 0;
    std::string aggregator = "stack";
    double alpha = 0.5;
    double censored_ratio = 0.5;
    bool keep_all_censored = false;
    std::uint64_t seed = 0;
    bool binary = false;
    bool standardize = false;
    unsigned threads = 0;
    std::string out;
    std::string series_out;
};

void run_features(const FeatureArgs& a) {
    if (a.aggregator != "stack" && a.aggregator != "expsmooth")
        throw std::invalid_argument("--aggregator must be stack or expsmooth");
    if (a.aggregator == "expsmooth" && !(a.alpha > 0 && a.alpha < 1))
        throw std::invalid_argument("--alpha must lie in (0, 1)");
    if (!a.keep_all_censored && !(a.censored_ratio >= 0 && a.censored_ratio < 1))
        throw std::invalid_argument("--censored-ratio must lie in [0, 1)");

    std::ifstream edges(a.graph);
    if (!edges) throw std::runtime_error("cannot open edge file '" + a.graph + "'");
    const auto graph = load_graph(read_file(a.schema), edges);
    const auto& schema = graph.schema();
    auto list = parse_metapath_list(read_file(a.metapaths), schema);
    std::optional<MetaPath> target = list.target;
    if (!a.target.empty()) target = parse_metapath(a.target, schema);
    if (!target)
        throw std::invalid_argument("no target relation: pass --target or a 'target:' line");
    if (list.features.empty()) throw std::invalid_argument("meta-path file lists no features");

    const auto window = WindowConfig::from_snapshots(a.t0, a.delta, a.snapshots, a.omega);
    const auto span = graph.time_span();
    if (!span) throw std::invalid_argument("graph has no links");
    if (window.observation_end() > span->second)
        throw std::invalid_argument("window ends at " + format_double(window.observation_end()) +
                                    " but the data stop at " + format_double(span->second));

    const unsigned threads = a.threads > 0 ? a.threads : worker_threads();
    ProductOptions options;
    options.binary = a.binary;
    ProductCache cache;
    const auto candidates = candidate_pairs(graph, list.features, window, &cache, options, threads);
    auto labels = label_pairs(graph, *target, window, candidates);
    if (!a.keep_all_censored) labels = subsample_censored(labels, a.censored_ratio, a.seed);

    std::vector<NodePair> pairs;
    for (const auto& l : labels) pairs.push_back(l.pair);
    const auto series =
        dynamic_series(graph, list.features, window.plan(), pairs, &cache, options, threads);
    if (!a.series_out.empty()) write_file(a.series_out, series_to_csv(graph, *target, series));

    const auto src_type = target->source_type();
    const auto dst_type = target->target_type();
    std::vector<std::pair<SampleKey, std::vector<double>>> features;
    std::vector<std::pair<SampleKey, std::pair<int, double>>> targets;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const SampleKey key{graph.node_id(src_type, labels[i].pair.src),
                            graph.node_id(dst_type, labels[i].pair.dst)};
        features.emplace_back(key, a.aggregator == "stack"
                                       ? aggregate_stack(series[i])
                                       : aggregate_expsmooth(series[i], a.alpha));
        targets.emplace_back(key, std::pair{labels[i].y, labels[i].t});
    }
    const auto data = build_dataset(features, targets, a.standardize);
    save_dataset(data, a.out);
    log("wrote " + std::to_string(data.size()) + " samples (" +
        std::to_string(data.observed_count()) + " observed) to " + a.out);
}

// ---------------------------------------------------------------------------
// model files

struct AnyModel {
    std::optional<NpGlmModel> np;
    std::optional<ParametricGlmModel> glm;

    std::size_t dimension() const { return np ? np->dimension() : glm->dimension(); }
};

AnyModel load_model(const std::string& path) {
    const auto text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("model file: " + std::string(e.what()));
    }
    AnyModel m;
    if (j.is_object() && j.contains("family"))
        m.glm = ParametricGlmModel::from_json(text);
    else
        m.np = NpGlmModel::from_json(text);
    return m;
}

void check_dimension(const AnyModel& model, std::size_t d) {
    if (model.dimension() != d)
        throw std::invalid_argument("model expects " + std::to_string(model.dimension()) +
                                    " features, the input has " + std::to_string(d));
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
    std::string model = "npglm";
    std::string input;
    std::string out;
    std::uint64_t seed = 0;
    double threshold = 1e-4;
    int max_iterations = 500;
    bool no_standardize = false;
    std::string unit;
    std::string trace_out;
};

void run_fit(const FitArgs& a) {
    const auto kind = parse_model_kind(a.model);
    const auto data = load_dataset(a.input);
    if (kind == ModelKind::NpGlm) {
        FitConfig c;
        c.seed = a.seed;
        c.threshold = a.threshold;
        c.max_iterations = a.max_iterations;
        c.standardize = !a.no_standardize;
        auto fit = fit_npglm(data, c);
        fit.model.unit = a.unit;
        write_file(a.out, fit.model.to_json() + "\n");
        if (!a.trace_out.empty()) {
            std::string csv = "iteration,loss,average_log_likelihood\n";
            const auto ll = fit.average_log_likelihood();
            for (std::size_t i = 0; i < ll.size(); ++i)
                csv += std::to_string(i + 1) + ',' + format_double(fit.model.loss_trace[i]) + ',' +
                       format_double(ll[i]) + '\n';
            write_file(a.trace_out, csv);
        }
        log("npglm: " + std::to_string(fit.iterations) + " iterations, " +
            (fit.converged ? "converged" : "NOT converged") +
            (fit.monotone ? "" : ", loss increased between iterations"));
    } else {
        GlmFitConfig c;
        c.standardize = !a.no_standardize;
        auto fit = fit_parametric(
            data, kind == ModelKind::ExpGlm ? GlmFamily::Exponential : GlmFamily::Weibull, c);
        fit.model.unit = a.unit;
        write_file(a.out, fit.model.to_json() + "\n");
        log(a.model + ": " + std::to_string(fit.steps) + " Newton steps, log-likelihood " +
            format_double(fit.log_likelihood) + (fit.converged ? "" : ", NOT converged"));
    }
}

// ---------------------------------------------------------------------------
// predict

void run_predict(const std::string& model_file, const std::string& input, const std::string& out) {
    const auto model = load_model(model_file);
    const auto data = load_dataset(input);
    check_dimension(model, data.dimension());
    std::string csv = "src,dst,median,horizon_exceeded\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.raw_features(i);
        double median;
        bool beyond = false;
        if (model.np) {
            const auto est = model.np->median(x);
            median = est.time;
            beyond = est.horizon_exceeded;
        } else {
            median = model.glm->predict_median(x);
        }
        csv += data[i].key.src + ',' + data[i].key.dst + ',' + format_double(median) + ',' +
               (beyond ? "1" : "0") + '\n';
    }
    emit(out, csv);
}

// ---------------------------------------------------------------------------
// query

// "v1,v2,..." or "@file.csv:row" with row the 0-based data line of a dataset
// file.
std::vector<double> parse_feature_vector(const std::string& spec) {
    if (spec.empty()) throw std::invalid_argument("--x is empty");
    if (spec.front() != '@') {
        std::vector<double> x;
        for (const auto& f : split(spec, ',')) x.push_back(parse_double(trim(f), "--x value"));
        return x;
    }
    const auto colon = spec.rfind(':');
    if (colon == std::string::npos || colon < 2)
        throw std::invalid_argument("--x row reference must look like @file.csv:row");
    const auto path = spec.substr(1, colon - 1);
    const auto row = parse_int(spec.substr(colon + 1), "--x row");
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);
    for (long long r = 0; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (r++ != row) continue;
        const auto fields = split(line, ',');
        if (fields.size() < 5) throw std::invalid_argument("--x row has no features");
        std::vector<double> x;
        for (std::size_t j = 4; j < fields.size(); ++j)
            x.push_back(parse_double(fields[j], "feature"));
        if (fs::exists(sidecar_path(path)))
            x = Standardization::from_json(read_file(sidecar_path(path))).invert(x);
        return x;
    }
    throw std::invalid_argument("--x row " + std::to_string(row) + " not found in " + path);
}

std::string run_query_op(const AnyModel& model, const std::vector<double>& x,
                         const std::vector<std::string>& op) {
    if (op.empty()) throw std::invalid_argument("--op needs an operation");
    auto need = [&](std::size_t n) {
        if (op.size() != n + 1)
            throw std::invalid_argument("--op " + op[0] + " takes " + std::to_string(n) +
                                        " argument(s)");
    };
    nlohmann::json j;
    j["op"] = op[0];
    if (op[0] == "ranged") {
        need(2);
        const double ta = parse_double(op[1], "t_a");
        const double tb = parse_double(op[2], "t_b");
        j["t_a"] = ta;
        j["t_b"] = tb;
        if (model.np) {
            j["probability"] = model.np->ranged_probability(x, ta, tb);
            j["horizon_exceeded"] = model.np->interpolate_H(tb).beyond_horizon;
        } else {
            j["probability"] = model.glm->ranged_probability(x, ta, tb);
            j["horizon_exceeded"] = false;
        }
    } else if (op[0] == "quantile") {
        need(1);
        const double alpha = parse_double(op[1], "alpha");
        j["alpha"] = alpha;
        if (model.np) {
            const auto est = model.np->quantile(x, alpha);
            j["time"] = est.time;
            j["horizon_exceeded"] = est.horizon_exceeded;
        } else {
            j["time"] = model.glm->quantile(x, alpha);
            j["horizon_exceeded"] = false;
        }
    } else if (op[0] == "sample") {
        need(2);
        const auto n = parse_int(op[1], "sample count");
        if (n < 1) throw std::invalid_argument("sample count must be at least 1");
        const auto seed = static_cast<std::uint64_t>(parse_int(op[2], "seed"));
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        std::vector<double> times;
        std::vector<bool> beyond;
        for (long long i = 0; i < n; ++i) {
            if (model.np) {
                const auto est = model.np->sample_time(x, rng);
                times.push_back(est.time);
                beyond.push_back(est.horizon_exceeded);
            } else {
                double u = uniform(rng);
                while (u <= 0) u = uniform(rng);
                times.push_back(model.glm->quantile(x, 1 - u));
                beyond.push_back(false);
            }
        }
        j["times"] = times;
        j["horizon_exceeded"] = beyond;
    } else {
        throw std::invalid_argument("unknown --op '" + op[0] + "'");
    }
    return j.dump() + "\n";
}

// ---------------------------------------------------------------------------
// eval

void run_eval(const std::string& pred_path, const std::string& truth_path,
              const std::vector<double>& thresholds, const std::string& out,
              const std::string& csv_out) {
    std::map<SampleKey, double> predictions;
    {
        std::istringstream in(read_file(pred_path));
        std::string line;
        if (!std::getline(in, line)) throw std::invalid_argument("prediction file is empty");
        const auto header = split(trim(line), ',');
        if (header.size() < 3 || header[0] != "src" || header[1] != "dst" || header[2] != "median")
            throw std::invalid_argument("prediction file needs columns src,dst,median");
        while (std::getline(in, line)) {
            const auto t = trim(line);
            if (t.empty()) continue;
            const auto f = split(t, ',');
            if (f.size() < 3) throw std::invalid_argument("prediction file: short row");
            if (!predictions.emplace(SampleKey{f[0], f[1]}, parse_double(f[2], "median")).second)
                throw std::invalid_argument("prediction file: duplicate pair " + f[0] + "," + f[1]);
        }
    }
    const auto truth = load_dataset(truth_path);
    if (truth.size() != predictions.size())
        throw std::invalid_argument("predictions and truth cover different pairs");
    std::vector<TruthRecord> records;
    std::vector<double> predicted;
    for (const auto& s : truth.samples()) {
        const auto it = predictions.find(s.key);
        if (it == predictions.end())
            throw std::invalid_argument("no prediction for pair " + s.key.src + "," + s.key.dst);
        records.push_back({s.t, s.y});
        predicted.push_back(it->second);
    }
    auto report = point_metrics(records, predicted, thresholds);
    try {
        report.ci = concordance_index(records, predicted);
    } catch (const std::invalid_argument&) {
        log("no comparable pairs; ci left empty");
    }
    emit(out, report.to_json() + "\n");
    if (!csv_out.empty()) write_file(csv_out, report.csv_header() + "\n" + report.csv_row() + "\n");
}

// ---------------------------------------------------------------------------
// sweep

void run_sweep_command(const std::string& config_path, int repetitions,
                       const std::string& output_dir, unsigned threads) {
    auto config = SweepConfig::from_json(read_file(config_path));
    if (repetitions > 0) config.repetitions = repetitions;
    if (!output_dir.empty()) config.output_dir = output_dir;
    config.validate();
    const auto result = run_sweep(config, threads > 0 ? threads : worker_threads());
    fs::create_directories(config.output_dir);
    const auto dir = fs::path(config.output_dir);
    write_file((dir / "results.csv").string(), result.rows_csv());
    if (!result.traces.empty()) write_file((dir / "traces.csv").string(), result.traces_csv());
    std::size_t failed = 0;
    for (const auto& r : result.rows)
        if (!r.error.empty()) {
            ++failed;
            log("cell " + to_string(r.model) + " n_observed=" + std::to_string(r.cell.n_observed) +
                " n_censored=" + std::to_string(r.cell.n_censored) + " failed: " + r.error);
        }
    log("wrote " + std::to_string(result.rows.size()) + " cells to " + config.output_dir +
        (failed ? " (" + std::to_string(failed) + " failed)" : ""));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relationship formation time prediction on dynamic heterogeneous networks"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic censored dataset");
    cmd_synth->add_option("--dist", synth.dist, "rayleigh|gompertz|exponential|weibull");
    cmd_synth->add_option("--n-observed", synth.n_observed)->required();
    cmd_synth->add_option("--n-censored", synth.n_censored);
    cmd_synth->add_option("--dim", synth.dim);
    cmd_synth->add_option("--seed", synth.seed);
    cmd_synth->add_option("--censoring", synth.censoring, "largest|random");
    cmd_synth->add_option("--shape", synth.shape, "Weibull shape");
    cmd_synth->add_option("--out", synth.out)->required();
    cmd_synth->add_option("--truth-out", synth.truth_out, "Default: <out>.truth.json");

    FeatureArgs feat;
    auto* cmd_features = app.add_subcommand("features", "Build a labeled dataset from a graph");
    cmd_features->add_option("--graph", feat.graph, "Edge TSV")->required();
    cmd_features->add_option("--schema", feat.schema, "Schema JSON")->required();
    cmd_features->add_option("--metapaths", feat.metapaths, "Meta-path list")->required();
    cmd_features->add_option("--target", feat.target, "Target meta-path expression");
    cmd_features->add_option("--t0", feat.t0)->required();
    cmd_features->add_option("--delta", feat.delta)->required();
    cmd_features->add_option("--snapshots", feat.snapshots)->required();
    cmd_features->add_option("--omega", feat.omega)->required();
    cmd_features->add_option("--aggregator", feat.aggregator, "stack|expsmooth");
    cmd_features->add_option("--alpha", feat.alpha, "Smoothing factor in (0, 1)");
    cmd_features->add_option("--censored-ratio", feat.censored_ratio);
    cmd_features->add_flag("--keep-all-censored", feat.keep_all_censored);
    cmd_features->add_option("--seed", feat.seed, "Censored subsampling seed");
    cmd_features->add_flag("--binary", feat.binary, "Binarize adjacency counts");
    cmd_features->add_flag("--standardize", feat.standardize);
    cmd_features->add_option("--threads", feat.threads);
    cmd_features->add_option("--series-out", feat.series_out, "Per-snapshot series CSV");
    cmd_features->add_option("--out", feat.out)->required();

    FitArgs fit;
    auto* cmd_fit = app.add_subcommand("fit", "Fit a model to a dataset");
    cmd_fit->add_option("--model", fit.model, "npglm|expglm|wblglm");
    cmd_fit->add_option("--input", fit.input)->required();
    cmd_fit->add_option("--out", fit.out)->required();
    cmd_fit->add_option("--seed", fit.seed);
    cmd_fit->add_option("--threshold", fit.threshold);
    cmd_fit->add_option("--max-iterations", fit.max_iterations);
    cmd_fit->add_flag("--no-standardize", fit.no_standardize);
    cmd_fit->add_option("--unit", fit.unit);
    cmd_fit->add_option("--trace-out", fit.trace_out, "Per-iteration loss CSV");

    std::string model_file, input, out;
    auto* cmd_predict = app.add_subcommand("predict", "Median time predictions");
    cmd_predict->add_option("--model-file", model_file)->required();
    cmd_predict->add_option("--input", input)->required();
    cmd_predict->add_option("--out", out);

    std::string x_spec;
    std::vector<std::string> op;
    auto* cmd_query = app.add_subcommand("query", "Inference query for one feature vector");
    cmd_query->add_option("--model-file", model_file)->required();
    cmd_query->add_option("--x", x_spec, "v1,v2,... or @file.csv:row")->required();
    cmd_query->add_option("--op", op, "ranged a b | quantile alpha | sample n seed")
        ->required()
        ->expected(1, 3)
        ->allow_extra_args(false);
    cmd_query->add_option("--out", out);

    std::string pred, truth, csv_out;
    std::vector<double> thresholds;
    auto* cmd_eval = app.add_subcommand("eval", "Score predictions against a labeled dataset");
    cmd_eval->add_option("--pred", pred)->required();
    cmd_eval->add_option("--truth", truth)->required();
    cmd_eval->add_option("--thresholds", thresholds);
    cmd_eval->add_option("--out", out);
    cmd_eval->add_option("--csv-out", csv_out);

    std::string config_path, output_dir;
    int repetitions = 0;
    unsigned threads = 0;
    auto* cmd_sweep = app.add_subcommand("sweep", "Run a synthetic experiment grid");
    cmd_sweep->add_option("--config", config_path)->required();
    cmd_sweep->add_option("--repetitions", repetitions);
    cmd_sweep->add_option("--output-dir", output_dir);
    cmd_sweep->add_option("--threads", threads);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cmd_synth) run_synth(synth);
        if (*cmd_features) run_features(feat);
        if (*cmd_fit) run_fit(fit);
        if (*cmd_predict) run_predict(model_file, input, out);
        if (*cmd_query) {
            const auto model = load_model(model_file);
            const auto x = parse_feature_vector(x_spec);
            check_dimension(model, x.size());
            emit(out, run_query_op(model, x, op));
        }
        if (*cmd_eval) run_eval(pred, truth, thresholds, out, csv_out);
        if (*cmd_sweep) run_sweep_command(config_path, repetitions, output_dir, threads);
    } catch (const std::invalid_argument& e) {
        log(std::string("error: ") + e.what());
        return 2;
    } catch (const std::exception& e) {
        log(std::string("error: ") + e.what());
        return 1;
    }
    return 0;
}
