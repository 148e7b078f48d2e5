#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hazardnet/npglm.hpp"
#include "hazardnet/synthetic.hpp"

namespace hazardnet {

enum class ModelKind { NpGlm, ExpGlm, WblGlm };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct SweepCell {
    std::size_t n_observed;
    std::size_t n_censored;
};

// One synthetic experiment grid. Cells come either from n_grid x
// censoring_grid or from n_observed_grid x n_censored_grid.
struct SweepConfig {
    SynthDistribution dist = SynthDistribution::Rayleigh;
    CensoringPolicy censoring = CensoringPolicy::LargestTimes;
    double weibull_shape = 1.5;
    std::vector<ModelKind> models{ModelKind::NpGlm};
    std::vector<SweepCell> cells;
    int repetitions = 20;
    std::uint64_t seed = 0;
    std::size_t dim = 10;
    std::size_t n_test = 0;  // fully observed test samples per repetition
    std::vector<double> thresholds;
    FitConfig fit;
    std::string output_dir = ".";

    void validate() const;
    static SweepConfig from_json(std::string_view text);
};

struct Summary {
    double mean = 0;
    double std = 0;  // sample standard deviation, 0 for one value
};

struct SweepRow {
    ModelKind model;
    SweepCell cell;
    std::string error;  // empty when every repetition succeeded
    int repetitions = 0;
    Summary weight_mae;
    Summary iterations;
    double converged_fraction = 0;
    double monotone_fraction = 0;
    Summary fit_seconds;
    std::optional<Summary> mae, mdae, rmse, ci;
    // Per repetition, in repetition order.
    std::vector<double> weight_mae_values;
};

struct SweepTrace {
    SweepCell cell;
    // Mean average log-likelihood per outer iteration; shorter runs carry
    // their final value forward.
    std::vector<double> mean_log_likelihood;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepTrace> traces;

    std::string rows_csv() const;
    std::string traces_csv() const;
};

// Repetition r of every cell uses data seed config.seed + r, so cells are
// paired across the grid. Runs up to `threads` fits at a time; the output
// does not depend on the thread count apart from the timing columns.
SweepResult run_sweep(const SweepConfig& config, unsigned threads);

// HAZARDNET_THREADS when set to a positive integer, else the hardware
// concurrency.
unsigned worker_threads();

}  // namespace hazardnet
