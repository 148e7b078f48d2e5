#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hazardnet {

struct TruthRecord {
    double t;
    int y;  // 1 observed, 0 censored
};

struct EvalReport {
    double mae = 0;
    double mre = 0;
    double rmse = 0;
    double msle = 0;
    double mdae = 0;
    std::map<double, double> acc_at;  // threshold -> fraction with |error| < threshold
    std::optional<double> ci;
    std::size_t evaluated = 0;  // observed samples behind the point metrics

    std::string to_json() const;
    std::string csv_header() const;
    std::string csv_row() const;
};

// Point-error metrics over the observed samples only. Throws
// std::invalid_argument on length mismatch or when nothing is observed.
EvalReport point_metrics(std::span<const TruthRecord> truth, std::span<const double> predicted,
                         std::span<const double> thresholds = {});

// Harrell's concordance: over pairs with t_i < t_j and y_i = 1, the fraction
// with pred_i < pred_j, ties in prediction counting one half. O(N log N).
// Throws std::invalid_argument when no pair is comparable.
double concordance_index(std::span<const TruthRecord> truth, std::span<const double> predicted);

// Point metrics plus concordance.
EvalReport evaluate(std::span<const TruthRecord> truth, std::span<const double> predicted,
                    std::span<const double> thresholds = {});

}  // namespace hazardnet
