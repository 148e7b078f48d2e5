#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hazardnet/graph.hpp"
#include "hazardnet/metapath.hpp"

namespace hazardnet {

// Timeline split: features from (t0, t0 + phi], labels from (t0 + phi, t0 + phi + omega].
struct WindowConfig {
    double t0;
    double phi;
    double omega;
    double delta;
    int k;

    // Checks phi > 0, omega > 0 and k * delta == phi (1e-9 relative).
    WindowConfig(double t0, double phi, double omega, double delta, int k);
    static WindowConfig from_snapshots(double t0, double delta, int k, double omega);

    double feature_end() const { return t0 + phi; }
    double observation_end() const { return t0 + phi + omega; }
    SnapshotPlan plan() const { return {t0, delta, k}; }
};

struct PairLabel {
    NodePair pair;
    int y;     // 1 observed, 0 censored
    double t;  // time since feature_end(); omega when censored
    bool operator==(const PairLabel&) const = default;
};

// Earliest time each pair becomes connected by `target`, i.e. the minimum
// over path instances of the latest link birth in the instance. Link deaths
// are not considered.
std::vector<std::pair<NodePair, double>> formation_times(const TemporalGraph& graph,
                                                         const MetaPath& target);

// Pairs related by `target` at or before feature_end() are dropped; pairs
// related within the observation window are observed; the rest are censored.
std::vector<PairLabel> label_pairs(const TemporalGraph& graph, const MetaPath& target,
                                   const WindowConfig& window,
                                   const std::vector<NodePair>& candidates);

// Pairs with a nonzero count for at least one feature path at feature_end(),
// in (src, dst) order. A node is never paired with itself.
std::vector<NodePair> candidate_pairs(const TemporalGraph& graph,
                                      const std::vector<MetaPath>& feature_paths,
                                      const WindowConfig& window, ProductCache* cache = nullptr,
                                      ProductOptions options = {}, unsigned threads = 1);

// Keeps every observed label and a uniformly random subset of censored ones
// so that censored / total is as close to `ratio` as available data allows.
std::vector<PairLabel> subsample_censored(const std::vector<PairLabel>& labels, double ratio,
                                          std::uint64_t seed);

// Single-snapshot aggregate: the feature value at the end of the window.
std::vector<double> aggregate_stack(const PairSeries& series);
// Exponentially weighted moving average over snapshots, alpha in (0, 1).
std::vector<double> aggregate_expsmooth(const PairSeries& series, double alpha);

struct SampleKey {
    std::string src;
    std::string dst;
    auto operator<=>(const SampleKey&) const = default;
};

struct LabeledSample {
    SampleKey key;
    std::vector<double> x;
    int y = 0;
    double t = 0;
};

// Per-column affine map x -> (x - mean) / std.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> std;

    static Standardization fit(const std::vector<std::vector<double>>& rows);
    static Standardization fit(std::span<const LabeledSample> samples);
    static Standardization identity(std::size_t d);
    std::vector<double> apply(std::span<const double> raw) const;
    std::vector<double> invert(std::span<const double> standardized) const;
    std::size_t dimension() const { return mean.size(); }
    bool operator==(const Standardization&) const = default;

    std::string to_json() const;
    static Standardization from_json(std::string_view text);
};

// Samples ordered by t ascending, observed before censored on ties, then by
// key. When `standardization` is set, x holds standardized features.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<LabeledSample> samples,
                     std::optional<Standardization> standardization = std::nullopt);

    const std::vector<LabeledSample>& samples() const { return samples_; }
    const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    std::size_t dimension() const { return dimension_; }
    std::size_t observed_count() const;
    const std::optional<Standardization>& standardization() const { return standardization_; }

    // Features as supplied before any standardization.
    std::vector<double> raw_features(std::size_t i) const;

    // Copy with features standardized using this dataset's statistics.
    Dataset standardized() const;

private:
    std::vector<LabeledSample> samples_;
    std::size_t dimension_ = 0;
    std::optional<Standardization> standardization_;
};

// Joins features and labels by key. Throws on mismatched key sets, ragged
// dimensions, or no observed samples.
Dataset build_dataset(const std::vector<std::pair<SampleKey, std::vector<double>>>& features,
                      const std::vector<std::pair<SampleKey, std::pair<int, double>>>& labels,
                      bool standardize);

// Rows of x with a trailing constant-1 column.
// Standardizes the first columns of a design matrix in place with the same
// arithmetic as Standardization::apply; a trailing bias column is untouched.
template <typename Matrix>
void standardize_columns(Matrix& x, const Standardization& s) {
    const auto d = static_cast<Eigen::Index>(s.dimension());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            x(i, j) = (x(i, j) - s.mean[static_cast<std::size_t>(j)]) / s.std[static_cast<std::size_t>(j)];
}

Eigen::MatrixXd design_matrix(const Dataset& data);

// CSV header `src,dst,y,t,x_0..x_{d-1}`.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(std::string_view csv,
                         std::optional<Standardization> standardization = std::nullopt);

// `<csv>.std.json` next to the dataset file.
std::string sidecar_path(const std::string& csv_path);
void save_dataset(const Dataset& data, const std::string& csv_path);
// Picks up the sidecar when present.
Dataset load_dataset(const std::string& csv_path);

}  // namespace hazardnet
