#pragma once

#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hazardnet/graph.hpp"

namespace hazardnet {

enum class Direction { Forward, Backward };

struct MetaPathStep {
    TypeIndex link_type;
    Direction direction;
    bool operator==(const MetaPathStep&) const = default;
};

// A type-checked walk over the schema. Backward steps traverse a link type
// from its destination to its source.
class MetaPath {
public:
    MetaPath(const Schema& schema, std::vector<MetaPathStep> steps);

    const std::vector<MetaPathStep>& steps() const { return steps_; }
    std::size_t length() const { return steps_.size(); }
    TypeIndex source_type() const { return node_types_.front(); }
    TypeIndex target_type() const { return node_types_.back(); }
    // Node types visited, length() + 1 entries.
    const std::vector<TypeIndex>& node_types() const { return node_types_; }

    // Equal to its own reverse with every direction flipped, so that the
    // full product is X * X^T for X the product of the first half.
    bool is_symmetric() const;

    // Canonical text in the `name>` / `<name` grammar.
    std::string to_string(const Schema& schema) const;
    // Canonical text of the first n steps; used as a cache key.
    std::string prefix_key(std::size_t n) const;

    bool operator==(const MetaPath& other) const { return steps_ == other.steps_; }

private:
    std::vector<MetaPathStep> steps_;
    std::vector<TypeIndex> node_types_;
};

// Whitespace-separated steps, each `name>` (forward) or `<name` (backward).
MetaPath parse_metapath(std::string_view expr, const Schema& schema);

struct MetaPathList {
    std::optional<MetaPath> target;
    std::vector<MetaPath> features;
};

// One expression per line, '#' comments; the first non-comment line may be
// `target: <expr>`.
MetaPathList parse_metapath_list(std::string_view text, const Schema& schema);

// Memo of partial products keyed by (path prefix, tau). Concurrent callers
// asking for the same key share a single computation.
class ProductCache {
public:
    using Matrix = std::shared_ptr<const SparseCountMatrix>;

    template <typename Compute>
    Matrix get_or_compute(const std::string& prefix, double tau, Compute&& compute) {
        std::promise<Matrix> promise;
        std::shared_future<Matrix> future;
        bool owner = false;
        {
            std::lock_guard lock(mutex_);
            auto [it, inserted] = entries_.try_emplace({prefix, tau});
            if (inserted) {
                it->second = promise.get_future().share();
                owner = true;
            }
            future = it->second;
        }
        if (owner) {
            try {
                promise.set_value(std::make_shared<const SparseCountMatrix>(compute()));
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
            std::lock_guard lock(mutex_);
            ++computed_;
        }
        return future.get();
    }

    bool contains(const std::string& prefix, double tau) const;
    std::size_t size() const;
    // Number of products actually evaluated (cache misses).
    std::size_t computed() const;
    void clear();

private:
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, double>, std::shared_future<Matrix>> entries_;
    std::size_t computed_ = 0;
};

struct ProductOptions {
    bool use_symmetry = true;
    // Replace every adjacency count by 1 before multiplying.
    bool binary = false;
};

// Path-instance count matrix of `path` at time tau. With a cache, every
// prefix product is memoized and reused across paths sharing that prefix.
SparseCountMatrix metapath_matrix(const TemporalGraph& graph, const MetaPath& path, double tau,
                                  ProductCache* cache = nullptr, ProductOptions options = {});

// Evaluates several paths, in parallel when threads > 1. The result order
// matches `paths`.
std::vector<SparseCountMatrix> metapath_matrices(const TemporalGraph& graph,
                                                 const std::vector<MetaPath>& paths, double tau,
                                                 ProductCache* cache = nullptr,
                                                 ProductOptions options = {},
                                                 unsigned threads = 1);

struct SnapshotPlan {
    double t0;
    double delta;
    int k;

    SnapshotPlan(double t0, double delta, int k);
    double phi() const { return delta * k; }
    double boundary(int i) const { return t0 + i * delta; }
};

struct NodePair {
    NodeIndex src;
    NodeIndex dst;
    auto operator<=>(const NodePair&) const = default;
};

// Per-pair multivariate series: series[i][j] is the change of path j's count
// over snapshot i + 1; baseline[j] is the count at t0.
struct PairSeries {
    NodePair pair;
    std::vector<std::vector<std::int64_t>> series;  // k rows, d columns
    std::vector<std::int64_t> baseline;             // d entries

    std::size_t snapshots() const { return series.size(); }
    std::size_t dimension() const { return baseline.size(); }
};

std::vector<PairSeries> dynamic_series(const TemporalGraph& graph,
                                       const std::vector<MetaPath>& paths,
                                       const SnapshotPlan& plan,
                                       const std::vector<NodePair>& pairs,
                                       ProductCache* cache = nullptr, ProductOptions options = {},
                                       unsigned threads = 1);

// CSV: header `src,dst,snapshot,feat_0..feat_{d-1}`, k rows per pair, node
// ids taken from the graph.
std::string series_to_csv(const TemporalGraph& graph, const MetaPath& target,
                          const std::vector<PairSeries>& series);

}  // namespace hazardnet
