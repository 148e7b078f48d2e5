#include "hazardnet/metapath.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "hazardnet/text.hpp"

namespace hazardnet {

MetaPath::MetaPath(const Schema& schema, std::vector<MetaPathStep> steps)
    : steps_(std::move(steps)) {
    if (steps_.empty()) throw std::invalid_argument("meta-path must have at least one step");
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        const auto& s = steps_[i];
        if (s.link_type >= schema.link_types().size())
            throw std::invalid_argument("meta-path: unknown link type index");
        const auto from = s.direction == Direction::Forward ? schema.link_src(s.link_type)
                                                            : schema.link_dst(s.link_type);
        const auto to = s.direction == Direction::Forward ? schema.link_dst(s.link_type)
                                                          : schema.link_src(s.link_type);
        if (i == 0) {
            node_types_.push_back(from);
        } else if (node_types_.back() != from) {
            throw std::invalid_argument(
                "meta-path type error at step " + std::to_string(i + 1) + ": '" +
                schema.link_types()[s.link_type].name + "' starts at " +
                schema.node_types()[from] + " but the path is at " +
                schema.node_types()[node_types_.back()]);
        }
        node_types_.push_back(to);
    }
}

bool MetaPath::is_symmetric() const {
    const auto n = steps_.size();
    if (n % 2 != 0) return false;
    for (std::size_t i = 0; i < n / 2; ++i) {
        const auto& a = steps_[i];
        const auto& b = steps_[n - 1 - i];
        if (a.link_type != b.link_type || a.direction == b.direction) return false;
    }
    return true;
}

std::string MetaPath::to_string(const Schema& schema) const {
    std::string out;
    for (const auto& s : steps_) {
        if (!out.empty()) out += ' ';
        const auto& name = schema.link_types()[s.link_type].name;
        out += s.direction == Direction::Forward ? name + ">" : "<" + name;
    }
    return out;
}

std::string MetaPath::prefix_key(std::size_t n) const {
    std::string key;
    for (std::size_t i = 0; i < n && i < steps_.size(); ++i) {
        key += std::to_string(steps_[i].link_type);
        key += steps_[i].direction == Direction::Forward ? '>' : '<';
    }
    return key;
}

MetaPath parse_metapath(std::string_view expr, const Schema& schema) {
    std::vector<MetaPathStep> steps;
    std::istringstream in{std::string(expr)};
    std::string token;
    while (in >> token) {
        const bool fwd = token.size() > 1 && token.back() == '>';
        const bool bwd = token.size() > 1 && token.front() == '<';
        if (fwd == bwd)
            throw std::invalid_argument("meta-path syntax error at '" + token +
                                        "': expected 'name>' or '<name'");
        const auto name = fwd ? token.substr(0, token.size() - 1) : token.substr(1);
        const auto type = schema.find_link_type(name);
        if (!type) throw std::invalid_argument("meta-path: unknown link type '" + name + "'");
        steps.push_back({*type, fwd ? Direction::Forward : Direction::Backward});
    }
    if (steps.empty()) throw std::invalid_argument("meta-path syntax error: empty expression");
    return MetaPath(schema, std::move(steps));
}

MetaPathList parse_metapath_list(std::string_view text, const Schema& schema) {
    MetaPathList out;
    bool first = true;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        auto line = trim(raw);
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        try {
            if (line.starts_with("target:")) {
                if (!first)
                    throw std::invalid_argument("'target:' is only allowed on the first line");
                out.target = parse_metapath(line.substr(7), schema);
            } else {
                out.features.push_back(parse_metapath(line, schema));
            }
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("meta-path file line " + std::to_string(line_no) + ": " +
                                        e.what());
        }
        first = false;
    }
    return out;
}

bool ProductCache::contains(const std::string& prefix, double tau) const {
    std::lock_guard lock(mutex_);
    return entries_.contains({prefix, tau});
}

std::size_t ProductCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::size_t ProductCache::computed() const {
    std::lock_guard lock(mutex_);
    return computed_;
}

void ProductCache::clear() {
    std::lock_guard lock(mutex_);
    entries_.clear();
    computed_ = 0;
}

namespace {

SparseCountMatrix step_matrix(const TemporalGraph& graph, const MetaPathStep& step, double tau,
                              bool binary) {
    auto m = time_aware_adjacency(graph, step.link_type, tau);
    if (binary) m = m.binarized();
    return step.direction == Direction::Forward ? m : transpose(m);
}

class PathEvaluator {
public:
    PathEvaluator(const TemporalGraph& graph, const MetaPath& path, double tau,
                  ProductCache* cache, ProductOptions options)
        : graph_(graph), path_(path), tau_(tau), cache_(cache), options_(options) {}

    ProductCache::Matrix full() {
        const auto n = path_.length();
        if (options_.use_symmetry && path_.is_symmetric()) {
            return memo(key(n) + "S", [&] {
                auto half = prefix(n / 2);
                return spmm(*half, transpose(*half));
            });
        }
        return prefix(n);
    }

private:
    // Binary and count products never share cache entries.
    std::string key(std::size_t n) const {
        return path_.prefix_key(n) + (options_.binary ? "|b" : "|c");
    }

    template <typename F>
    ProductCache::Matrix memo(const std::string& k, F&& compute) {
        if (!cache_) return std::make_shared<const SparseCountMatrix>(compute());
        return cache_->get_or_compute(k, tau_, std::forward<F>(compute));
    }

    ProductCache::Matrix prefix(std::size_t n) {
        if (!cache_) {
            SparseCountMatrix acc = step_matrix(graph_, path_.steps()[0], tau_, options_.binary);
            for (std::size_t i = 1; i < n; ++i)
                acc = spmm(acc, step_matrix(graph_, path_.steps()[i], tau_, options_.binary));
            return std::make_shared<const SparseCountMatrix>(std::move(acc));
        }
        return memo(key(n), [&] {
            if (n == 1) return step_matrix(graph_, path_.steps()[0], tau_, options_.binary);
            auto head = prefix(n - 1);
            auto last = memo(path_step_key(n - 1), [&] {
                return step_matrix(graph_, path_.steps()[n - 1], tau_, options_.binary);
            });
            return spmm(*head, *last);
        });
    }

    std::string path_step_key(std::size_t i) const {
        const auto& s = path_.steps()[i];
        return std::to_string(s.link_type) + (s.direction == Direction::Forward ? ">" : "<") +
               (options_.binary ? "|b" : "|c");
    }

    const TemporalGraph& graph_;
    const MetaPath& path_;
    double tau_;
    ProductCache* cache_;
    ProductOptions options_;
};

template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < threads; ++w) {
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < n; i += threads) body(i);
        }));
    }
    for (auto& f : workers) f.get();
}

}  // namespace

SparseCountMatrix metapath_matrix(const TemporalGraph& graph, const MetaPath& path, double tau,
                                  ProductCache* cache, ProductOptions options) {
    return *PathEvaluator(graph, path, tau, cache, options).full();
}

std::vector<SparseCountMatrix> metapath_matrices(const TemporalGraph& graph,
                                                 const std::vector<MetaPath>& paths, double tau,
                                                 ProductCache* cache, ProductOptions options,
                                                 unsigned threads) {
    std::vector<SparseCountMatrix> out(paths.size());
    parallel_for(paths.size(), threads, [&](std::size_t i) {
        out[i] = metapath_matrix(graph, paths[i], tau, cache, options);
    });
    return out;
}

SnapshotPlan::SnapshotPlan(double t0_, double delta_, int k_) : t0(t0_), delta(delta_), k(k_) {
    if (!(delta > 0)) throw std::invalid_argument("snapshot interval must be positive");
    if (k < 1) throw std::invalid_argument("snapshot count must be at least 1");
}

std::vector<PairSeries> dynamic_series(const TemporalGraph& graph,
                                       const std::vector<MetaPath>& paths,
                                       const SnapshotPlan& plan,
                                       const std::vector<NodePair>& pairs, ProductCache* cache,
                                       ProductOptions options, unsigned threads) {
    if (paths.empty()) throw std::invalid_argument("dynamic_series: no meta-paths given");
    const auto src_type = paths.front().source_type();
    const auto dst_type = paths.front().target_type();
    for (const auto& p : paths)
        if (p.source_type() != src_type || p.target_type() != dst_type)
            throw std::invalid_argument("dynamic_series: meta-paths must share endpoint types");
    for (const auto& pr : pairs)
        if (pr.src >= graph.node_count(src_type) || pr.dst >= graph.node_count(dst_type))
            throw std::out_of_range("dynamic_series: node pair index out of range");

    const auto d = paths.size();
    const auto k = static_cast<std::size_t>(plan.k);
    // counts[i][p][j]: feature of pair p for path j at boundary i.
    std::vector<std::vector<std::vector<std::int64_t>>> counts(k + 1);
    for (std::size_t i = 0; i <= k; ++i) {
        auto mats = metapath_matrices(graph, paths, plan.boundary(static_cast<int>(i)), cache,
                                      options, threads);
        counts[i].assign(pairs.size(), std::vector<std::int64_t>(d));
        for (std::size_t p = 0; p < pairs.size(); ++p)
            for (std::size_t j = 0; j < d; ++j) {
                const auto c = mats[j].at(pairs[p].src, pairs[p].dst);
                if (c > static_cast<Count>(INT64_MAX))
                    throw std::overflow_error("dynamic_series: count exceeds signed 64-bit range");
                counts[i][p][j] = static_cast<std::int64_t>(c);
            }
    }

    std::vector<PairSeries> out(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        out[p].pair = pairs[p];
        out[p].baseline = counts[0][p];
        out[p].series.assign(k, std::vector<std::int64_t>(d));
        for (std::size_t i = 1; i <= k; ++i)
            for (std::size_t j = 0; j < d; ++j)
                out[p].series[i - 1][j] = counts[i][p][j] - counts[i - 1][p][j];
    }
    return out;
}

std::string series_to_csv(const TemporalGraph& graph, const MetaPath& target,
                          const std::vector<PairSeries>& series) {
    std::ostringstream out;
    const auto d = series.empty() ? 0 : series.front().dimension();
    out << "src,dst,snapshot";
    for (std::size_t j = 0; j < d; ++j) out << ",feat_" << j;
    out << '\n';
    for (const auto& ps : series) {
        for (std::size_t i = 0; i < ps.snapshots(); ++i) {
            out << graph.node_id(target.source_type(), ps.pair.src) << ','
                << graph.node_id(target.target_type(), ps.pair.dst) << ',' << (i + 1);
            for (auto v : ps.series[i]) out << ',' << v;
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace hazardnet
