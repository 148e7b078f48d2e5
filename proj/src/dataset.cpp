#include "hazardnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hazardnet/text.hpp"

namespace hazardnet {

WindowConfig::WindowConfig(double t0_, double phi_, double omega_, double delta_, int k_)
    : t0(t0_), phi(phi_), omega(omega_), delta(delta_), k(k_) {
    if (!std::isfinite(t0)) throw std::invalid_argument("window: t0 must be finite");
    if (!(phi > 0)) throw std::invalid_argument("window: feature window length must be positive");
    if (!(omega > 0)) throw std::invalid_argument("window: observation length must be positive");
    if (!(delta > 0)) throw std::invalid_argument("window: snapshot interval must be positive");
    if (k < 1) throw std::invalid_argument("window: snapshot count must be at least 1");
    if (std::abs(k * delta - phi) > 1e-9 * std::abs(phi))
        throw std::invalid_argument("window: k * delta must equal the feature window length");
}

WindowConfig WindowConfig::from_snapshots(double t0, double delta, int k, double omega) {
    return WindowConfig(t0, k * delta, omega, delta, k);
}

// ---------------------------------------------------------------------------
// Labeling

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

// Sparse matrix over the (min, max) semiring: entry = earliest time a walk
// exists between the two nodes.
struct EarliestMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::vector<std::pair<NodeIndex, double>>> row;  // column-sorted
};

EarliestMatrix earliest_adjacency(const TemporalGraph& graph, const MetaPathStep& step) {
    const auto& schema = graph.schema();
    const bool fwd = step.direction == Direction::Forward;
    EarliestMatrix m;
    m.rows = graph.node_count(fwd ? schema.link_src(step.link_type) : schema.link_dst(step.link_type));
    m.cols = graph.node_count(fwd ? schema.link_dst(step.link_type) : schema.link_src(step.link_type));
    std::vector<std::map<NodeIndex, double>> rows(m.rows);
    for (const auto& l : graph.links()) {
        if (l.type != step.link_type) continue;
        const auto r = fwd ? l.src : l.dst;
        const auto c = fwd ? l.dst : l.src;
        auto [it, inserted] = rows[r].try_emplace(c, l.birth);
        if (!inserted) it->second = std::min(it->second, l.birth);
    }
    m.row.resize(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) m.row[r].assign(rows[r].begin(), rows[r].end());
    return m;
}

EarliestMatrix minmax_product(const EarliestMatrix& a, const EarliestMatrix& b) {
    EarliestMatrix c;
    c.rows = a.rows;
    c.cols = b.cols;
    c.row.resize(a.rows);
    std::vector<double> acc(b.cols, kNever);
    std::vector<NodeIndex> touched;
    for (std::size_t r = 0; r < a.rows; ++r) {
        touched.clear();
        for (const auto& [mid, ta] : a.row[r]) {
            for (const auto& [col, tb] : b.row[mid]) {
                const double t = std::max(ta, tb);
                if (acc[col] == kNever) touched.push_back(col);
                acc[col] = std::min(acc[col], t);
            }
        }
        std::sort(touched.begin(), touched.end());
        for (auto col : touched) {
            c.row[r].emplace_back(col, acc[col]);
            acc[col] = kNever;
        }
    }
    return c;
}

}  // namespace

std::vector<std::pair<NodePair, double>> formation_times(const TemporalGraph& graph,
                                                         const MetaPath& target) {
    auto m = earliest_adjacency(graph, target.steps()[0]);
    for (std::size_t i = 1; i < target.length(); ++i)
        m = minmax_product(m, earliest_adjacency(graph, target.steps()[i]));
    std::vector<std::pair<NodePair, double>> out;
    for (std::size_t r = 0; r < m.rows; ++r)
        for (const auto& [c, t] : m.row[r]) out.push_back({{static_cast<NodeIndex>(r), c}, t});
    return out;
}

std::vector<PairLabel> label_pairs(const TemporalGraph& graph, const MetaPath& target,
                                   const WindowConfig& window,
                                   const std::vector<NodePair>& candidates) {
    if (candidates.empty()) throw std::invalid_argument("label_pairs: empty candidate list");
    const auto n_src = graph.node_count(target.source_type());
    const auto n_dst = graph.node_count(target.target_type());
    for (const auto& p : candidates)
        if (p.src >= n_src || p.dst >= n_dst)
            throw std::out_of_range("label_pairs: candidate outside the target's endpoint types");

    std::map<NodePair, double> formed;
    for (const auto& [pair, t] : formation_times(graph, target)) formed.emplace(pair, t);

    std::vector<PairLabel> out;
    for (const auto& p : candidates) {
        auto it = formed.find(p);
        const double tr = it == formed.end() ? kNever : it->second;
        if (tr <= window.feature_end()) continue;
        if (tr <= window.observation_end())
            out.push_back({p, 1, tr - window.feature_end()});
        else
            out.push_back({p, 0, window.omega});
    }
    return out;
}

std::vector<NodePair> candidate_pairs(const TemporalGraph& graph,
                                      const std::vector<MetaPath>& feature_paths,
                                      const WindowConfig& window, ProductCache* cache,
                                      ProductOptions options, unsigned threads) {
    if (feature_paths.empty()) throw std::invalid_argument("candidate_pairs: no feature paths");
    const bool same_type = feature_paths[0].source_type() == feature_paths[0].target_type();
    std::set<NodePair> pairs;
    for (const auto& m :
         metapath_matrices(graph, feature_paths, window.feature_end(), cache, options, threads))
        for (const auto& t : m.triplets())
            if (!same_type || t.row != t.col) pairs.insert({t.row, t.col});
    return {pairs.begin(), pairs.end()};
}

std::vector<PairLabel> subsample_censored(const std::vector<PairLabel>& labels, double ratio,
                                          std::uint64_t seed) {
    if (!(ratio >= 0 && ratio < 1))
        throw std::invalid_argument("censored ratio must lie in [0, 1)");
    std::vector<PairLabel> observed;
    std::vector<PairLabel> censored;
    for (const auto& l : labels) (l.y == 1 ? observed : censored).push_back(l);

    const auto wanted = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(observed.size()) / (1.0 - ratio)));
    if (wanted < censored.size()) {
        std::mt19937_64 rng(seed);
        for (std::size_t i = 0; i < wanted; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, censored.size() - 1);
            std::swap(censored[i], censored[pick(rng)]);
        }
        censored.resize(wanted);
        std::sort(censored.begin(), censored.end(),
                  [](const PairLabel& a, const PairLabel& b) { return a.pair < b.pair; });
    }

    std::vector<PairLabel> out = std::move(observed);
    out.insert(out.end(), censored.begin(), censored.end());
    std::sort(out.begin(), out.end(),
              [](const PairLabel& a, const PairLabel& b) { return a.pair < b.pair; });
    return out;
}

std::vector<double> aggregate_stack(const PairSeries& series) {
    std::vector<double> out(series.dimension());
    for (std::size_t j = 0; j < out.size(); ++j) {
        std::int64_t total = series.baseline[j];
        for (const auto& row : series.series) total += row[j];
        out[j] = static_cast<double>(total);
    }
    return out;
}

std::vector<double> aggregate_expsmooth(const PairSeries& series, double alpha) {
    if (!(alpha > 0 && alpha < 1))
        throw std::invalid_argument("exponential smoothing factor must lie in (0, 1)");
    std::vector<double> out(series.dimension(), 0.0);
    for (std::size_t i = 0; i < series.snapshots(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j) {
            const auto x = static_cast<double>(series.series[i][j]);
            out[j] = i == 0 ? x : alpha * x + (1 - alpha) * out[j];
        }
    return out;
}

// ---------------------------------------------------------------------------
// Standardization

namespace {

template <typename RowAt>
Standardization fit_columns(std::size_t n, std::size_t d, RowAt row_at) {
    if (n == 0) throw std::invalid_argument("standardization: no rows");
    Standardization s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = row_at(i);
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
    }
    for (auto& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = row_at(i);
        for (std::size_t j = 0; j < d; ++j) s.std[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
    }
    for (auto& v : s.std) {
        v = std::sqrt(v / static_cast<double>(n));
        if (!(v > 0)) v = 1.0;  // constant column
    }
    for (std::size_t j = 0; j < d; ++j)
        if (!std::isfinite(s.mean[j]) || !std::isfinite(s.std[j]))
            throw std::invalid_argument("standardization: column " + std::to_string(j) +
                                        " overflows");
    return s;
}

}  // namespace

Standardization Standardization::fit(const std::vector<std::vector<double>>& rows) {
    return fit_columns(rows.size(), rows.empty() ? 0 : rows.front().size(),
                       [&](std::size_t i) -> const std::vector<double>& { return rows[i]; });
}

Standardization Standardization::fit(std::span<const LabeledSample> samples) {
    return fit_columns(samples.size(), samples.empty() ? 0 : samples.front().x.size(),
                       [&](std::size_t i) -> const std::vector<double>& { return samples[i].x; });
}

Standardization Standardization::identity(std::size_t d) {
    return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
}

std::vector<double> Standardization::apply(std::span<const double> raw) const {
    if (raw.size() != mean.size())
        throw std::invalid_argument("standardization: expected " + std::to_string(mean.size()) +
                                    " features, got " + std::to_string(raw.size()));
    std::vector<double> out(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) out[j] = (raw[j] - mean[j]) / std[j];
    return out;
}

std::vector<double> Standardization::invert(std::span<const double> z) const {
    if (z.size() != mean.size()) throw std::invalid_argument("standardization: dimension mismatch");
    std::vector<double> out(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] * std[j] + mean[j];
    return out;
}

std::string Standardization::to_json() const {
    return nlohmann::json{{"mean", mean}, {"std", std}}.dump();
}

Standardization Standardization::from_json(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text);
        Standardization s{j.at("mean").get<std::vector<double>>(),
                          j.at("std").get<std::vector<double>>()};
        if (s.mean.size() != s.std.size())
            throw std::invalid_argument("standardization: mean/std length mismatch");
        for (double v : s.std)
            if (!(v > 0)) throw std::invalid_argument("standardization: std must be positive");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("standardization: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<LabeledSample> samples, std::optional<Standardization> standardization)
    : samples_(std::move(samples)), standardization_(std::move(standardization)) {
    dimension_ = samples_.empty() ? (standardization_ ? standardization_->dimension() : 0)
                                  : samples_.front().x.size();
    for (const auto& s : samples_) {
        if (s.x.size() != dimension_)
            throw std::invalid_argument("dataset: samples have differing feature dimensions");
        if (s.y != 0 && s.y != 1) throw std::invalid_argument("dataset: y must be 0 or 1");
        if (!std::isfinite(s.t) || !(s.t > 0))
            throw std::invalid_argument("dataset: t must be finite and positive");
        for (double v : s.x)
            if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature");
    }
    if (standardization_ && standardization_->dimension() != dimension_)
        throw std::invalid_argument("dataset: standardization dimension mismatch");
    std::stable_sort(samples_.begin(), samples_.end(),
                     [](const LabeledSample& a, const LabeledSample& b) {
                         if (a.t != b.t) return a.t < b.t;
                         if (a.y != b.y) return a.y > b.y;
                         return a.key < b.key;
                     });
}

std::size_t Dataset::observed_count() const {
    return static_cast<std::size_t>(std::count_if(
        samples_.begin(), samples_.end(), [](const LabeledSample& s) { return s.y == 1; }));
}

std::vector<double> Dataset::raw_features(std::size_t i) const {
    const auto& x = samples_.at(i).x;
    return standardization_ ? standardization_->invert(x) : x;
}

Dataset Dataset::standardized() const {
    if (standardization_) return *this;
    auto st = Standardization::fit(std::span<const LabeledSample>(samples_));
    auto samples = samples_;
    for (auto& s : samples) s.x = st.apply(s.x);
    return Dataset(std::move(samples), std::move(st));
}

Dataset build_dataset(const std::vector<std::pair<SampleKey, std::vector<double>>>& features,
                      const std::vector<std::pair<SampleKey, std::pair<int, double>>>& labels,
                      bool standardize) {
    if (features.size() != labels.size())
        throw std::invalid_argument("build_dataset: feature and label sets differ in size");
    std::map<SampleKey, const std::vector<double>*> by_key;
    for (const auto& [key, x] : features)
        if (!by_key.emplace(key, &x).second)
            throw std::invalid_argument("build_dataset: duplicate feature key " + key.src + "," +
                                        key.dst);
    std::vector<LabeledSample> samples;
    samples.reserve(labels.size());
    for (const auto& [key, label] : labels) {
        auto it = by_key.find(key);
        if (it == by_key.end())
            throw std::invalid_argument("build_dataset: no features for pair " + key.src + "," +
                                        key.dst);
        samples.push_back({key, *it->second, label.first, label.second});
    }
    Dataset data(std::move(samples));
    if (data.observed_count() == 0)
        throw std::invalid_argument("build_dataset: no observed samples");
    return standardize ? data.standardized() : data;
}

Eigen::MatrixXd design_matrix(const Dataset& data) {
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto d = static_cast<Eigen::Index>(data.dimension());
    Eigen::MatrixXd x(n, d + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = data[static_cast<std::size_t>(i)].x;
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = row[static_cast<std::size_t>(j)];
        x(i, d) = 1.0;
    }
    return x;
}

// ---------------------------------------------------------------------------
// CSV

std::string dataset_to_csv(const Dataset& data) {
    std::string out = "src,dst,y,t";
    for (std::size_t j = 0; j < data.dimension(); ++j) out += ",x_" + std::to_string(j);
    out += '\n';
    for (const auto& s : data.samples()) {
        for (const auto& id : {s.key.src, s.key.dst})
            if (id.empty() || id.find_first_of(",\r\n") != std::string::npos)
                throw std::invalid_argument("dataset CSV: node id '" + id +
                                            "' is empty or holds a comma or line break");
        out += s.key.src + ',' + s.key.dst + ',' + std::to_string(s.y) + ',' + format_double(s.t);
        for (double v : s.x) out += ',' + format_double(v);
        out += '\n';
    }
    return out;
}

Dataset dataset_from_csv(std::string_view csv, std::optional<Standardization> standardization) {
    auto lines = split(csv, '\n');
    std::size_t i = 0;
    while (i < lines.size() && trim(lines[i]).empty()) ++i;
    if (i == lines.size()) throw std::invalid_argument("dataset CSV: missing header");
    const auto header = split(trim(lines[i]), ',');
    if (header.size() < 4 || header[0] != "src" || header[1] != "dst" || header[2] != "y" ||
        header[3] != "t")
        throw std::invalid_argument("dataset CSV: header must start with src,dst,y,t");
    const auto d = header.size() - 4;
    for (std::size_t j = 0; j < d; ++j)
        if (header[4 + j] != "x_" + std::to_string(j))
            throw std::invalid_argument("dataset CSV: unexpected column '" + header[4 + j] + "'");

    std::vector<LabeledSample> samples;
    for (++i; i < lines.size(); ++i) {
        auto line = trim(lines[i]);
        if (line.empty()) continue;
        auto f = split(line, ',');
        const auto where = "dataset CSV line " + std::to_string(i + 1);
        if (f.size() != header.size())
            throw std::invalid_argument(where + ": expected " + std::to_string(header.size()) +
                                        " fields");
        LabeledSample s;
        s.key = {f[0], f[1]};
        s.y = static_cast<int>(parse_int(f[2], where + " y"));
        s.t = parse_double(f[3], where + " t");
        s.x.reserve(d);
        for (std::size_t j = 0; j < d; ++j) s.x.push_back(parse_double(f[4 + j], where + " x"));
        samples.push_back(std::move(s));
    }
    if (samples.empty() && standardization && standardization->dimension() != d)
        throw std::invalid_argument("dataset CSV: standardization dimension mismatch");
    return Dataset(std::move(samples), std::move(standardization));
}

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".std.json"; }

void save_dataset(const Dataset& data, const std::string& csv_path) {
    write_file(csv_path, dataset_to_csv(data));
    const auto sidecar = sidecar_path(csv_path);
    if (data.standardization())
        write_file(sidecar, data.standardization()->to_json() + "\n");
    else if (std::filesystem::exists(sidecar))
        std::filesystem::remove(sidecar);
}

Dataset load_dataset(const std::string& csv_path) {
    std::optional<Standardization> st;
    const auto sidecar = sidecar_path(csv_path);
    if (std::filesystem::exists(sidecar)) st = Standardization::from_json(read_file(sidecar));
    return dataset_from_csv(read_file(csv_path), std::move(st));
}

}  // namespace hazardnet
