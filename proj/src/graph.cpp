#include "hazardnet/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <stdexcept>

#include <json.hpp>

#include "hazardnet/text.hpp"

namespace hazardnet {

// ---------------------------------------------------------------------------
// Schema

Schema::Schema(std::vector<std::string> node_types, std::vector<LinkType> link_types)
    : node_types_(std::move(node_types)), link_types_(std::move(link_types)) {
    for (std::size_t i = 0; i < node_types_.size(); ++i) {
        if (node_types_[i].empty()) throw std::invalid_argument("schema: empty node-type name");
        for (std::size_t j = 0; j < i; ++j)
            if (node_types_[i] == node_types_[j])
                throw std::invalid_argument("schema: duplicate node type '" + node_types_[i] + "'");
    }
    for (std::size_t i = 0; i < link_types_.size(); ++i) {
        const auto& lt = link_types_[i];
        if (lt.name.empty()) throw std::invalid_argument("schema: empty link-type name");
        for (std::size_t j = 0; j < i; ++j)
            if (lt.name == link_types_[j].name)
                throw std::invalid_argument("schema: duplicate link type '" + lt.name + "'");
        auto src = find_node_type(lt.src);
        auto dst = find_node_type(lt.dst);
        if (!src || !dst)
            throw std::invalid_argument("schema: link type '" + lt.name +
                                        "' references an undeclared node type");
        link_endpoints_.emplace_back(*src, *dst);
    }
}

Schema Schema::from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("schema: malformed JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("node_types") || !doc.contains("link_types"))
        throw std::invalid_argument("schema: expected keys 'node_types' and 'link_types'");
    try {
        auto nodes = doc.at("node_types").get<std::vector<std::string>>();
        std::vector<LinkType> links;
        for (const auto& l : doc.at("link_types")) {
            links.push_back({l.at("name").get<std::string>(), l.at("src").get<std::string>(),
                             l.at("dst").get<std::string>()});
        }
        return Schema(std::move(nodes), std::move(links));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("schema: ") + e.what());
    }
}

std::optional<TypeIndex> Schema::find_node_type(std::string_view name) const {
    auto it = std::find(node_types_.begin(), node_types_.end(), name);
    if (it == node_types_.end()) return std::nullopt;
    return static_cast<TypeIndex>(it - node_types_.begin());
}

std::optional<TypeIndex> Schema::find_link_type(std::string_view name) const {
    auto it = std::find_if(link_types_.begin(), link_types_.end(),
                           [&](const LinkType& l) { return l.name == name; });
    if (it == link_types_.end()) return std::nullopt;
    return static_cast<TypeIndex>(it - link_types_.begin());
}

TypeIndex Schema::node_type(std::string_view name) const {
    if (auto t = find_node_type(name)) return *t;
    throw std::invalid_argument("unknown node type '" + std::string(name) + "'");
}

TypeIndex Schema::link_type(std::string_view name) const {
    if (auto t = find_link_type(name)) return *t;
    throw std::invalid_argument("unknown link type '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// SparseCountMatrix

SparseCountMatrix::SparseCountMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_start_(rows + 1, 0) {}

SparseCountMatrix SparseCountMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                                   std::vector<Triplet> triplets) {
    for (const auto& t : triplets)
        if (t.row >= rows || t.col >= cols)
            throw std::out_of_range("sparse matrix: triplet index out of range");
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseCountMatrix m(rows, cols);
    m.entries_.reserve(triplets.size());
    std::size_t i = 0;
    while (i < triplets.size()) {
        const auto row = triplets[i].row;
        const auto col = triplets[i].col;
        Count sum = 0;
        for (; i < triplets.size() && triplets[i].row == row && triplets[i].col == col; ++i) {
            if (__builtin_add_overflow(sum, triplets[i].value, &sum))
                throw std::overflow_error("sparse matrix: count overflow");
        }
        if (sum == 0) continue;
        m.entries_.push_back({col, sum});
        ++m.row_start_[row + 1];
    }
    for (std::size_t r = 0; r < rows; ++r) m.row_start_[r + 1] += m.row_start_[r];
    return m;
}

SparseCountMatrix SparseCountMatrix::identity(std::size_t n) {
    SparseCountMatrix m(n, n);
    m.entries_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.entries_.push_back({static_cast<NodeIndex>(i), 1});
        m.row_start_[i + 1] = i + 1;
    }
    return m;
}

std::span<const SparseCountMatrix::Entry> SparseCountMatrix::row(std::size_t r) const {
    return {entries_.data() + row_start_[r], row_start_[r + 1] - row_start_[r]};
}

Count SparseCountMatrix::at(std::size_t r, std::size_t c) const {
    if (r >= rows_ || c >= cols_) throw std::out_of_range("sparse matrix: index out of range");
    auto entries = row(r);
    auto it = std::lower_bound(entries.begin(), entries.end(), c,
                               [](const Entry& e, std::size_t col) { return e.col < col; });
    return (it != entries.end() && it->col == c) ? it->value : 0;
}

std::vector<SparseCountMatrix::Triplet> SparseCountMatrix::triplets() const {
    std::vector<Triplet> out;
    out.reserve(entries_.size());
    for (std::size_t r = 0; r < rows_; ++r)
        for (const auto& e : row(r)) out.push_back({static_cast<NodeIndex>(r), e.col, e.value});
    return out;
}

SparseCountMatrix SparseCountMatrix::binarized() const {
    SparseCountMatrix m = *this;
    for (auto& e : m.entries_) e.value = 1;
    return m;
}

SparseCountMatrix transpose(const SparseCountMatrix& m) {
    SparseCountMatrix t(m.cols_, m.rows_);
    t.entries_.resize(m.entries_.size());
    for (const auto& e : m.entries_) ++t.row_start_[e.col + 1];
    for (std::size_t c = 0; c < m.cols_; ++c) t.row_start_[c + 1] += t.row_start_[c];

    // Scanning source rows in order keeps each output row column-sorted.
    std::vector<std::size_t> fill(t.row_start_.begin(), t.row_start_.end() - 1);
    for (std::size_t r = 0; r < m.rows_; ++r)
        for (const auto& e : m.row(r))
            t.entries_[fill[e.col]++] = {static_cast<NodeIndex>(r), e.value};
    return t;
}

SparseCountMatrix spmm(const SparseCountMatrix& a, const SparseCountMatrix& b) {
    if (a.cols_ != b.rows_)
        throw std::invalid_argument("spmm: dimension mismatch (" + std::to_string(a.rows_) + "x" +
                                    std::to_string(a.cols_) + " times " +
                                    std::to_string(b.rows_) + "x" + std::to_string(b.cols_) + ")");
    SparseCountMatrix c(a.rows_, b.cols_);

    std::vector<Count> acc(b.cols_, 0);
    std::vector<bool> touched(b.cols_, false);
    std::vector<NodeIndex> cols;
    for (std::size_t r = 0; r < a.rows_; ++r) {
        cols.clear();
        for (const auto& ea : a.row(r)) {
            for (const auto& eb : b.row(ea.col)) {
                Count prod;
                if (__builtin_mul_overflow(ea.value, eb.value, &prod) ||
                    __builtin_add_overflow(acc[eb.col], prod, &acc[eb.col]))
                    throw std::overflow_error("spmm: path count overflows 64 bits");
                if (!touched[eb.col]) {
                    touched[eb.col] = true;
                    cols.push_back(eb.col);
                }
            }
        }
        std::sort(cols.begin(), cols.end());
        for (auto col : cols) {
            c.entries_.push_back({col, acc[col]});
            acc[col] = 0;
            touched[col] = false;
        }
        c.row_start_[r + 1] = c.entries_.size();
    }
    return c;
}

// ---------------------------------------------------------------------------
// TemporalGraph

TemporalGraph::TemporalGraph(Schema schema)
    : schema_(std::move(schema)),
      ids_(schema_.node_types().size()),
      index_(schema_.node_types().size()) {}

std::optional<NodeIndex> TemporalGraph::find_node(TypeIndex node_type, std::string_view id) const {
    const auto& idx = index_.at(node_type);
    auto it = idx.find(std::string(id));
    if (it == idx.end()) return std::nullopt;
    return it->second;
}

NodeIndex TemporalGraph::intern_node(TypeIndex node_type, std::string_view id) {
    auto& idx = index_.at(node_type);
    auto [it, inserted] = idx.try_emplace(std::string(id), static_cast<NodeIndex>(ids_[node_type].size()));
    if (inserted) ids_[node_type].emplace_back(id);
    return it->second;
}

void TemporalGraph::add_link(std::string_view link_type, std::string_view src_id,
                             std::string_view dst_id, double birth, std::optional<double> death) {
    const auto type = schema_.link_type(link_type);
    if (!std::isfinite(birth) || (death && !std::isfinite(*death)))
        throw std::invalid_argument("link timestamps must be finite");
    if (death && *death <= birth)
        throw std::invalid_argument("link death must be strictly after its birth");
    const auto src = intern_node(schema_.link_src(type), src_id);
    const auto dst = intern_node(schema_.link_dst(type), dst_id);
    links_.push_back({type, src, dst, birth, death});
}

void TemporalGraph::add_link(TypeIndex link_type, NodeIndex src, NodeIndex dst, double birth,
                             std::optional<double> death) {
    if (link_type >= schema_.link_types().size())
        throw std::invalid_argument("unknown link type index");
    if (src >= node_count(schema_.link_src(link_type)) ||
        dst >= node_count(schema_.link_dst(link_type)))
        throw std::out_of_range("link endpoint index out of range");
    if (!std::isfinite(birth) || (death && !std::isfinite(*death)))
        throw std::invalid_argument("link timestamps must be finite");
    if (death && *death <= birth)
        throw std::invalid_argument("link death must be strictly after its birth");
    links_.push_back({link_type, src, dst, birth, death});
}

std::optional<std::pair<double, double>> TemporalGraph::time_span() const {
    if (links_.empty()) return std::nullopt;
    double lo = links_.front().birth;
    double hi = lo;
    for (const auto& l : links_) {
        lo = std::min(lo, l.birth);
        hi = std::max(hi, l.death.value_or(l.birth));
    }
    return std::make_pair(lo, hi);
}

TemporalGraph load_graph(std::string_view schema_json, std::istream& edges) {
    TemporalGraph graph(Schema::from_json(schema_json));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(edges, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;

        auto fields = split(line, '\t');
        if (fields.size() == 4) fields.emplace_back();
        if (fields.size() != 5)
            throw std::invalid_argument("edge line " + std::to_string(line_no) +
                                        ": expected 5 tab-separated fields");
        const auto where = "edge line " + std::to_string(line_no);
        const double birth = parse_double(fields[3], where + " birth");
        std::optional<double> death;
        if (!fields[4].empty()) death = parse_double(fields[4], where + " death");
        try {
            graph.add_link(fields[0], fields[1], fields[2], birth, death);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + ": " + e.what());
        }
    }
    return graph;
}

SparseCountMatrix time_aware_adjacency(const TemporalGraph& graph, TypeIndex link_type,
                                       double tau) {
    const auto& schema = graph.schema();
    if (link_type >= schema.link_types().size())
        throw std::invalid_argument("unknown link type index");
    std::vector<SparseCountMatrix::Triplet> triplets;
    for (const auto& l : graph.links())
        if (l.type == link_type && l.alive_at(tau)) triplets.push_back({l.src, l.dst, 1});
    return SparseCountMatrix::from_triplets(graph.node_count(schema.link_src(link_type)),
                                            graph.node_count(schema.link_dst(link_type)),
                                            std::move(triplets));
}

SparseCountMatrix time_aware_adjacency(const TemporalGraph& graph, std::string_view link_type,
                                       double tau) {
    return time_aware_adjacency(graph, graph.schema().link_type(link_type), tau);
}

}  // namespace hazardnet
