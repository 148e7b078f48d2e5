#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hazardnet {

using Count = std::uint64_t;
using NodeIndex = std::uint32_t;
using TypeIndex = std::uint32_t;

struct LinkType {
    std::string name;
    std::string src;
    std::string dst;
};

// Node and link types of a heterogeneous network. Link types are directed
// edges between node types.
class Schema {
public:
    Schema() = default;
    Schema(std::vector<std::string> node_types, std::vector<LinkType> link_types);

    // Parses {"node_types": [...], "link_types": [{"name","src","dst"}, ...]}.
    static Schema from_json(std::string_view text);

    const std::vector<std::string>& node_types() const { return node_types_; }
    const std::vector<LinkType>& link_types() const { return link_types_; }

    std::optional<TypeIndex> find_node_type(std::string_view name) const;
    std::optional<TypeIndex> find_link_type(std::string_view name) const;
    TypeIndex node_type(std::string_view name) const;
    TypeIndex link_type(std::string_view name) const;

    TypeIndex link_src(TypeIndex link) const { return link_endpoints_[link].first; }
    TypeIndex link_dst(TypeIndex link) const { return link_endpoints_[link].second; }

private:
    std::vector<std::string> node_types_;
    std::vector<LinkType> link_types_;
    std::vector<std::pair<TypeIndex, TypeIndex>> link_endpoints_;
};

struct Link {
    TypeIndex type;
    NodeIndex src;
    NodeIndex dst;
    double birth;
    std::optional<double> death;  // nullopt: never removed

    // Alive iff birth < tau <= death.
    bool alive_at(double tau) const { return birth < tau && (!death || tau <= *death); }
};

// Row-compressed matrix of strictly positive path counts.
class SparseCountMatrix {
public:
    struct Entry {
        NodeIndex col;
        Count value;
        bool operator==(const Entry&) const = default;
    };
    struct Triplet {
        NodeIndex row;
        NodeIndex col;
        Count value;
    };

    SparseCountMatrix() = default;
    SparseCountMatrix(std::size_t rows, std::size_t cols);

    // Duplicate (row, col) triplets are summed; zero sums are dropped.
    static SparseCountMatrix from_triplets(std::size_t rows, std::size_t cols,
                                           std::vector<Triplet> triplets);
    static SparseCountMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nonzeros() const { return entries_.size(); }

    // Entries of one row, sorted by column.
    std::span<const Entry> row(std::size_t r) const;
    Count at(std::size_t r, std::size_t c) const;

    std::vector<Triplet> triplets() const;

    // Every stored count replaced by 1.
    SparseCountMatrix binarized() const;

    bool operator==(const SparseCountMatrix&) const = default;

private:
    friend SparseCountMatrix transpose(const SparseCountMatrix& m);
    friend SparseCountMatrix spmm(const SparseCountMatrix& a, const SparseCountMatrix& b);

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_start_{0};
    std::vector<Entry> entries_;
};

SparseCountMatrix transpose(const SparseCountMatrix& m);

// Exact integer product (row-wise Gustavson). Throws std::overflow_error when
// a count does not fit in 64 bits.
SparseCountMatrix spmm(const SparseCountMatrix& a, const SparseCountMatrix& b);

// A heterogeneous network whose links carry birth and optional death times.
// Node indices are assigned per node type in first-mention order and never
// change after load.
class TemporalGraph {
public:
    explicit TemporalGraph(Schema schema);

    const Schema& schema() const { return schema_; }
    const std::vector<Link>& links() const { return links_; }

    std::size_t node_count(TypeIndex node_type) const { return ids_[node_type].size(); }
    const std::string& node_id(TypeIndex node_type, NodeIndex index) const {
        return ids_[node_type][index];
    }
    std::optional<NodeIndex> find_node(TypeIndex node_type, std::string_view id) const;

    // Registers a node if unseen and returns its index.
    NodeIndex intern_node(TypeIndex node_type, std::string_view id);

    void add_link(std::string_view link_type, std::string_view src_id, std::string_view dst_id,
                  double birth, std::optional<double> death);
    void add_link(TypeIndex link_type, NodeIndex src, NodeIndex dst, double birth,
                  std::optional<double> death);

    // Smallest birth and largest finite timestamp over all links.
    std::optional<std::pair<double, double>> time_span() const;

private:
    Schema schema_;
    std::vector<std::vector<std::string>> ids_;
    std::vector<std::unordered_map<std::string, NodeIndex>> index_;
    std::vector<Link> links_;
};

// Reads TSV edge records `link_type  src  dst  birth  death` (death may be
// empty; lines starting with '#' and blank lines are skipped).
TemporalGraph load_graph(std::string_view schema_json, std::istream& edges);

// Entry (a, b) counts the links of `link_type` from a to b alive at tau.
SparseCountMatrix time_aware_adjacency(const TemporalGraph& graph, TypeIndex link_type,
                                       double tau);
SparseCountMatrix time_aware_adjacency(const TemporalGraph& graph, std::string_view link_type,
                                       double tau);

}  // namespace hazardnet
