#include "ksf/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace ksf {

WeightedGraph::WeightedGraph(Index nodes, std::vector<WeightedEdge> edges)
    : n_(nodes), edges_(std::move(edges)) {
    for (const auto& e : edges_) {
        if (e.u >= n_ || e.v >= n_)
            throw DimensionError("edge endpoint out of range");
        if (e.u == e.v)
            throw InvalidArgument("self-loop at node " + std::to_string(e.u + 1));
        if (!(e.weight > 0.0) || !std::isfinite(e.weight))
            throw InvalidArgument("edge weight must be positive and finite");
    }
    // union-find connectivity
    std::vector<Index> parent(n_);
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    Index components = n_;
    for (const auto& e : edges_) {
        Index a = find(e.u), b = find(e.v);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    connected_ = n_ >= 1 && components == 1;
}

std::vector<std::vector<Index>> WeightedGraph::adjacency() const {
    std::vector<std::vector<Index>> adj(n_);
    for (Index i = 0; i < edges_.size(); ++i) {
        adj[edges_[i].u].push_back(i);
        adj[edges_[i].v].push_back(i);
    }
    return adj;
}

namespace {

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

ColMajorSparseMatrix read_matrix_market(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line))
        throw ParseError("empty Matrix Market input", 1);
    ++lineno;
    {
        std::istringstream hs(line);
        std::string banner, object, format, field, symmetry;
        hs >> banner >> object >> format >> field >> symmetry;
        if (banner != "%%MatrixMarket" || lowercase(object) != "matrix" ||
            lowercase(format) != "coordinate" || lowercase(field) != "real" ||
            lowercase(symmetry) != "general")
            throw ParseError("expected header '%%MatrixMarket matrix coordinate real general'",
                             lineno);
    }

    // size line after comments
    std::size_t rows = 0, cols = 0, nnz = 0;
    bool have_size = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line) || line[0] == '%')
            continue;
        std::istringstream ss(line);
        long long r = -1, c = -1, z = -1;
        std::string extra;
        if (!(ss >> r >> c >> z) || (ss >> extra) || r < 0 || c < 0 || z < 0)
            throw ParseError("malformed size line", lineno);
        rows = static_cast<std::size_t>(r);
        cols = static_cast<std::size_t>(c);
        nnz = static_cast<std::size_t>(z);
        have_size = true;
        break;
    }
    if (!have_size)
        throw ParseError("missing size line", lineno);

    std::vector<ColMajorSparseMatrix::Triplet> triplets;
    triplets.reserve(nnz);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    while (triplets.size() < nnz && std::getline(in, line)) {
        ++lineno;
        if (blank(line) || line[0] == '%')
            continue;
        std::istringstream ss(line);
        long long i = 0, j = 0;
        double v = 0.0;
        std::string extra;
        if (!(ss >> i >> j >> v) || (ss >> extra))
            throw ParseError("malformed entry", lineno);
        if (i < 1 || j < 1 || static_cast<std::size_t>(i) > rows ||
            static_cast<std::size_t>(j) > cols)
            throw ParseError("entry index out of range", lineno);
        if (!std::isfinite(v))
            throw ParseError("non-finite value", lineno);
        auto key = std::make_pair(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1));
        if (!seen.insert(key).second)
            throw ParseError("duplicate coordinate (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ")",
                             lineno);
        triplets.push_back({key.first, key.second, v});
    }
    if (triplets.size() != nnz)
        throw ParseError("expected " + std::to_string(nnz) + " entries, found " +
                             std::to_string(triplets.size()),
                         lineno);
    while (std::getline(in, line)) {
        ++lineno;
        if (!blank(line) && line[0] != '%')
            throw ParseError("trailing data after declared entries", lineno);
    }
    return ColMajorSparseMatrix::from_triplets(rows, cols, triplets);
}

ColMajorSparseMatrix read_matrix_market(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path.string());
    return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const ColMajorSparseMatrix& a) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
    out << std::setprecision(17);
    for (Index j = 0; j < a.cols(); ++j)
        for (const auto& e : a.column(j))
            out << e.index + 1 << ' ' << j + 1 << ' ' << e.value << '\n';
}

void write_matrix_market(const std::filesystem::path& path, const ColMajorSparseMatrix& a) {
    std::ostringstream ss;
    write_matrix_market(ss, a);
    write_file_atomically(path, ss.str());
}

DenseVector read_vector_market(const std::filesystem::path& path) {
    auto a = read_matrix_market(path);
    if (a.cols() != 1)
        throw ParseError("expected a one-column matrix in " + path.string(), 2);
    return a.column(0).to_dense();
}

void write_vector_market(const std::filesystem::path& path, std::span<const double> x) {
    std::vector<SparseVector> col{SparseVector::from_dense(x)};
    write_matrix_market(path, ColMajorSparseMatrix(x.size(), std::move(col)));
}

WeightedGraph read_edge_list(std::istream& in, Index min_nodes) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<WeightedEdge> edges;
    Index n = min_nodes;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        std::istringstream ss(line);
        long long u = 0, v = 0;
        double w = 0.0;
        std::string extra;
        if (!(ss >> u >> v >> w) || (ss >> extra))
            throw ParseError("expected 'u v w'", lineno);
        if (u < 1 || v < 1)
            throw ParseError("node ids are 1-based", lineno);
        if (u == v)
            throw ParseError("self-loop", lineno);
        if (!(w > 0.0) || !std::isfinite(w))
            throw ParseError("edge weight must be positive", lineno);
        edges.push_back({static_cast<Index>(u - 1), static_cast<Index>(v - 1), w});
        n = std::max({n, static_cast<Index>(u), static_cast<Index>(v)});
    }
    return WeightedGraph(n, std::move(edges));
}

WeightedGraph read_edge_list(const std::filesystem::path& path, Index min_nodes) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path.string());
    return read_edge_list(in, min_nodes);
}

void write_edge_list(std::ostream& out, const WeightedGraph& g) {
    out << std::setprecision(17);
    for (const auto& e : g.edges())
        out << e.u + 1 << ' ' << e.v + 1 << ' ' << e.weight << '\n';
}

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out << contents;
        if (!out)
            throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace ksf
