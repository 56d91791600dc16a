#include "ksf/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace ksf {

namespace {

class UnionFind {
public:
    explicit UnionFind(Index n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    Index find(Index x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(Index a, Index b) {
        a = find(a);
        b = find(b);
        if (a == b)
            return false;
        if (b < a)
            std::swap(a, b);
        parent_[b] = a;  // the smaller id represents the set
        return true;
    }

private:
    std::vector<Index> parent_;
};

Index ceil_two_thirds(Index n) { return (2 * n + 2) / 3; }

}  // namespace

//
// incidence
//

IncidenceMatrix incidence(const WeightedGraph& g, std::optional<std::uint64_t> orientation_seed) {
    const Index n = g.node_count();
    std::optional<std::mt19937_64> rng;
    if (orientation_seed)
        rng.emplace(*orientation_seed);
    IncidenceMatrix out;
    std::vector<SparseVector> cols;
    cols.reserve(g.edge_count());
    for (const auto& e : g.edges()) {
        Index src = std::min(e.u, e.v);
        Index dst = std::max(e.u, e.v);
        if (rng && ((*rng)() & 1))
            std::swap(src, dst);
        const double s = std::sqrt(e.weight);
        cols.emplace_back(n, std::vector<Entry>{{src, -s}, {dst, s}});
        out.orientation.emplace_back(src, dst);
    }
    out.matrix = ColMajorSparseMatrix(n, std::move(cols));
    return out;
}

ColMajorSparseMatrix reduce(const ColMajorSparseMatrix& b, Index grounded) {
    if (grounded >= b.rows())
        throw InvalidArgument("grounded node " + std::to_string(grounded) + " out of range");
    std::vector<SparseVector> cols;
    cols.reserve(b.cols());
    for (const auto& col : b.columns()) {
        std::vector<Entry> entries;
        for (const auto& e : col) {
            if (e.index == grounded)
                continue;
            entries.push_back({e.index > grounded ? e.index - 1 : e.index, e.value});
        }
        cols.emplace_back(b.rows() - 1, std::move(entries));
    }
    return ColMajorSparseMatrix(b.rows() - 1, std::move(cols));
}

//
// tree separator
//

SeparatorSplit tree_separator(const std::vector<std::vector<Index>>& adjacency,
                              std::span<const Index> subset) {
    const Index n = subset.size();
    if (n < 2)
        throw InvalidArgument("tree_separator needs at least two nodes");
    std::vector<char> in_subset(adjacency.size(), 0);
    for (Index v : subset) {
        if (v >= adjacency.size())
            throw InvalidArgument("subset node out of range");
        if (in_subset[v])
            throw InvalidArgument("subset lists a node twice");
        in_subset[v] = 1;
    }

    // components in BFS order, each rooted at its lowest-id node
    std::vector<Index> sorted(subset.begin(), subset.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<Index> bfs_parent(adjacency.size(), kNoNode);
    std::vector<char> seen(adjacency.size(), 0);
    std::vector<std::vector<Index>> components;
    Index induced_edges = 0;
    for (Index s : sorted) {
        if (seen[s])
            continue;
        std::vector<Index> comp{s};
        seen[s] = 1;
        for (Index head = 0; head < comp.size(); ++head) {
            const Index v = comp[head];
            for (Index w : adjacency[v]) {
                if (!in_subset[w])
                    continue;
                ++induced_edges;
                if (!seen[w]) {
                    seen[w] = 1;
                    bfs_parent[w] = v;
                    comp.push_back(w);
                }
            }
        }
        components.push_back(std::move(comp));
    }
    induced_edges /= 2;
    if (induced_edges + components.size() != n)
        throw InvalidArgument("tree_separator: subset does not induce a forest");

    const Index limit = ceil_two_thirds(n);
    std::vector<std::vector<Index>> pieces;
    std::optional<Index> separator;

    Index big = 0;
    for (Index c = 1; c < components.size(); ++c)
        if (components[c].size() > components[big].size())
            big = c;

    if (components[big].size() <= limit) {
        pieces = components;
    } else {
        const auto& comp = components[big];
        const Index s = comp.size();
        std::vector<Index> size(adjacency.size(), 0);
        for (Index i = s; i-- > 0;) {
            const Index v = comp[i];
            size[v] += 1;
            if (i > 0)
                size[bfs_parent[v]] += size[v];
        }
        Index best = kNoNode;
        for (Index v : comp) {
            Index largest = s - size[v];
            for (Index w : adjacency[v])
                if (in_subset[w] && bfs_parent[w] == v)
                    largest = std::max(largest, size[w]);
            if (2 * largest <= s && v < best)
                best = v;
        }
        separator = best;
        // components of comp minus the separator
        std::vector<char> taken(adjacency.size(), 0);
        taken[best] = 1;
        std::vector<Index> starts;
        for (Index w : adjacency[best])
            if (in_subset[w])
                starts.push_back(w);
        std::sort(starts.begin(), starts.end());
        for (Index w0 : starts) {
            std::vector<Index> piece{w0};
            taken[w0] = 1;
            for (Index head = 0; head < piece.size(); ++head)
                for (Index w : adjacency[piece[head]])
                    if (in_subset[w] && !taken[w]) {
                        taken[w] = 1;
                        piece.push_back(w);
                    }
            pieces.push_back(std::move(piece));
        }
        for (Index c = 0; c < components.size(); ++c)
            if (c != big)
                pieces.push_back(components[c]);
    }

    // largest pieces first; fill part 1 up to half without exceeding the limit
    std::vector<Index> idx(pieces.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto lowest = [&](Index i) { return *std::min_element(pieces[i].begin(), pieces[i].end()); };
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
        if (pieces[a].size() != pieces[b].size())
            return pieces[a].size() > pieces[b].size();
        return lowest(a) < lowest(b);
    });
    const Index target = n / 2;
    Index total = 0;
    SeparatorSplit out;
    out.separator = separator;
    std::vector<char> first(pieces.size(), 0);
    for (Index i : idx) {
        if (total >= target)
            break;
        if (total + pieces[i].size() <= limit) {
            first[i] = 1;
            total += pieces[i].size();
        }
    }
    for (Index i = 0; i < pieces.size(); ++i) {
        auto& dst = first[i] ? out.part1 : out.part2;
        dst.insert(dst.end(), pieces[i].begin(), pieces[i].end());
    }
    if (separator)
        out.part2.push_back(*separator);
    std::sort(out.part1.begin(), out.part1.end());
    std::sort(out.part2.begin(), out.part2.end());
    return out;
}

//
// separator ordering
//

namespace {

class OrderingBuilder {
public:
    OrderingBuilder(std::span<const Index> parent, Index root)
        : parent_(parent), root_(root), children_(parent.size()), mark_(parent.size(), 0),
          size_(parent.size(), 0) {
        for (Index v = 0; v < parent.size(); ++v)
            if (v != root)
                children_[parent[v]].push_back(v);
    }

    SeparatorOrdering build() {
        std::vector<Index> all;
        for (Index v = 0; v < parent_.size(); ++v)
            if (v != root_)
                all.push_back(v);
        split(std::move(all));
        SeparatorOrdering out;
        out.position.assign(parent_.size(), kNoNode);
        for (Index pos = 0; pos < order_.size(); ++pos)
            out.position[order_[pos]] = pos;
        out.order = std::move(order_);
        out.dendrogram = Dendrogram(std::move(nodes_));
        return out;
    }

private:
    // Emits the nodes of `piece` into order_ and returns the dendrogram node.
    Index split(std::vector<Index> piece) {
        const Index slot = nodes_.size();
        const Index begin = order_.size();
        nodes_.push_back({begin, begin + piece.size(), {}});
        if (piece.size() == 1) {
            order_.push_back(piece[0]);
            return slot;
        }
        const Index n = piece.size();
        ++stamp_;
        for (Index v : piece)
            mark_[v] = stamp_;
        auto inside = [&](Index v) { return v != kNoNode && v != root_ && mark_[v] == stamp_; };

        // parents before children, then subtree sizes within the piece
        std::vector<Index> roots;
        for (Index v : piece)
            if (parent_[v] == root_ || !inside(parent_[v]))
                roots.push_back(v);
        std::sort(roots.begin(), roots.end());
        std::vector<Index> topo = roots;
        for (Index head = 0; head < topo.size(); ++head)
            for (Index c : children_[topo[head]])
                if (inside(c))
                    topo.push_back(c);
        for (Index i = topo.size(); i-- > 0;) {
            const Index v = topo[i];
            size_[v] = 1;
            for (Index c : children_[v])
                if (inside(c))
                    size_[v] += size_[c];
        }

        const Index limit = ceil_two_thirds(n);
        std::vector<Index> kids = roots;
        for (;;) {
            Index next = kNoNode;
            for (Index c : kids)
                if (size_[c] > limit || size_[c] == n) {
                    next = c;
                    break;
                }
            if (next == kNoNode)
                break;
            kids.clear();
            for (Index c : children_[next])
                if (inside(c))
                    kids.push_back(c);
            std::sort(kids.begin(), kids.end());
        }

        std::stable_sort(kids.begin(), kids.end(),
                         [&](Index a, Index b) { return size_[a] > size_[b]; });
        const Index target = n / 2;
        Index total = 0;
        std::vector<Index> second;
        for (Index c : kids) {
            if (total >= target)
                break;
            if (total + size_[c] <= limit) {
                total += size_[c];
                // whole subtree of c within the piece
                const Index start = second.size();
                second.push_back(c);
                for (Index head = start; head < second.size(); ++head)
                    for (Index g : children_[second[head]])
                        if (inside(g))
                            second.push_back(g);
            }
        }
        ++stamp_;
        for (Index v : second)
            mark_[v] = stamp_;
        std::vector<Index> first;
        first.reserve(n - second.size());
        for (Index v : topo)
            if (mark_[v] != stamp_)
                first.push_back(v);

        const Index a = split(std::move(first));
        const Index b = split(std::move(second));
        nodes_[slot].children = {a, b};
        return slot;
    }

    std::span<const Index> parent_;
    Index root_;
    std::vector<std::vector<Index>> children_;
    std::vector<std::uint64_t> mark_;
    std::vector<Index> size_;
    std::uint64_t stamp_ = 0;
    std::vector<Index> order_;
    std::vector<Dendrogram::Node> nodes_;
};

}  // namespace

SeparatorOrdering separator_ordering(std::span<const Index> parent, Index root) {
    if (parent.size() < 2)
        throw InvalidArgument("separator_ordering needs a tree with at least two nodes");
    if (root >= parent.size())
        throw InvalidArgument("root out of range");
    for (Index v = 0; v < parent.size(); ++v)
        if (v != root && parent[v] >= parent.size())
            throw InvalidArgument("parent array references a missing node");
    return OrderingBuilder(parent, root).build();
}

//
// spanning trees
//

std::string to_string(TreeStrategy s) {
    switch (s) {
        case TreeStrategy::MstInverseWeight:
            return "mst-inverse-weight";
        case TreeStrategy::AkpwLike:
            return "akpw-like";
        case TreeStrategy::Given:
            return "given";
    }
    return "unknown";
}

std::vector<Index> SpanningTree::tree_edges() const {
    std::vector<Index> out;
    out.reserve(ordering.order.size());
    for (Index v : ordering.order)
        out.push_back(parent_edge[v]);
    return out;
}

nlohmann::json SpanningTree::to_json() const {
    nlohmann::json parents = nlohmann::json::array();
    nlohmann::json edges = nlohmann::json::array();
    for (Index v = 0; v < parent.size(); ++v) {
        if (v == root) {
            parents.push_back(nullptr);
            edges.push_back(nullptr);
        } else {
            parents.push_back(parent[v]);
            edges.push_back(parent_edge[v]);
        }
    }
    return {{"schema", 1},
            {"index_base", 0},
            {"n", parent.size()},
            {"root", root},
            {"strategy", strategy},
            {"parent", parents},
            {"parent_edge", edges},
            {"parent_weight", parent_weight},
            {"permutation", ordering.order},
            {"dendrogram", ordering.order.empty() ? nlohmann::json(nullptr)
                                                  : ordering.dendrogram.to_json()}};
}

namespace {

std::vector<std::vector<std::pair<Index, Index>>> tree_adjacency(const WeightedGraph& g,
                                                                 std::span<const Index> edge_ids) {
    const Index n = g.node_count();
    if (edge_ids.size() + 1 != n)
        throw InvalidArgument("a spanning tree of " + std::to_string(n) + " nodes needs " +
                              std::to_string(n == 0 ? 0 : n - 1) + " edges, got " +
                              std::to_string(edge_ids.size()));
    UnionFind uf(n);
    std::vector<std::vector<std::pair<Index, Index>>> adj(n);
    for (Index id : edge_ids) {
        const auto& e = g.edge(id);
        if (!uf.unite(e.u, e.v))
            throw InvalidArgument("tree edges contain a cycle");
        adj[e.u].emplace_back(e.v, id);
        adj[e.v].emplace_back(e.u, id);
    }
    return adj;
}

}  // namespace

Index tree_centroid(const WeightedGraph& g, std::span<const Index> edge_ids) {
    const auto adj = tree_adjacency(g, edge_ids);
    const Index n = adj.size();
    std::vector<Index> order{0}, par(n, kNoNode), size(n, 1);
    std::vector<char> seen(n, 0);
    seen[0] = 1;
    for (Index head = 0; head < order.size(); ++head)
        for (auto [w, id] : adj[order[head]])
            if (!seen[w]) {
                seen[w] = 1;
                par[w] = order[head];
                order.push_back(w);
            }
    for (Index i = n; i-- > 1;)
        size[par[order[i]]] += size[order[i]];
    for (Index v = 0; v < n; ++v) {
        Index largest = n - size[v];
        for (auto [w, id] : adj[v])
            if (par[w] == v)
                largest = std::max(largest, size[w]);
        if (2 * largest <= n)
            return v;
    }
    return 0;
}

SpanningTree make_spanning_tree(const WeightedGraph& g, std::span<const Index> edge_ids,
                                std::optional<Index> root, std::string strategy) {
    const auto adj = tree_adjacency(g, edge_ids);
    const Index n = g.node_count();
    SpanningTree t;
    t.root = root ? *root : tree_centroid(g, edge_ids);
    if (t.root >= n)
        throw InvalidArgument("root node " + std::to_string(t.root) + " out of range");
    t.strategy = std::move(strategy);
    t.parent.assign(n, kNoNode);
    t.parent_weight.assign(n, 0.0);
    t.parent_edge.assign(n, kNoNode);
    std::vector<char> seen(n, 0);
    std::vector<Index> queue{t.root};
    seen[t.root] = 1;
    for (Index head = 0; head < queue.size(); ++head) {
        const Index v = queue[head];
        for (auto [w, id] : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                t.parent[w] = v;
                t.parent_edge[w] = id;
                t.parent_weight[w] = g.edge(id).weight;
                queue.push_back(w);
            }
    }
    if (n >= 2)
        t.ordering = separator_ordering(t.parent, t.root);
    else
        t.ordering.position.assign(n, kNoNode);
    return t;
}

std::vector<Index> mst_inverse_weight_edges(const WeightedGraph& g) {
    std::vector<Index> ids(g.edge_count());
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(),
                     [&](Index a, Index b) { return g.edge(a).weight > g.edge(b).weight; });
    UnionFind uf(g.node_count());
    std::vector<Index> out;
    for (Index id : ids)
        if (uf.unite(g.edge(id).u, g.edge(id).v))
            out.push_back(id);
    return out;
}

std::vector<Index> akpw_like_edges(const WeightedGraph& g) {
    const Index n = g.node_count();
    if (g.edge_count() == 0)
        return {};
    double shortest = std::numeric_limits<double>::infinity();
    for (const auto& e : g.edges())
        shortest = std::min(shortest, 1.0 / e.weight);
    std::map<int, std::vector<Index>> classes;
    for (Index id = 0; id < g.edge_count(); ++id) {
        const double len = 1.0 / g.edge(id).weight;
        classes[static_cast<int>(std::floor(std::log2(len / shortest)))].push_back(id);
    }

    UnionFind uf(n);
    std::vector<Index> out;
    for (const auto& [cls, ids] : classes) {
        // cluster graph of this class, keyed by the cluster representative
        std::map<Index, std::vector<std::pair<Index, Index>>> cluster_adj;
        for (Index id : ids) {
            const Index a = uf.find(g.edge(id).u);
            const Index b = uf.find(g.edge(id).v);
            if (a == b)
                continue;
            cluster_adj[a].emplace_back(b, id);
            cluster_adj[b].emplace_back(a, id);
        }
        std::map<Index, char> visited;
        std::vector<std::pair<Index, Index>> merges;
        for (const auto& [start, unused] : cluster_adj) {
            if (visited[start])
                continue;
            visited[start] = 1;
            std::vector<Index> queue{start};
            for (Index head = 0; head < queue.size(); ++head)
                for (auto [other, id] : cluster_adj[queue[head]])
                    if (!visited[other]) {
                        visited[other] = 1;
                        out.push_back(id);
                        merges.emplace_back(queue[head], other);
                        queue.push_back(other);
                    }
        }
        for (auto [a, b] : merges)
            uf.unite(a, b);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Index> given_tree_edges(const WeightedGraph& g, const std::vector<WeightedEdge>& tree) {
    std::map<std::pair<Index, Index>, std::vector<Index>> by_endpoints;
    for (Index id = g.edge_count(); id-- > 0;) {
        const auto& e = g.edge(id);
        by_endpoints[{std::min(e.u, e.v), std::max(e.u, e.v)}].push_back(id);
    }
    std::vector<Index> out;
    for (const auto& e : tree) {
        auto it = by_endpoints.find({std::min(e.u, e.v), std::max(e.u, e.v)});
        if (it == by_endpoints.end() || it->second.empty())
            throw InvalidArgument("given tree edge (" + std::to_string(e.u + 1) + ", " +
                                  std::to_string(e.v + 1) + ") is not an edge of the graph");
        out.push_back(it->second.back());
        it->second.pop_back();
    }
    return out;
}

SpanningTree spanning_tree(const WeightedGraph& g, TreeStrategy strategy, std::optional<Index> root,
                           const std::vector<WeightedEdge>* given) {
    if (!g.connected())
        throw DisconnectedGraph("graph is not connected");
    std::vector<Index> ids;
    switch (strategy) {
        case TreeStrategy::MstInverseWeight:
            ids = mst_inverse_weight_edges(g);
            break;
        case TreeStrategy::AkpwLike:
            ids = akpw_like_edges(g);
            break;
        case TreeStrategy::Given:
            if (!given)
                throw InvalidArgument("the given tree strategy needs an edge list");
            ids = given_tree_edges(g, *given);
            break;
    }
    return make_spanning_tree(g, ids, root, to_string(strategy));
}

//
// tree incidence factorizations
//

ColMajorSparseMatrix tree_incidence(const SpanningTree& tree) {
    const auto& ord = tree.ordering;
    const Index n = ord.order.size();
    std::vector<SparseVector> cols;
    cols.reserve(n);
    for (Index pos = 0; pos < n; ++pos) {
        const Index v = ord.order[pos];
        const double s = std::sqrt(tree.parent_weight[v]);
        std::vector<Entry> entries{{pos, s}};
        if (tree.parent[v] != tree.root)
            entries.push_back({ord.position[tree.parent[v]], -s});
        cols.emplace_back(n, std::move(entries));
    }
    return ColMajorSparseMatrix(n, std::move(cols));
}

TreeFactorizations tree_E_factorizations(const SpanningTree& tree) {
    const auto& ord = tree.ordering;
    if (ord.order.empty())
        throw InvalidArgument("tree_E_factorizations needs a tree with at least two nodes");
    const auto& dendro = ord.dendrogram;
    const auto& nodes = dendro.nodes();
    std::vector<HMatrix::NodeBlocks> e_recs(nodes.size());
    std::vector<HMatrix::NodeBlocks> inv_recs(nodes.size());
    work::Scope scope;
    std::uint64_t assembly = 0;

    for (Index id = 0; id < nodes.size(); ++id) {
        const auto& node = nodes[id];
        if (node.leaf()) {
            const double w = tree.parent_weight[ord.order[node.begin]];
            e_recs[id].diagonal = std::sqrt(w);
            inv_recs[id].diagonal = 1.0 / std::sqrt(w);
            continue;
        }
        const auto& first = nodes[node.children[0]];
        const auto& second = nodes[node.children[1]];
        Index hinge = kNoNode;
        Eigen::MatrixXd e_right = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(second.size()));
        for (Index pos = second.begin; pos < second.end; ++pos) {
            const Index v = ord.order[pos];
            const Index par = tree.parent[v];
            if (par == tree.root)
                continue;
            const Index ppos = ord.position[par];
            if (ppos >= first.begin && ppos < first.end) {
                hinge = par;
                e_right(0, static_cast<Eigen::Index>(pos - second.begin)) =
                    -std::sqrt(tree.parent_weight[v]);
            }
        }
        assembly += second.size();
        if (hinge == kNoNode)
            continue;

        const auto rows = static_cast<Eigen::Index>(first.size());
        Eigen::MatrixXd e_left = Eigen::MatrixXd::Zero(rows, 1);
        e_left(static_cast<Eigen::Index>(ord.position[hinge] - first.begin), 0) = 1.0;
        e_recs[id].blocks.push_back({0, 1, std::move(e_left), std::move(e_right)});

        // column of the first block's inverse at the hinge: 1/√w over the
        // hinge and its ancestors inside the first block
        Eigen::MatrixXd u = Eigen::MatrixXd::Zero(rows, 1);
        for (Index a = hinge; a != tree.root;) {
            const Index apos = ord.position[a];
            if (apos < first.begin || apos >= first.end)
                break;
            u(static_cast<Eigen::Index>(apos - first.begin), 0) =
                1.0 / std::sqrt(tree.parent_weight[a]);
            ++assembly;
            a = tree.parent[a];
        }
        inv_recs[id].blocks.push_back(
            {0, 1, std::move(u), Eigen::MatrixXd::Ones(1, static_cast<Eigen::Index>(second.size()))});
    }
    work::add(assembly);

    HMatrix e(dendro, std::move(e_recs), 1);
    HMatrix einv(dendro, std::move(inv_recs), 1);
    auto e_factorization = factorize_hmatrix(e);
    auto einv_factorization = factorize_hmatrix(einv);
    TreeFactorizations out{std::move(e), std::move(einv), std::move(e_factorization),
                           std::move(einv_factorization), 0};
    out.build_work = scope.elapsed();
    return out;
}

//
// stretch
//

double stretch(const WeightedGraph& g, const SpanningTree& tree) {
    const Index n = g.node_count();
    if (tree.node_count() != n)
        throw InvalidArgument("tree does not span the graph");
    for (Index v = 0; v < n; ++v)
        if (v != tree.root && tree.parent[v] == kNoNode)
            throw InvalidArgument("tree does not span the graph");
    if (n <= 1)
        return 0.0;

    std::vector<std::vector<Index>> children(n);
    for (Index v = 0; v < n; ++v)
        if (v != tree.root)
            children[tree.parent[v]].push_back(v);
    std::vector<Index> order{tree.root};
    std::vector<Index> depth(n, 0);
    std::vector<double> resistance(n, 0.0);  // Σ 1/w_e from the root
    for (Index head = 0; head < order.size(); ++head) {
        const Index v = order[head];
        for (Index c : children[v]) {
            depth[c] = depth[v] + 1;
            resistance[c] = resistance[v] + 1.0 / tree.parent_weight[c];
            order.push_back(c);
        }
    }
    if (order.size() != n)
        throw InvalidArgument("tree does not span the graph");

    Index levels = 1;
    while ((Index{1} << levels) < n)
        ++levels;
    std::vector<std::vector<Index>> up(levels, std::vector<Index>(n));
    for (Index v = 0; v < n; ++v)
        up[0][v] = v == tree.root ? v : tree.parent[v];
    for (Index j = 1; j < levels; ++j)
        for (Index v = 0; v < n; ++v)
            up[j][v] = up[j - 1][up[j - 1][v]];
    auto lca = [&](Index a, Index b) {
        if (depth[a] < depth[b])
            std::swap(a, b);
        Index diff = depth[a] - depth[b];
        for (Index j = 0; diff > 0; ++j, diff >>= 1)
            if (diff & 1)
                a = up[j][a];
        if (a == b)
            return a;
        for (Index j = levels; j-- > 0;)
            if (up[j][a] != up[j][b]) {
                a = up[j][a];
                b = up[j][b];
            }
        return up[0][a];
    };

    std::vector<char> in_tree(g.edge_count(), 0);
    for (Index v = 0; v < n; ++v)
        if (v != tree.root)
            in_tree[tree.parent_edge[v]] = 1;
    double total = 0.0;
    for (Index id = 0; id < g.edge_count(); ++id) {
        if (in_tree[id])
            continue;
        const auto& e = g.edge(id);
        const double path = resistance[e.u] + resistance[e.v] - 2.0 * resistance[lca(e.u, e.v)];
        total += e.weight * path;
    }
    return total;
}

}  // namespace ksf
