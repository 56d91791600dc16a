#include "ksf/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ksf {

namespace {

ColMajorSparseMatrix scaled_identity(Index n, double value) {
    std::vector<SparseVector> cols;
    cols.reserve(n);
    for (Index i = 0; i < n; ++i)
        cols.push_back(SparseVector::unit(n, i, value));
    return ColMajorSparseMatrix(n, std::move(cols));
}

}  // namespace

//
// split systems
//

DenseVector SplitSystem::initial_guess(std::span<const double> b) const {
    if (b.size() != rows())
        throw DimensionError("right-hand side has dimension " + std::to_string(b.size()) +
                             ", A has " + std::to_string(rows()) + " rows");
    DenseVector x = einv.c().multiply(einv.d().multiply(b));
    x.resize(cols(), 0.0);
    return x;
}

SplitSystem make_split_system(ColMajorSparseMatrix e, ColMajorSparseMatrix f,
                              KSparseFactorization einv) {
    if (e.rows() != e.cols())
        throw DimensionError("E must be square");
    if (f.rows() != e.rows() && f.cols() > 0)
        throw DimensionError("E and F must have the same number of rows");
    if (einv.m() != e.rows() || einv.n() != e.rows())
        throw DimensionError("the inverse factorization does not match E");
    if (f.rows() != e.rows())
        f = ColMajorSparseMatrix(e.rows(), 0);
    double frob = 0.0;
    for (const auto& col : f.columns()) {
        const auto z = einv.c().multiply(einv.d().multiply(col));
        for (const auto& entry : z)
            frob += entry.value * entry.value;
    }
    const double kappa = static_cast<double>(e.cols() + f.cols()) + frob;
    return SplitSystem{std::move(e), std::move(f), std::move(einv), frob, kappa};
}

GraphSplit make_graph_split(const WeightedGraph& g, SpanningTree tree) {
    const auto& ord = tree.ordering;
    const Index rows = ord.order.size();
    auto e = tree_incidence(tree);
    auto facts = tree_E_factorizations(tree);

    std::vector<Index> column_edge = tree.tree_edges();
    std::vector<std::pair<Index, Index>> orientation;
    orientation.reserve(g.edge_count());
    for (Index v : ord.order)
        orientation.emplace_back(tree.parent[v], v);

    std::vector<char> in_tree(g.edge_count(), 0);
    for (Index id : column_edge)
        in_tree[id] = 1;
    std::vector<SparseVector> f_cols;
    for (Index id = 0; id < g.edge_count(); ++id) {
        if (in_tree[id])
            continue;
        const auto& edge = g.edge(id);
        const Index src = std::min(edge.u, edge.v);
        const Index dst = std::max(edge.u, edge.v);
        const double s = std::sqrt(edge.weight);
        std::vector<Entry> entries;
        if (src != tree.root)
            entries.push_back({ord.position[src], -s});
        if (dst != tree.root)
            entries.push_back({ord.position[dst], s});
        f_cols.emplace_back(rows, std::move(entries));
        column_edge.push_back(id);
        orientation.emplace_back(src, dst);
    }
    const double st = stretch(g, tree);
    auto system = make_split_system(std::move(e), ColMajorSparseMatrix(rows, std::move(f_cols)),
                                    std::move(facts.einv_factorization));
    return GraphSplit{std::move(system), std::move(tree), std::move(column_edge),
                      std::move(orientation), st};
}

KSparseFactorization build_nullspace_Q(const SplitSystem& split) {
    const Index extra = split.f.cols();
    if (extra == 0)
        throw InvalidArgument("A = E has a trivial null space");
    auto c = block_diagonal(split.einv.c(), ColMajorSparseMatrix::identity(extra));
    auto d = vstack(split.einv.d().multiply(split.f), scaled_identity(extra, -1.0));
    prune_zero_factors(c, d);
    return KSparseFactorization::build(std::move(c), std::move(d));
}

//
// minimum-norm solve
//

std::uint64_t min_norm_budget(const SplitSystem& split, double eps, double safety) {
    if (!(eps > 0.0))
        throw InvalidArgument("eps must be positive");
    const double eps0 =
        1.0 + std::sqrt(static_cast<double>(split.rows()) + split.einv_f_frob_sq);
    const double decays = std::max(0.0, std::log(eps0 / eps));
    return static_cast<std::uint64_t>(std::ceil(split.kappa * decays) * safety);
}

MinNormResult solve_min_norm(const SplitSystem& split, std::span<const double> b,
                             const MinNormOptions& options) {
    if (!(options.eps > 0.0 && options.eps < 1.0))
        throw InvalidArgument("eps must lie in (0, 1)");
    auto x0 = split.initial_guess(b);
    const double bnorm = norm2(b);
    {
        auto r = split.e.multiply(std::span<const double>(x0).first(split.rows()));
        for (Index i = 0; i < r.size(); ++i)
            r[i] -= b[i];
        if (norm2(r) > 1e-8 * bnorm)
            throw IncompatibleSystem("A·x0 differs from b by " + std::to_string(norm2(r)) +
                                     "; the system is incompatible");
    }

    MinNormResult result{x0, {}};
    auto& report = result.report;
    report.kappa = split.kappa;
    report.seed = options.seed;
    report.residual = 0.0;
    if (split.f.cols() == 0 || bnorm == 0.0) {
        // x0 is already the minimum-norm point
        report.k = split.einv.k();
        report.p = split.einv.p();
        report.final_error_estimate = 0.0;
        if (options.x_star) {
            DenseVector diff(x0.size());
            for (Index i = 0; i < diff.size(); ++i)
                diff[i] = x0[i] - (*options.x_star)[i];
            const double scale = norm2(*options.x_star);
            const double err = norm2(diff) / (scale > 0.0 ? scale : 1.0);
            report.final_error_estimate = err;
            report.error_trace.emplace_back(0, err);
            report.converged = err <= options.eps;
        }
        if (options.on_checkpoint)
            options.on_checkpoint(0, x0);
        return result;
    }

    const auto q = build_nullspace_Q(split).with_identity_augmentation();
    auto state = init_state_from_x(q, x0);

    RunOptions run_options;
    run_options.budget.max_iters =
        options.max_iters ? *options.max_iters : min_norm_budget(split, options.eps, options.safety);
    run_options.budget.trace_stride = options.trace_stride;
    run_options.seed = options.seed;
    // every null-space basis of this form has σ²_min ≥ 1
    run_options.sigma_min_sq = 1.0;
    if (options.x_star) {
        if (options.x_star->size() != split.cols())
            throw DimensionError("oracle solution has the wrong dimension");
        run_options.oracle = Oracle{*options.x_star, 0.0};
        run_options.budget.target_error = options.eps;
    }
    if (options.on_checkpoint)
        run_options.on_checkpoint = [&](std::uint64_t t, const IterationState& s) {
            const auto x = recover_x(s, q);
            options.on_checkpoint(t, x);
        };

    report = run(q, state, run_options);
    report.kappa = split.kappa;
    if (!options.x_star)
        report.converged = report.iterations >= min_norm_budget(split, options.eps, 2.0);
    result.x = recover_x(state, q);
    auto r = split.a().multiply(result.x);
    for (Index i = 0; i < r.size(); ++i)
        r[i] -= b[i];
    report.residual = norm2(r) / bnorm;
    return result;
}

//
// square and overdetermined systems
//

SquareResult solve_square(const KSparseFactorization& a, std::span<const double> b,
                          const SquareOptions& options) {
    if (!(options.eps > 0.0 && options.eps < 1.0))
        throw InvalidArgument("eps must lie in (0, 1)");
    if (b.size() != a.m())
        throw DimensionError("right-hand side has dimension " + std::to_string(b.size()) +
                             ", A has " + std::to_string(a.m()) + " rows");
    if (a.m() < a.n())
        throw InvalidArgument("solve_square needs at least as many rows as columns");
    const bool square = a.m() == a.n();
    const double bnorm = norm2(b);

    SquareResult result{DenseVector(a.n(), 0.0), {}};
    if (bnorm == 0.0) {
        result.report.k = a.k();
        result.report.p = a.p();
        result.report.seed = options.seed;
        result.report.final_error_estimate = 0.0;
        result.report.residual = 0.0;
        return result;
    }

    std::optional<double> sigma = options.sigma_min_sq;
    if (!sigma && a.m() * a.n() <= 160000) {
        const Eigen::MatrixXd dense = a.product().to_dense();
        const auto s = Eigen::BDCSVD<Eigen::MatrixXd>(dense).singularValues();
        const double smin = s(s.size() - 1);
        sigma = smin * smin;
        if (!(*sigma > 1e-13 * a.frobenius_sq()))
            throw InvalidArgument("A is numerically rank deficient (σ²_min = " +
                                  std::to_string(*sigma) + ")");
    }

    RunOptions run_options;
    run_options.seed = options.seed;
    run_options.budget.trace_stride = options.trace_stride;
    run_options.sigma_min_sq = sigma;
    if (options.max_iters) {
        run_options.budget.max_iters = *options.max_iters;
    } else {
        if (!sigma)
            throw InvalidArgument("solve_square needs max_iters or a σ²_min bound for large A");
        // decades of the squared error
        const double decades = 2.0 * std::log10(1.0 / options.eps);
        run_options.budget.max_iters = static_cast<std::uint64_t>(
            std::ceil(static_cast<double>(predict_iterations(a.frobenius_sq(), *sigma, decades)) *
                      options.safety));
    }
    if (square) {
        run_options.oracle = Oracle{DenseVector(a.m(), 0.0), bnorm};
        run_options.budget.target_error = options.eps;
    }

    const auto f = a.with_identity_augmentation();
    DenseVector x0(b.begin(), b.end());
    for (double& v : x0)
        v = -v;
    auto state = init_state_from_x(f, x0);
    result.report = run(f, state, run_options);
    result.y = state.y;
    if (!square && sigma)
        result.report.converged =
            result.report.iterations >=
            predict_iterations(a.frobenius_sq(), *sigma, 2.0 * std::log10(1.0 / options.eps));

    auto r = a.c().multiply(a.d().multiply(result.y));
    for (Index i = 0; i < r.size(); ++i)
        r[i] -= b[i];
    result.report.residual = norm2(r) / bnorm;
    return result;
}

//
// Laplacian systems
//

DenseVector back_substitute(const SpanningTree& tree, std::span<const double> x_tree) {
    const auto& ord = tree.ordering;
    if (x_tree.size() < ord.order.size())
        throw DimensionError("back_substitute needs one value per tree edge");
    DenseVector chi(tree.node_count(), 0.0);
    for (Index pos = 0; pos < ord.order.size(); ++pos) {
        const Index v = ord.order[pos];
        chi[v] = chi[tree.parent[v]] + x_tree[pos] / std::sqrt(tree.parent_weight[v]);
    }
    return chi;
}

LaplacianResult solve_laplacian(const WeightedGraph& g, std::span<const double> c,
                                const LaplacianOptions& options) {
    const Index n = g.node_count();
    if (c.size() != n)
        throw DimensionError("c has dimension " + std::to_string(c.size()) + ", graph has " +
                             std::to_string(n) + " nodes");
    if (!(options.eps > 0.0 && options.eps < 1.0))
        throw InvalidArgument("eps must lie in (0, 1)");
    if (!g.connected())
        throw DisconnectedGraph("graph is not connected");
    const double cnorm = norm2(c);
    const double csum = std::accumulate(c.begin(), c.end(), 0.0);
    if (std::abs(csum) > 1e-12 * cnorm)
        throw IncompatibleSystem("c must sum to zero (sum = " + std::to_string(csum) + ")");

    LaplacianResult result{DenseVector(n, 0.0), {}, std::nullopt};
    if (cnorm == 0.0 || n == 1) {
        result.report.seed = options.seed;
        result.report.final_error_estimate = 0.0;
        result.report.residual = 0.0;
        result.report.tree_strategy = to_string(options.strategy);
        return result;
    }

    auto tree = spanning_tree(g, options.strategy, options.ground, options.given_tree);
    auto split = make_graph_split(g, std::move(tree));
    const auto& sys = split.system;
    const auto& st = split.tree;

    DenseVector b(sys.rows());
    for (Index pos = 0; pos < b.size(); ++pos)
        b[pos] = c[st.ordering.order[pos]];

    const double transfer =
        split.stretch + static_cast<double>(std::max<Index>(g.edge_count(), n));
    MinNormOptions inner;
    inner.eps = options.eps / std::sqrt(transfer);
    inner.seed = options.seed;
    inner.max_iters = options.max_iters;
    inner.safety = options.safety;
    inner.trace_stride = options.trace_stride;
    if (options.chi_star) {
        const auto& chi = *options.chi_star;
        if (chi.size() != n)
            throw DimensionError("oracle χ has the wrong dimension");
        DenseVector x_star(sys.cols());
        for (Index j = 0; j < x_star.size(); ++j) {
            const auto [src, dst] = split.column_orientation[j];
            x_star[j] = std::sqrt(g.edge(split.column_edge[j]).weight) * (chi[dst] - chi[src]);
        }
        inner.x_star = std::move(x_star);
    }
    if (options.on_checkpoint)
        inner.on_checkpoint = [&](std::uint64_t t, std::span<const double> x) {
            const auto chi = back_substitute(st, x);
            options.on_checkpoint(t, x, chi);
        };

    auto solved = solve_min_norm(sys, b, inner);
    result.chi = back_substitute(st, solved.x);
    result.report = std::move(solved.report);
    result.report.stretch = split.stretch;
    result.report.tree_strategy = st.strategy;
    if (options.chi_star) {
        DenseVector diff(n);
        for (Index v = 0; v < n; ++v)
            diff[v] = result.chi[v] - (*options.chi_star)[v];
        const double ref = l_pseudo_norm(g, *options.chi_star);
        result.report.l_norm_error = l_pseudo_norm(g, diff) / (ref > 0.0 ? ref : 1.0);
    }
    result.split = std::move(split);
    return result;
}

double l_quadratic_form(const WeightedGraph& g, std::span<const double> chi) {
    if (chi.size() != g.node_count())
        throw DimensionError("χ does not match the graph");
    double s = 0.0;
    for (const auto& e : g.edges()) {
        const double d = chi[e.u] - chi[e.v];
        s += e.weight * d * d;
    }
    return s;
}

double l_pseudo_norm(const WeightedGraph& g, std::span<const double> chi) {
    return std::sqrt(l_quadratic_form(g, chi));
}

}  // namespace ksf
