// Command-line front end: factorize, solve, stretch and bench.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "ksf/generators.hpp"
#include "ksf/solvers.hpp"

using namespace ksf;
using nlohmann::json;

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kParse = 2,
    kIncompatible = 3,
    kDisconnected = 4,
    kBudgetExhausted = 5,
};

struct Config {
    double eps = 1e-6;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> max_iters;
    std::string tree = "mst";
    std::optional<Index> ground;  // 1-based on the command line
    std::string report_path;
    std::optional<std::uint64_t> trace_stride;
    double safety = 10.0;
};

struct TreeChoice {
    TreeStrategy strategy = TreeStrategy::MstInverseWeight;
    std::optional<WeightedGraph> given;
};

TreeChoice parse_tree(const std::string& text, Index nodes) {
    if (text == "mst")
        return {};
    if (text == "akpw")
        return {TreeStrategy::AkpwLike, std::nullopt};
    if (text.rfind("given:", 0) == 0)
        return {TreeStrategy::Given, read_edge_list(std::filesystem::path(text.substr(6)), nodes)};
    throw InvalidArgument("--tree must be mst, akpw or given:<path>");
}

std::optional<Index> zero_based_ground(const Config& cfg, Index nodes) {
    if (!cfg.ground)
        return std::nullopt;
    if (*cfg.ground < 1 || *cfg.ground > nodes)
        throw InvalidArgument("--ground must lie in 1.." + std::to_string(nodes));
    return *cfg.ground - 1;
}

void emit_report(const Config& cfg, const json& j) {
    const auto text = j.dump(2) + "\n";
    if (cfg.report_path.empty())
        std::cout << text;
    else
        write_file_atomically(cfg.report_path, text);
}

void check_eps(double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw InvalidArgument("--eps must lie in (0, 1)");
}

//
// factorize
//

struct FactorizeArgs {
    std::string matrix, hmatrix, tree_graph, import_dir, out;
};

int cmd_factorize(const FactorizeArgs& args, const Config& cfg) {
    const int given = !args.matrix.empty() + !args.hmatrix.empty() + !args.tree_graph.empty() +
                      !args.import_dir.empty();
    if (given != 1)
        throw InvalidArgument("factorize needs exactly one of --matrix, --hmatrix, --tree-graph, --import");

    json j;
    std::optional<KSparseFactorization> f;
    ColMajorSparseMatrix q;
    if (!args.matrix.empty()) {
        q = read_matrix_market(std::filesystem::path(args.matrix));
        auto left = trivial_left(q);
        auto right = trivial_right(q);
        f = left.k() <= right.k() ? std::move(left) : std::move(right);
        j["source"] = "matrix";
    } else if (!args.hmatrix.empty()) {
        std::ifstream in(args.hmatrix);
        if (!in)
            throw InvalidArgument("cannot open " + args.hmatrix);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ParseError(e.what(), 0);
        }
        const auto h = HMatrix::from_json(doc);
        f = factorize_hmatrix(h);
        q = ColMajorSparseMatrix::from_dense(h.densify());
        j["source"] = "hmatrix";
        j["sparsity_bound"] = h.sparsity_bound();
        j["column_bound"] = h.column_bound();
        j["height"] = h.dendrogram().height();
    } else if (!args.import_dir.empty()) {
        f = import_factorization(args.import_dir);
        q = f->product();
        j["source"] = "import";
    } else {
        const auto g = read_edge_list(std::filesystem::path(args.tree_graph));
        if (g.edge_count() + 1 != g.node_count() || !g.connected())
            throw InvalidArgument("--tree-graph must be a tree");
        std::vector<Index> ids(g.edge_count());
        std::iota(ids.begin(), ids.end(), Index{0});
        const auto tree = make_spanning_tree(g, ids, zero_based_ground(cfg, g.node_count()), "given");
        auto fact = tree_E_factorizations(tree);
        q = tree_incidence(tree);
        j["source"] = "tree";
        j["height"] = tree.ordering.dendrogram.height();
        j["sparsity_bound"] = fact.e.sparsity_bound();
        j["tree"] = tree.to_json();
        f = std::move(fact.e_factorization);
    }

    const auto validation = validate(*f, q);
    j["schema"] = 1;
    j["k"] = f->k();
    j["p"] = f->p();
    j["m"] = f->m();
    j["n"] = f->n();
    j["validation"] = {{"passed", validation.passed},
                       {"max_product_error", validation.max_product_error},
                       {"first_violation", validation.first_violation}};
    if (!validation.passed) {
        emit_report(cfg, j);
        return kFailure;
    }
    if (!args.out.empty())
        export_factorization(*f, args.out);
    emit_report(cfg, j);
    return kOk;
}

//
// solvers
//

struct SolveArgs {
    std::string matrix, graph, rhs, out;
};

int finish_solve(const Config& cfg, const SolveArgs& args, std::span<const double> solution,
                 const SolveReport& report) {
    if (!args.out.empty())
        write_vector_market(args.out, solution);
    emit_report(cfg, to_json(report));
    return report.converged ? kOk : kBudgetExhausted;
}

int cmd_solve_min_norm(const SolveArgs& args, const Config& cfg) {
    check_eps(cfg.eps);
    const auto a = read_matrix_market(std::filesystem::path(args.matrix));
    const auto b = read_vector_market(args.rhs);
    const Index n = a.rows();
    if (a.cols() < n)
        throw InvalidArgument("A needs at least as many columns as rows");
    if (b.size() != n)
        throw DimensionError("b has " + std::to_string(b.size()) + " entries, A has " + std::to_string(n) + " rows");

    // E is the leading n×n block; its inverse enters as a dense factor
    std::vector<SparseVector> e_cols(a.columns().begin(), a.columns().begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<SparseVector> f_cols(a.columns().begin() + static_cast<std::ptrdiff_t>(n), a.columns().end());
    ColMajorSparseMatrix e(n, std::move(e_cols));
    ColMajorSparseMatrix f(n, std::move(f_cols));
    const Eigen::MatrixXd dense = e.to_dense();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(dense);
    if (!lu.isInvertible())
        throw InvalidArgument("the leading square block of A is singular");
    auto einv = trivial_left(ColMajorSparseMatrix::from_dense(lu.inverse()));
    const auto split = make_split_system(std::move(e), std::move(f), std::move(einv));

    MinNormOptions opt;
    opt.eps = cfg.eps;
    opt.seed = cfg.seed;
    opt.max_iters = cfg.max_iters;
    opt.safety = cfg.safety;
    opt.trace_stride = cfg.trace_stride.value_or(0);
    const auto res = solve_min_norm(split, b, opt);
    return finish_solve(cfg, args, res.x, res.report);
}

int cmd_solve_square(const SolveArgs& args, const Config& cfg) {
    check_eps(cfg.eps);
    const auto a = read_matrix_market(std::filesystem::path(args.matrix));
    const auto b = read_vector_market(args.rhs);
    SquareOptions opt;
    opt.eps = cfg.eps;
    opt.seed = cfg.seed;
    opt.max_iters = cfg.max_iters;
    opt.safety = cfg.safety;
    opt.trace_stride = cfg.trace_stride.value_or(0);
    const auto res = solve_square(trivial_left(a), b, opt);
    return finish_solve(cfg, args, res.y, res.report);
}

int cmd_solve_laplacian(const SolveArgs& args, const Config& cfg) {
    check_eps(cfg.eps);
    const auto c = read_vector_market(args.rhs);
    const auto g = read_edge_list(std::filesystem::path(args.graph), c.size());
    if (g.node_count() != c.size())
        throw DimensionError("c has " + std::to_string(c.size()) + " entries, graph has " +
                             std::to_string(g.node_count()) + " nodes");
    const auto tree = parse_tree(cfg.tree, g.node_count());
    LaplacianOptions opt;
    opt.eps = cfg.eps;
    opt.seed = cfg.seed;
    opt.strategy = tree.strategy;
    opt.given_tree = tree.given ? &tree.given->edges() : nullptr;
    opt.ground = zero_based_ground(cfg, g.node_count());
    opt.max_iters = cfg.max_iters;
    opt.safety = cfg.safety;
    opt.trace_stride = cfg.trace_stride.value_or(0);
    const auto res = solve_laplacian(g, c, opt);
    return finish_solve(cfg, args, res.chi, res.report);
}

int cmd_stretch(const std::string& graph_path, const Config& cfg) {
    const auto g = read_edge_list(std::filesystem::path(graph_path));
    const auto choice = parse_tree(cfg.tree, g.node_count());
    const auto tree = spanning_tree(g, choice.strategy, zero_based_ground(cfg, g.node_count()),
                                    choice.given ? &choice.given->edges() : nullptr);
    emit_report(cfg, {{"schema", 1},
                      {"n", g.node_count()},
                      {"m", g.edge_count()},
                      {"tree_strategy", tree.strategy},
                      {"stretch", stretch(g, tree)}});
    return kOk;
}

//
// bench
//

struct BenchArgs {
    std::string family = "path";
    std::vector<Index> sizes;
    std::uint64_t seeds = 1;
    std::uint64_t engine_steps = 2000;
    std::string out;
};

WeightedGraph bench_graph(const std::string& family, Index n, std::uint64_t seed) {
    const WeightRange w{0.5, 2.0};
    if (family == "path")
        return path_graph(n, w, seed);
    if (family == "grid") {
        const auto side = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(n))));
        return grid_graph(side, side, w, seed);
    }
    if (family == "random-tree")
        return random_tree(n, seed, w);
    if (family == "random-graph")
        return random_connected_graph(n, std::min(2 * n, n * (n - 1) / 2), seed, w);
    throw InvalidArgument("unknown family " + family);
}

int cmd_bench(const BenchArgs& args, const Config& cfg) {
    check_eps(cfg.eps);
    bench_graph(args.family, 2, 0);  // validates the family name
    for (std::size_t i = 0; i < args.sizes.size(); ++i) {
        if (args.sizes[i] < 2)
            throw InvalidArgument("sizes must be at least 2");
        if (i > 0 && args.sizes[i] <= args.sizes[i - 1])
            throw InvalidArgument("sizes must be strictly ascending");
    }
    const auto choice = parse_tree(cfg.tree, 0);
    if (choice.strategy == TreeStrategy::Given)
        throw InvalidArgument("bench builds its own trees; use mst or akpw");

    struct Row {
        Index n;
        std::uint64_t seed;
        std::string line;
    };
    std::vector<Row> rows;
    for (Index size : args.sizes)
        for (std::uint64_t s = 0; s < args.seeds; ++s) {
            const std::uint64_t seed = cfg.seed + s;
            const auto start = std::chrono::steady_clock::now();
            const auto g = bench_graph(args.family, size, seed);
            const auto tree = spanning_tree(g, choice.strategy);
            const auto fact = tree_E_factorizations(tree);
            const auto& e = fact.e_factorization;

            // per-step work of the engine on E from a random start
            Rng rng(seed);
            std::normal_distribution<double> normal;
            std::vector<double> h0(e.p());
            for (auto& v : h0)
                v = normal(rng);
            auto state = init_state(e, h0);
            RunOptions run_opt;
            run_opt.budget.max_iters = args.engine_steps;
            run_opt.seed = seed;
            const auto engine = run(e, state, run_opt);

            // Laplacian solve with a random zero-sum right-hand side
            std::vector<double> c(g.node_count());
            for (auto& v : c)
                v = normal(rng);
            const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
            for (auto& v : c)
                v -= mean;
            LaplacianOptions lap;
            lap.eps = cfg.eps;
            lap.seed = seed;
            lap.strategy = choice.strategy;
            lap.max_iters = cfg.max_iters;
            lap.safety = cfg.safety;
            const auto solved = solve_laplacian(g, c, lap);
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

            std::ostringstream line;
            line.precision(17);
            line << args.family << ',' << g.node_count() << ',' << g.edge_count() << ',' << seed << ','
                 << e.k() << ',' << tree.ordering.dendrogram.height() << ',' << stretch(g, tree) << ','
                 << solved.report.iterations << ',' << engine.work_mean << ',' << engine.work_max << ','
                 << std::fixed << std::setprecision(6) << wall;
            rows.push_back({g.node_count(), seed, line.str()});
        }
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return std::tie(a.n, a.seed) < std::tie(b.n, b.seed); });
    std::string csv = "family,n,m,seed,k,height,stretch,iterations,work_per_iter,work_max,wall_seconds\n";
    for (const auto& r : rows)
        csv += r.line + "\n";
    if (args.out.empty())
        std::cout << csv;
    else
        write_file_atomically(args.out, csv);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-sparse factorizations and randomized projection solvers"};
    app.require_subcommand(1);
    Config cfg;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--eps", cfg.eps, "target relative accuracy in (0, 1)");
        sub->add_option("--seed", cfg.seed, "random seed");
        sub->add_option("--max-iters", cfg.max_iters, "iteration cap");
        sub->add_option("--tree", cfg.tree, "spanning tree: mst, akpw or given:<edge list>");
        sub->add_option("--ground", cfg.ground, "grounded node (1-based)");
        sub->add_option("--report", cfg.report_path, "write the JSON report here instead of stdout");
        sub->add_option("--trace-stride", cfg.trace_stride, "trace the error every k steps")
            ->check(CLI::PositiveNumber);
        sub->add_option("--safety", cfg.safety, "iteration budget multiplier")->check(CLI::PositiveNumber);
    };

    FactorizeArgs fargs;
    auto* factorize = app.add_subcommand("factorize", "build and validate a k-sparse factorization");
    factorize->add_option("--matrix", fargs.matrix, "Matrix Market file");
    factorize->add_option("--hmatrix", fargs.hmatrix, "H-matrix JSON file");
    factorize->add_option("--tree-graph", fargs.tree_graph, "edge list of a tree; factorizes its reduced incidence");
    factorize->add_option("--import", fargs.import_dir, "directory written by a previous --out");
    factorize->add_option("--out", fargs.out, "export directory");
    add_common(factorize);

    SolveArgs margs, sargs, largs;
    auto* min_norm = app.add_subcommand("solve-min-norm", "minimum-norm solution of A x = b, A = [E F]");
    min_norm->add_option("--matrix", margs.matrix, "A as Matrix Market")->required();
    min_norm->add_option("--rhs", margs.rhs, "b as a one-column Matrix Market file")->required();
    min_norm->add_option("--out", margs.out, "solution file");
    add_common(min_norm);

    auto* square = app.add_subcommand("solve-square", "square or least-squares solve of A y = b");
    square->add_option("--matrix", sargs.matrix, "A as Matrix Market")->required();
    square->add_option("--rhs", sargs.rhs, "b as a one-column Matrix Market file")->required();
    square->add_option("--out", sargs.out, "solution file");
    add_common(square);

    auto* laplacian = app.add_subcommand("solve-laplacian", "solve L chi = c for a graph Laplacian");
    laplacian->add_option("--graph", largs.graph, "weighted edge list (1-based)")->required();
    laplacian->add_option("--rhs", largs.rhs, "c as a one-column Matrix Market file")->required();
    laplacian->add_option("--out", largs.out, "solution file");
    add_common(laplacian);

    std::string stretch_graph;
    auto* stretch_cmd = app.add_subcommand("stretch", "inverse-weight stretch of a spanning tree");
    stretch_cmd->add_option("--graph", stretch_graph, "weighted edge list (1-based)")->required();
    add_common(stretch_cmd);

    BenchArgs bargs;
    std::string sizes_text;
    auto* bench = app.add_subcommand("bench", "benchmark a graph family and emit CSV");
    bench->add_option("--family", bargs.family, "path, grid, random-tree or random-graph");
    bench->add_option("--sizes", sizes_text, "comma-separated ascending node counts");
    bench->add_option("--seeds", bargs.seeds, "seeds per size, starting at --seed");
    bench->add_option("--engine-steps", bargs.engine_steps, "engine steps for the work measurement");
    bench->add_option("--out", bargs.out, "CSV file");
    add_common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kParse;
    }

    try {
        if (*factorize)
            return cmd_factorize(fargs, cfg);
        if (*min_norm)
            return cmd_solve_min_norm(margs, cfg);
        if (*square)
            return cmd_solve_square(sargs, cfg);
        if (*laplacian)
            return cmd_solve_laplacian(largs, cfg);
        if (*stretch_cmd)
            return cmd_stretch(stretch_graph, cfg);
        if (*bench) {
            std::stringstream ss(sizes_text);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (item.empty())
                    continue;
                try {
                    bargs.sizes.push_back(static_cast<Index>(std::stoull(item)));
                } catch (const std::exception&) {
                    throw ParseError("bad size '" + item + "'", 0);
                }
            }
            return cmd_bench(bargs, cfg);
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kParse;
    } catch (const IncompatibleSystem& e) {
        std::cerr << "incompatible system: " << e.what() << '\n';
        return kIncompatible;
    } catch (const DisconnectedGraph& e) {
        std::cerr << "disconnected graph: " << e.what() << '\n';
        return kDisconnected;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
