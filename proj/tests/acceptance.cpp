// Runs every acceptance criterion and prints one PASS/FAIL line each. Exits
// nonzero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "ksf/generators.hpp"
#include "ksf/solvers.hpp"
#include "oracle.hpp"

using namespace ksf;

namespace {

struct Outcome {
    bool passed = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok && passed) {
            passed = false;
            detail << "first failure: " << what << "; ";
        }
    }
};

std::uniform_int_distribution<Index> range(Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi); }

KSparseFactorization random_factorization(Index m, Index p, Index n, Index c_per_col, Index d_per_col,
                                          std::mt19937_64& rng) {
    for (;;) {
        auto c = oracle::random_sparse(m, p, c_per_col, rng);
        auto d = oracle::random_sparse(p, n, d_per_col, rng);
        prune_zero_factors(c, d);
        if (c.cols() > 0)
            return KSparseFactorization::build(std::move(c), std::move(d));
    }
}

double relative_max_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref) {
    const double scale = ref.cwiseAbs().maxCoeff();
    return (a - ref).cwiseAbs().maxCoeff() / (scale > 0.0 ? scale : 1.0);
}

// ‖E⁻¹F‖²_F from the dense incidence, split along the tree edges
double dense_stretch(const WeightedGraph& g, const SpanningTree& t) {
    const Eigen::MatrixXd b = oracle::incidence(g);
    const auto root = static_cast<Eigen::Index>(t.root);
    Eigen::MatrixXd reduced(b.rows() - 1, b.cols());
    reduced << b.topRows(root), b.bottomRows(b.rows() - root - 1);
    std::vector<char> in_tree(g.edge_count(), 0);
    for (Index id : t.tree_edges())
        in_tree[id] = 1;
    Eigen::MatrixXd e(reduced.rows(), 0), f(reduced.rows(), 0);
    for (Index id = 0; id < g.edge_count(); ++id) {
        auto& dst = in_tree[id] ? e : f;
        dst.conservativeResize(Eigen::NoChange, dst.cols() + 1);
        dst.col(dst.cols() - 1) = reduced.col(static_cast<Eigen::Index>(id));
    }
    return e.lu().solve(f).squaredNorm();
}

WeightedGraph random_graph(Index max_nodes, Index max_edges, std::mt19937_64& rng) {
    const Index n = range(3, max_nodes)(rng);
    const Index most = std::min(max_edges, n * (n - 1) / 2);
    const Index m = range(n - 1, most)(rng);
    return random_connected_graph(n, m, rng(), {0.2, 5.0});
}

// least-squares slope of log y against log x
double fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

void factorization_correctness(Outcome& out) {
    std::mt19937_64 rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t r = 1 + trial % 3;
        const std::size_t d = 2 + (trial / 3) % 2;
        const Index n = range(2, 512)(rng);
        const auto inst = oracle::random_hmatrix(n, d, r, rng);
        const auto f = factorize_hmatrix(inst.matrix);
        const double err = relative_max_error(f.c().to_dense() * f.d().to_dense(), inst.dense);
        worst = std::max(worst, err);
        out.require(relative_max_error(inst.matrix.densify(), inst.dense) <= 1e-10, "densify(H) mismatch");
        out.require(err <= 1e-10, "C·D differs from H at n = " + std::to_string(n));
        out.require(f.k() == oracle::sparsity_index(f.c(), f.d()), "certified k differs from brute force");
        out.require(f.k() <= r * d * (d - 1) * (inst.matrix.dendrogram().height() + 1), "k bound");
        out.require(static_cast<std::size_t>(f.p()) <= r * d * d * n, "p bound");
    }
    out.detail << "100 instances, worst relative error " << worst;
}

void iteration_certificate(Outcome& out) {
    std::vector<double> ns, per_step;
    for (Index n : {Index{1} << 8, Index{1} << 10, Index{1} << 12, Index{1} << 13}) {
        const auto g = random_tree(n, n, {0.5, 2.0});
        const auto tree = spanning_tree(g, TreeStrategy::MstInverseWeight);
        const auto fact = tree_E_factorizations(tree);
        const auto& e = fact.e_factorization;
        std::mt19937_64 rng(n);
        std::vector<double> h0(e.p());
        std::normal_distribution<double> normal;
        for (auto& v : h0)
            v = normal(rng);
        auto state = init_state(e, h0);
        RunOptions opt;
        opt.budget.max_iters = 4000;
        opt.seed = n;
        const auto report = run(e, state, opt);
        const std::uint64_t limit = 6 * e.k() + 16;
        out.require(report.work_max <= limit, "step work " + std::to_string(report.work_max) + " > 6k+16 = " +
                                                  std::to_string(limit) + " at n = " + std::to_string(n));
        ns.push_back(static_cast<double>(n));
        per_step.push_back(report.work_mean);
        out.detail << "n=" << n << " m=" << e.m() << " k=" << e.k() << " max=" << report.work_max
                   << " mean=" << report.work_mean << "; ";
    }
    const double slope = fit_exponent(ns, per_step);
    out.require(slope < 0.3, "work exponent " + std::to_string(slope));
    out.detail << "exponent " << slope;
}

void convergence_bound(Outcome& out) {
    std::mt19937_64 rng(303);
    auto f = random_factorization(12, 16, 20, 2, 2, rng);
    while (oracle::dense_rank(f.product().to_dense()) < 12)
        f = random_factorization(12, 16, 20, 2, 2, rng);
    const Eigen::MatrixXd q = f.product().to_dense();
    const double sigma = oracle::sigma_min_sq(q);
    const double frob = q.squaredNorm();

    std::vector<double> h0(f.p());
    std::normal_distribution<double> normal;
    for (auto& v : h0)
        v = normal(rng);
    const Eigen::VectorXd x0 = f.c().to_dense() * oracle::to_eigen(h0);
    // the iteration converges to the projection of x0 onto range(Q)^⊥
    const Eigen::VectorXd x_star = x0 - q * (oracle::pinv(q) * x0);
    const double e0 = (x0 - x_star).squaredNorm();

    const std::vector<std::uint64_t> checkpoints{10, 50, 200};
    std::vector<double> mean(checkpoints.size(), 0.0);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto state = init_state(f, h0);
        RunOptions opt;
        opt.budget.max_iters = 200;
        opt.budget.trace_stride = 10;
        opt.seed = seed;
        opt.on_checkpoint = [&](std::uint64_t t, const IterationState& s) {
            for (std::size_t i = 0; i < checkpoints.size(); ++i)
                if (checkpoints[i] == t)
                    mean[i] += (oracle::to_eigen(recover_x(s, f)) - x_star).squaredNorm() / 200.0;
        };
        run(f, state, opt);
    }
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const double bound = std::pow(1.0 - sigma / frob, static_cast<double>(checkpoints[i])) * e0;
        out.require(mean[i] <= 1.1 * bound, "mean error above bound at t = " + std::to_string(checkpoints[i]));
        out.detail << "t=" << checkpoints[i] << " mean/bound=" << mean[i] / bound << "; ";
    }
}

void min_norm_equivalence(Outcome& out) {
    std::mt19937_64 rng(404);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto g = random_graph(40, 120, rng);
        const auto gs = make_graph_split(g, spanning_tree(g, TreeStrategy::MstInverseWeight));
        const Eigen::MatrixXd a = gs.system.a().to_dense();
        Eigen::VectorXd x(a.cols());
        std::normal_distribution<double> normal;
        for (auto& v : x)
            v = normal(rng);
        const Eigen::VectorXd b = a * x;
        const Eigen::VectorXd x_star = oracle::pinv(a) * b;
        MinNormOptions opt;
        opt.seed = static_cast<std::uint64_t>(trial);
        const auto res = solve_min_norm(gs.system, oracle::from_eigen(b), opt);
        const double err = (oracle::to_eigen(res.x) - x_star).norm() / x_star.norm();
        worst = std::max(worst, err);
        out.require(err <= 1e-6, "relative error " + std::to_string(err));
        out.require(res.report.iterations <= min_norm_budget(gs.system, 1e-6, 10.0), "budget exceeded");
    }
    out.detail << "50 graphs, worst relative error " << worst;
}

void stretch_identity(Outcome& out) {
    std::mt19937_64 rng(505);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto g = random_graph(60, 150, rng);
        const auto strategy = trial % 2 ? TreeStrategy::AkpwLike : TreeStrategy::MstInverseWeight;
        const auto t = spanning_tree(g, strategy);
        const double dense = dense_stretch(g, t);
        const double err = dense > 0.0 ? std::abs(stretch(g, t) - dense) / dense : std::abs(stretch(g, t));
        worst = std::max(worst, err);
        out.require(err <= 1e-9, "stretch mismatch " + std::to_string(err));
    }
    const WeightedGraph tri(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
    out.require(stretch(tri, spanning_tree(tri, TreeStrategy::MstInverseWeight)) == 2.0, "unit triangle");
    out.detail << "50 graphs, worst relative error " << worst << "; triangle = 2";
}

void laplacian_pipeline(Outcome& out) {
    std::mt19937_64 rng(606);
    double worst = 0.0, worst_ratio = 0.0;
    std::size_t checkpoints = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const auto g = random_graph(50, 130, rng);
        const Index n = g.node_count();
        const Eigen::MatrixXd l = oracle::laplacian(g);
        Eigen::VectorXd chi_true(static_cast<Eigen::Index>(n));
        std::normal_distribution<double> normal;
        for (auto& v : chi_true)
            v = normal(rng);
        chi_true.array() -= chi_true.mean();
        Eigen::VectorXd c = l * chi_true;
        c.array() -= c.mean();
        const Eigen::VectorXd chi_star = oracle::pinv(l) * c;

        std::vector<std::pair<std::vector<double>, std::vector<double>>> seen;
        LaplacianOptions opt;
        opt.eps = 1e-5;
        opt.seed = static_cast<std::uint64_t>(trial);
        opt.trace_stride = 50;
        opt.on_checkpoint = [&](std::uint64_t, std::span<const double> x, std::span<const double> chi) {
            seen.emplace_back(std::vector<double>(x.begin(), x.end()), std::vector<double>(chi.begin(), chi.end()));
        };
        const auto res = solve_laplacian(g, oracle::from_eigen(c), opt);

        // ‖Bᵀv‖ rather than vᵀLv so constant offsets cancel edge by edge
        const Eigen::MatrixXd bt = oracle::incidence(g).transpose();
        auto l_norm = [&](const Eigen::VectorXd& v) { return (bt * v).norm(); };
        const double err = l_norm(oracle::to_eigen(res.chi) - chi_star) / l_norm(chi_star);
        worst = std::max(worst, err);
        out.require(err <= 1e-5, "L-norm error " + std::to_string(err));

        const auto& gs = *res.split;
        Eigen::VectorXd x_star(static_cast<Eigen::Index>(gs.system.cols()));
        for (Index j = 0; j < gs.system.cols(); ++j) {
            const auto [src, dst] = gs.column_orientation[j];
            x_star(static_cast<Eigen::Index>(j)) =
                std::sqrt(g.edge(gs.column_edge[j]).weight) *
                (chi_star(static_cast<Eigen::Index>(dst)) - chi_star(static_cast<Eigen::Index>(src)));
        }
        const double factor = gs.stretch + static_cast<double>(n);
        for (const auto& [x, chi] : seen) {
            const double dx = (oracle::to_eigen(x) - x_star).squaredNorm();
            const double dchi = std::pow(l_norm(oracle::to_eigen(chi) - chi_star), 2);
            if (dx > 0.0)
                worst_ratio = std::max(worst_ratio, dchi / (factor * dx));
            out.require(dchi <= factor * dx * (1.0 + 1e-6) + 1e-24, "error transfer violated");
            ++checkpoints;
        }
    }
    out.detail << "25 graphs, worst L-norm error " << worst << ", " << checkpoints
               << " checkpoints, worst transfer ratio " << worst_ratio;
}

void tree_machinery(Outcome& out) {
    std::mt19937_64 rng(707);
    Index largest_ratio_num = 0, largest_ratio_den = 1;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = range(2, 400)(rng);
        const auto g = random_tree(n, rng(), {0.1, 10.0});
        std::vector<std::vector<Index>> adj(n);
        for (const auto& e : g.edges()) {
            adj[e.u].push_back(e.v);
            adj[e.v].push_back(e.u);
        }
        std::vector<Index> all(n);
        for (Index i = 0; i < n; ++i)
            all[i] = i;
        const auto s = tree_separator(adj, all);
        const Index limit = (2 * n + 2) / 3;
        const Index big = std::max(s.part1.size(), s.part2.size());
        if (big * largest_ratio_den > largest_ratio_num * n) {
            largest_ratio_num = big;
            largest_ratio_den = n;
        }
        out.require(big <= limit && s.part1.size() + s.part2.size() == n, "separator part too large");

        const auto t = spanning_tree(g, TreeStrategy::MstInverseWeight, range(0, n - 1)(rng));
        const Eigen::MatrixXd e = tree_incidence(t).to_dense();
        bool triangular = e.isUpperTriangular(0.0);
        for (Index pos = 0; pos < t.ordering.order.size(); ++pos) {
            const double w = t.parent_weight[t.ordering.order[pos]];
            const auto i = static_cast<Eigen::Index>(pos);
            triangular = triangular && std::abs(std::abs(e(i, i)) - std::sqrt(w)) <= 1e-15 * std::sqrt(w);
        }
        out.require(triangular, "permuted E not upper triangular with diagonal ±√w");
        if (n <= 128) {
            const auto f = tree_E_factorizations(t);
            const Eigen::MatrixXd prod = f.einv_factorization.c().to_dense() * f.einv_factorization.d().to_dense() * e;
            const double err = (prod - Eigen::MatrixXd::Identity(e.rows(), e.cols())).cwiseAbs().maxCoeff();
            worst = std::max(worst, err);
            out.require(err <= 1e-9, "Einv·E differs from I by " + std::to_string(err));
        }
    }
    out.detail << "200 trees, largest part " << largest_ratio_num << "/" << largest_ratio_den
               << ", worst |Einv·E − I| " << worst;
}

void semiseparable_conversion(Outcome& out) {
    std::mt19937_64 rng(808);
    double worst = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        const Index n = range(2, 64)(rng);
        const Eigen::MatrixXd inv = oracle::random_tridiagonal(n, rng).inverse();
        const auto res = semiseparable_to_hmatrix(inv, 1, 1);
        const double err = (res.matrix.densify() - inv).cwiseAbs().maxCoeff();
        worst = std::max({worst, err, res.max_block_error});
        out.require(err <= 1e-9 && res.max_block_error <= 1e-9, "reconstruction error " + std::to_string(err));
        out.require(res.matrix.rank_bound() == 1, "rank bound");
    }
    // the lower-left 4×4 corner of a random dense matrix has rank 4
    Eigen::MatrixXd bad(8, 8);
    std::normal_distribution<double> normal;
    for (auto& v : bad.reshaped())
        v = normal(rng);
    bool rejected = false;
    try {
        semiseparable_to_hmatrix(bad, 1, 1);
    } catch (const RankConditionViolation&) {
        rejected = true;
    }
    out.require(rejected, "rank-violating matrix accepted");
    out.detail << "40 inverses, worst block error " << worst << "; violation rejected";
}

void elementary_properties(Outcome& out) {
    std::mt19937_64 rng(909);
    for (int trial = 0; trial < 50; ++trial) {
        const Index m = range(4, 20)(rng), n = range(4, 20)(rng);
        const auto f1 = random_factorization(m, range(3, 20)(rng), n, 2, 2, rng);
        const auto f2 = random_factorization(range(4, 20)(rng), range(3, 20)(rng), n, 2, 3, rng);

        const auto s = stack(f1, f2);
        out.require(s.k() <= f1.k() + f2.k(), "stack k bound");
        out.require(validate(s, vstack(f1.product(), f2.product())).passed, "stack product");

        const auto id = KSparseFactorization::build(ColMajorSparseMatrix::identity(n), ColMajorSparseMatrix::identity(n));
        const auto si = stack(f1, id);
        out.require(si.k() <= f1.k() + 1, "stack with identity k bound");

        const Index fs = range(1, 3)(rng);
        const auto rhs = oracle::random_sparse(n, range(1, 15)(rng), fs, rng);
        const auto r = right_multiply(f1, rhs);
        out.require(r.k() <= f1.k() * fs, "right_multiply k bound");
        const Eigen::MatrixXd dense = f1.c().to_dense() * f1.d().to_dense() * rhs.to_dense();
        out.require(validate(r, ColMajorSparseMatrix::from_dense(dense)).passed, "right_multiply product");

        const auto a = f1.with_identity_augmentation();
        out.require(a.k() <= f1.k() + 1, "identity augmentation k bound");
        out.require(validate(a, f1.product()).passed, "identity augmentation product");

        const auto q = f1.product();
        out.require(trivial_left(q).k() <= q.rows() && trivial_right(q).k() <= q.cols(), "trivial factorizations");
    }
    out.detail << "50 instances";
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double seconds;
        void (*body)(Outcome&);
    };
    const Criterion criteria[] = {
        {"factorization correctness", 60, factorization_correctness},
        {"O(k) iteration certificate", 120, iteration_certificate},
        {"convergence bound", 30, convergence_bound},
        {"min-norm oracle equivalence", 120, min_norm_equivalence},
        {"stretch identity", 30, stretch_identity},
        {"laplacian pipeline", 120, laplacian_pipeline},
        {"tree machinery", 60, tree_machinery},
        {"semiseparable conversion", 30, semiseparable_conversion},
        {"elementary properties", 30, elementary_properties},
    };
    int failures = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.body(out);
        } catch (const std::exception& e) {
            out.require(false, std::string("exception: ") + e.what());
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.require(elapsed < c.seconds, "runtime " + std::to_string(elapsed) + " s");
        failures += !out.passed;
        std::printf("%s %d %s (%.2f s): %s\n", out.passed ? "PASS" : "FAIL", index, c.name, elapsed,
                    out.detail.str().c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
