#include "ksf/engine.hpp"

#include <algorithm>
#include <cmath>

namespace ksf {

namespace {

DenseVector apply_ut(const KSparseFactorization& f, std::span<const double> h) {
    DenseVector g(f.p(), 0.0);
    const auto& ut = f.u_transpose();
    for (Index i = 0; i < h.size(); ++i)
        if (h[i] != 0.0)
            axpy(h[i], ut.column(i), g);
    return g;
}

bool is_power_of_two(std::uint64_t t) { return t != 0 && (t & (t - 1)) == 0; }

}  // namespace

IterationState init_state(const KSparseFactorization& f, std::span<const double> h0) {
    if (h0.size() != f.p())
        throw DimensionError("init_state: h0 has dimension " + std::to_string(h0.size()) +
                             ", C has " + std::to_string(f.p()) + " columns");
    work::Scope scope;
    IterationState s;
    s.h.assign(h0.begin(), h0.end());
    s.g = apply_ut(f, h0);
    s.y.assign(f.n(), 0.0);
    s.work = scope.elapsed();
    return s;
}

IterationState init_state(const KSparseFactorization& f, const SparseVector& h0) {
    if (h0.dim() != f.p())
        throw DimensionError("init_state: h0 has dimension " + std::to_string(h0.dim()) +
                             ", C has " + std::to_string(f.p()) + " columns");
    work::Scope scope;
    IterationState s;
    s.h = h0.to_dense();
    s.g.assign(f.p(), 0.0);
    for (const auto& e : h0)
        axpy(e.value, f.u_transpose().column(e.index), s.g);
    s.y.assign(f.n(), 0.0);
    s.work = scope.elapsed();
    return s;
}

IterationState init_state_from_x(const KSparseFactorization& f, std::span<const double> x0) {
    if (!f.has_identity_prefix())
        throw InvalidArgument("init_state_from_x needs a factorization whose C starts with I_m");
    if (x0.size() != f.m())
        throw DimensionError("init_state_from_x: x0 has dimension " + std::to_string(x0.size()) +
                             ", expected " + std::to_string(f.m()));
    DenseVector h0(f.p(), 0.0);
    std::copy(x0.begin(), x0.end(), h0.begin());
    return init_state(f, h0);
}

double step(IterationState& state, const KSparseFactorization& f, Index j) {
    work::Scope scope;
    const auto& d = f.d().column(j);
    const auto& e = f.e_cols()[j];
    const double inner = sparse_dense_dot(d, state.g) + sparse_dense_dot(e, state.h);
    const double alpha = inner / f.col_sq_norms()[j];
    if (alpha != 0.0) {
        axpy(-alpha, d, state.h);
        axpy(-alpha, e, state.g);
        state.y[j] -= alpha;
    }
    work::add(1);
    ++state.t;
    state.work += scope.elapsed();
    return alpha;
}

DenseVector recover_x(const IterationState& state, const KSparseFactorization& f) {
    return f.c().multiply(state.h);
}

//
// sampling
//

SamplingDistribution::SamplingDistribution(std::span<const double> weights) {
    if (weights.empty())
        throw InvalidArgument("sampling distribution needs at least one column");
    prefix_.reserve(weights.size());
    double acc = 0.0;
    for (double w : weights) {
        if (!(w > 0.0))
            throw InvalidArgument("sampling weights must be positive");
        acc += w;
        prefix_.push_back(acc);
    }
}

double SamplingDistribution::probability(Index j) const {
    const double lo = j == 0 ? 0.0 : prefix_.at(j - 1);
    return (prefix_.at(j) - lo) / total();
}

Index SamplingDistribution::locate(double target) const {
    auto it = std::upper_bound(prefix_.begin(), prefix_.end(), target);
    if (it == prefix_.end())
        --it;
    return static_cast<Index>(it - prefix_.begin());
}

//
// iteration count prediction
//

std::uint64_t predict_iterations(double frob_sq, double sigma_min_sq, double decades) {
    if (!(sigma_min_sq > 0.0))
        throw InvalidArgument("predict_iterations: sigma_min^2 must be positive");
    if (!(sigma_min_sq < frob_sq))
        throw InvalidArgument("predict_iterations: sigma_min^2 must be below ‖Q‖²_F");
    if (decades < 0.0)
        throw InvalidArgument("predict_iterations: negative decade count");
    if (decades == 0.0)
        return 0;
    const double n1 = std::log(10.0) / -std::log1p(-sigma_min_sq / frob_sq);
    return static_cast<std::uint64_t>(std::ceil(decades * n1));
}

std::uint64_t predict_iterations(const KSparseFactorization& f, double sigma_min_sq,
                                 double decades) {
    return predict_iterations(f.frobenius_sq(), sigma_min_sq, decades);
}

//
// run
//

SolveReport run(const KSparseFactorization& f, IterationState& state, const RunOptions& options) {
    const auto& budget = options.budget;
    if (budget.target_error && !options.oracle)
        throw InvalidArgument("a target error needs an oracle solution");
    if (state.h.size() != f.p() || state.g.size() != f.p() || state.y.size() != f.n())
        throw DimensionError("run: state does not match the factorization");

    SolveReport report;
    report.k = f.k();
    report.p = f.p();
    report.seed = options.seed;
    report.setup_work = f.setup_work() + state.work;
    report.theory.frob_sq = f.frobenius_sq();
    report.theory.sigma_min_sq = options.sigma_min_sq;
    if (options.sigma_min_sq && *options.sigma_min_sq > 0.0 &&
        *options.sigma_min_sq < report.theory.frob_sq)
        report.theory.n1 = predict_iterations(report.theory.frob_sq, *options.sigma_min_sq, 1.0);

    double scale = 1.0;
    if (options.oracle) {
        if (options.oracle->x_star.size() != f.m())
            throw DimensionError("oracle solution has the wrong dimension");
        scale = options.oracle->scale > 0.0 ? options.oracle->scale : norm2(options.oracle->x_star);
        if (!(scale > 0.0))
            scale = 1.0;
    }
    auto oracle_error = [&]() {
        const auto x = recover_x(state, f);
        double s = 0.0;
        for (Index i = 0; i < x.size(); ++i) {
            const double diff = x[i] - options.oracle->x_star[i];
            s += diff * diff;
        }
        return std::sqrt(s) / scale;
    };

    bool reached = false;
    auto checkpoint = [&]() {
        if (options.oracle) {
            const double err = oracle_error();
            report.error_trace.emplace_back(state.t, err);
            report.final_error_estimate = err;
            if (budget.target_error && err <= *budget.target_error)
                reached = true;
        }
        if (options.on_checkpoint)
            options.on_checkpoint(state.t, state);
    };

    const SamplingDistribution dist(f);
    Rng rng(options.seed);
    const std::uint64_t start_t = state.t;
    std::uint64_t total_work = 0;
    std::uint64_t last_traced = state.t;

    checkpoint();
    std::uint64_t done = 0;
    while (!reached && done < budget.max_iters) {
        const Index j = dist.sample(rng);
        const std::uint64_t before = state.work;
        step(state, f, j);
        const std::uint64_t w = state.work - before;
        total_work += w;
        report.work_max = std::max(report.work_max, w);
        ++done;
        const std::uint64_t local = state.t - start_t;
        if (is_power_of_two(local) ||
            (budget.trace_stride > 0 && local % budget.trace_stride == 0)) {
            checkpoint();
            last_traced = state.t;
        }
    }
    if (last_traced != state.t)
        checkpoint();

    report.iterations = done;
    report.work_mean = done > 0 ? static_cast<double>(total_work) / static_cast<double>(done) : 0.0;
    if (budget.target_error)
        report.converged = reached;
    if (!options.oracle && report.theory.sigma_min_sq && report.theory.n1) {
        const double rate = 1.0 - *report.theory.sigma_min_sq / report.theory.frob_sq;
        report.final_error_estimate = std::sqrt(std::pow(rate, static_cast<double>(done)));
    }
    return report;
}

//
// report serialisation
//

nlohmann::json to_json(const SolveReport& r) {
    using nlohmann::json;
    auto opt = [](const auto& v) -> json {
        if (v)
            return json(*v);
        return json(nullptr);
    };
    json trace = json::array();
    for (const auto& [t, e] : r.error_trace)
        trace.push_back({t, e});
    json j = {
        {"schema", 1},
        {"iterations", r.iterations},
        {"final_error_estimate", opt(r.final_error_estimate)},
        {"error_trace", trace},
        {"work_per_iteration", {{"mean", r.work_mean}, {"max", r.work_max}}},
        {"setup_work", r.setup_work},
        {"k", r.k},
        {"p", r.p},
        {"theory",
         {{"sigma_min_sq", opt(r.theory.sigma_min_sq)},
          {"frob_sq", r.theory.frob_sq},
          {"N1", opt(r.theory.n1)}}},
        {"rng", r.rng},
        {"seed", r.seed},
        {"converged", r.converged},
    };
    if (r.kappa)
        j["kappa"] = *r.kappa;
    if (r.stretch)
        j["stretch"] = *r.stretch;
    if (r.tree_strategy)
        j["tree_strategy"] = *r.tree_strategy;
    if (r.l_norm_error)
        j["l_norm_error"] = *r.l_norm_error;
    if (r.residual)
        j["residual"] = *r.residual;
    return j;
}

}  // namespace ksf
