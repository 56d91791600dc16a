// Randomized projection iterations x <- x - (xᵀq_j / q_jᵀq_j) q_j over the
// columns of a k-sparse factorization, run in the (h, g) coordinates so each
// step touches O(k) entries.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ksf/factorization.hpp"

namespace ksf {

/// x_t = C·h, g = Uᵀ·h, x_t = x_0 + Q·y.
struct IterationState {
    DenseVector h;
    DenseVector g;
    DenseVector y;
    std::uint64_t t = 0;
    std::uint64_t work = 0;
};

/// Start from coefficients h0 with x0 = C·h0.
IterationState init_state(const KSparseFactorization& f, std::span<const double> h0);
IterationState init_state(const KSparseFactorization& f, const SparseVector& h0);

/// Start from x0 directly; requires an identity prefix in C so h0 = (x0, 0).
IterationState init_state_from_x(const KSparseFactorization& f, std::span<const double> x0);

/// One projection onto the hyperplane orthogonal to q_j. Returns the step
/// size α (the state moves by −α q_j).
double step(IterationState& state, const KSparseFactorization& f, Index j);

/// x = C·h.
DenseVector recover_x(const IterationState& state, const KSparseFactorization& f);

/// Column sampler with P(j) = ‖q_j‖² / ‖Q‖²_F.
class SamplingDistribution {
public:
    explicit SamplingDistribution(std::span<const double> weights);
    explicit SamplingDistribution(const KSparseFactorization& f)
        : SamplingDistribution(f.col_sq_norms()) {}

    Index size() const noexcept { return prefix_.size(); }
    double total() const noexcept { return prefix_.empty() ? 0.0 : prefix_.back(); }
    double probability(Index j) const;

    template <typename Rng>
    Index sample(Rng& rng) const {
        // 53 random bits mapped to [0, 1)
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return locate(u * total());
    }

private:
    Index locate(double target) const;

    std::vector<double> prefix_;
};

using Rng = std::mt19937_64;
inline constexpr const char* kRngName = "mt19937_64";

/// N such that decades · N1 iterations are expected, with
/// N1 = −ln 10 / ln(1 − σ²_min / ‖Q‖²_F), rounded up.
std::uint64_t predict_iterations(double frob_sq, double sigma_min_sq, double decades);
std::uint64_t predict_iterations(const KSparseFactorization& f, double sigma_min_sq,
                                 double decades);

struct Budget {
    std::uint64_t max_iters = 0;
    /// Stop once the oracle error drops below this; requires an oracle.
    std::optional<double> target_error;
    /// Extra trace points every `trace_stride` steps (0 disables); powers of
    /// two are always traced.
    std::uint64_t trace_stride = 0;
};

struct Oracle {
    DenseVector x_star;
    /// Normaliser for the relative error; ‖x*‖ when zero.
    double scale = 0.0;
};

struct TheoryStats {
    std::optional<double> sigma_min_sq;
    double frob_sq = 0.0;
    std::optional<std::uint64_t> n1;
};

struct SolveReport {
    std::uint64_t iterations = 0;
    std::optional<double> final_error_estimate;
    std::vector<std::pair<std::uint64_t, double>> error_trace;
    double work_mean = 0.0;
    std::uint64_t work_max = 0;
    std::uint64_t setup_work = 0;
    std::size_t k = 0;
    Index p = 0;
    TheoryStats theory;
    std::string rng = kRngName;
    std::uint64_t seed = 0;
    bool converged = true;

    // solver-specific extras
    std::optional<double> kappa;
    std::optional<double> stretch;
    std::optional<std::string> tree_strategy;
    std::optional<double> l_norm_error;
    std::optional<double> residual;
};

nlohmann::json to_json(const SolveReport& report);

using CheckpointObserver = std::function<void(std::uint64_t t, const IterationState& state)>;

struct RunOptions {
    Budget budget;
    std::uint64_t seed = 0;
    std::optional<Oracle> oracle;
    std::optional<double> sigma_min_sq;
    CheckpointObserver on_checkpoint;
};

/// Runs sampled steps from `state` until the budget is spent or the oracle
/// error reaches the target. Throws InvalidArgument when a target is given
/// without an oracle.
SolveReport run(const KSparseFactorization& f, IterationState& state, const RunOptions& options);

}  // namespace ksf
