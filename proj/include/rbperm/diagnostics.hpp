#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "rbperm/blockdesign.hpp"
#include "rbperm/permtest.hpp"
#include "rbperm/stats.hpp"

namespace rbperm {

/// Moments of the one-swap statistic change over the admissible swap set
/// under the uniform law.
struct IncrementMoments {
    double v_star = 0.0;   // Var_w of the change
    double m_bound = 0.0;  // max |change|
    double mean = 0.0;     // E_w of the change
    std::size_t pairs_used = 0;
    bool subsampled = false;
    // MMD^2 only: variances of psi over the participating A / B representatives.
    std::optional<double> tau_a2;
    std::optional<double> tau_b2;
};

/// Sets above this many pairs are estimated from a uniform subsample.
inline constexpr std::size_t kMaxEnumeratedPairs = 1'000'000;
inline constexpr std::size_t kSubsamplePairs = 100'000;

/// Enumerates the statistic change of every admissible swap at the
/// evaluator's base labeling. Throws empty_swap_set on an empty set.
IncrementMoments increment_moments(const SwapSet& swaps, const StatisticEvaluator& evaluator,
                                   std::uint64_t subsample_seed = 0);

struct RhoFeasibility {
    double rho_min = 0.0;
    bool feasible = false;
};

/// rho_min = (8/9) log(1/alpha) / (r N); feasible when rho >= rho_min.
RhoFeasibility rho_feasibility(double r, std::size_t n, double alpha, double rho);

/// min(c rho_min, 1) with c in [1.2, 1.5].
double rho_recommend(double rho_min, double c = 1.35);

struct FreedmanTail {
    double bound = 1.0;              // exp(-s^2 / (2 (L v + M s / 3)))
    std::optional<double> rho_form;  // exp(-s^2 / (rho N v + (2/3) M s)), when rho N is given
    double min_form = 1.0;           // exp(-min(s^2 / (L v), 3 s / M) / 4)
};

FreedmanTail freedman_tail(double s, std::size_t l, double v_star, double m_bound,
                           std::optional<double> rho_n = std::nullopt);

struct QuantileBound {
    double bound = 0.0;  // mean_T + 2 sqrt(L v log(1/alpha))
    bool in_variance_regime = false;  // log(1/alpha) <= 9 L v / (4 M^2)
};

QuantileBound quantile_bound(std::size_t l, double v_star, double alpha, double mean_t, double m_bound);

struct VarianceComparison {
    double var_rest = 0.0;
    double var_full = 0.0;
    std::optional<double> var_full_formula;  // scalar mean difference only
    double ratio = 0.0;
    double mean_rest = 0.0;
    double mean_full = 0.0;
};

/// Monte Carlo variance of the statistic under the configured restricted
/// scheme (permutations applied directly to the observed labels; single-swap
/// draws use the swap-only law) and under full relabeling.
VarianceComparison variance_comparison(const PooledSample& sample, const LabelState& labels,
                                       const TestConfig& cfg, std::size_t replicates,
                                       const KernelMatrix* kmat = nullptr);

struct DiagnosticsOptions {
    std::size_t variance_replicates = 200;
    std::size_t stress_prefixes = 100;
    double rho_factor = 1.35;
};

struct DiagnosticsReport {
    double v_star = 0.0;         // first-step estimate at the observed labeling
    double v_star_stress = 0.0;  // max over random path prefixes
    double m_bound = 0.0;
    double r = 0.0;
    bool degenerate = false;     // m_bound == 0, so r is undefined
    std::optional<double> tau_a2;
    std::optional<double> tau_b2;
    std::size_t num_pairs = 0;
    bool subsampled = false;
    std::size_t l_max = 0;
    double rho = 0.0;
    double rho_min = 0.0;
    double rho_opt = 0.0;
    bool feasible = false;
    double mean_t = 0.0;         // mean of the restricted reference statistics
    double q_rest_bound = 0.0;
    bool in_variance_regime = false;
    double q_full_chebyshev = 0.0;
    double var_rest_empirical = 0.0;
    double var_full_empirical = 0.0;
    std::optional<double> var_full_formula;
    double variance_ratio = 0.0;
    double observed = 0.0;
    double p_value = 1.0;
};

DiagnosticsReport diagnose(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg,
                           const DiagnosticsOptions& options = {});

}  // namespace rbperm
