#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rbperm/blockdesign.hpp"
#include "rbperm/core.hpp"
#include "rbperm/sampler.hpp"
#include "rbperm/stats.hpp"

namespace rbperm {

enum class Scheme {
    block,   // uniform over all products of disjoint admissible swaps
    single,  // at most one admissible swap
    full,    // uniform relabeling with fixed group sizes
};

struct TestConfig {
    StatisticKind statistic = StatisticKind::mean_diff;
    Scheme scheme = Scheme::block;
    std::size_t perms = 100;
    double alpha = 0.05;
    double rho = 0.2;
    std::size_t blocks = 4;
    Bandwidth bandwidth = Bandwidth::median();
    std::uint64_t seed = 0;
    Sidedness sided = Sidedness::two;
    SingleSwapMode single_mode = SingleSwapMode::with_identity;
    /// Representative re-draws allowed when the swap set comes out empty.
    std::size_t design_retries = 0;
    /// Cross-check every incremental evaluation against a from-scratch one.
    bool verify = false;

    void validate() const;
};

struct TestResult {
    double observed = 0.0;
    double p_value = 1.0;
    std::vector<double> perm_stats;
    bool reject = false;
    double critical_value = 0.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t l_max = 0;         // floor(|R|/2); 0 for full relabeling
    std::size_t num_swaps = 0;     // |P|; 0 for full relabeling
    std::size_t design_attempts = 0;
    double bandwidth = 0.0;        // resolved Gaussian bandwidth (MMD only)
};

/// (1 + #{m : ref[m] >= observed}) / (1 + M).
double p_value(double observed, std::span<const double> ref_stats);

/// ceil((1 - alpha)(M + 1))-th smallest of {ref_stats, observed}.
double empirical_critical_value(double observed, std::span<const double> ref_stats, double alpha);

/// Label-independent block design for `cfg`: quantile blocks for the mean
/// difference, kernel-score blocks for MMD^2, then representatives and
/// complementary pairs.
BlockDesign make_design(const PooledSample& sample, const KernelMatrix* kmat, const TestConfig& cfg,
                        std::uint64_t design_seed);

struct PreparedDesign {
    BlockDesign design;
    SwapSet swaps;
    std::size_t attempts = 0;
};

/// Builds design and swap set, re-drawing representatives up to
/// `cfg.design_retries` times while the swap set is empty.
PreparedDesign prepare_design(const PooledSample& sample, const KernelMatrix* kmat,
                              const LabelState& labels, const TestConfig& cfg);

TestResult run_restricted_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg);
TestResult run_restricted_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg,
                               const KernelMatrix* kmat);

TestResult run_full_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg);
TestResult run_full_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg,
                         const KernelMatrix* kmat);

/// Dispatches on `cfg.scheme`. Builds the kernel matrix when needed.
TestResult run_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg);
TestResult run_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg,
                    const KernelMatrix* kmat);

}  // namespace rbperm
