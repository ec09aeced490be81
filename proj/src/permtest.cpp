#include "rbperm/permtest.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rbperm/rng.hpp"

namespace rbperm {

namespace {

// Sub-stream ids under the root stream of a test invocation.
constexpr std::uint64_t kDesignStream = 0;
constexpr std::uint64_t kPermutationStream = 1;

void check_match(double incremental, double full) {
    const double tol = 1e-8 * std::max(1.0, std::abs(full));
    if (std::abs(incremental - full) > tol)
        throw std::logic_error("incremental statistic " + std::to_string(incremental) +
                               " disagrees with full recomputation " + std::to_string(full));
}

void finish(TestResult& result, const TestConfig& cfg) {
    result.p_value = p_value(result.observed, result.perm_stats);
    result.reject = result.p_value <= cfg.alpha;
    result.critical_value = empirical_critical_value(result.observed, result.perm_stats, cfg.alpha);
}

}  // namespace

void TestConfig::validate() const {
    if (perms < 1) throw Error(Errc::invalid_argument, "permutation count must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::invalid_argument, "alpha must lie in (0, 1)");
    if (scheme != Scheme::full) {
        if (!(rho > 0.0 && rho <= 1.0)) throw Error(Errc::invalid_argument, "rho must lie in (0, 1]");
        if (blocks < 2) throw Error(Errc::invalid_argument, "need at least two blocks");
    }
}

double p_value(double observed, std::span<const double> ref_stats) {
    if (ref_stats.empty()) throw Error(Errc::invalid_argument, "need at least one reference statistic");
    const auto exceed = std::count_if(ref_stats.begin(), ref_stats.end(),
                                      [&](double t) { return t >= observed; });
    return static_cast<double>(1 + exceed) / static_cast<double>(1 + ref_stats.size());
}

double empirical_critical_value(double observed, std::span<const double> ref_stats, double alpha) {
    std::vector<double> all(ref_stats.begin(), ref_stats.end());
    all.push_back(observed);
    const double pos = (1.0 - alpha) * static_cast<double>(all.size());
    auto k = static_cast<std::size_t>(std::ceil(pos - 1e-9));
    k = std::clamp<std::size_t>(k, 1, all.size());
    std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k - 1), all.end());
    return all[k - 1];
}

BlockDesign make_design(const PooledSample& sample, const KernelMatrix* kmat, const TestConfig& cfg,
                        std::uint64_t design_seed) {
    BlockDesign design;
    if (cfg.statistic == StatisticKind::mmd2) {
        if (kmat == nullptr) throw Error(Errc::invalid_argument, "kernel-score blocks need a kernel matrix");
        design = kernel_score_blocks(*kmat, cfg.blocks);
    } else {
        design = quantile_blocks(sample, cfg.blocks);
    }
    design = select_representatives(std::move(design), cfg.rho, design_seed);
    return complementary_pairs(std::move(design));
}

PreparedDesign prepare_design(const PooledSample& sample, const KernelMatrix* kmat,
                              const LabelState& labels, const TestConfig& cfg) {
    const Stream design_root = Stream(cfg.seed).split(kDesignStream);
    for (std::size_t attempt = 0;; ++attempt) {
        auto design = make_design(sample, kmat, cfg, design_root.split(attempt).key());
        try {
            auto swaps = build_swap_set(design, labels);
            return {std::move(design), std::move(swaps), attempt + 1};
        } catch (const Error& e) {
            if (e.code() != Errc::empty_swap_set) throw;
            if (attempt >= cfg.design_retries)
                throw Error(Errc::design, "degenerate block design: empty swap set after " +
                                              std::to_string(attempt + 1) + " attempt(s)");
        }
    }
}

TestResult run_restricted_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg) {
    return run_restricted_test(sample, labels, cfg, nullptr);
}

TestResult run_restricted_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg,
                               const KernelMatrix* kmat) {
    cfg.validate();
    if (cfg.scheme == Scheme::full) throw Error(Errc::invalid_argument, "restricted test needs a restricted scheme");
    labels.check_against(sample);

    std::optional<KernelMatrix> owned;
    if (cfg.statistic == StatisticKind::mmd2 && kmat == nullptr) {
        owned = gaussian_kernel_matrix(sample, cfg.bandwidth);
        kmat = &*owned;
    }
    const StatisticEvaluator evaluator(sample, kmat, cfg.statistic, cfg.sided, labels);
    const PreparedDesign prepared = prepare_design(sample, kmat, labels, cfg);
    const RestrictedSampler block_sampler(prepared.swaps);

    const Stream perm_root = Stream(cfg.seed).split(kPermutationStream);
    auto draw = [&](std::size_t m) {
        Stream s = perm_root.split(m);
        return cfg.scheme == Scheme::block ? block_sampler(s)
                                           : sample_single_swap(prepared.swaps, cfg.single_mode, s);
    };

    TestResult result;
    result.n1 = sample.n1();
    result.n2 = sample.n2();
    result.l_max = prepared.design.representatives.size() / 2;
    result.num_swaps = prepared.swaps.size();
    result.design_attempts = prepared.attempts;
    result.bandwidth = kmat ? kmat->bandwidth : 0.0;
    result.observed = evaluator.base_value();
    result.perm_stats.reserve(cfg.perms);

    const RestrictedPermutation sigma0 = draw(0);
    for (std::size_t m = 1; m <= cfg.perms; ++m) {
        const RestrictedPermutation sigma = draw(m);
        const auto target = apply_index_permutation(labels, compose_with_inverse(sigma, sigma0, sample.size()));
        const double t = evaluator.evaluate_incremental(target);
        if (cfg.verify) check_match(t, evaluator.evaluate_full(target));
        result.perm_stats.push_back(t);
    }
    finish(result, cfg);
    return result;
}

TestResult run_full_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg) {
    return run_full_test(sample, labels, cfg, nullptr);
}

TestResult run_full_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg,
                         const KernelMatrix* kmat) {
    cfg.validate();
    labels.check_against(sample);
    std::optional<KernelMatrix> owned;
    if (cfg.statistic == StatisticKind::mmd2 && kmat == nullptr) {
        owned = gaussian_kernel_matrix(sample, cfg.bandwidth);
        kmat = &*owned;
    }
    const StatisticEvaluator evaluator(sample, kmat, cfg.statistic, cfg.sided, labels);
    const Stream perm_root = Stream(cfg.seed).split(kPermutationStream);

    TestResult result;
    result.n1 = sample.n1();
    result.n2 = sample.n2();
    result.design_attempts = 0;
    result.bandwidth = kmat ? kmat->bandwidth : 0.0;
    result.observed = evaluator.base_value();
    result.perm_stats.reserve(cfg.perms);

    const std::size_t n = sample.size();
    Stream s0 = perm_root.split(0);
    const IndexPermutation sigma0_inv = sample_full_permutation(n, s0).inverse();
    IndexPermutation composed;
    composed.map.resize(n);
    for (std::size_t m = 1; m <= cfg.perms; ++m) {
        Stream s = perm_root.split(m);
        const IndexPermutation sigma = sample_full_permutation(n, s);
        for (std::size_t k = 0; k < n; ++k) composed.map[k] = sigma.map[sigma0_inv.map[k]];
        result.perm_stats.push_back(evaluator.evaluate_full(apply_index_permutation(labels, composed)));
    }
    finish(result, cfg);
    return result;
}

TestResult run_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg) {
    return run_test(sample, labels, cfg, nullptr);
}

TestResult run_test(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg,
                    const KernelMatrix* kmat) {
    return cfg.scheme == Scheme::full ? run_full_test(sample, labels, cfg, kmat)
                                      : run_restricted_test(sample, labels, cfg, kmat);
}

}  // namespace rbperm
