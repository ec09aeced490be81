#include "rbperm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rbperm/rng.hpp"
#include "rbperm/sampler.hpp"

namespace rbperm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Population moments (divisor n) with a shifted two-pass for accuracy.
struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

Moments population_moments(const std::vector<double>& v) {
    Moments m;
    if (v.empty()) return m;
    double sum = 0.0;
    for (double x : v) sum += x;
    m.mean = sum / static_cast<double>(v.size());
    double sq = 0.0, corr = 0.0;
    for (double x : v) {
        sq += (x - m.mean) * (x - m.mean);
        corr += x - m.mean;
    }
    const auto n = static_cast<double>(v.size());
    m.variance = (sq - corr * corr / n) / n;
    return m;
}

double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const auto n = static_cast<double>(v.size());
    return population_moments(v).variance * n / (n - 1.0);
}

double sample_mean(const std::vector<double>& v) { return population_moments(v).mean; }

TestConfig restricted_config(TestConfig cfg) {
    if (cfg.scheme == Scheme::full) cfg.scheme = Scheme::block;
    return cfg;
}

}  // namespace

IncrementMoments increment_moments(const SwapSet& swaps, const StatisticEvaluator& evaluator,
                                   std::uint64_t subsample_seed) {
    const std::size_t p = swaps.size();
    if (p == 0) throw Error(Errc::empty_swap_set, "no admissible cross-swaps");

    IncrementMoments out;
    std::vector<double> changes;
    if (p > kMaxEnumeratedPairs) {
        out.subsampled = true;
        changes.reserve(kSubsamplePairs);
        Stream stream(subsample_seed);
        for (std::size_t t = 0; t < kSubsamplePairs; ++t) {
            const Swap s = swaps.pair_at(static_cast<std::size_t>(stream.below(p)));
            changes.push_back(evaluator.swap_change(s.a, s.b));
        }
    } else {
        changes.reserve(p);
        swaps.for_each_pair([&](Swap s) { changes.push_back(evaluator.swap_change(s.a, s.b)); });
    }
    const Moments m = population_moments(changes);
    out.v_star = m.variance;
    out.mean = m.mean;
    out.pairs_used = changes.size();
    for (double c : changes) out.m_bound = std::max(out.m_bound, std::abs(c));

    if (const MmdState* state = evaluator.mmd_state()) {
        std::vector<std::size_t> pool_a, pool_b;
        for (const auto& c : swaps.components) {
            pool_a.insert(pool_a.end(), c.a_side.begin(), c.a_side.end());
            pool_b.insert(pool_b.end(), c.b_side.begin(), c.b_side.end());
        }
        std::vector<double> psi_a, psi_b;
        for (std::size_t i : pool_a) psi_a.push_back(state->psi_a_to_b(i));
        for (std::size_t j : pool_b) psi_b.push_back(state->psi_b_to_a(j));
        out.tau_a2 = population_moments(psi_a).variance;
        out.tau_b2 = population_moments(psi_b).variance;
    }
    return out;
}

RhoFeasibility rho_feasibility(double r, std::size_t n, double alpha, double rho) {
    if (!(r > 0.0) || !std::isfinite(r))
        throw Error(Errc::degenerate_diagnostics, "r must be positive and finite");
    if (n == 0) throw Error(Errc::invalid_argument, "N must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::invalid_argument, "alpha must lie in (0, 1)");
    RhoFeasibility out;
    out.rho_min = (8.0 / 9.0) * std::log(1.0 / alpha) / (r * static_cast<double>(n));
    out.feasible = rho >= out.rho_min;
    return out;
}

double rho_recommend(double rho_min, double c) {
    if (!(rho_min >= 0.0)) throw Error(Errc::invalid_argument, "rho_min must be nonnegative");
    if (c < 1.2 || c > 1.5) throw Error(Errc::invalid_argument, "c must lie in [1.2, 1.5]");
    return std::min(c * rho_min, 1.0);
}

FreedmanTail freedman_tail(double s, std::size_t l, double v_star, double m_bound,
                           std::optional<double> rho_n) {
    if (!(s > 0.0)) throw Error(Errc::invalid_argument, "s must be positive");
    if (v_star < 0.0 || m_bound < 0.0)
        throw Error(Errc::invalid_argument, "v_star and M must be nonnegative");
    const double lv = static_cast<double>(l) * v_star;
    if (lv == 0.0 && m_bound == 0.0)
        throw Error(Errc::invalid_argument, "L v_star and M cannot both vanish");

    FreedmanTail out;
    out.bound = std::exp(-s * s / (2.0 * (lv + m_bound * s / 3.0)));
    if (rho_n) {
        const double denom = *rho_n * v_star + (2.0 / 3.0) * m_bound * s;
        out.rho_form = denom > 0.0 ? std::exp(-s * s / denom) : 0.0;
    }
    const double variance_term = lv > 0.0 ? s * s / lv : kInf;
    const double linear_term = m_bound > 0.0 ? 3.0 * s / m_bound : kInf;
    out.min_form = std::exp(-0.25 * std::min(variance_term, linear_term));
    return out;
}

QuantileBound quantile_bound(std::size_t l, double v_star, double alpha, double mean_t, double m_bound) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::invalid_argument, "alpha must lie in (0, 1)");
    if (v_star < 0.0) throw Error(Errc::invalid_argument, "v_star must be nonnegative");
    const double log_inv = std::log(1.0 / alpha);
    const double lv = static_cast<double>(l) * v_star;
    QuantileBound out;
    out.bound = mean_t + 2.0 * std::sqrt(lv * log_inv);
    out.in_variance_regime = m_bound > 0.0 ? log_inv <= 9.0 * lv / (4.0 * m_bound * m_bound) : lv > 0.0;
    return out;
}

VarianceComparison variance_comparison(const PooledSample& sample, const LabelState& labels,
                                       const TestConfig& cfg_in, std::size_t replicates,
                                       const KernelMatrix* kmat) {
    if (replicates < 2) throw Error(Errc::invalid_argument, "need at least two replicates");
    const TestConfig cfg = restricted_config(cfg_in);
    cfg.validate();
    std::optional<KernelMatrix> owned;
    if (cfg.statistic == StatisticKind::mmd2 && kmat == nullptr) {
        owned = gaussian_kernel_matrix(sample, cfg.bandwidth);
        kmat = &*owned;
    }
    const StatisticEvaluator evaluator(sample, kmat, cfg.statistic, cfg.sided, labels);
    const PreparedDesign prepared = prepare_design(sample, kmat, labels, cfg);
    const RestrictedSampler sampler(prepared.swaps);

    const Stream root = Stream(cfg.seed).split(2);
    std::vector<double> rest, full;
    rest.reserve(replicates);
    full.reserve(replicates);
    for (std::size_t t = 0; t < replicates; ++t) {
        Stream s = root.split(2 * t);
        const RestrictedPermutation perm = cfg.scheme == Scheme::block
                                               ? sampler(s)
                                               : sample_single_swap(prepared.swaps, SingleSwapMode::swap_only, s);
        rest.push_back(evaluator.evaluate_incremental(apply_permutation(labels, perm)));
        Stream f = root.split(2 * t + 1);
        full.push_back(evaluator.evaluate_full(sample_full_relabeling(sample.n1(), sample.n2(), f)));
    }

    VarianceComparison out;
    out.var_rest = sample_variance(rest);
    out.var_full = sample_variance(full);
    out.mean_rest = sample_mean(rest);
    out.mean_full = sample_mean(full);
    out.ratio = out.var_full > 0.0 ? out.var_rest / out.var_full : 0.0;
    if (cfg.statistic == StatisticKind::mean_diff && sample.dim() == 1)
        out.var_full_formula = full_relabel_variance_mean(sample);
    return out;
}

DiagnosticsReport diagnose(const PooledSample& sample, const LabelState& labels, const TestConfig& cfg_in,
                           const DiagnosticsOptions& options) {
    const TestConfig cfg = restricted_config(cfg_in);
    cfg.validate();
    labels.check_against(sample);
    std::optional<KernelMatrix> kernel;
    if (cfg.statistic == StatisticKind::mmd2) kernel = gaussian_kernel_matrix(sample, cfg.bandwidth);
    const KernelMatrix* kmat = kernel ? &*kernel : nullptr;

    const StatisticEvaluator evaluator(sample, kmat, cfg.statistic, cfg.sided, labels);
    const PreparedDesign prepared = prepare_design(sample, kmat, labels, cfg);
    const IncrementMoments moments = increment_moments(prepared.swaps, evaluator, cfg.seed);

    DiagnosticsReport rep;
    rep.v_star = moments.v_star;
    rep.m_bound = moments.m_bound;
    rep.tau_a2 = moments.tau_a2;
    rep.tau_b2 = moments.tau_b2;
    rep.num_pairs = prepared.swaps.size();
    rep.subsampled = moments.subsampled;
    rep.l_max = prepared.design.representatives.size() / 2;
    rep.rho = cfg.rho;

    // Stress value: conditional one-swap variance after random path prefixes.
    rep.v_star_stress = moments.v_star;
    const RestrictedSampler sampler(prepared.swaps);
    const Stream stress_root = Stream(cfg.seed).split(3);
    for (std::size_t t = 0; t < options.stress_prefixes; ++t) {
        Stream s = stress_root.split(t);
        RestrictedPermutation perm = sampler(s);
        perm.swaps.resize(static_cast<std::size_t>(s.below(perm.size() + 1)));
        if (perm.is_identity()) continue;
        const LabelState moved = apply_permutation(labels, perm);
        try {
            const SwapSet swaps = build_swap_set(prepared.design, moved);
            const auto m = increment_moments(swaps, evaluator.rebased(moved), cfg.seed + t + 1);
            rep.v_star_stress = std::max(rep.v_star_stress, m.v_star);
        } catch (const Error& e) {
            if (e.code() != Errc::empty_swap_set) throw;
        }
    }

    rep.degenerate = !(rep.m_bound > 0.0);
    if (rep.degenerate) {
        rep.r = std::numeric_limits<double>::quiet_NaN();
        rep.rho_min = std::numeric_limits<double>::quiet_NaN();
        rep.rho_opt = std::numeric_limits<double>::quiet_NaN();
    } else {
        rep.r = rep.v_star / (rep.m_bound * rep.m_bound);
        if (rep.r > 0.0) {
            const auto feas = rho_feasibility(rep.r, sample.size(), cfg.alpha, cfg.rho);
            rep.rho_min = feas.rho_min;
            rep.feasible = feas.feasible;
            rep.rho_opt = std::max(rho_recommend(rep.rho_min, options.rho_factor), rep.rho_min);
        } else {
            rep.rho_min = rep.rho_opt = std::numeric_limits<double>::quiet_NaN();
        }
    }

    const TestResult test = run_restricted_test(sample, labels, cfg, kmat);
    rep.observed = test.observed;
    rep.p_value = test.p_value;
    rep.mean_t = sample_mean(test.perm_stats);
    const auto q = quantile_bound(rep.l_max, rep.v_star, cfg.alpha, rep.mean_t, rep.m_bound);
    rep.q_rest_bound = q.bound;
    rep.in_variance_regime = q.in_variance_regime;

    const auto vc = variance_comparison(sample, labels, cfg, options.variance_replicates, kmat);
    rep.var_rest_empirical = vc.var_rest;
    rep.var_full_empirical = vc.var_full;
    rep.var_full_formula = vc.var_full_formula;
    rep.variance_ratio = vc.ratio;
    rep.q_full_chebyshev = vc.mean_full + std::sqrt(vc.var_full / cfg.alpha);
    return rep;
}

}  // namespace rbperm
